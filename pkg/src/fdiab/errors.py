"""Exception types raised by the simulator."""


class FdiabError(Exception):
    """Base class for all simulator errors."""


class DomainError(FdiabError, ValueError):
    """An argument is outside its mathematical domain (angle, distance, ...)."""


class ConfigurationError(FdiabError, ValueError):
    """A structural constraint is violated (divisibility, chain counts, ...)."""


class DimensionError(FdiabError, ValueError):
    """Array shapes are mutually inconsistent."""


class DegenerateInputError(FdiabError, ValueError):
    """Input is identically zero or otherwise carries no usable information."""


class NearSingularError(FdiabError, ValueError):
    """A matrix that must be inverted is numerically rank deficient."""

    def __init__(self, message: str, condition_number: float | None = None):
        if condition_number is not None:
            message = f"{message} (condition number {condition_number:.3e})"
        super().__init__(message)
        self.condition_number = condition_number
