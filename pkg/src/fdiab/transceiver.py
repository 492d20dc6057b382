"""Hybrid analog/digital precoder and combiner design.

RF (phase-shifter) stages are frequency flat: each column is the entry-wise
phase projection e^{j arg(.)} of a dominant eigenvector of the sample channel
covariance, so every entry has unit magnitude. Subarray stages apply the same
rule per antenna block, which makes the RF matrix exactly block diagonal.

Baseband stages are per subcarrier: dominant singular vectors of the
RF-effective channel for point-to-point links, zero forcing across users at
the multiuser transmitter, and an MMSE combiner that whitens residual
self-interference plus noise at the full-duplex receiver.

Determinism: eigen/singular vectors are rotated so their first significant
entry is real and positive before any phase extraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import SubarrayPartition
from .errors import (ConfigurationError, DegenerateInputError, DimensionError,
                     DomainError, NearSingularError)


@dataclass
class HybridTransceiver:
    """RF matrix (frequency flat) plus per-subcarrier baseband matrices."""

    rf: np.ndarray                 # (N, N_rf); unit-modulus entries before rfil_scale
    bb: np.ndarray                 # (K, N_rf, N_s)
    structure: str = "fully-connected"
    rfil_scale: float = 1.0

    @property
    def scaled_rf(self) -> np.ndarray:
        return self.rf * self.rfil_scale


def _fix_column_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant entry is real positive."""
    v = np.array(vectors)
    cols = v.reshape(-1, v.shape[-1]) if v.ndim == 2 else v
    mags = np.abs(v)
    thresh = 1e-12 * np.maximum(mags.max(axis=-2, keepdims=True), 1e-300)
    first = np.argmax(mags > thresh, axis=-2)
    lead = np.take_along_axis(v, first[..., None, :], axis=-2)[..., 0, :]
    phase = np.where(np.abs(lead) > 0, lead / np.where(np.abs(lead) > 0, np.abs(lead), 1.0), 1.0)
    return v * phase.conj()[..., None, :]


def phase_project(vectors: np.ndarray) -> np.ndarray:
    """Entry-wise unit-modulus projection e^{j arg(.)}."""
    return np.exp(1j * np.angle(vectors))


def rf_from_covariance(cov: np.ndarray, n_rf: int) -> np.ndarray:
    """Phase-only projections of the n_rf dominant eigenvectors, by falling eigenvalue."""
    n = cov.shape[0]
    if n_rf < 1 or n_rf > n:
        raise ConfigurationError(f"need 1 <= n_rf <= {n}, got {n_rf}")
    if not np.any(np.abs(cov) > 0):
        raise DegenerateInputError("channel covariance is identically zero")
    _, vecs = np.linalg.eigh(cov)
    top = vecs[:, ::-1][:, :n_rf]
    return phase_project(_fix_column_phases(top))


def top_eigvecs_factored(basis: np.ndarray, core: np.ndarray, n: int) -> np.ndarray:
    """Dominant eigenvectors of basis @ core @ basis^H without forming it.

    ``basis`` is tall (N, P) and ``core`` Hermitian PSD (P, P); the
    eigenproblem is solved in the P-dimensional column space.
    """
    q, r = np.linalg.qr(basis)
    small = r @ core @ r.conj().T
    small = 0.5 * (small + small.conj().T)
    if n > small.shape[0]:
        raise DegenerateInputError(
            f"covariance rank {small.shape[0]} cannot supply {n} eigenvectors")
    _, vecs = np.linalg.eigh(small)
    top = q @ vecs[:, ::-1][:, :n]
    return _fix_column_phases(top)


def _sample_covariance(freq: np.ndarray, side: str) -> np.ndarray:
    if freq.ndim != 3:
        raise DimensionError("frequency-domain channel must have shape (K, N_rx, N_tx)")
    k = freq.shape[0]
    if side == "tx":
        return np.einsum("kni,knj->ij", freq.conj(), freq, optimize=True) / k
    if side == "rx":
        return np.einsum("kin,kjn->ij", freq, freq.conj(), optimize=True) / k
    raise ConfigurationError("side must be 'tx' or 'rx'")


def rf_stage_fully_connected(freq: np.ndarray, side: str, n_rf: int) -> np.ndarray:
    """Unit-modulus RF matrix (N, n_rf) from the sample covariance of the channel."""
    return rf_from_covariance(_sample_covariance(freq, side), n_rf)


def rf_stage_subarray(freq: np.ndarray, partition: SubarrayPartition, side: str,
                      n_rf_per_subarray: int) -> np.ndarray:
    """Block-diagonal unit-modulus RF matrix; block u is the fully connected
    design of subarray u's sub-channel. Off-block entries are exactly zero."""
    n = partition.num_elements
    expected = freq.shape[2] if side == "tx" else freq.shape[1]
    if expected != n:
        raise DimensionError(
            f"partition covers {n} elements but channel has {expected} on the {side} side")
    u = partition.num_subarrays
    out = np.zeros((n, u * n_rf_per_subarray), dtype=complex)
    for b, block in enumerate(partition.element_index_sets):
        idx = np.asarray(block)
        sub = freq[:, :, idx] if side == "tx" else freq[:, idx, :]
        cols = slice(b * n_rf_per_subarray, (b + 1) * n_rf_per_subarray)
        out[idx, cols] = rf_from_covariance(_sample_covariance(sub, side), n_rf_per_subarray)
    return out


def bb_svd(effective: np.ndarray, num_streams: int):
    """Per-subcarrier dominant singular vectors of the effective channel.

    Returns (precoder (K, N_tx_rf, N_s), combiner (K, N_rx_rf, N_s)); the
    combiner^H @ H_eff @ precoder product is diagonal with the top singular
    values.
    """
    if effective.ndim != 3:
        raise DimensionError("effective channel must have shape (K, N_rx_rf, N_tx_rf)")
    if num_streams > min(effective.shape[1], effective.shape[2]):
        raise ConfigurationError(
            f"{num_streams} streams exceed effective channel dimensions {effective.shape[1:]}")
    u, _, vh = np.linalg.svd(effective)
    v = vh.conj().transpose(0, 2, 1)[:, :, :num_streams]
    u = u[:, :, :num_streams]
    lead = np.take_along_axis(
        v, np.argmax(np.abs(v) > 1e-12 * np.abs(v).max(axis=1, keepdims=True), axis=1)[:, None, :],
        axis=1)[:, 0, :]
    phase = np.where(np.abs(lead) > 0, lead / np.where(np.abs(lead) > 0, np.abs(lead), 1.0), 1.0)
    return v * phase.conj()[:, None, :], u * phase.conj()[:, None, :]


def zf_bb_precoder(effective: np.ndarray, cond_limit: float = 1e8) -> np.ndarray:
    """Per-subcarrier zero-forcing precoder for stacked single-stream users.

    ``effective`` holds one row per user: (K, U, N_tx_rf). The result is the
    Moore-Penrose pseudo-inverse with unit-norm columns; the exact per-stream
    transmit power is set later against the RF stage.
    """
    if effective.ndim != 3:
        raise DimensionError("multiuser effective channel must have shape (K, U, N_tx_rf)")
    k, u, m = effective.shape
    if u > m:
        raise ConfigurationError(f"zero forcing needs at least {u} RF chains, got {m}")
    s = np.linalg.svd(effective, compute_uv=False)
    cond = s[:, 0] / np.where(s[:, -1] > 0, s[:, -1], np.inf)
    worst = float(np.max(cond))
    if not np.isfinite(worst) or worst > cond_limit:
        raise NearSingularError("multiuser effective channel is rank deficient",
                                condition_number=worst)
    pinv = np.linalg.pinv(effective)
    return pinv / np.linalg.norm(pinv, axis=1, keepdims=True)


def mmse_bb_combiner(desired: np.ndarray, rsi_estimate: np.ndarray | None,
                     noise_power: float, signal_power: float, rsi_power: float = 0.0,
                     noise_gram: np.ndarray | None = None) -> np.ndarray:
    """Per-subcarrier MMSE combiner against residual self-interference plus noise.

    Model per subcarrier: x = sqrt(p_s) A s + sqrt(p_i) B s_i + n, with
    A = ``desired`` (K, M, N_s) the effective desired channel including its
    baseband precoder, B = ``rsi_estimate`` (K, M, N_i) the estimated
    effective interference channel including its precoder, and noise of
    covariance noise_power * noise_gram (identity by default). Returns
    combiner columns C (K, M, N_s) to be applied as C^H x; C = p_s R^{-1} A
    with R the covariance of x built from the estimate.

    When an interference term is present the receiver needs at least
    N_s + N_i chains for the cancellation to have full effect; fewer chains
    raise a configuration error.
    """
    if noise_power <= 0.0:
        raise DomainError("noise power must be positive")
    k, m, ns = desired.shape
    r = signal_power * desired @ desired.conj().transpose(0, 2, 1)
    if rsi_estimate is not None and rsi_power > 0.0:
        ni = rsi_estimate.shape[2]
        if m < ns + ni:
            raise ConfigurationError(
                f"rf-chain-rule: {m} receive chains cannot separate {ns} desired "
                f"plus {ni} interfering streams")
        r = r + rsi_power * rsi_estimate @ rsi_estimate.conj().transpose(0, 2, 1)
    gram = np.eye(m) if noise_gram is None else noise_gram
    r = r + noise_power * gram
    r = 0.5 * (r + r.conj().transpose(0, 2, 1))
    return signal_power * np.linalg.solve(r, desired)


def normalize_power(rf_precoder: np.ndarray, bb_precoder: np.ndarray, num_streams: int,
                    equal_streams: bool = False) -> np.ndarray:
    """Rescale baseband matrices so ||rf @ bb[k]||_F^2 = num_streams on every subcarrier.

    With ``equal_streams`` each column of the coupled precoder is scaled to
    power num_streams / N_s-columns individually (equal allocation across
    streams); otherwise one global factor per subcarrier is used.
    """
    coupled = rf_precoder[None, :, :] @ bb_precoder
    if equal_streams:
        norms = np.linalg.norm(coupled, axis=1, keepdims=True)   # (K, 1, N_s)
        if np.any(norms == 0):
            raise DegenerateInputError("coupled precoder has a zero column")
        return bb_precoder * (np.sqrt(num_streams / coupled.shape[2]) / norms)
    norms = np.linalg.norm(coupled, axis=(1, 2))
    if np.any(norms == 0):
        raise DegenerateInputError("coupled precoder is zero on some subcarrier")
    return bb_precoder * (np.sqrt(num_streams) / norms)[:, None, None]


def effective_channel(freq: np.ndarray, rx_matrix: np.ndarray | None,
                      tx_matrix: np.ndarray | None) -> np.ndarray:
    """Dense per-subcarrier W^H H[k] F for explicit (K, N_rx, N_tx) tensors."""
    out = freq
    if rx_matrix is not None:
        out = np.einsum("ia,kij->kaj", rx_matrix.conj(), out, optimize=True)
    if tx_matrix is not None:
        out = out @ tx_matrix
    return out
