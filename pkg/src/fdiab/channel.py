"""Wideband clustered mmWave channels and the co-located self-interference channel.

The frequency-selective channel is a sum of rays grouped in clusters. Each
ray contributes a complex gain, a transmit/receive steering outer product,
and a raised-cosine pulse sampled at the tap grid, so tap d reads

    H[d] = amp * sum_p g_p * p_rc(d*Ts - tau_p) * a_rx(p) a_tx(p)^H

with ``amp`` chosen so that E[sum_d ||H[d]||_F^2] = N_rx * N_tx. Average
path loss is carried separately as a dB budget. Subcarrier responses are
the DFT of the taps over d.

The self-interference channel between the co-located transmit and receive
panels combines a deterministic near-field line-of-sight matrix (spherical
wavefront, per-element-pair 1/r amplitude) with a sparse clustered
non-line-of-sight part, mixed through a Rician factor.

``PathChannel`` keeps the factored per-path form so that covariances and
RF-effective channels of 256-element arrays never require materializing the
full (K, N_rx, N_tx) tensor.
"""

from __future__ import annotations

import functools
import math
import struct
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .arrays import ArrayGeometry, element_positions, near_field_radius, steering_matrix
from .errors import ConfigurationError, DegenerateInputError, DimensionError, DomainError

SPEED_OF_LIGHT = 3.0e8


def as_rng(seed) -> np.random.Generator:
    """Pass through Generators, otherwise seed a fresh one."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class ClusterConfig:
    """Cluster/ray geometry of the wideband channel."""

    num_clusters: int = 5
    rays_per_cluster: int = 10
    angle_spread: float = math.radians(10.0)
    sampling_time: float = 1.0 / (512 * 120e3)
    num_taps: int = 128
    pulse_rolloff: float = 0.5

    def __post_init__(self):
        if self.num_clusters < 1 or self.rays_per_cluster < 1:
            raise ConfigurationError("need at least one cluster and one ray per cluster")
        if self.num_taps < 1:
            raise ConfigurationError("need at least one delay tap")
        if self.sampling_time <= 0.0:
            raise ConfigurationError("sampling time must be positive")
        if not 0.0 <= self.pulse_rolloff <= 1.0:
            raise ConfigurationError("pulse rolloff must lie in [0, 1]")
        if self.angle_spread < 0.0:
            raise ConfigurationError("angle spread must be non-negative")

    @property
    def num_paths(self) -> int:
        return self.num_clusters * self.rays_per_cluster


@dataclass(frozen=True)
class SiChannelConfig:
    """Rician mix and residual-cancellation budget of the SI channel."""

    rician_factor_db: float = 20.0
    nlos_clusters: int = 2
    nlos_rays: int = 4
    pre_digital_sic_db: float = 80.0

    def __post_init__(self):
        if self.pre_digital_sic_db < 0.0:
            raise ConfigurationError("pre-digital cancellation budget must be >= 0 dB")
        if self.nlos_clusters < 1 or self.nlos_rays < 1:
            raise ConfigurationError("SI NLoS needs at least one cluster and ray")


@dataclass(frozen=True)
class CeeModel:
    """Relative standard deviation of the effective-channel estimation error."""

    sigma_e: float

    def __post_init__(self):
        if self.sigma_e < 0.0:
            raise ConfigurationError("sigma_e must be non-negative")


@dataclass
class ClusterGeometry:
    """Sampled per-ray parameters, flattened over clusters."""

    gains: np.ndarray
    delays: np.ndarray
    aod_azimuth: np.ndarray
    aod_elevation: np.ndarray
    aoa_azimuth: np.ndarray
    aoa_elevation: np.ndarray

    def __post_init__(self):
        n = len(self.gains)
        fields = (self.delays, self.aod_azimuth, self.aod_elevation,
                  self.aoa_azimuth, self.aoa_elevation)
        if any(len(f) != n for f in fields):
            raise DimensionError("all per-ray arrays must have equal length")

    @property
    def num_paths(self) -> int:
        return len(self.gains)


@dataclass
class WidebandChannel:
    """Delay-tap tensor (D, N_rx, N_tx) and optional subcarrier form (K, N_rx, N_tx)."""

    taps: np.ndarray | None = None
    freq: np.ndarray | None = None
    path_loss_db: float = 0.0


def _wrap_angle(a: np.ndarray) -> np.ndarray:
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def sample_cluster_geometry(cfg: ClusterConfig, rng_seed) -> ClusterGeometry:
    """Draw one realization of the clustered ray set.

    Cluster-center azimuths are uniform on [-pi, pi] and elevations uniform on
    [-pi/2, pi/2]; per-ray offsets are Laplacian with the configured spread
    (azimuths wrapped, elevations clipped). Delays are uniform on
    [0, D*Ts]. Ray gains are circular Gaussian with total expected power 1,
    i.e. Rayleigh magnitudes with scale set by the total path count.
    """
    rng = as_rng(rng_seed)
    c, r = cfg.num_clusters, cfg.rays_per_cluster
    p = cfg.num_paths

    def centers():
        az = rng.uniform(-np.pi, np.pi, size=c)
        el = rng.uniform(-np.pi / 2, np.pi / 2, size=c)
        return az, el

    def spread(center, clip):
        off = rng.laplace(0.0, cfg.angle_spread, size=(c, r)) if cfg.angle_spread > 0 \
            else np.zeros((c, r))
        full = center[:, None] + off
        if clip:
            return np.clip(full, -np.pi / 2, np.pi / 2).ravel()
        return _wrap_angle(full).ravel()

    aod_az_c, aod_el_c = centers()
    aoa_az_c, aoa_el_c = centers()
    aod_az = spread(aod_az_c, clip=False)
    aod_el = spread(aod_el_c, clip=True)
    aoa_az = spread(aoa_az_c, clip=False)
    aoa_el = spread(aoa_el_c, clip=True)
    delays = rng.uniform(0.0, cfg.num_taps * cfg.sampling_time, size=p)
    gains = (rng.standard_normal(p) + 1j * rng.standard_normal(p)) / np.sqrt(2.0 * p)
    return ClusterGeometry(gains, delays, aod_az, aod_el, aoa_az, aoa_el)


def raised_cosine(x, rolloff: float) -> np.ndarray:
    """Raised-cosine pulse at normalized time x = t / Ts, unit peak."""
    x = np.asarray(x, dtype=float)
    out = np.sinc(x)
    if rolloff > 0.0:
        denom = 1.0 - (2.0 * rolloff * x) ** 2
        singular = np.isclose(denom, 0.0, atol=1e-10)
        safe = np.where(singular, 1.0, denom)
        out = out * np.cos(np.pi * rolloff * x) / safe
        # limit value at |x| = 1/(2*rolloff)
        out = np.where(singular, (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff)), out)
    return out


def _pulse_taps(delays: np.ndarray, cfg: ClusterConfig) -> np.ndarray:
    """(P, D) raised-cosine samples p_rc(d*Ts - tau_p)."""
    d = np.arange(cfg.num_taps)[None, :]
    u = (delays / cfg.sampling_time)[:, None]
    return raised_cosine(d - u, cfg.pulse_rolloff)


@functools.lru_cache(maxsize=32)
def expected_pulse_energy(num_taps: int, rolloff: float, grid: int = 2048) -> float:
    """E_tau[ sum_d p_rc(d*Ts - tau)^2 ] for tau uniform on [0, D*Ts].

    Evaluated by averaging the truncated tap-energy sum over a fine fractional
    delay grid; used to normalize the tap tensor to its expected Frobenius
    power.
    """
    u = (np.arange(grid) + 0.5) / grid * num_taps
    d = np.arange(num_taps)
    vals = raised_cosine(d[None, :] - u[:, None], rolloff) ** 2
    return float(np.mean(np.sum(vals, axis=1)))


def _tap_amplitude(nt: int, nr: int, cfg: ClusterConfig) -> float:
    return math.sqrt(nt * nr / expected_pulse_energy(cfg.num_taps, cfg.pulse_rolloff))


def assemble_delay_taps(paths: ClusterGeometry, tx_geom: ArrayGeometry,
                        rx_geom: ArrayGeometry, cfg: ClusterConfig) -> np.ndarray:
    """Dense delay-domain tensor (D, N_rx, N_tx) from a sampled ray set."""
    ar = steering_matrix(rx_geom, paths.aoa_azimuth, paths.aoa_elevation)
    at = steering_matrix(tx_geom, paths.aod_azimuth, paths.aod_elevation)
    amp = _tap_amplitude(tx_geom.num_elements, rx_geom.num_elements, cfg)
    w = paths.gains[:, None] * _pulse_taps(paths.delays, cfg) * amp  # (P, D)
    return np.einsum("np,pd,mp->dnm", ar, w, at.conj(), optimize=True)


def to_frequency(channel: WidebandChannel, num_subcarriers: int) -> WidebandChannel:
    """Populate the per-subcarrier response: freq[k] = sum_d taps[d] e^{-j2pi k d / K}."""
    if channel.taps is None:
        raise DegenerateInputError("channel has no delay taps to transform")
    d = channel.taps.shape[0]
    if d > num_subcarriers:
        raise ConfigurationError(
            f"taps-within-cp: {d} delay taps exceed {num_subcarriers} subcarriers"
        )
    channel.freq = np.fft.fft(channel.taps, n=num_subcarriers, axis=0)
    return channel


def ci_path_loss(distance_m: float, carrier_hz: float, exponent: float = 2.0) -> float:
    """Close-in path loss in dB, anchored at the 1 m free-space value."""
    if distance_m < 1.0:
        raise DomainError("close-in model needs distance >= 1 m")
    if carrier_hz <= 0.0:
        raise DomainError("carrier frequency must be positive")
    fspl_1m = 20.0 * math.log10(4.0 * math.pi * carrier_hz / SPEED_OF_LIGHT)
    return fspl_1m + 10.0 * exponent * math.log10(distance_m)


class PathChannel:
    """Factored wideband channel H[k] = A_rx diag(m[:, k]) A_tx^H.

    ``m`` combines ray gains with the subcarrier response of the pulse, so
    effective channels and sample covariances cost O(P) per antenna instead
    of materializing (K, N_rx, N_tx).
    """

    def __init__(self, paths: ClusterGeometry, tx_geom: ArrayGeometry,
                 rx_geom: ArrayGeometry, cfg: ClusterConfig, num_subcarriers: int,
                 path_loss_db: float = 0.0):
        if cfg.num_taps > num_subcarriers:
            raise ConfigurationError(
                f"taps-within-cp: {cfg.num_taps} delay taps exceed {num_subcarriers} subcarriers"
            )
        self.paths = paths
        self.tx_geom = tx_geom
        self.rx_geom = rx_geom
        self.cfg = cfg
        self.num_subcarriers = num_subcarriers
        self.path_loss_db = path_loss_db
        self.rx_basis = steering_matrix(rx_geom, paths.aoa_azimuth, paths.aoa_elevation)
        self.tx_basis = steering_matrix(tx_geom, paths.aod_azimuth, paths.aod_elevation)
        amp = _tap_amplitude(tx_geom.num_elements, rx_geom.num_elements, cfg)
        pulse = _pulse_taps(paths.delays, cfg) * amp
        self.weights = paths.gains[:, None] * np.fft.fft(pulse, n=num_subcarriers, axis=1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.num_subcarriers, self.rx_geom.num_elements, self.tx_geom.num_elements)

    def effective(self, rx_matrix: np.ndarray, tx_matrix: np.ndarray) -> np.ndarray:
        """Per-subcarrier W^H H[k] F, shape (K, W.cols, F.cols)."""
        left = rx_matrix.conj().T @ self.rx_basis     # (a, P)
        right = self.tx_basis.conj().T @ tx_matrix    # (P, b)
        return np.einsum("ap,pk,pb->kab", left, self.weights, right, optimize=True)

    def _weight_gram(self) -> np.ndarray:
        return (self.weights @ self.weights.conj().T) / self.num_subcarriers

    def tx_covariance(self, cols: np.ndarray | None = None) -> np.ndarray:
        """(1/K) sum_k H[k]^H H[k], optionally restricted to transmit elements ``cols``."""
        at = self.tx_basis if cols is None else self.tx_basis[cols]
        s = self.rx_basis.conj().T @ self.rx_basis
        core = s * self._weight_gram().conj()
        return at @ core @ at.conj().T

    def rx_covariance(self, rows: np.ndarray | None = None) -> np.ndarray:
        """(1/K) sum_k H[k] H[k]^H, optionally restricted to receive elements ``rows``."""
        ar = self.rx_basis if rows is None else self.rx_basis[rows]
        t = self.tx_basis.conj().T @ self.tx_basis
        core = t * self._weight_gram()
        return ar @ core @ ar.conj().T

    def covariance_factors(self, side: str, idx: np.ndarray | None = None):
        """(basis, core) with covariance = basis @ core @ basis^H; core is Hermitian PSD."""
        if side == "tx":
            basis = self.tx_basis if idx is None else self.tx_basis[idx]
            s = self.rx_basis.conj().T @ self.rx_basis
            return basis, s * self._weight_gram().conj()
        if side == "rx":
            basis = self.rx_basis if idx is None else self.rx_basis[idx]
            t = self.tx_basis.conj().T @ self.tx_basis
            return basis, t * self._weight_gram()
        raise ConfigurationError("side must be 'tx' or 'rx'")

    def _svd_core(self) -> np.ndarray:
        qr_, rr = np.linalg.qr(self.rx_basis)
        qt, rt = np.linalg.qr(self.tx_basis)
        core = np.einsum("ip,pk,jp->kij", rr, self.weights, rt.conj(), optimize=True)
        self._svd_bases = (qr_, qt)
        return core

    def subcarrier_svd(self, num_streams: int):
        """Top singular triplets of every H[k] via the path-space core.

        Returns (left (K, N_rx, n), sigma (K, n), right (K, N_tx, n)).
        """
        core = self._svd_core()
        qr_, qt = self._svd_bases
        u, s, vh = np.linalg.svd(core)
        n = num_streams
        if n > s.shape[1]:
            raise ConfigurationError("more streams requested than channel rank supports")
        left = np.einsum("ri,kin->krn", qr_, u[:, :, :n], optimize=True)
        right = np.einsum("tj,knj->ktn", qt, vh[:, :n, :].conj(), optimize=True)
        return left, s[:, :n], right

    def subcarrier_singular_values(self, num_streams: int) -> np.ndarray:
        """Top ``num_streams`` singular values of every H[k], shape (K, n)."""
        s = np.linalg.svd(self._svd_core(), compute_uv=False)
        if num_streams > s.shape[1]:
            raise ConfigurationError("more streams requested than channel rank supports")
        return s[:, :num_streams]

    def frequency_response(self) -> np.ndarray:
        """Dense (K, N_rx, N_tx) tensor; intended for small arrays and tests."""
        return np.einsum("np,pk,mp->knm", self.rx_basis, self.weights,
                         self.tx_basis.conj(), optimize=True)

    def delay_taps(self) -> np.ndarray:
        return assemble_delay_taps(self.paths, self.tx_geom, self.rx_geom, self.cfg)

    def as_wideband(self) -> WidebandChannel:
        ch = WidebandChannel(taps=self.delay_taps(), path_loss_db=self.path_loss_db)
        return to_frequency(ch, self.num_subcarriers)


def near_field_los(tx_geom: ArrayGeometry, rx_geom: ArrayGeometry,
                   wavelength: float) -> np.ndarray:
    """Deterministic LoS SI matrix: entry (i, j) = (rho / r_ij) e^{-j 2 pi r_ij / lambda}.

    rho normalizes the Frobenius power to N_tx * N_rx exactly. Warns when the
    panel separation is outside the near-field radius 2 D^2 / lambda.
    """
    tx_pos = element_positions(tx_geom, wavelength)
    rx_pos = element_positions(rx_geom, wavelength)
    diff = rx_pos[:, None, :] - tx_pos[None, :, :]
    r = np.linalg.norm(diff, axis=2)
    if np.any(r <= 0.0):
        raise DomainError("transmit and receive panels overlap; element-pair distance is zero")
    sep = np.linalg.norm(np.mean(rx_pos, axis=0) - np.mean(tx_pos, axis=0))
    radius = max(near_field_radius(tx_geom, wavelength), near_field_radius(rx_geom, wavelength))
    if sep >= radius:
        warnings.warn(
            f"panel separation {sep:.3g} m is outside the near-field radius {radius:.3g} m; "
            "the spherical-wavefront LoS model may not apply", stacklevel=2)
    mat = np.exp(-2j * np.pi * r / wavelength) / r
    nt, nr = tx_geom.num_elements, rx_geom.num_elements
    rho = math.sqrt(nt * nr / float(np.sum(1.0 / r ** 2)))
    return rho * mat


@dataclass
class SiChannelParts:
    """Factored SI channel: Rician-weighted near-field LoS plus clustered NLoS."""

    los: np.ndarray
    nlos: PathChannel | None
    los_weight: float
    nlos_weight: float
    amplitude: float = 1.0

    def effective(self, rx_matrix: np.ndarray, tx_matrix: np.ndarray) -> np.ndarray:
        """Per-subcarrier W^H H_si[k] F including the residual-cancellation scale."""
        flat = rx_matrix.conj().T @ self.los @ tx_matrix
        out = np.broadcast_to(self.los_weight * flat, (self.num_subcarriers,) + flat.shape).copy()
        if self.nlos is not None:
            out += self.nlos_weight * self.nlos.effective(rx_matrix, tx_matrix)
        return self.amplitude * out

    @property
    def num_subcarriers(self) -> int:
        return self.nlos.num_subcarriers if self.nlos is not None else 1

    def attenuated(self, sic_db: float) -> "SiChannelParts":
        scale = 10.0 ** (-_check_sic(sic_db) / 20.0)
        return replace(self, amplitude=self.amplitude * scale)


def _rician_weights(rician_factor_db: float) -> tuple[float, float]:
    if np.isinf(rician_factor_db):
        return 1.0, 0.0
    kappa = 10.0 ** (rician_factor_db / 10.0)
    return math.sqrt(kappa / (1.0 + kappa)), math.sqrt(1.0 / (1.0 + kappa))


def _si_nlos_config(cfg: SiChannelConfig, cluster_cfg: ClusterConfig) -> ClusterConfig:
    return replace(cluster_cfg, num_clusters=cfg.nlos_clusters, rays_per_cluster=cfg.nlos_rays)


def si_channel_parts(tx_geom: ArrayGeometry, rx_geom: ArrayGeometry, cfg: SiChannelConfig,
                     cluster_cfg: ClusterConfig, rng_seed, wavelength: float,
                     num_subcarriers: int) -> SiChannelParts:
    """Factored form of the SI channel; same draw as :func:`gen_si_channel`."""
    rng = as_rng(rng_seed)
    los = near_field_los(tx_geom, rx_geom, wavelength)
    w_los, w_nlos = _rician_weights(cfg.rician_factor_db)
    nlos = None
    if w_nlos > 0.0:
        paths = sample_cluster_geometry(_si_nlos_config(cfg, cluster_cfg), rng)
        nlos = PathChannel(paths, tx_geom, rx_geom, _si_nlos_config(cfg, cluster_cfg),
                           num_subcarriers)
    return SiChannelParts(los, nlos, w_los, w_nlos)


def gen_si_channel(tx_geom: ArrayGeometry, rx_geom: ArrayGeometry, cfg: SiChannelConfig,
                   cluster_cfg: ClusterConfig, rng_seed, wavelength: float) -> WidebandChannel:
    """Dense SI channel: sqrt(k/(1+k)) LoS at tap 0 plus sqrt(1/(1+k)) clustered NLoS taps."""
    rng = as_rng(rng_seed)
    los = near_field_los(tx_geom, rx_geom, wavelength)
    w_los, w_nlos = _rician_weights(cfg.rician_factor_db)
    taps = np.zeros((cluster_cfg.num_taps, rx_geom.num_elements, tx_geom.num_elements),
                    dtype=complex)
    if w_nlos > 0.0:
        paths = sample_cluster_geometry(_si_nlos_config(cfg, cluster_cfg), rng)
        taps += w_nlos * assemble_delay_taps(paths, tx_geom, rx_geom,
                                             _si_nlos_config(cfg, cluster_cfg))
    taps[0] += w_los * los
    return WidebandChannel(taps=taps)


def _check_sic(sic_db: float) -> float:
    if sic_db < 0.0:
        raise DomainError("cancellation budget must be >= 0 dB")
    return sic_db


def apply_residual_sic(si_matrices: np.ndarray, sic_db: float) -> np.ndarray:
    """Attenuate by sic_db of power: amplitude scale 10^(-sic_db/20)."""
    return np.asarray(si_matrices) * 10.0 ** (-_check_sic(sic_db) / 20.0)


def perturb_effective_channel(h_eff: np.ndarray, sigma_e: float, rng_seed) -> np.ndarray:
    """Estimated effective channel: truth minus a circular Gaussian error.

    The per-entry error variance on subcarrier k is sigma_e^2 times the mean
    squared entry magnitude of h_eff[k], so sigma_e is scale free. The true
    channel is the returned estimate plus the error.
    """
    if sigma_e < 0.0:
        raise DomainError("sigma_e must be non-negative")
    h = np.asarray(h_eff)
    if sigma_e == 0.0:
        return h.copy()
    rng = as_rng(rng_seed)
    ms = np.mean(np.abs(h) ** 2, axis=tuple(range(1, h.ndim)), keepdims=True)
    scale = sigma_e * np.sqrt(ms / 2.0)
    delta = scale * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))
    return h - delta


_HEADER = struct.Struct("<4I")


def save_channel(channel: WidebandChannel, path) -> None:
    """Binary dump: little-endian (N_rx, N_tx, D, K) header, complex64 payload, row-major."""
    taps = channel.taps
    freq = channel.freq
    if taps is None and freq is None:
        raise DegenerateInputError("channel holds neither taps nor subcarrier responses")
    ref = taps if taps is not None else freq
    nr, nt = ref.shape[1], ref.shape[2]
    d = 0 if taps is None else taps.shape[0]
    k = 0 if freq is None else freq.shape[0]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(nr, nt, d, k))
        if taps is not None:
            fh.write(np.ascontiguousarray(taps, dtype=np.complex64).tobytes())
        if freq is not None:
            fh.write(np.ascontiguousarray(freq, dtype=np.complex64).tobytes())


def load_channel(path) -> WidebandChannel:
    with open(path, "rb") as fh:
        nr, nt, d, k = _HEADER.unpack(fh.read(_HEADER.size))
        payload = np.frombuffer(fh.read(), dtype=np.complex64)
    expected = (d + k) * nr * nt
    if payload.size != expected:
        raise DimensionError(f"channel file payload has {payload.size} entries, expected {expected}")
    taps = payload[: d * nr * nt].reshape(d, nr, nt).astype(complex) if d else None
    freq = payload[d * nr * nt:].reshape(k, nr, nt).astype(complex) if k else None
    return WidebandChannel(taps=taps, freq=freq)
