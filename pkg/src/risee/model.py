"""Signal and power model for an amplifying-RIS multi-user uplink.

K single-antenna users reach an N_R-antenna base station only through an
RIS with N elements holding complex reflection coefficients gamma.  The
RIS may amplify (|gamma_n| > 1) at the cost of RF power drawn from a
surface-wide budget, and its amplifiers inject thermal noise that arrives
at the receiver colored by the RIS-BS channel.

All quantities are linear units: watts, Hz, meters.  Rates are in bits
(log base 2) throughout.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DegenerateConfigError, InvalidInputError

LN2 = float(np.log(2.0))

# sigma^2 for the section-V defaults: -174 dBm/Hz PSD, 10 dB noise figure, 20 MHz
_DEFAULT_SIGMA2_W = 10.0 ** ((-174.0 + 10.0) / 10.0) * 1e-3 * 20e6


@dataclass
class ScenarioConfig:
    """Physical and system constants for one network instance.

    p_max and mu are per-user vectors of length K; scalars broadcast.
    sigma2_ris_w defaults to sigma2_w (same noise level assumed at the
    RIS amplifiers as at the receiver) and can be overridden.
    """

    K: int = 4                      # users
    N_R: int = 4                    # BS antennas
    N: int = 100                    # RIS elements
    bandwidth_hz: float = 20e6
    p_max: np.ndarray = 1.0         # W, per user
    mu: np.ndarray = 1.0            # transmit amplifier inefficiency, >= 1
    p0_w: float = 10.0              # BS static power
    p0_ris_w: float = 1.0           # RIS static power (active)
    pcn_w: float = 1e-3             # per-element static power (active)
    pr_max_w: float = 10.0          # RIS amplification budget
    sigma2_w: float = _DEFAULT_SIGMA2_W
    sigma2_ris_w: float = None      # None -> sigma2_w
    # geometry
    user_area_radius_m: float = 100.0
    bs_distance_m: float = 50.0
    ris_height_m: float = 15.0
    bs_height_m: float = 10.0
    user_height_min_m: float = 0.0
    user_height_max_m: float = 5.0
    # propagation
    eta: float = 4.0                # path-loss exponent
    ref_distance_m: float = 1.0
    rice_kt: float = 4.0            # RIS -> BS Rician factor
    rice_kr: float = 2.0            # user -> RIS Rician factor
    # passive-RIS power constants (used by the passive specialization)
    pcn_passive_w: float = 1e-3
    p0_ris_passive_w: float = 0.1
    seed: int = 1

    def __post_init__(self):
        self.p_max = np.broadcast_to(np.asarray(self.p_max, dtype=float), (self.K,)).copy()
        self.mu = np.broadcast_to(np.asarray(self.mu, dtype=float), (self.K,)).copy()
        if self.sigma2_ris_w is None:
            self.sigma2_ris_w = float(self.sigma2_w)

    @property
    def p_c_w(self) -> float:
        """Total static power: BS + per-element + RIS overhead."""
        return self.p0_w + self.N * self.pcn_w + self.p0_ris_w

    def passive_variant(self) -> "ScenarioConfig":
        """Config for a purely reflecting surface: zero amplification budget
        and the passive static-power constants."""
        return replace(
            self,
            pr_max_w=0.0,
            pcn_w=self.pcn_passive_w,
            p0_ris_w=self.p0_ris_passive_w,
        )

    def validate(self):
        if min(self.K, self.N_R, self.N) < 1:
            raise ConfigError("K, N_R and N must all be >= 1")
        for name in ("bandwidth_hz", "sigma2_w", "sigma2_ris_w"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("p0_w", "p0_ris_w", "pcn_w", "pr_max_w",
                     "pcn_passive_w", "p0_ris_passive_w"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if np.any(self.p_max < 0):
            raise ConfigError("p_max entries must be >= 0")
        if np.any(self.mu < 1.0):
            raise ConfigError("mu entries must be >= 1")
        if self.eta <= 0:
            raise ConfigError("eta must be > 0")
        if self.user_area_radius_m <= 0 or self.ref_distance_m <= 0:
            raise ConfigError("radii must be > 0")
        if self.user_height_max_m < self.user_height_min_m:
            raise ConfigError("user height range is inverted")
        if min(self.rice_kt, self.rice_kr) < 0:
            raise ConfigError("Rician factors must be >= 0")
        return self


@dataclass
class ChannelSet:
    """One realization of all channels.

    h : (K, N) user -> RIS channels, one row per user
    G : (N_R, N) RIS -> BS channel
    A : (K, N_R, N) composite per-user channels, A_k = G @ diag(h_k)
    """

    h: np.ndarray
    G: np.ndarray
    A: np.ndarray

    @classmethod
    def from_channels(cls, h, G) -> "ChannelSet":
        h = np.asarray(h, dtype=complex)
        G = np.asarray(G, dtype=complex)
        if h.ndim != 2 or G.ndim != 2 or G.shape[1] != h.shape[1]:
            raise InvalidInputError(
                f"inconsistent channel shapes h{h.shape}, G{G.shape}")
        # A[k, :, j] = G[:, j] * h[k, j]
        A = G[None, :, :] * h[:, None, :]
        return cls(h=h, G=G, A=A)

    @property
    def K(self) -> int:
        return self.h.shape[0]

    @property
    def N(self) -> int:
        return self.h.shape[1]

    @property
    def N_R(self) -> int:
        return self.G.shape[0]


@dataclass
class Allocation:
    """Optimization variables: RIS coefficients, transmit powers, filters.

    gamma : (N,) complex reflection coefficients
    p     : (K,) transmit powers, W
    c     : (K, N_R) receive filters, one row per user (each nonzero)
    """

    gamma: np.ndarray
    p: np.ndarray
    c: np.ndarray


@dataclass
class GeeBreakdown:
    """GEE value with its ingredients."""

    sum_rate_bps: float
    total_power_w: float
    gee_bits_per_joule: float
    sinr: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _check_gamma(gamma, channels: ChannelSet) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    if gamma.shape[0] != channels.N:
        raise InvalidInputError(
            f"gamma has length {gamma.shape[0]}, expected {channels.N}")
    return gamma


def noise_covariance(gamma, channels: ChannelSet, cfg: ScenarioConfig) -> np.ndarray:
    """Receiver noise covariance W = sigma2*I + sigma2_ris * G diag(|gamma|^2) G^H.

    The second term is the RIS amplifier noise re-radiated through the
    RIS-BS channel; it vanishes for gamma = 0 and is white for G = I.
    """
    gamma = _check_gamma(gamma, channels)
    G = channels.G
    scaled = G * (np.abs(gamma) ** 2)[None, :]
    W = cfg.sigma2_ris_w * (scaled @ G.conj().T)
    W[np.diag_indices_from(W)] += cfg.sigma2_w
    return 0.5 * (W + W.conj().T)


def sinr_all(alloc: Allocation, channels: ChannelSet, cfg: ScenarioConfig) -> np.ndarray:
    """Per-user SINR after linear filtering, length-K vector.

    SINR_k = p_k |c_k^H A_k gamma|^2
             / (c_k^H W c_k + sum_{m != k} p_m |c_k^H A_m gamma|^2)
    """
    gamma = _check_gamma(alloc.gamma, channels)
    c = np.asarray(alloc.c, dtype=complex)
    p = np.asarray(alloc.p, dtype=float)
    if c.shape != (channels.K, channels.N_R):
        raise InvalidInputError(f"filters have shape {c.shape}, "
                                f"expected {(channels.K, channels.N_R)}")
    norms = np.linalg.norm(c, axis=1)
    if np.any(norms == 0.0):
        raise InvalidInputError("zero receive filter")
    W = noise_covariance(gamma, channels, cfg)
    a = channels.A @ gamma                  # (K, N_R), a_m = A_m gamma
    cross = c.conj() @ a.T                  # cross[k, m] = c_k^H A_m gamma
    power = np.abs(cross) ** 2
    signal = p * np.diagonal(power)
    noise = np.einsum("ki,ij,kj->k", c.conj(), W, c).real
    interference = power @ p - np.diagonal(power) * p
    return signal / (noise + interference)


def sinr(k: int, alloc: Allocation, channels: ChannelSet, cfg: ScenarioConfig) -> float:
    """SINR of user k; see sinr_all."""
    return float(sinr_all(alloc, channels, cfg)[k])


def ris_power_weights(p, channels: ChannelSet, cfg: ScenarioConfig) -> np.ndarray:
    """Diagonal of the matrix governing the RIS power balance.

    r_n = sum_k p_k |h_k(n)|^2 + sigma2_ris, so that gamma^H diag(r) gamma is
    the power leaving the surface and sum(r) the power arriving at it.
    Every entry is >= sigma2_ris > 0.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (channels.K,):
        raise InvalidInputError(f"p has shape {p.shape}, expected ({channels.K},)")
    return p @ (np.abs(channels.h) ** 2) + cfg.sigma2_ris_w


def rf_power(gamma, r) -> float:
    """RF power spent by the surface: gamma^H diag(r) gamma - sum(r).

    Zero at the passive boundary |gamma_n| = 1; negative values mean the
    surface absorbs power (outside the amplifying regime, caller flags).
    """
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    r = np.asarray(r, dtype=float).reshape(-1)
    return float(r @ (np.abs(gamma) ** 2 - 1.0))


def total_power(gamma, p, channels: ChannelSet, cfg: ScenarioConfig) -> float:
    """Total consumed power: transmit amplifiers + RIS RF + static.

    Equals sum_k mu_k p_k + rf_power + P_c; reported raw (may be below
    P_c when the surface absorbs, callers enforce the amplifying regime).
    """
    gamma = _check_gamma(gamma, channels)
    p = np.asarray(p, dtype=float)
    r = ris_power_weights(p, channels, cfg)
    hnorm2 = np.sum(np.abs(channels.h) ** 2, axis=1)
    return float(r @ np.abs(gamma) ** 2 - cfg.sigma2_ris_w * channels.N
                 + p @ (cfg.mu - hnorm2) + cfg.p_c_w)


def gee(alloc: Allocation, channels: ChannelSet, cfg: ScenarioConfig) -> GeeBreakdown:
    """Global energy efficiency of an allocation, bits per joule."""
    s = sinr_all(alloc, channels, cfg)
    sum_rate = cfg.bandwidth_hz * float(np.sum(np.log2(1.0 + s)))
    ptot = total_power(alloc.gamma, alloc.p, channels, cfg)
    if ptot <= 0.0:
        raise DegenerateConfigError(f"total power {ptot} W is not positive")
    return GeeBreakdown(sum_rate_bps=sum_rate, total_power_w=ptot,
                        gee_bits_per_joule=sum_rate / ptot, sinr=s)


def mmse_filters(gamma, p, channels: ChannelSet, cfg: ScenarioConfig) -> np.ndarray:
    """SINR-optimal linear receivers, unit-normalized, shape (K, N_R).

    c_k solves (W + sum_{m != k} p_m a_m a_m^H) c = a_k with a_m = A_m gamma;
    the normalization is free since the SINR is filter-scale invariant.
    """
    gamma = _check_gamma(gamma, channels)
    p = np.asarray(p, dtype=float)
    W = noise_covariance(gamma, channels, cfg)
    a = channels.A @ gamma
    S = W + (a.T * p) @ a.conj()            # W + sum_m p_m a_m a_m^H
    c = np.empty((channels.K, channels.N_R), dtype=complex)
    for k in range(channels.K):
        ak = a[k]
        Mk = S - p[k] * np.outer(ak, ak.conj())
        ck = np.linalg.solve(Mk, ak)
        nrm = np.linalg.norm(ck)
        if nrm == 0.0:
            # a_k = 0: any filter gives SINR 0, keep a valid nonzero one
            ck = np.zeros(channels.N_R, dtype=complex)
            ck[0] = 1.0
            nrm = 1.0
        c[k] = ck / nrm
    return c


def sum_rate_mmse(gamma, p, channels: ChannelSet, cfg: ScenarioConfig) -> float:
    """Sum rate under MMSE filtering, bits/s/Hz (bandwidth not applied).

    sum_k [log2 det(W + sum_m p_m a_m a_m^H) - log2 det(W + sum_{m!=k} ...)],
    each summand being log2(1 + SINR_k) at the MMSE filter.
    """
    gamma = _check_gamma(gamma, channels)
    p = np.asarray(p, dtype=float)
    W = noise_covariance(gamma, channels, cfg)
    a = channels.A @ gamma
    outer = np.einsum("ki,kj->kij", a, a.conj())
    full = W + np.einsum("k,kij->ij", p, outer)
    sign, ld_full = np.linalg.slogdet(full)
    total = 0.0
    for k in range(channels.K):
        Mk = full - p[k] * outer[k]
        sign_k, ld_k = np.linalg.slogdet(Mk)
        total += (ld_full - ld_k) / LN2
    return float(total)


def gee_mmse(gamma, p, channels: ChannelSet, cfg: ScenarioConfig) -> float:
    """GEE with MMSE filters folded in, bits per joule."""
    ptot = total_power(gamma, p, channels, cfg)
    if ptot <= 0.0:
        raise DegenerateConfigError(f"total power {ptot} W is not positive")
    return cfg.bandwidth_hz * sum_rate_mmse(gamma, p, channels, cfg) / ptot
