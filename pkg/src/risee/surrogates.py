"""Concave surrogate bounds and analytic gradients for the sequential solvers.

Every surrogate here is tight at its expansion point (equal value, and for
the smooth ones equal gradient) and lower-bounds the true objective
everywhere on its domain; those two properties are what make the sequential
loops monotone.  Rates are kept in bits, so slopes coming from natural-log
derivations carry an explicit 1/ln2.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, SurrogateDegenerateError
from .model import LN2, ChannelSet, ScenarioConfig

# anchors with |c_k^H A_k gammabar| below this are nudged before freezing
_ANCHOR_EPS = 1e-12
_ANCHOR_NUDGE = 1e-9


def log_bound(x: float, y: float, xbar: float, ybar: float) -> float:
    """Concave-in-(sqrt x, x, y) lower bound on log2(1 + x/y).

    log2(1 + x/y) >= log2(1 + xbar/ybar)
                     + (xbar/ybar)/ln2 * (2 sqrt(x/xbar) - (x+y)/(xbar+ybar) - 1)

    with equality at (x, y) = (xbar, ybar).  The slope term is a natural-log
    bound rescaled to bits; without the 1/ln2 it would overshoot for x < xbar.
    """
    if xbar <= 0.0 or ybar <= 0.0:
        raise InvalidInputError("expansion point must have xbar > 0 and ybar > 0")
    if x < 0.0 or y <= 0.0:
        raise InvalidInputError("requires x >= 0 and y > 0")
    ratio = xbar / ybar
    return float(np.log2(1.0 + ratio)
                 + ratio / LN2 * (2.0 * np.sqrt(x / xbar) - (x + y) / (xbar + ybar) - 1.0))


@dataclass
class SurrogateCoeffs:
    """Constants of the per-user rate surrogate, frozen at anchor gammabar.

    Shapes: q (K, K, N) with q[k, m] = A_m^H c_k; u2 (K, N) the squared
    magnitudes of G^H c_k; everything else per-user length-K vectors.

    inp0       effective interference-plus-noise at the anchor, W
    rate0      rate at the anchor, bits
    sinr0      SINR at the anchor
    amp_scale  2 / |anchor signal amplitude|
    tot_inv    1 / (inp0 + anchor signal power)
    noise_term tot_inv * sigma2 * ||c_k||^2 + 1

    The summed surrogate is the concave quadratic
    const0 + Re(lin_vec^H gamma) - gamma^H quad gamma, with quad PSD;
    those three are precomputed for the inner solvers.
    """

    gammabar: np.ndarray
    q: np.ndarray
    u2: np.ndarray
    cnorm2: np.ndarray
    tbar: np.ndarray
    inp0: np.ndarray
    rate0: np.ndarray
    sinr0: np.ndarray
    amp_scale: np.ndarray
    tot_inv: np.ndarray
    noise_term: np.ndarray
    p: np.ndarray
    sigma2: float
    sigma2_ris: float
    const0: float = 0.0
    lin_vec: np.ndarray = None
    quad: np.ndarray = None


def build_gamma_coeffs(gammabar, p, c, channels: ChannelSet,
                       cfg: ScenarioConfig) -> SurrogateCoeffs:
    """Freeze the rate-surrogate constants at expansion point gammabar.

    A vanishing anchor signal makes the bound blow up, so such anchors are
    nudged by 1e-9 along the normalized all-ones direction; if that does
    not help the caller must supply a better anchor.
    """
    gammabar = np.asarray(gammabar, dtype=complex).reshape(-1)
    p = np.asarray(p, dtype=float)
    c = np.asarray(c, dtype=complex)
    K, N = channels.K, channels.N
    q = np.einsum("mjn,kj->kmn", channels.A.conj(), c)
    tbar = np.einsum("kkn,n->k", q.conj(), gammabar)
    if np.any(np.abs(tbar) < _ANCHOR_EPS):
        gammabar = gammabar + _ANCHOR_NUDGE * np.ones(N) / np.sqrt(N)
        tbar = np.einsum("kkn,n->k", q.conj(), gammabar)
        if np.any(np.abs(tbar) < _ANCHOR_EPS):
            raise SurrogateDegenerateError(
                "anchor signal amplitude vanished for at least one user")
    u = channels.G.conj().T @ c.T           # (N, K), column k = G^H c_k
    u2 = (np.abs(u) ** 2).T
    cnorm2 = np.sum(np.abs(c) ** 2, axis=1)
    xbar = np.einsum("kmn,n->km", q.conj(), gammabar)   # c_k^H A_m gammabar
    cross0 = np.abs(xbar) ** 2
    interf0 = cross0 @ p - np.diagonal(cross0) * p
    inp0 = (cfg.sigma2_w * cnorm2
            + cfg.sigma2_ris_w * (u2 @ (np.abs(gammabar) ** 2))
            + interf0)
    sig0 = p * np.abs(tbar) ** 2
    sinr0 = sig0 / inp0
    rate0 = np.log2(1.0 + sinr0)
    tot_inv = 1.0 / (inp0 + sig0)
    amp_scale = 2.0 / np.abs(tbar)
    noise_term = tot_inv * cfg.sigma2_w * cnorm2 + 1.0
    beta = sinr0 / LN2
    const0 = float(np.sum(rate0 - beta * noise_term))
    phase = tbar / np.abs(tbar)
    qdiag = np.einsum("kkn->kn", q)
    lin_vec = np.einsum("k,kn->n", beta * amp_scale * phase, qdiag)
    w = beta * tot_inv
    quad = np.diag((w * cfg.sigma2_ris_w) @ u2).astype(complex)
    quad += np.einsum("k,m,kmn,kml->nl", w, p, q, q.conj())
    quad = 0.5 * (quad + quad.conj().T)
    return SurrogateCoeffs(
        gammabar=gammabar, q=q, u2=u2, cnorm2=cnorm2, tbar=tbar,
        inp0=inp0, rate0=rate0, sinr0=sinr0,
        amp_scale=amp_scale, tot_inv=tot_inv, noise_term=noise_term,
        p=p.copy(), sigma2=cfg.sigma2_w, sigma2_ris=cfg.sigma2_ris_w,
        const0=const0, lin_vec=lin_vec, quad=quad)


def gamma_rate_surrogate(gamma, coeffs: SurrogateCoeffs) -> np.ndarray:
    """Per-user concave lower bounds on log2(1 + SINR_k), length-K vector.

    The signal amplitude is replaced by its tangent at the anchor and the
    interference-plus-noise terms enter as exact (concave-with-minus-sign)
    quadratics, so each entry is affine-plus-negative-quadratic in gamma.
    """
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    x = np.einsum("kmn,n->km", coeffs.q.conj(), gamma)
    xdiag = np.diagonal(x)
    lin = (coeffs.tbar.conj() * xdiag).real / np.abs(coeffs.tbar)
    quad = (coeffs.sigma2_ris * (coeffs.u2 @ (np.abs(gamma) ** 2))
            + (np.abs(x) ** 2) @ coeffs.p)
    beta = coeffs.sinr0 / LN2
    return coeffs.rate0 + beta * (coeffs.amp_scale * lin
                                  - coeffs.noise_term - coeffs.tot_inv * quad)


def gamma_surrogate_value_grad(gamma, coeffs: SurrogateCoeffs):
    """Sum of the per-user surrogates and its gradient, via the precomputed
    quadratic form const0 + Re(lin_vec^H gamma) - gamma^H quad gamma.

    Gradient convention: f(gamma + d) ~ f(gamma) + Re(g^H d).
    """
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    qg = coeffs.quad @ gamma
    value = (coeffs.const0 + float(np.vdot(coeffs.lin_vec, gamma).real)
             - float(np.vdot(gamma, qg).real))
    return value, coeffs.lin_vec - 2.0 * qg


def linearized_active_constraint(gamma, gammabar, r) -> float:
    """Tangent of gamma^H diag(r) gamma at gammabar, evaluated at gamma.

    Lower-bounds the quadratic everywhere, so requiring it to stay above
    sum(r) is a convex inner approximation of the amplifying-regime side.
    """
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    gammabar = np.asarray(gammabar, dtype=complex).reshape(-1)
    r = np.asarray(r, dtype=float).reshape(-1)
    quad0 = float(r @ (np.abs(gammabar) ** 2))
    return quad0 + 2.0 * float((gammabar.conj() * r * (gamma - gammabar)).sum().real)


def active_halfspace(gammabar, r):
    """(a, b) with Re(a^H gamma) >= b equivalent to the linearized constraint
    staying above sum(r)."""
    gammabar = np.asarray(gammabar, dtype=complex).reshape(-1)
    r = np.asarray(r, dtype=float).reshape(-1)
    a = r * gammabar
    b = 0.5 * (float(np.sum(r)) + float(r @ (np.abs(gammabar) ** 2)))
    return a, b


# ---------------------------------------------------------------------------
# power step (filters and gamma frozen)
# ---------------------------------------------------------------------------

@dataclass
class PowerSurrogateCoeffs:
    """Constants of the power subproblem at fixed (gamma, filters).

    a[k, m] = |c_k^H A_m gamma|^2, d[k] = c_k^H W c_k.  mu_eq and p_c_eq
    give the exact affine total power sum(mu_eq * p) + p_c_eq: mu_eq folds
    in the per-watt RF amplification cost gamma^H diag(|h_k|^2) gamma
    - ||h_k||^2 so the ratio being maximized is the true GEE; beta/beta0
    reproduce that split for the amplifying-regime constraint on p.
    """

    a: np.ndarray
    d: np.ndarray
    mu_eq: np.ndarray
    p_c_eq: float
    beta: np.ndarray
    beta0: float


def power_denominator_coeffs(gamma, channels: ChannelSet, cfg: ScenarioConfig):
    """Exact affine split of the total power at fixed gamma.

    Returns (mu_eq, p_c_eq, beta, beta0) with total power equal to
    mu_eq . p + p_c_eq and RF amplification power beta . p + sigma2_ris*beta0.
    """
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    h2 = np.abs(channels.h) ** 2
    beta = h2 @ (np.abs(gamma) ** 2) - np.sum(h2, axis=1)
    beta0 = float(np.sum(np.abs(gamma) ** 2) - channels.N)
    return (cfg.mu + beta, cfg.sigma2_ris_w * beta0 + cfg.p_c_w, beta, beta0)


def build_power_coeffs(gamma, c, channels: ChannelSet,
                       cfg: ScenarioConfig) -> PowerSurrogateCoeffs:
    from .model import noise_covariance  # local import to avoid cycle at import time

    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    c = np.asarray(c, dtype=complex)
    W = noise_covariance(gamma, channels, cfg)
    av = channels.A @ gamma
    cross = c.conj() @ av.T
    a = np.abs(cross) ** 2
    d = np.einsum("ki,ij,kj->k", c.conj(), W, c).real
    mu_eq, p_c_eq, beta, beta0 = power_denominator_coeffs(gamma, channels, cfg)
    return PowerSurrogateCoeffs(a=a, d=d, mu_eq=mu_eq, p_c_eq=p_c_eq,
                                beta=beta, beta0=beta0)


def power_rate_true(p, coeffs: PowerSurrogateCoeffs) -> float:
    """Exact sum rate (bits/s/Hz) of the power subproblem."""
    p = np.asarray(p, dtype=float)
    ai = coeffs.a.copy()
    np.fill_diagonal(ai, 0.0)
    interf = coeffs.d + ai @ p
    return float(np.sum(np.log2(1.0 + p * np.diagonal(coeffs.a) / interf)))


def power_denominator(p, coeffs: PowerSurrogateCoeffs) -> float:
    """Exact total power as an affine function of p, W."""
    return float(coeffs.mu_eq @ np.asarray(p, dtype=float) + coeffs.p_c_eq)


def _interference_grad(p, coeffs):
    ai = coeffs.a.copy()
    np.fill_diagonal(ai, 0.0)
    denom = coeffs.d + ai @ p
    return ai, denom, (ai / denom[:, None]).sum(axis=0) / LN2


def power_dc_surrogate(p, pbar, coeffs: PowerSurrogateCoeffs) -> float:
    """Concave lower bound on the sum rate in p, tight at pbar.

    The rate splits as log2(total received) - log2(interference); the
    subtracted term is concave, so its tangent at pbar gives the bound.
    """
    p = np.asarray(p, dtype=float)
    pbar = np.asarray(pbar, dtype=float)
    ai, denom0, grad_f = _interference_grad(pbar, coeffs)
    f0 = float(np.sum(np.log2(denom0)))
    total = coeffs.d + coeffs.a @ p
    return float(np.sum(np.log2(total)) - f0 - grad_f @ (p - pbar))


def power_dc_surrogate_grad(p, pbar, coeffs: PowerSurrogateCoeffs) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    ai, _, grad_f = _interference_grad(np.asarray(pbar, dtype=float), coeffs)
    total = coeffs.d + coeffs.a @ p
    return (coeffs.a / total[:, None]).sum(axis=0) / LN2 - grad_f


# ---------------------------------------------------------------------------
# lifted X = gamma gamma^H domain (MMSE sum rate folded into the objective)
# ---------------------------------------------------------------------------

def _check_hermitian(X, name="X"):
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise InvalidInputError(f"{name} must be square")
    scale = np.linalg.norm(X) + 1e-300
    if np.linalg.norm(X - X.conj().T) > 1e-8 * scale:
        raise InvalidInputError(f"{name} must be Hermitian")
    return 0.5 * (X + X.conj().T)


def _t_full(X, p, channels, cfg):
    """sigma2 I + sigma2_ris G diag(X) G^H + sum_m p_m A_m X A_m^H and the
    per-user rank-updates A_m X A_m^H."""
    G = channels.G
    dX = np.diagonal(X).real
    T = cfg.sigma2_ris_w * ((G * dX[None, :]) @ G.conj().T)
    T[np.diag_indices_from(T)] += cfg.sigma2_w
    AX = np.array([channels.A[m] @ X @ channels.A[m].conj().T
                   for m in range(channels.K)])
    T = T + np.einsum("m,mij->ij", p, AX)
    return 0.5 * (T + T.conj().T), AX


def g1_value(X, p, channels: ChannelSet, cfg: ScenarioConfig) -> float:
    """Concave part of the lifted MMSE sum rate: K log2 det T(X), bits."""
    X = _check_hermitian(X)
    T, _ = _t_full(X, np.asarray(p, dtype=float), channels, cfg)
    sign, ld = np.linalg.slogdet(T)
    return channels.K * float(ld) / LN2


def g1_value_grad(X, p, channels: ChannelSet, cfg: ScenarioConfig):
    X = _check_hermitian(X)
    p = np.asarray(p, dtype=float)
    T, _ = _t_full(X, p, channels, cfg)
    sign, ld = np.linalg.slogdet(T)
    Ti = np.linalg.inv(T)
    G = channels.G
    M = cfg.sigma2_ris_w * np.diag(np.einsum("in,ij,jn->n", G.conj(), Ti, G).real)
    M = M.astype(complex)
    for m in range(channels.K):
        Am = channels.A[m]
        M += p[m] * (Am.conj().T @ Ti @ Am)
    grad = channels.K / LN2 * 0.5 * (M + M.conj().T)
    return channels.K * float(ld) / LN2, grad


def g2_value(X, p, channels: ChannelSet, cfg: ScenarioConfig) -> float:
    """Subtracted concave part: sum_k log2 det T_k(X) with user k's own
    signal removed, bits."""
    X = _check_hermitian(X)
    p = np.asarray(p, dtype=float)
    T, AX = _t_full(X, p, channels, cfg)
    total = 0.0
    for k in range(channels.K):
        sign, ld = np.linalg.slogdet(T - p[k] * AX[k])
        total += float(ld) / LN2
    return total


def grad_g2(X, p, channels: ChannelSet, cfg: ScenarioConfig) -> np.ndarray:
    """Gradient of g2_value, Hermitian PSD N x N (1/ln2 carried for bits).

    sum_k [ sigma2_ris (G^H T_k^-1 G) o I + sum_{m != k} p_m A_m^H T_k^-1 A_m ]
    """
    X = _check_hermitian(X)
    p = np.asarray(p, dtype=float)
    T, AX = _t_full(X, p, channels, cfg)
    G = channels.G
    M = np.zeros((channels.N, channels.N), dtype=complex)
    for k in range(channels.K):
        Tki = np.linalg.inv(T - p[k] * AX[k])
        M += np.diag(np.einsum("in,ij,jn->n", G.conj(), Tki, G).real
                     * cfg.sigma2_ris_w)
        for m in range(channels.K):
            if m == k:
                continue
            Am = channels.A[m]
            M += p[m] * (Am.conj().T @ Tki @ Am)
    M /= LN2
    return 0.5 * (M + M.conj().T)


def sum_rate_mmse_x(X, p, channels: ChannelSet, cfg: ScenarioConfig) -> float:
    """MMSE sum rate as a function of the lifted variable, bits/s/Hz.

    Coincides with the vector-domain MMSE sum rate whenever X = gamma gamma^H.
    """
    return g1_value(X, p, channels, cfg) - g2_value(X, p, channels, cfg)


def sr_mmse_surrogate_x(X, Xbar, p, channels: ChannelSet,
                        cfg: ScenarioConfig) -> float:
    """Concave lower bound on sum_rate_mmse_x, tight at Xbar.

    g1 is kept exact; the subtracted concave g2 is replaced by its tangent
    plane at Xbar.
    """
    X = _check_hermitian(X)
    Xbar = _check_hermitian(Xbar, "Xbar")
    p = np.asarray(p, dtype=float)
    grad = grad_g2(Xbar, p, channels, cfg)
    lin = float(np.sum(grad.conj() * (X - Xbar)).real)
    return (g1_value(X, p, channels, cfg)
            - g2_value(Xbar, p, channels, cfg) - lin)


# ---------------------------------------------------------------------------
# power gradient of the subtracted log-det term (MMSE formulation)
# ---------------------------------------------------------------------------

def f_power_value(p, gamma, channels: ChannelSet, cfg: ScenarioConfig) -> float:
    """F(p) = sum_k log2 det(W + sum_{m != k} p_m a_m a_m^H), bits."""
    from .model import noise_covariance

    p = np.asarray(p, dtype=float)
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    W = noise_covariance(gamma, channels, cfg)
    a = channels.A @ gamma
    outer = np.einsum("ki,kj->kij", a, a.conj())
    full = W + np.einsum("k,kij->ij", p, outer)
    total = 0.0
    for k in range(channels.K):
        sign, ld = np.linalg.slogdet(full - p[k] * outer[k])
        total += float(ld) / LN2
    return total


def grad_f_power(p, gamma, channels: ChannelSet, cfg: ScenarioConfig) -> np.ndarray:
    """Gradient of f_power_value: entry i sums a_i^H T_k^-1 a_i over k != i."""
    from .model import noise_covariance

    p = np.asarray(p, dtype=float)
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    W = noise_covariance(gamma, channels, cfg)
    a = channels.A @ gamma
    outer = np.einsum("ki,kj->kij", a, a.conj())
    full = W + np.einsum("k,kij->ij", p, outer)
    grad = np.zeros(channels.K)
    for k in range(channels.K):
        sol = np.linalg.solve(full - p[k] * outer[k], a.T)   # col i: T_k^-1 a_i
        quad = np.einsum("ij,ji->i", a.conj(), sol).real
        quad[k] = 0.0
        grad += quad
    return grad / LN2
