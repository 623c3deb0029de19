"""Exhaustive grid-search oracle for tiny instances (K=1, N_R=1, N=2).

Independent of the solver path: evaluates the GEE directly on a dense grid
over (|gamma_1|, |gamma_2|, relative phase, p) restricted to the feasible
band, with local refinement rounds around the incumbent.
"""

import numpy as np


def toy_gee_grid(gamma_r1, gamma_r2, phi, p, a, g2abs, h2, cfg):
    """Vectorized GEE over broadcastable grids of the four free variables."""
    R1 = p * h2[0] + cfg.sigma2_ris_w
    R2 = p * h2[1] + cfg.sigma2_ris_w
    out_power = R1 * gamma_r1 ** 2 + R2 * gamma_r2 ** 2
    tr_r = R1 + R2
    signal = np.abs(a[0] * gamma_r1 + a[1] * gamma_r2 * np.exp(1j * phi)) ** 2
    noise = cfg.sigma2_w + cfg.sigma2_ris_w * (g2abs[0] * gamma_r1 ** 2
                                               + g2abs[1] * gamma_r2 ** 2)
    sinr = p * signal / noise
    den = (out_power - 2.0 * cfg.sigma2_ris_w
           + p * (cfg.mu[0] - (h2[0] + h2[1])) + cfg.p_c_w)
    gee = cfg.bandwidth_hz * np.log2(1.0 + sinr) / den
    feasible = (out_power >= tr_r - 1e-12) & (out_power <= tr_r + cfg.pr_max_w + 1e-12)
    return np.where(feasible, gee, -np.inf)


def toy_grid_max(channels, cfg, n_r=36, n_phi=40, n_p=13, refine_rounds=2):
    """Best GEE found by exhaustive search; returns (gee, gamma, p)."""
    assert channels.K == 1 and channels.N == 2 and channels.N_R == 1
    a = channels.A[0][0]
    g2abs = np.abs(channels.G[0]) ** 2
    h2 = np.abs(channels.h[0]) ** 2
    p_hi = float(cfg.p_max[0])

    def search(r1_lo, r1_hi, r2_lo, r2_hi, phi_lo, phi_hi, p_lo, p_hi_local):
        best = (-np.inf, None)
        for p in np.linspace(max(p_lo, 1e-9 * p_hi), p_hi_local, n_p):
            R = p * h2 + cfg.sigma2_ris_w
            ub = float(np.sum(R)) + cfg.pr_max_w
            r1 = np.linspace(r1_lo, min(r1_hi, np.sqrt(ub / R[0])), n_r)
            r2 = np.linspace(r2_lo, min(r2_hi, np.sqrt(ub / R[1])), n_r)
            phi = np.linspace(phi_lo, phi_hi, n_phi, endpoint=False)
            vals = toy_gee_grid(r1[:, None, None], r2[None, :, None],
                                phi[None, None, :], p, a, g2abs, h2, cfg)
            idx = np.unravel_index(np.argmax(vals), vals.shape)
            if vals[idx] > best[0]:
                best = (float(vals[idx]), (float(r1[idx[0]]), float(r2[idx[1]]),
                                           float(phi[idx[2]]), float(p)))
        return best

    best_val, best_pt = search(0.0, np.inf, 0.0, np.inf, 0.0, 2 * np.pi,
                               0.0, p_hi)
    for _ in range(refine_rounds):
        r1c, r2c, phic, pc = best_pt
        dr1 = max(r1c, 1.0) * 4.0 / n_r
        dr2 = max(r2c, 1.0) * 4.0 / n_r
        dphi = 2 * np.pi * 4.0 / n_phi
        dp = p_hi * 4.0 / n_p
        val, pt = search(max(0.0, r1c - dr1), r1c + dr1,
                         max(0.0, r2c - dr2), r2c + dr2,
                         phic - dphi, phic + dphi,
                         max(0.0, pc - dp), min(p_hi, pc + dp))
        if val > best_val:
            best_val, best_pt = val, pt
    r1c, r2c, phic, pc = best_pt
    gamma = np.array([r1c, r2c * np.exp(1j * phic)])
    return best_val, gamma, np.array([pc])
