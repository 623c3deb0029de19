"""Model-level oracles: every op checked against an independent evaluation."""

import numpy as np
import pytest

from helpers import crandn, make_cfg, make_channels, random_alloc

from risee.errors import DegenerateConfigError, InvalidInputError
from risee.model import (Allocation, ChannelSet, gee, mmse_filters,
                         noise_covariance, rf_power, ris_power_weights, sinr,
                         sinr_all, sum_rate_mmse, total_power)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def test_channelset_composite_matches_direct_product(rng):
    cfg = make_cfg(K=3, N_R=4, N=6)
    ch = make_channels(cfg, rng)
    for k in range(cfg.K):
        expected = ch.G @ np.diag(ch.h[k])
        assert np.allclose(ch.A[k], expected, atol=0, rtol=1e-15)


def test_noise_covariance_zero_gamma_is_white(rng):
    cfg = make_cfg()
    ch = make_channels(cfg, rng)
    W = noise_covariance(np.zeros(cfg.N), ch, cfg)
    assert np.allclose(W, cfg.sigma2_w * np.eye(cfg.N_R))


def test_noise_covariance_identity_channel_unit_moduli(rng):
    cfg = make_cfg(K=1, N_R=4, N=4)
    ch = ChannelSet.from_channels(crandn(rng, (1, 4)), np.eye(4, dtype=complex))
    gamma = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    W = noise_covariance(gamma, ch, cfg)
    assert np.allclose(W, (cfg.sigma2_w + cfg.sigma2_ris_w) * np.eye(4))


def test_noise_covariance_column_sum_oracle(rng):
    cfg = make_cfg(K=2, N_R=4, N=6)
    ch = make_channels(cfg, rng)
    gamma = crandn(rng, 6)
    W = noise_covariance(gamma, ch, cfg)
    oracle = cfg.sigma2_w * np.eye(4, dtype=complex)
    for n in range(6):
        g_n = ch.G[:, n]
        oracle += cfg.sigma2_ris_w * abs(gamma[n]) ** 2 * np.outer(g_n, g_n.conj())
    assert np.max(np.abs(W - oracle)) <= 1e-12


def test_noise_covariance_dimension_mismatch(rng):
    cfg = make_cfg()
    ch = make_channels(cfg, rng)
    with pytest.raises(InvalidInputError):
        noise_covariance(np.ones(cfg.N + 1), ch, cfg)


def test_sinr_zero_power(rng):
    cfg = make_cfg()
    ch = make_channels(cfg, rng)
    alloc = random_alloc(cfg, ch, rng)
    alloc.p = np.zeros(cfg.K)
    assert np.all(sinr_all(alloc, ch, cfg) == 0.0)


def test_sinr_hand_scalar_case():
    # single user, single antenna, single element: h=1, G=1, gamma=2, c=1,
    # p=1, sigma2=1, no amplifier noise -> SINR = |2|^2 / 1 = 4
    cfg = make_cfg(K=1, N_R=1, N=1, sigma2_w=1.0, sigma2_ris_w=1e-300)
    ch = ChannelSet.from_channels(np.ones((1, 1)), np.ones((1, 1)))
    alloc = Allocation(gamma=np.array([2.0 + 0j]), p=np.array([1.0]),
                       c=np.ones((1, 1), dtype=complex))
    assert sinr(0, alloc, ch, cfg) == pytest.approx(4.0, rel=1e-12)


def test_sinr_filter_scale_invariance(rng):
    cfg = make_cfg(K=3, N_R=3, N=5)
    ch = make_channels(cfg, rng)
    alloc = random_alloc(cfg, ch, rng)
    base = sinr_all(alloc, ch, cfg)
    scaled = Allocation(alloc.gamma, alloc.p, alloc.c * (0.3 - 2.1j))
    assert np.allclose(sinr_all(scaled, ch, cfg), base, rtol=1e-12)


def test_sinr_rejects_zero_filter(rng):
    cfg = make_cfg()
    ch = make_channels(cfg, rng)
    alloc = random_alloc(cfg, ch, rng)
    alloc.c[0] = 0.0
    with pytest.raises(InvalidInputError):
        sinr_all(alloc, ch, cfg)


def test_ris_power_weights_zero_power(rng):
    cfg = make_cfg()
    ch = make_channels(cfg, rng)
    r = ris_power_weights(np.zeros(cfg.K), ch, cfg)
    assert np.allclose(r, cfg.sigma2_ris_w)


def test_ris_power_weights_hand_case():
    cfg = make_cfg(K=1, N_R=1, N=2, sigma2_ris_w=0.5)
    ch = ChannelSet.from_channels(np.array([[1.0, 2.0]]), np.ones((1, 2)))
    r = ris_power_weights(np.array([3.0]), ch, cfg)
    assert np.allclose(r, [3.5, 12.5], rtol=1e-14)


def test_ris_power_weights_trace_identity(rng):
    cfg = make_cfg(K=3, N_R=2, N=7)
    ch = make_channels(cfg, rng)
    p = rng.uniform(0.1, 2.0, 3)
    r = ris_power_weights(p, ch, cfg)
    expected = sum(p[k] * np.linalg.norm(ch.h[k]) ** 2 for k in range(3))
    expected += cfg.sigma2_ris_w * cfg.N
    assert np.sum(r) == pytest.approx(expected, rel=1e-13)


def test_rf_power_passive_boundary(rng):
    r = rng.uniform(0.1, 2.0, 8)
    gamma = np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
    assert abs(rf_power(gamma, r)) <= 1e-14 * np.sum(r)


def test_rf_power_zero_gamma(rng):
    r = rng.uniform(0.1, 2.0, 8)
    assert rf_power(np.zeros(8), r) == pytest.approx(-np.sum(r), rel=1e-15)


def test_rf_power_elementwise_oracle(rng):
    r = rng.uniform(0.1, 2.0, 10)
    gamma = crandn(rng, 10) * 2.0
    expected = sum(r[n] * (abs(gamma[n]) ** 2 - 1.0) for n in range(10))
    assert abs(rf_power(gamma, r) - expected) <= 1e-12


def test_total_power_passive_boundary_collapses(rng):
    cfg = make_cfg(K=3, N_R=2, N=9)
    ch = make_channels(cfg, rng)
    gamma = np.exp(1j * rng.uniform(0, 2 * np.pi, 9))
    p = rng.uniform(0.0, 1.0, 3)
    expected = float(cfg.mu @ p) + cfg.p_c_w
    assert total_power(gamma, p, ch, cfg) == pytest.approx(expected, rel=1e-12)


def test_total_power_static_only(rng):
    cfg = make_cfg()
    ch = make_channels(cfg, rng)
    gamma = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
    assert total_power(gamma, np.zeros(cfg.K), ch, cfg) == pytest.approx(
        cfg.p_c_w, rel=1e-12)


def test_total_power_regrouped_oracle(rng):
    cfg = make_cfg(K=3, N_R=2, N=8)
    ch = make_channels(cfg, rng)
    for _ in range(20):
        gamma = crandn(rng, 8) * rng.uniform(0.5, 2.0)
        p = rng.uniform(0.0, 1.5, 3)
        r = ris_power_weights(p, ch, cfg)
        expected = float(cfg.mu @ p) + rf_power(gamma, r) + cfg.p_c_w
        got = total_power(gamma, p, ch, cfg)
        assert abs(got - expected) <= 1e-10 * max(1.0, abs(expected))


def test_gee_zero_power_zero_rate(rng):
    cfg = make_cfg()
    ch = make_channels(cfg, rng)
    alloc = random_alloc(cfg, ch, rng)
    alloc.p = np.zeros(cfg.K)
    out = gee(alloc, ch, cfg)
    assert out.gee_bits_per_joule == 0.0
    assert out.sum_rate_bps == 0.0


def test_gee_scales_linearly_with_bandwidth(rng):
    cfg = make_cfg()
    ch = make_channels(cfg, rng)
    alloc = random_alloc(cfg, ch, rng)
    base = gee(alloc, ch, cfg).gee_bits_per_joule
    cfg2 = make_cfg(bandwidth_hz=2.0)
    assert gee(alloc, ch, cfg2).gee_bits_per_joule == pytest.approx(
        2.0 * base, rel=1e-12)


def test_gee_hand_scalar_case():
    cfg = make_cfg(K=1, N_R=1, N=1, sigma2_w=1.0, sigma2_ris_w=0.25,
                   mu=2.0, p0_w=1.0, p0_ris_w=0.0, pcn_w=0.0, bandwidth_hz=3.0)
    ch = ChannelSet.from_channels(np.ones((1, 1)), np.ones((1, 1)))
    alloc = Allocation(gamma=np.array([2.0 + 0j]), p=np.array([1.0]),
                       c=np.ones((1, 1), dtype=complex))
    # SINR = 4 / (1 + 0.25*4) = 2; R = 1.25; P = 1.25*4 - 0.25 + 1*(2-1) + 1
    sinr_expected = 4.0 / 2.0
    power_expected = 5.0 - 0.25 + 1.0 + 1.0
    out = gee(alloc, ch, cfg)
    assert out.sinr[0] == pytest.approx(sinr_expected, rel=1e-12)
    assert out.total_power_w == pytest.approx(power_expected, rel=1e-12)
    assert out.gee_bits_per_joule == pytest.approx(
        3.0 * np.log2(3.0) / power_expected, rel=1e-12)


def test_gee_nonpositive_power_raises(rng):
    cfg = make_cfg(p0_w=0.0, p0_ris_w=0.0, pcn_w=0.0)
    ch = make_channels(cfg, rng)
    alloc = random_alloc(cfg, ch, rng)
    alloc.p = np.zeros(cfg.K)
    alloc.gamma = np.zeros(cfg.N)  # surface absorbs its own noise power
    with pytest.raises(DegenerateConfigError):
        gee(alloc, ch, cfg)


def test_global_phase_invariance(rng):
    cfg = make_cfg(K=3, N_R=3, N=6)
    ch = make_channels(cfg, rng)
    alloc = random_alloc(cfg, ch, rng)
    rotated = Allocation(alloc.gamma * np.exp(1j * 0.73), alloc.p, alloc.c)
    W0 = noise_covariance(alloc.gamma, ch, cfg)
    W1 = noise_covariance(rotated.gamma, ch, cfg)
    assert np.allclose(W0, W1, rtol=1e-10)
    assert np.allclose(sinr_all(alloc, ch, cfg), sinr_all(rotated, ch, cfg),
                       rtol=1e-10)
    r = ris_power_weights(alloc.p, ch, cfg)
    assert rf_power(alloc.gamma, r) == pytest.approx(
        rf_power(rotated.gamma, r), rel=1e-10, abs=1e-12)
    assert gee(alloc, ch, cfg).gee_bits_per_joule == pytest.approx(
        gee(rotated, ch, cfg).gee_bits_per_joule, rel=1e-10)


def test_mmse_single_user_is_whitened_matched_filter(rng):
    cfg = make_cfg(K=1, N_R=3, N=5)
    ch = make_channels(cfg, rng)
    gamma = crandn(rng, 5)
    p = np.array([0.8])
    c = mmse_filters(gamma, p, ch, cfg)[0]
    W = noise_covariance(gamma, ch, cfg)
    reference = np.linalg.solve(W, ch.A[0] @ gamma)
    cosine = abs(np.vdot(reference, c)) / (np.linalg.norm(reference)
                                           * np.linalg.norm(c))
    assert cosine == pytest.approx(1.0, abs=1e-12)


def test_mmse_beats_random_filters(rng):
    cfg = make_cfg(K=3, N_R=3, N=6)
    ch = make_channels(cfg, rng)
    gamma = crandn(rng, 6)
    p = rng.uniform(0.2, 1.0, 3)
    c = mmse_filters(gamma, p, ch, cfg)
    best = sinr_all(Allocation(gamma, p, c), ch, cfg)
    for _ in range(100):
        trial = sinr_all(Allocation(gamma, p, crandn(rng, (3, 3))), ch, cfg)
        assert np.all(trial <= best * (1.0 + 1e-10))


def test_mmse_closed_form_sinr_identity(rng):
    cfg = make_cfg(K=3, N_R=3, N=6)
    ch = make_channels(cfg, rng)
    gamma = crandn(rng, 6)
    p = rng.uniform(0.2, 1.0, 3)
    c = mmse_filters(gamma, p, ch, cfg)
    achieved = sinr_all(Allocation(gamma, p, c), ch, cfg)
    W = noise_covariance(gamma, ch, cfg)
    a = ch.A @ gamma
    for k in range(3):
        Mk = W + sum(p[m] * np.outer(a[m], a[m].conj()) for m in range(3) if m != k)
        closed = p[k] * np.vdot(a[k], np.linalg.solve(Mk, a[k])).real
        assert achieved[k] == pytest.approx(closed, rel=1e-8)


def test_sum_rate_mmse_zero_power(rng):
    cfg = make_cfg()
    ch = make_channels(cfg, rng)
    assert sum_rate_mmse(crandn(rng, cfg.N), np.zeros(cfg.K), ch, cfg) == \
        pytest.approx(0.0, abs=1e-12)


def test_sum_rate_mmse_matches_sinr_sum(rng):
    cfg = make_cfg(K=3, N_R=3, N=6)
    ch = make_channels(cfg, rng)
    for _ in range(25):
        gamma = crandn(rng, 6)
        p = rng.uniform(0.1, 1.2, 3)
        c = mmse_filters(gamma, p, ch, cfg)
        via_sinr = np.sum(np.log2(1.0 + sinr_all(Allocation(gamma, p, c), ch, cfg)))
        via_det = sum_rate_mmse(gamma, p, ch, cfg)
        assert via_det == pytest.approx(via_sinr, rel=1e-6)


def test_sum_rate_mmse_single_user_rank_one_lemma(rng):
    cfg = make_cfg(K=1, N_R=3, N=5)
    ch = make_channels(cfg, rng)
    gamma = crandn(rng, 5)
    p = np.array([0.9])
    W = noise_covariance(gamma, ch, cfg)
    a = ch.A[0] @ gamma
    closed = np.log2(1.0 + p[0] * np.vdot(a, np.linalg.solve(W, a)).real)
    assert sum_rate_mmse(gamma, p, ch, cfg) == pytest.approx(closed, rel=1e-10)
