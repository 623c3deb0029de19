"""Shared builders for synthetic, well-conditioned test instances.

Unit tests run on O(1) scales (noise ~0.3, channels ~1) so absolute
tolerances are meaningful; physically scaled instances come from the
scenario module where a test needs them.
"""

import numpy as np

from risee.model import Allocation, ChannelSet, ScenarioConfig, mmse_filters


def make_cfg(K=2, N_R=2, N=6, **overrides) -> ScenarioConfig:
    base = dict(
        K=K, N_R=N_R, N=N,
        bandwidth_hz=1.0,
        p_max=1.5,
        mu=1.2,
        p0_w=1.0,
        p0_ris_w=0.4,
        pcn_w=0.05,
        pr_max_w=4.0,
        sigma2_w=0.5,
        sigma2_ris_w=0.3,
        seed=0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def desk_cfg(**overrides) -> ScenarioConfig:
    """Reduced-size instance with the physical default constants."""
    base = dict(K=2, N_R=2, N=16, seed=1)
    base.update(overrides)
    return ScenarioConfig(**base)


def make_channels(cfg: ScenarioConfig, rng: np.random.Generator,
                  scale: float = 1.0) -> ChannelSet:
    h = scale * crandn(rng, (cfg.K, cfg.N))
    G = scale * crandn(rng, (cfg.N_R, cfg.N))
    return ChannelSet.from_channels(h, G)


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_alloc(cfg: ScenarioConfig, channels: ChannelSet,
                 rng: np.random.Generator, mmse: bool = False) -> Allocation:
    gamma = crandn(rng, cfg.N) + np.ones(cfg.N)
    p = rng.uniform(0.1, 1.0, size=cfg.K) * cfg.p_max
    if mmse:
        c = mmse_filters(gamma, p, channels, cfg)
    else:
        c = crandn(rng, (cfg.K, cfg.N_R))
    return Allocation(gamma=gamma, p=p, c=c)
