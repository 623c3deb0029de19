"""Reproducible network realizations and configuration ingestion.

Randomness comes from numpy's counter-based Philox generator so that a
(seed, draw index) pair fully determines every draw; the generator name
is recorded in emitted metadata.  Users are placed area-uniformly in a
disc around the RIS, fading is Rician with a random-phase line-of-sight
component, and path loss is (d / d_ref)^-eta with d_ref = 1 m.
"""

import json
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import ChannelSet, ScenarioConfig

GENERATOR_NAME = "philox4x64 (numpy.random.Philox, SeedSequence((seed, draw)))"

# JSON schema defaults: active-RIS uplink baseline from the numerical study
# (K=4, N_R=4, N=100, B=20 MHz, P_0=40 dBm, P_0,RIS=30 dBm, P_c,n=0 dBm,
#  P_R,max=10 dBW, PSD -174 dBm/Hz, NF 10 dB, radius 100 m, eta=4).
DEFAULT_CONFIG = {
    "k_users": 4,
    "n_bs_antennas": 4,
    "n_ris_elements": 100,
    "bandwidth_mhz": 20.0,
    "p0_dbm": 40.0,
    "p0_ris_dbm": 30.0,
    "pcn_dbm": 0.0,
    "pr_max_dbw": 10.0,
    "p_max_dbw": 0.0,
    "mu": 1.0,
    "noise_psd_dbm_hz": -174.0,
    "noise_figure_db": 10.0,
    "sigma2_ris_dbm": None,
    "user_area_radius_m": 100.0,
    "bs_distance_m": 50.0,
    "ris_height_m": 15.0,
    "bs_height_m": 10.0,
    "user_height_min_m": 0.0,
    "user_height_max_m": 5.0,
    "pathloss_exponent": 4.0,
    "pathloss_ref_distance_m": 1.0,
    "rice_k_ris_bs": 4.0,
    "rice_k_user_ris": 2.0,
    "pcn_passive_dbm": 0.0,
    "p0_ris_passive_dbm": 20.0,
    "seed": 1,
}

ENV_PREFIX = "RISEE_"

# reduced problem dimensions for quick experiments vs. the full-size study
PROFILES = {
    "desk": {"k_users": 2, "n_bs_antennas": 2, "n_ris_elements": 16},
    "paper": {"k_users": 4, "n_bs_antennas": 4, "n_ris_elements": 100},
}


@dataclass
class Geometry:
    """Node positions in meters: users (K, 3), RIS (3,), BS (3,)."""

    users: np.ndarray
    ris: np.ndarray
    bs: np.ndarray


@dataclass
class ChannelRealization:
    """A ChannelSet plus the (seed, draw) pair that produced it."""

    channels: ChannelSet
    seed: int
    draw_index: int


def dbm_to_w(x: float) -> float:
    return 10.0 ** (x / 10.0) * 1e-3


def dbw_to_w(x: float) -> float:
    return 10.0 ** (x / 10.0)


def make_rng(seed: int, draw_index: int = 0) -> np.random.Generator:
    """Counter-based generator for one (seed, draw) pair."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, draw_index))))


def noise_power(psd_dbm_hz: float, nf_db: float, bandwidth_hz: float) -> float:
    """Receiver noise power sigma^2 = 10^((PSD+NF)/10) * 1e-3 * B, watts."""
    if bandwidth_hz <= 0:
        raise ConfigError("bandwidth must be > 0")
    return dbm_to_w(psd_dbm_hz + nf_db) * bandwidth_hz


def pathloss_gain(d_m: float, eta: float, ref_distance_m: float = 1.0) -> float:
    """Linear path gain (d / d_ref)^-eta; distances below d_ref clamp."""
    if d_m < ref_distance_m:
        warnings.warn(f"distance {d_m} m below reference {ref_distance_m} m, clamping")
        d_m = ref_distance_m
    return float((d_m / ref_distance_m) ** (-eta))


def place_nodes(cfg: ScenarioConfig, rng: np.random.Generator) -> Geometry:
    """Draw user positions area-uniformly in the disc around the RIS.

    radius = R * sqrt(u) makes the density uniform per unit area; heights
    are uniform in the configured range.  RIS and BS positions are fixed.
    """
    radius = cfg.user_area_radius_m * np.sqrt(rng.uniform(size=cfg.K))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=cfg.K)
    height = rng.uniform(cfg.user_height_min_m, cfg.user_height_max_m, size=cfg.K)
    users = np.stack([radius * np.cos(angle), radius * np.sin(angle), height], axis=1)
    ris = np.array([0.0, 0.0, cfg.ris_height_m])
    bs = np.array([cfg.bs_distance_m, 0.0, cfg.bs_height_m])
    return Geometry(users=users, ris=ris, bs=bs)


def rician_matrix(rows: int, cols: int, k_factor: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Unit-power Rician fading matrix.

    H = sqrt(K/(K+1)) * H_los + sqrt(1/(K+1)) * H_nlos with H_nlos entries
    i.i.d. CN(0, 1) and H_los a random-phase unit-modulus matrix drawn once
    per call, so E|H_ij|^2 = 1 for every K >= 0.
    """
    if k_factor < 0:
        raise ConfigError("Rician factor must be >= 0")
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(rows, cols))
    los = np.exp(1j * phase)
    nlos = (rng.standard_normal((rows, cols))
            + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)
    w_los = np.sqrt(k_factor / (k_factor + 1.0))
    w_nlos = np.sqrt(1.0 / (k_factor + 1.0))
    return w_los * los + w_nlos * nlos


def build_scenario(cfg: ScenarioConfig, draw_index: int = 0,
                   geometry: Geometry = None):
    """Realize geometry and channels for one Monte-Carlo draw.

    Passing an explicit geometry (for controlled-placement tests) skips the
    placement draw; the fading stream then starts from a fresh generator
    state, so replays must pass the same geometry to match.
    Returns (Geometry, ChannelRealization).
    """
    cfg.validate()
    rng = make_rng(cfg.seed, draw_index)
    if geometry is None:
        geometry = place_nodes(cfg, rng)
    d_users = np.linalg.norm(geometry.users - geometry.ris[None, :], axis=1)
    d_bs = float(np.linalg.norm(geometry.bs - geometry.ris))
    gain_users = np.array([pathloss_gain(d, cfg.eta, cfg.ref_distance_m) for d in d_users])
    gain_bs = pathloss_gain(d_bs, cfg.eta, cfg.ref_distance_m)
    h = np.sqrt(gain_users)[:, None] * rician_matrix(cfg.K, cfg.N, cfg.rice_kr, rng)
    G = np.sqrt(gain_bs) * rician_matrix(cfg.N_R, cfg.N, cfg.rice_kt, rng)
    channels = ChannelSet.from_channels(h, G)
    return geometry, ChannelRealization(channels=channels, seed=cfg.seed,
                                        draw_index=draw_index)


def _coerce(name, value):
    """Parse an env-var override with the same typing rules as the JSON file."""
    try:
        return json.loads(value)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse override {ENV_PREFIX}{name.upper()}={value!r}") from exc


def load_config(path=None, *, profile=None, overrides=None, env=None) -> ScenarioConfig:
    """Build a validated ScenarioConfig from defaults, file, env and overrides.

    Precedence (lowest to highest): built-in defaults, profile, JSON file,
    RISEE_<FIELD> environment variables, explicit overrides.  Unknown field
    names are rejected at every layer.
    """
    raw = dict(DEFAULT_CONFIG)
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}, expected one of {sorted(PROFILES)}")
        raw.update(PROFILES[profile])
    if path is not None:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULT_CONFIG))
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        raw.update(loaded)
    env = os.environ if env is None else env
    for key in DEFAULT_CONFIG:
        env_name = ENV_PREFIX + key.upper()
        if env_name in env:
            raw[key] = _coerce(key, env[env_name])
    if overrides:
        unknown = sorted(set(overrides) - set(DEFAULT_CONFIG))
        if unknown:
            raise ConfigError(f"unknown override fields: {', '.join(unknown)}")
        raw.update(overrides)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Convert the unit-explicit JSON schema into a linear-unit ScenarioConfig."""
    unknown = sorted(set(raw) - set(DEFAULT_CONFIG))
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
    full = dict(DEFAULT_CONFIG)
    full.update(raw)
    try:
        bandwidth_hz = float(full["bandwidth_mhz"]) * 1e6
        sigma2 = noise_power(float(full["noise_psd_dbm_hz"]),
                             float(full["noise_figure_db"]), bandwidth_hz)
        sigma2_ris = (sigma2 if full["sigma2_ris_dbm"] is None
                      else dbm_to_w(float(full["sigma2_ris_dbm"])))
        cfg = ScenarioConfig(
            K=int(full["k_users"]),
            N_R=int(full["n_bs_antennas"]),
            N=int(full["n_ris_elements"]),
            bandwidth_hz=bandwidth_hz,
            p_max=dbw_to_w(np.asarray(full["p_max_dbw"], dtype=float)),
            mu=np.asarray(full["mu"], dtype=float),
            p0_w=dbm_to_w(float(full["p0_dbm"])),
            p0_ris_w=dbm_to_w(float(full["p0_ris_dbm"])),
            pcn_w=dbm_to_w(float(full["pcn_dbm"])),
            pr_max_w=dbw_to_w(float(full["pr_max_dbw"])),
            sigma2_w=sigma2,
            sigma2_ris_w=sigma2_ris,
            user_area_radius_m=float(full["user_area_radius_m"]),
            bs_distance_m=float(full["bs_distance_m"]),
            ris_height_m=float(full["ris_height_m"]),
            bs_height_m=float(full["bs_height_m"]),
            user_height_min_m=float(full["user_height_min_m"]),
            user_height_max_m=float(full["user_height_max_m"]),
            eta=float(full["pathloss_exponent"]),
            ref_distance_m=float(full["pathloss_ref_distance_m"]),
            rice_kt=float(full["rice_k_ris_bs"]),
            rice_kr=float(full["rice_k_user_ris"]),
            pcn_passive_w=dbm_to_w(float(full["pcn_passive_dbm"])),
            p0_ris_passive_w=dbm_to_w(float(full["p0_ris_passive_dbm"])),
            seed=int(full["seed"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc
    return cfg.validate()
