"""Monte-Carlo experiment runner with machine-readable outputs.

Experiments sweep the transmit-power box (with all baselines), the
per-element static power of the active surface against a passive one, or
collect convergence-time ratios.  Trials are paired: trial i of every
method and every grid point sees the same channel realization, so curve
comparisons are apples to apples.  Sweep CSVs carry only deterministic
quantities (wall times live in the timing experiment, which is
hardware-bound by nature); two runs of the same spec produce byte-identical
sweep files.
"""

import csv
import hashlib
import io
import json
import os
import subprocess
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import model, solvers
from .errors import ConfigError, RiseeError
from .model import GeeBreakdown, ScenarioConfig
from .scenario import GENERATOR_NAME, build_scenario, make_rng
from .solvers import SolverOptions

# draw index offset separating baseline randomness from channel draws
_BASELINE_DRAW = 104729

METHODS = ("method1-gee", "method2-gee", "method1-sr", "method2-sr",
           "uniform-random", "passive-method2")


@dataclass
class ExperimentSpec:
    """One experiment: what to sweep, which methods, how many trials."""

    kind: str                       # pmax-sweep | pcn-sweep | timing | single
    base: ScenarioConfig
    grid: list = field(default_factory=list)
    methods: list = field(default_factory=lambda: ["method1-gee", "method2-gee"])
    trials: int = 20
    n_grid: list = field(default_factory=lambda: [16, 24, 32])
    solver: SolverOptions = field(default_factory=SolverOptions)
    failure_threshold: float = 0.25

    def validate(self):
        if self.kind not in ("pmax-sweep", "pcn-sweep", "timing", "single"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.kind in ("pmax-sweep", "pcn-sweep", "timing") and not self.grid:
            raise ConfigError("sweep experiments need a nonempty grid")
        unknown = sorted(set(self.methods) - set(METHODS))
        if unknown:
            raise ConfigError(f"unknown methods: {', '.join(unknown)}")
        if not self.methods:
            raise ConfigError("method set must be nonempty")
        return self


@dataclass
class SweepResult:
    """Aggregated rows plus provenance for emission."""

    kind: str
    columns: list
    rows: list
    extras: dict
    fingerprint: str
    meta: dict


def run_baseline_e(channels, cfg: ScenarioConfig,
                   rng: np.random.Generator) -> GeeBreakdown:
    """Unoptimized reference: full transmit power, random unit-modulus
    phases, MMSE filters, evaluated under the passive power model."""
    pcfg = cfg.passive_variant()
    gamma = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=cfg.N))
    p = cfg.p_max.copy()
    c = model.mmse_filters(gamma, p, channels, pcfg)
    return model.gee(model.Allocation(gamma=gamma, p=p, c=c), channels, pcfg)


def _trial_channels(cfg: ScenarioConfig, trial: int):
    _, realization = build_scenario(replace(cfg), draw_index=trial)
    return realization.channels


def _dispatch(method: str, channels, cfg: ScenarioConfig, opts: SolverOptions,
              trial: int):
    """Run one method on one realization; returns (gee, sum_rate, iters)."""
    if method == "method1-gee":
        rep = solvers.method1_solve(channels, cfg, opts=opts)
    elif method == "method2-gee":
        rep = solvers.method2_solve(channels, cfg, opts=opts)
    elif method == "method1-sr":
        rep = solvers.sum_rate_mode(channels, cfg, method=1, opts=opts)
    elif method == "method2-sr":
        rep = solvers.sum_rate_mode(channels, cfg, method=2, opts=opts)
    elif method == "passive-method2":
        rep = solvers.passive_solve(channels, cfg, opts=opts)
    elif method == "uniform-random":
        bre = run_baseline_e(channels, cfg,
                             make_rng(cfg.seed, _BASELINE_DRAW + trial))
        return bre.gee_bits_per_joule, bre.sum_rate_bps, 0
    else:
        raise ConfigError(f"unknown method {method!r}")
    return rep.gee, rep.sum_rate_bps, rep.iterations["outer"]


def _aggregate(cells: dict) -> list:
    """cells[(grid, method)] -> list of (gee, sr, iters); emits stat rows."""
    rows = []
    for (grid_value, method), outcomes in cells.items():
        ok = [o for o in outcomes if o is not None]
        failures = len(outcomes) - len(ok)
        if ok:
            gees = np.array([o[0] for o in ok])
            srs = np.array([o[1] for o in ok])
            its = np.array([o[2] for o in ok])
            rows.append([grid_value, method, len(outcomes), failures,
                         float(np.mean(gees)), float(np.median(gees)),
                         float(np.mean(srs)), float(np.mean(its))])
        else:
            rows.append([grid_value, method, len(outcomes), failures,
                         float("nan"), float("nan"), float("nan"), float("nan")])
    return rows


def _failure_rate(cells: dict) -> float:
    total = sum(len(v) for v in cells.values())
    bad = sum(1 for v in cells.values() for o in v if o is None)
    return bad / max(total, 1)


def _fingerprint(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


def _meta(spec: ExperimentSpec) -> dict:
    cfg = spec.base
    try:
        git = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10)
        git_desc = git.stdout.strip() if git.returncode == 0 else "unknown"
    except (OSError, subprocess.TimeoutExpired):
        git_desc = "unknown"
    cfg_dict = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in vars(cfg).items()}
    return {
        "experiment": spec.kind,
        "grid": list(spec.grid),
        "methods": list(spec.methods),
        "trials": spec.trials,
        "seed": cfg.seed,
        "generator": GENERATOR_NAME,
        "git": git_desc,
        "config": cfg_dict,
        "solver": vars(spec.solver),
    }


def sweep_pmax(spec: ExperimentSpec) -> SweepResult:
    """GEE of every requested method across a transmit-power grid (dBW).

    Channels are drawn once per trial index and shared by every method and
    every grid point.  Individual trial failures are recorded, not fatal.
    """
    spec.validate()
    channel_cache = {t: _trial_channels(spec.base, t) for t in range(spec.trials)}
    cells = {}
    for grid_dbw in spec.grid:
        cfg = replace(spec.base, p_max=10.0 ** (grid_dbw / 10.0))
        for method in spec.methods:
            outcomes = []
            for trial in range(spec.trials):
                try:
                    outcomes.append(_dispatch(method, channel_cache[trial],
                                              cfg, spec.solver, trial))
                except (RiseeError, np.linalg.LinAlgError):
                    outcomes.append(None)
            cells[(grid_dbw, method)] = outcomes
    rows = _aggregate(cells)
    meta = _meta(spec)
    return SweepResult(
        kind="pmax-sweep",
        columns=["p_max_dbw", "method", "trials", "failures", "gee_mean",
                 "gee_median", "sum_rate_mean", "iterations_mean"],
        rows=rows,
        extras={"failure_rate": _failure_rate(cells)},
        fingerprint=_fingerprint(meta), meta=meta)


def _crossover(pcn_grid, active_mean, passive_mean):
    """First P_c,n where the passive mean curve overtakes the active one;
    linear interpolation inside the bracketing interval."""
    diff = np.asarray(passive_mean) - np.asarray(active_mean)
    if diff[0] >= 0.0:
        return {"status": "before-grid", "interval": [pcn_grid[0], pcn_grid[0]],
                "estimate": pcn_grid[0]}
    for i in range(1, len(diff)):
        if diff[i] >= 0.0:
            frac = diff[i - 1] / (diff[i - 1] - diff[i])
            est = pcn_grid[i - 1] + frac * (pcn_grid[i] - pcn_grid[i - 1])
            return {"status": "inside", "interval": [pcn_grid[i - 1], pcn_grid[i]],
                    "estimate": float(est)}
    return {"status": "beyond-grid", "interval": None, "estimate": None}


def sweep_pcn(spec: ExperimentSpec) -> SweepResult:
    """Active-vs-passive GEE across a per-element static power grid (dBm),
    repeated for each surface size in spec.n_grid.

    The passive allocation does not depend on the active P_c,n, so it is
    solved once per (N, trial) and reused across the grid.
    """
    spec.validate()
    cells = {}
    crossovers = {}
    active_method = "method2-gee"
    for n in spec.n_grid:
        base_n = replace(spec.base, N=n)
        means = {"active": [], "passive": []}
        passive_outcomes = []
        chans = {t: _trial_channels(base_n, t) for t in range(spec.trials)}
        for trial in range(spec.trials):
            try:
                passive_outcomes.append(_dispatch("passive-method2", chans[trial],
                                                  base_n, spec.solver, trial))
            except (RiseeError, np.linalg.LinAlgError):
                passive_outcomes.append(None)
        for pcn_dbm in spec.grid:
            cfg = replace(base_n, pcn_w=10.0 ** (pcn_dbm / 10.0) * 1e-3)
            outcomes = []
            for trial in range(spec.trials):
                try:
                    outcomes.append(_dispatch(active_method, chans[trial], cfg,
                                              spec.solver, trial))
                except (RiseeError, np.linalg.LinAlgError):
                    outcomes.append(None)
            cells[((n, pcn_dbm), "active-method2")] = outcomes
            cells[((n, pcn_dbm), "passive-method2")] = passive_outcomes
            ok_a = [o[0] for o in outcomes if o is not None]
            ok_p = [o[0] for o in passive_outcomes if o is not None]
            means["active"].append(np.mean(ok_a) if ok_a else np.nan)
            means["passive"].append(np.mean(ok_p) if ok_p else np.nan)
        crossovers[str(n)] = _crossover(list(spec.grid), means["active"],
                                        means["passive"])
    rows = []
    for (key, method), outcomes in cells.items():
        agg = _aggregate({(key, method): outcomes})[0]
        rows.append([key[0], key[1], method] + agg[2:])
    meta = _meta(spec)
    meta["n_grid"] = list(spec.n_grid)
    return SweepResult(
        kind="pcn-sweep",
        columns=["n_elements", "pcn_dbm", "method", "trials", "failures",
                 "gee_mean", "gee_median", "sum_rate_mean", "iterations_mean"],
        rows=rows,
        extras={"crossovers": crossovers, "failure_rate": _failure_rate(cells)},
        fingerprint=_fingerprint(meta), meta=meta)


def spearman_rho(x, y) -> float:
    """Spearman rank correlation (average ranks for ties)."""
    def ranks(v):
        v = np.asarray(v, dtype=float)
        order = np.argsort(v, kind="stable")
        rk = np.empty(len(v))
        rk[order] = np.arange(1, len(v) + 1, dtype=float)
        for val in np.unique(v):
            mask = v == val
            if np.sum(mask) > 1:
                rk[mask] = np.mean(rk[mask])
        return rk

    rx, ry = ranks(x), ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt(np.sum(rx ** 2) * np.sum(ry ** 2))
    return float(np.sum(rx * ry) / denom) if denom > 0 else 0.0


def timing_table(spec: ExperimentSpec) -> SweepResult:
    """Median convergence times of both methods, active and passive, across
    the transmit-power grid, reported as ratios.

    Always runs its own four configurations (method 1/2 x active/passive)
    regardless of spec.methods.  Absolute times are hardware-bound; only
    the ratio trends are meaningful.
    """
    spec.validate()
    chans = {t: _trial_channels(spec.base, t) for t in range(spec.trials)}
    rows = []
    ratio_trend = []
    for grid_dbw in spec.grid:
        cfg = replace(spec.base, p_max=10.0 ** (grid_dbw / 10.0))
        times = {key: [] for key in ("t1a", "t1p", "t2a", "t2p")}
        for trial in range(spec.trials):
            runs = {
                "t1a": lambda: solvers.method1_solve(chans[trial], cfg, opts=spec.solver),
                "t1p": lambda: solvers.passive_solve(chans[trial], cfg, opts=spec.solver, method=1),
                "t2a": lambda: solvers.method2_solve(chans[trial], cfg, opts=spec.solver),
                "t2p": lambda: solvers.passive_solve(chans[trial], cfg, opts=spec.solver, method=2),
            }
            for key, fn in runs.items():
                t0 = time.perf_counter()
                fn()
                times[key].append(time.perf_counter() - t0)
        med = {key: float(np.median(v)) for key, v in times.items()}
        rows.append([grid_dbw, med["t1a"], med["t1p"], med["t2a"], med["t2p"],
                     med["t1a"] / med["t1p"], med["t2a"] / med["t2p"],
                     med["t2p"] / med["t1p"], med["t2a"] / med["t1a"]])
        ratio_trend.append(med["t1a"] / med["t1p"])
    meta = _meta(spec)
    return SweepResult(
        kind="timing",
        columns=["p_max_dbw", "t1a_median_s", "t1p_median_s", "t2a_median_s",
                 "t2p_median_s", "ratio_1a_1p", "ratio_2a_2p", "ratio_2p_1p",
                 "ratio_2a_1a"],
        rows=rows,
        extras={"spearman_1a_1p_vs_pmax": spearman_rho(spec.grid, ratio_trend)},
        fingerprint=_fingerprint(meta), meta=meta)


def run_single(spec: ExperimentSpec) -> SweepResult:
    """One realization, every requested method; handy smoke test."""
    spec.validate()
    channels = _trial_channels(spec.base, 0)
    rows = []
    failures = 0
    for method in spec.methods:
        try:
            gee_v, sr, iters = _dispatch(method, channels, spec.base,
                                         spec.solver, 0)
            rows.append([method, gee_v, sr, iters])
        except (RiseeError, np.linalg.LinAlgError):
            failures += 1
            rows.append([method, float("nan"), float("nan"), float("nan")])
    meta = _meta(spec)
    return SweepResult(
        kind="single",
        columns=["method", "gee_bits_per_joule", "sum_rate_bps", "outer_iterations"],
        rows=rows,
        extras={"failure_rate": failures / max(len(spec.methods), 1)},
        fingerprint=_fingerprint(meta), meta=meta)


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)          # shortest round-trip decimal
    return str(value)


def emit_results(result: SweepResult, out_dir) -> dict:
    """Write <kind>.csv plus a JSON sidecar with config, seed, generator
    name and git description.  Returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{result.kind}.csv")
    json_path = os.path.join(out_dir, f"{result.kind}.meta.json")
    try:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_format_cell(v) for v in row])
        with open(csv_path, "w", newline="") as fh:
            fh.write(buf.getvalue())
        sidecar = {"fingerprint": result.fingerprint, "extras": result.extras}
        sidecar.update(result.meta)
        with open(json_path, "w") as fh:
            json.dump(sidecar, fh, sort_keys=True, indent=2, default=str)
            fh.write("\n")
    except OSError as exc:
        raise ConfigError(f"cannot write results under {out_dir}: {exc}") from exc
    return {"csv": csv_path, "meta": json_path}


def run_experiment(spec: ExperimentSpec) -> SweepResult:
    runners = {"pmax-sweep": sweep_pmax, "pcn-sweep": sweep_pcn,
               "timing": timing_table, "single": run_single}
    return runners[spec.validate().kind](spec)
