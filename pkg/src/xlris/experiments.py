"""Experiment harness: scenario sweeps driven by a YAML spec.

A spec fixes a base scenario, a sweep axis with its values, the evaluation
methods, and the replicate seeds.  Each (sweep value, replicate) pair
rebuilds the scenario from its seed (so runs are reproducible), executes the
requested methods and yields one result row per method.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .config import ConfigError, SystemConfig, dbm_to_watt
from .channel import build_scenario
from .ga import GaConfig, ga_optimize
from .montecarlo import monte_carlo_report
from .optimizer import OptimizerConfig, RateObjective, optimize, smoothed_min
from .rates import PhaseConfig, closed_form_report
from .reduction import closed_form_report_reduced, reduce_channel

SWEEP_AXES = ("M", "N", "delta", "eps", "d_ris", "overlap")
METHODS = ("closed-form", "closed-form-reduced", "monte-carlo",
           "optimize-gradient", "optimize-ga", "random-phase")


@dataclass
class ExperimentSpec:
    scenario: SystemConfig
    vr_kind: str = "random"              # "full" | "random"
    vr_overlap: float | None = None
    vr_min_frac: float = 0.4
    vr_max_frac: float = 0.9
    sweep_axis: str = "N"
    sweep_values: tuple = (200,)
    sweep_shapes: dict = field(default_factory=dict)   # N -> (n1, n2) overrides
    methods: tuple = ("closed-form",)
    phases: str = "random"               # phase vector for evaluation methods
    mc_trials: int = 10000
    random_phase_draws: int = 20
    replicates: int = 1
    base_seed: int = 0
    timing: bool = False                 # keep False for byte-reproducible output
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    ga: GaConfig = field(default_factory=GaConfig)
    output: str = "results.csv"
    format: str = "csv"


@dataclass
class ResultRow:
    sweep_axis: str
    sweep_value: float
    method: str
    seed: int
    rates: tuple
    min_rate: float
    trace_len: int
    wall_s: float
    mc_se: float

    def sort_key(self):
        return (self.sweep_value, self.method, self.seed)


def _scenario_from_dict(d: dict) -> SystemConfig:
    d = dict(d)
    kwargs = {}
    if "p_dbm" in d:
        kwargs["p"] = dbm_to_watt(float(d.pop("p_dbm")))
    if "sigma2_dbm" in d:
        kwargs["sigma2"] = dbm_to_watt(float(d.pop("sigma2_dbm")))
    for key in ("m_bs", "n1", "n2", "k_users", "seed"):
        if key in d:
            kwargs[key] = int(d.pop(key))
    for key in ("p", "sigma2", "wavelength", "d_bs", "d_ris", "delta",
                "d_ui", "d_ib", "pl_exp_ur", "pl_exp_rb"):
        if key in d:
            kwargs[key] = float(d.pop(key))
    if "eps" in d:
        eps = d.pop("eps")
        kwargs["eps"] = tuple(np.atleast_1d(np.asarray(eps, dtype=float)))
    if d:
        raise ConfigError(f"unknown scenario field(s): {sorted(d)}")
    try:
        return SystemConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc


def load_spec(path: str) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    return spec_from_dict(raw)


def spec_from_dict(raw: dict) -> ExperimentSpec:
    if not isinstance(raw, dict):
        raise ConfigError("spec root must be a mapping")
    raw = dict(raw)
    scenario = _scenario_from_dict(raw.pop("scenario", {}))

    vis = dict(raw.pop("visibility", {}))
    vr_kind = vis.pop("kind", "random")
    if vr_kind not in ("full", "random"):
        raise ConfigError(f"visibility.kind must be 'full' or 'random', got {vr_kind!r}")
    overlap = vis.pop("overlap", None)
    if overlap is not None:
        overlap = float(overlap)
        if not 0.0 <= overlap <= 1.0:
            raise ConfigError("visibility.overlap must lie in [0, 1]")
    vr_min = float(vis.pop("min_frac", 0.4))
    vr_max = float(vis.pop("max_frac", 0.9))
    if vis:
        raise ConfigError(f"unknown visibility field(s): {sorted(vis)}")

    sweep = dict(raw.pop("sweep", {"axis": "N", "values": [scenario.n_ris]}))
    axis = sweep.pop("axis", "N")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep.axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = tuple(float(v) for v in sweep.pop("values", []))
    if not values:
        raise ConfigError("sweep.values must be non-empty")
    if axis in ("M", "N", "d_ris") and any(v <= 0 for v in values):
        raise ConfigError(f"sweep.values must be positive for axis {axis}")
    shapes = {int(k): (int(v[0]), int(v[1]))
              for k, v in dict(sweep.pop("shapes", {})).items()}
    if sweep:
        raise ConfigError(f"unknown sweep field(s): {sorted(sweep)}")

    methods = tuple(raw.pop("methods", ["closed-form"]))
    if not methods:
        raise ConfigError("methods must be non-empty")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")

    phases = raw.pop("phases", "random")
    if phases not in ("random", "zeros"):
        raise ConfigError(f"phases must be 'random' or 'zeros', got {phases!r}")

    opt_cfg = OptimizerConfig(**dict(raw.pop("optimizer", {})))
    ga_cfg = GaConfig(**dict(raw.pop("ga", {})))

    spec = ExperimentSpec(
        scenario=scenario,
        vr_kind=vr_kind, vr_overlap=overlap,
        vr_min_frac=vr_min, vr_max_frac=vr_max,
        sweep_axis=axis, sweep_values=values, sweep_shapes=shapes,
        methods=methods, phases=phases,
        mc_trials=int(raw.pop("mc_trials", 10000)),
        random_phase_draws=int(raw.pop("random_phase_draws", 20)),
        replicates=int(raw.pop("replicates", 1)),
        base_seed=int(raw.pop("base_seed", 0)),
        timing=bool(raw.pop("timing", False)),
        optimizer=opt_cfg, ga=ga_cfg,
        output=str(raw.pop("output", "results.csv")),
        format=str(raw.pop("format", "csv")),
    )
    if spec.format not in ("csv", "json"):
        raise ConfigError(f"format must be 'csv' or 'json', got {spec.format!r}")
    if spec.mc_trials < 1 or spec.replicates < 1:
        raise ConfigError("mc_trials and replicates must be >= 1")
    if raw:
        raise ConfigError(f"unknown top-level field(s): {sorted(raw)}")
    return spec


def _square_shape(n: int, shapes: dict) -> tuple[int, int]:
    if n in shapes:
        return shapes[n]
    root = math.isqrt(n)
    if root * root != n:
        raise ConfigError(
            f"sweep value N={n} is not a perfect square; give sweep.shapes[{n}]")
    return root, root


def _apply_axis(spec: ExperimentSpec, cfg: SystemConfig, value: float) -> tuple:
    """Returns (cfg, overlap) for one sweep point."""
    overlap = spec.vr_overlap
    axis = spec.sweep_axis
    if axis == "M":
        cfg = cfg.with_updates(m_bs=int(value))
    elif axis == "N":
        n1, n2 = _square_shape(int(value), spec.sweep_shapes)
        cfg = cfg.with_updates(n1=n1, n2=n2)
    elif axis == "delta":
        cfg = cfg.with_updates(delta=float(value))
    elif axis == "eps":
        cfg = cfg.with_updates(eps=(float(value),) * cfg.k_users)
    elif axis == "d_ris":
        cfg = cfg.with_updates(d_ris=float(value))
    elif axis == "overlap":
        overlap = float(value)
    return cfg, overlap


def _timed(fun, warmup: bool):
    if warmup:
        fun()
    start = time.perf_counter()
    out = fun()
    return out, time.perf_counter() - start


def _run_point(spec: ExperimentSpec, value: float, replicate: int,
               seed_offset: int) -> list[ResultRow]:
    seed = spec.base_seed + replicate + seed_offset
    cfg, overlap = _apply_axis(spec, spec.scenario.with_updates(seed=seed), value)
    stat = build_scenario(cfg, vr_spec=spec.vr_kind, overlap=overlap,
                          min_frac=spec.vr_min_frac, max_frac=spec.vr_max_frac)
    phase_rng = np.random.default_rng([seed, 101])
    if spec.phases == "zeros":
        phi = PhaseConfig.zeros(cfg.n_ris)
    else:
        phi = PhaseConfig.random(cfg.n_ris, phase_rng)

    rows = []
    for method in spec.methods:
        mc_se = 0.0
        trace_len = 0
        if method == "closed-form":
            rep, wall = _timed(lambda: closed_form_report(stat, phi), spec.timing)
            rates, min_rate = rep.rates, rep.min_rate
        elif method == "closed-form-reduced":
            rep, wall = _timed(
                lambda: closed_form_report_reduced(reduce_channel(stat, phi)),
                spec.timing)
            rates, min_rate = rep.rates, rep.min_rate
        elif method == "monte-carlo":
            def _mc():
                rng = np.random.default_rng([seed, 202])
                return monte_carlo_report(stat, phi, spec.mc_trials, rng)
            rep, wall = _timed(_mc, spec.timing)
            rates, min_rate = rep.rates, rep.min_rate
            mc_se = float(rep.std_err.max())
        elif method == "optimize-gradient":
            opt_cfg = replace(spec.optimizer, seed=seed)
            res, wall = _timed(lambda: optimize(stat, opt_cfg), spec.timing)
            rep = closed_form_report(stat, PhaseConfig(res.theta))
            rates, min_rate = rep.rates, rep.min_rate
            trace_len = res.iterations
        elif method == "optimize-ga":
            ga_cfg = replace(spec.ga, seed=seed)
            objective = RateObjective(stat, mu=spec.optimizer.mu, use_reduced=True)
            res, wall = _timed(
                lambda: ga_optimize(objective.value, cfg.n_ris, ga_cfg), spec.timing)
            rep = closed_form_report(stat, PhaseConfig(res.theta))
            rates, min_rate = rep.rates, rep.min_rate
            trace_len = res.history.size
        elif method == "random-phase":
            def _random_baseline():
                rng = np.random.default_rng([seed, 303])
                acc_rates = np.zeros(cfg.k_users)
                acc_min = 0.0
                for _ in range(spec.random_phase_draws):
                    rep = closed_form_report(stat, PhaseConfig.random(cfg.n_ris, rng))
                    acc_rates += rep.rates
                    acc_min += rep.min_rate
                d = spec.random_phase_draws
                return acc_rates / d, acc_min / d
            (rates, min_rate), wall = _timed(_random_baseline, spec.timing)
        else:  # pragma: no cover - guarded at load time
            raise ConfigError(f"unknown method {method!r}")
        rows.append(ResultRow(
            sweep_axis=spec.sweep_axis, sweep_value=float(value), method=method,
            seed=seed, rates=tuple(float(r) for r in rates),
            min_rate=float(min_rate), trace_len=trace_len,
            wall_s=wall if spec.timing else 0.0, mc_se=mc_se))
    return rows


def run_experiment(spec: ExperimentSpec, threads: int = 1,
                   seed_offset: int = 0) -> list[ResultRow]:
    """All rows for the sweep, in canonical (value, method, seed) order."""
    tasks = [(value, rep) for value in spec.sweep_values
             for rep in range(spec.replicates)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(
                lambda t: _run_point(spec, t[0], t[1], seed_offset), tasks))
    else:
        chunks = [_run_point(spec, value, rep, seed_offset)
                  for value, rep in tasks]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=ResultRow.sort_key)
    return rows


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def render_csv(rows: list[ResultRow]) -> str:
    k = len(rows[0].rates) if rows else 0
    header = (["sweep_axis", "sweep_value", "method", "seed"]
              + [f"rate_{i + 1}" for i in range(k)]
              + ["min_rate", "trace_len", "wall_s", "mc_se"])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([row.sweep_axis, _fmt(row.sweep_value), row.method,
                         row.seed, *[_fmt(r) for r in row.rates],
                         _fmt(row.min_rate), row.trace_len, _fmt(row.wall_s),
                         _fmt(row.mc_se)])
    return buf.getvalue()


def emit_results(rows: list[ResultRow], path: str, fmt: str = "csv") -> None:
    """Write rows with 17-significant-digit floats; overwrites the target."""
    if fmt == "csv":
        payload = render_csv(rows)
    elif fmt == "json":
        payload = json.dumps([{
            "sweep_axis": r.sweep_axis, "sweep_value": r.sweep_value,
            "method": r.method, "seed": r.seed, "rates": list(r.rates),
            "min_rate": r.min_rate, "trace_len": r.trace_len,
            "wall_s": r.wall_s, "mc_se": r.mc_se,
        } for r in rows], indent=2) + "\n"
    else:
        raise ConfigError(f"format must be 'csv' or 'json', got {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
