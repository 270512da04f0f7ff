"""Command-line entry points.

    xlris run <spec.yaml>       execute a sweep and write CSV/JSON rows
    xlris validate <spec.yaml>  check a spec without running it
    xlris gradcheck             finite-difference check of the analytic gradients
    xlris mc-check              closed form vs Monte-Carlo rate validation
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import ConfigError, SystemConfig, half_wavelength_config
from .channel import build_scenario
from .gradients import central_difference
from .montecarlo import monte_carlo_report
from .optimizer import RateObjective, grad_objective
from .rates import PhaseConfig, closed_form_report
from .experiments import emit_results, load_spec, run_experiment


def _cmd_run(args) -> int:
    spec = load_spec(args.spec)
    rows = run_experiment(spec, threads=args.threads, seed_offset=args.seed_offset)
    out = args.out or spec.output
    fmt = args.format or spec.format
    emit_results(rows, out, fmt)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _cmd_validate(args) -> int:
    try:
        spec = load_spec(args.spec)
    except ConfigError as exc:
        print(f"invalid spec: {exc}")
        return 1
    points = len(spec.sweep_values) * spec.replicates
    print(f"spec ok: sweep {spec.sweep_axis} over {list(spec.sweep_values)}, "
          f"{len(spec.methods)} method(s), {points} scenario build(s)")
    return 0


def _cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for trial in range(args.instances):
        n1 = int(rng.choice([2, 3, 4]))
        n2 = int(rng.choice([2, 3, 4]))
        m = int(rng.choice([2, 4, 8]))
        k = int(rng.choice([1, 2, 3]))
        cfg = half_wavelength_config(m, n1, n2, k, seed=int(rng.integers(1 << 31)),
                                     delta=float(rng.uniform(0.2, 3.0)))
        stat = build_scenario(cfg, vr_spec="random", min_frac=0.3, max_frac=0.9,
                              rng=np.random.default_rng(cfg.seed))
        theta = rng.uniform(0.0, 2 * np.pi, size=cfg.n_ris)
        obj = RateObjective(stat, mu=50.0)
        analytic = grad_objective(stat, PhaseConfig(theta), mu=50.0)
        numeric = central_difference(obj.value, theta, h=1e-6).real
        scale = max(np.max(np.abs(numeric)), 1e-30)
        err = float(np.max(np.abs(analytic - numeric)) / scale)
        worst = max(worst, err)
        print(f"instance {trial:2d}: M={m} N={cfg.n_ris} K={k} "
              f"max rel gradient error {err:.3e}")
    print(f"worst relative error: {worst:.3e} (tolerance {args.tol:.0e})")
    if worst > args.tol:
        print("GRADCHECK FAILED")
        return 1
    print("gradcheck passed")
    return 0


def _cmd_mc_check(args) -> int:
    cfg = half_wavelength_config(args.m_bs, args.n1, args.n2, args.k_users)
    failures = 0
    for s in range(args.seeds):
        stat = build_scenario(cfg.with_updates(seed=s), vr_spec="random")
        phi = PhaseConfig.random(cfg.n_ris, np.random.default_rng([s, 7]))
        closed = closed_form_report(stat, phi)
        mc = monte_carlo_report(stat, phi, args.trials, np.random.default_rng([s, 11]))
        for k in range(cfg.k_users):
            tol = max(args.rel_tol * mc.rates[k], 3.0 * mc.std_err[k])
            diff = abs(closed.rates[k] - mc.rates[k])
            status = "ok" if diff <= tol else "FAIL"
            if diff > tol:
                failures += 1
            print(f"seed {s} user {k}: closed {closed.rates[k]:.4f} "
                  f"mc {mc.rates[k]:.4f} (+-{mc.std_err[k]:.4f}) "
                  f"diff {diff:.4f} tol {tol:.4f} {status}")
    if failures:
        print(f"MC-CHECK FAILED ({failures} user/seed pairs outside tolerance)")
        return 1
    print("mc-check passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xlris",
                                     description="XL-RIS uplink rate experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec")
    p_run.add_argument("spec")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--format", choices=("csv", "json"), default=None)
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--seed-offset", type=int, default=0)
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate an experiment spec")
    p_val.add_argument("spec")
    p_val.set_defaults(func=_cmd_validate)

    p_grad = sub.add_parser("gradcheck",
                            help="finite-difference check of the analytic gradients")
    p_grad.add_argument("--instances", type=int, default=10)
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--tol", type=float, default=1e-5)
    p_grad.set_defaults(func=_cmd_gradcheck)

    p_mc = sub.add_parser("mc-check",
                          help="closed form vs Monte-Carlo rate validation")
    p_mc.add_argument("--m-bs", type=int, default=16)
    p_mc.add_argument("--n1", type=int, default=6)
    p_mc.add_argument("--n2", type=int, default=6)
    p_mc.add_argument("--k-users", type=int, default=4)
    p_mc.add_argument("--trials", type=int, default=20000)
    p_mc.add_argument("--seeds", type=int, default=3)
    p_mc.add_argument("--rel-tol", type=float, default=0.03)
    p_mc.set_defaults(func=_cmd_mc_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
