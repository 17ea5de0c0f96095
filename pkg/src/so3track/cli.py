"""Command-line entry point: ``so3-track {simulate,reproduce,validate-gains,roa}``.

Exit codes: 0 success, 1 configuration error, 2 numerical divergence.
The environment variable ``SO3_TRACK_SEED`` is reserved for future stochastic
features and currently ignored.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .controllers import roa_membership, validate_gains
from .errors import ConfigError, NumericalDivergence
from .harness import FIGURES, load_scenario, records_to_csv, reproduce, run_scenario, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.config)
    if args.record_every is not None:
        scenario.record_every = args.record_every
    result = run_scenario(scenario)
    out = args.out or scenario.out
    if out:
        write_csv(result.records, out)
    else:
        sys.stdout.write(records_to_csv(result.records))
    print(json.dumps(result.summary, indent=2), file=sys.stderr if not out else sys.stdout)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    summaries = reproduce(args.figure, args.outdir, t_final=args.t_final, jobs=args.jobs)
    for mode, summ in summaries.items():
        print(f"{mode:6s} branch={summ['branch']:8s} V0(0)={_fmt(summ['V0_initial'])} "
              f"level={_fmt(summ['roa_level'])} |E_R(T)|={_fmt(summ['terminal_eR_norm'])} "
              f"|e_W(T)|={_fmt(summ['terminal_eOmega_norm'])} t(|E_R|<0.01)={_fmt(summ['time_to_threshold'])}")
    print(f"wrote {args.outdir}/{args.figure}_*.csv")
    return EXIT_OK


def cmd_validate_gains(args) -> int:
    scenario = load_scenario(args.config)
    gains = scenario.gains()
    report = validate_gains(gains, scenario.controller)
    print(f"mode: {report.mode.value}")
    print(f"k_r={_fmt(gains.k_r)} k_omega={_fmt(gains.k_omega)} a={_fmt(gains.a)} mu={_fmt(gains.mu)} "
          f"epsilon={_fmt(gains.epsilon)} k_delta={_fmt(gains.k_delta)} delta_max={_fmt(gains.delta_max)}")
    for name, ok in report.checks.items():
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}")
    print(f"mu bound: {_fmt(report.mu_bound)}")
    print(f"lambda_min(W3): {_fmt(report.lambda_min_w3)}")
    print(f"sigma: {_fmt(report.sigma)}")
    if report.b is not None:
        print(f"B: {_fmt(report.b)}")
    for v in report.violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_CONFIG


def cmd_roa(args) -> int:
    scenario = load_scenario(args.config)
    scenario.validate()
    initial = scenario.initial_state()
    ref0 = scenario.reference_provider()(0.0)
    rep = roa_membership(initial.r, initial.omega, ref0, scenario.gains(), scenario.controller)
    print(f"mode: {rep.mode.value}")
    print(f"theta0: {_fmt(rep.theta0)} rad ({rep.theta0 / math.pi:.6g} pi)")
    print(f"|e_Omega(0)|: {_fmt(rep.e_omega_norm)}")
    print(f"V0(0): {_fmt(rep.v0)}  level: {_fmt(rep.level)}")
    if rep.b is not None:
        print(f"B: {_fmt(rep.b)}")
    print(f"theta_b0: {_fmt(rep.theta_b0)}  gamma: {_fmt(rep.gamma)}")
    print(f"in R1 (direct branch certified): {rep.in_r1}")
    print(f"in R3 (shifted branch certified): {rep.in_r3}")
    print(f"radius direct: {_fmt(rep.bound_direct)}  radius shifted: {_fmt(rep.bound_shifted)}  "
          f"active: {rep.active_bound}")
    print(f"in R: {rep.in_r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="so3-track", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario from a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="CSV output path (default: config 'out' or stdout)")
    s.add_argument("--record-every", type=int, default=None, help="keep every n-th integrator step")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reproduce", help="run the benchmark presets for every controller")
    r.add_argument("figure", choices=sorted(FIGURES))
    r.add_argument("--outdir", default="results")
    r.add_argument("--t-final", type=float, default=None, help="override the preset horizon (fig1 10 s, fig2 30 s, exp 60 s)")
    r.add_argument("--jobs", type=int, default=1, help="worker processes, one per scenario")
    r.set_defaults(func=cmd_reproduce)

    v = sub.add_parser("validate-gains", help="check gain inequalities for a config")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate_gains)

    o = sub.add_parser("roa", help="report region-of-attraction membership of the initial state")
    o.add_argument("--config", required=True)
    o.set_defaults(func=cmd_roa)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDivergence as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
