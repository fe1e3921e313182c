"""Command-line front end.

Subcommands: steady-state, spectrum, simulate, optimize.  Every file
output is accompanied by a manifest recording the resolved parameters,
seed and tool version, so a run can be reproduced bit-exactly.

Exit codes: 0 ok, 2 invalid configuration, 3 singular (exceptional)
drift, 4 no feasible optimizer start, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys

import numpy as np

from . import __version__
from .errors import (
    ExceptionalCase,
    InsufficientData,
    InvalidConfig,
    NoFeasiblePoint,
    SingularDrift,
    SingularResolvent,
    StepRejected,
)
from .model import atomic_squeezing, config_to_dict, load_config
from .dynamics import exceptional_conditions, is_exceptional, steady_state
from .spectrum import mean_squeezing, sigma2, spectrum_sweep
from .trajectory import (
    PeriodogramAccumulator,
    SimulationPlan,
    simulate_ensemble,
)
from .control_search import load_search_spec, optimize

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_EXCEPTIONAL = 3
EXIT_INFEASIBLE = 4
EXIT_NUMERICAL = 5


def _write_manifest(path, subcommand, cfg_dict, seed, outputs):
    manifest = {
        "subcommand": subcommand,
        "config": cfg_dict,
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


def cmd_steady_state(args) -> int:
    cfg = load_config(args.config)
    if is_exceptional(cfg):
        lines = ["singular drift matrix (det A = 0); conditions:"]
        for label, ok, residual in exceptional_conditions(cfg):
            state = "satisfied" if ok else "violated"
            lines.append(f"  {label}: {state} (residual {residual:.3e})")
        print("\n".join(lines), file=sys.stderr)
        return EXIT_EXCEPTIONAL
    x_eq = steady_state(cfg)
    payload = {
        "x_eq": [x_eq.x, x_eq.y, x_eq.z],
        "atomic_squeezing": atomic_squeezing(x_eq),
        "sigma2": sigma2(cfg),
        "mean_squeezing_channel1": mean_squeezing(cfg, 1),
        "mean_squeezing_channel2": mean_squeezing(cfg, 2),
        "exceptional": False,
    }
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        _write_manifest(args.out + ".manifest.json", "steady-state",
                        config_to_dict(cfg), None, [args.out])
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config)
    curve = spectrum_sweep(cfg, args.channel, args.mu_min, args.mu_max, args.points)
    curve.to_csv(args.out)
    _write_manifest(args.out + ".manifest.json", "spectrum",
                    config_to_dict(cfg), None, [args.out])
    print(f"wrote {args.points} points to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    plan = SimulationPlan(
        dt=args.dt,
        t_final=args.t_final,
        n_trajectories=args.trajectories,
        base_seed=args.seed,
        transient_cut=args.transient_cut,
        state_stride=args.state_stride,
    )
    if args.dump_first > 0 and plan.state_stride != 1:
        raise InvalidConfig("--dump-first requires --state-stride 1")

    accumulator = None
    if args.estimate_spectrum:
        grid = np.linspace(args.mu_min, args.mu_max, args.points)
        accumulator = PeriodogramAccumulator(args.channel, grid)

    outputs = []
    count = 0
    mean = None
    m2 = None
    times = None
    for rec in simulate_ensemble(cfg, plan):
        if times is None:
            times = rec.times
            mean = np.zeros_like(rec.states)
            m2 = np.zeros_like(rec.states)
        count += 1
        delta = rec.states - mean
        mean += delta / count
        m2 += delta * (rec.states - mean)
        if accumulator is not None:
            accumulator.add(rec)
        if rec.index < args.dump_first:
            path = f"{args.out_prefix}.traj{rec.index:04d}.csv"
            rec.to_csv(path)
            outputs.append(path)

    if count > 1:
        stderr = np.sqrt(np.maximum(m2 / (count - 1), 0.0) / count)
    else:
        stderr = np.full_like(mean, np.nan)
    summary = {
        "n_trajectories": count,
        "times": [float(t) for t in times],
        "mean_bloch": [[float(v) for v in row] for row in mean],
        "stderr_bloch": [[float(v) for v in row] for row in stderr],
        "config": config_to_dict(cfg),
        "plan": {
            "dt": plan.dt,
            "t_final": plan.t_final,
            "transient_cut": plan.transient_cut,
            "state_stride": plan.state_stride,
            "base_seed": plan.base_seed,
        },
    }
    summary_path = f"{args.out_prefix}.summary.json"
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    outputs.append(summary_path)

    if accumulator is not None:
        curve = accumulator.result()
        curve_path = f"{args.out_prefix}.spectrum.csv"
        curve.to_csv(curve_path)
        outputs.append(curve_path)

    _write_manifest(f"{args.out_prefix}.manifest.json", "simulate",
                    config_to_dict(cfg), plan.base_seed, outputs)
    print(f"simulated {count} trajectories; wrote {', '.join(outputs)}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    spec = load_search_spec(args.spec)
    result = optimize(spec)
    payload = result.to_json(args.out)
    if args.out:
        _write_manifest(args.out + ".manifest.json", "optimize",
                        config_to_dict(spec.template), spec.seed, [args.out])
        print(f"best value {result.value!r} at {result.point}; wrote {args.out}")
    else:
        print(json.dumps({"best_point": payload["best_point"],
                          "best_value": payload["best_value"],
                          "n_evaluations": payload["n_evaluations"]}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomsqueeze",
        description="Homodyne feedback control of a two-level atom: "
                    "spectra, squeezing functionals, quantum trajectories "
                    "and control-parameter search.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady-state",
                       help="stationary state, squeezing functionals")
    p.add_argument("--config", required=True, help="flat JSON parameter file")
    p.add_argument("--out", help="also write the report to this JSON file")
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("spectrum", help="analytic spectrum sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--channel", type=int, choices=(1, 2), default=1)
    p.add_argument("--mu-min", type=float, default=-5.0)
    p.add_argument("--mu-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--out", required=True, help="CSV output path (columns mu,S)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", help="stochastic trajectories and "
                                        "periodogram spectrum estimate")
    p.add_argument("--config", required=True)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-final", type=float, default=500.0)
    p.add_argument("--trajectories", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transient-cut", type=float, default=50.0)
    p.add_argument("--state-stride", type=int, default=100)
    p.add_argument("--dump-first", type=int, default=0, metavar="N",
                   help="write the first N trajectories as CSV "
                        "(needs --state-stride 1)")
    p.add_argument("--estimate-spectrum", action="store_true")
    p.add_argument("--channel", type=int, choices=(1, 2), default=1)
    p.add_argument("--mu-min", type=float, default=-5.0)
    p.add_argument("--mu-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="multistart search over control "
                                        "parameters")
    p.add_argument("--spec", required=True, help="search spec JSON")
    p.add_argument("--out", help="write the full result (with trace) here")
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfig, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except ExceptionalCase as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXCEPTIONAL
    except NoFeasiblePoint as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SingularDrift, SingularResolvent, StepRejected, InsufficientData,
            np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
