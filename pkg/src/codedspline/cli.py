"""``codedspline`` command line entry point."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import codec, experiments
from .adversary import STRATEGIES, AttackPlan
from .errors import CodedSplineError, ConfigError, NotFound, SlopeUndefined
from .simulation import registry_get, registry_ids, run_repeated

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3


def _cmd_sweep(args) -> int:
    cfg = experiments.parse_config(args.config)
    out = args.out or cfg.output_path
    if out is None:
        raise ConfigError("output_path", "give --out or set output_path in the config")

    def progress(row):
        print(f"N={row.N} gamma={row.gamma} lambda_d={row.lambda_d:.4g} mean_error={row.mean_error:.6g}", flush=True)

    rows = experiments.run_sweep(cfg, out, progress=None if args.quiet else progress)
    if len(rows) >= 3:
        try:
            fit = experiments.fit_slope(rows)
            print(f"slope={fit['slope']:.4f} intercept={fit['intercept']:.4f} r_squared={fit['r_squared']:.4f}")
        except SlopeUndefined as exc:
            print(f"slope undefined: {exc}")
    print("(errors are for one fixed attack strategy and bound the worst case from below)")
    return EXIT_OK


def _cmd_slope(args) -> int:
    try:
        rows = experiments.read_rows(args.input)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError("--in", str(exc)) from None
    fit = experiments.fit_slope(rows)
    print(json.dumps(fit))
    return EXIT_OK


def _cmd_validate(args) -> int:
    report = experiments.validate(args.suite)
    for line in report.lines():
        print(line)
    status = "passed" if report.passed else "FAILED: " + ", ".join(report.failures)
    print(f"suite {args.suite} {status} in {report.seconds:.1f}s")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _cmd_run(args) -> int:
    f = registry_get(args.function)
    if args.gamma > args.n:
        raise ConfigError("--gamma", f"budget {args.gamma} exceeds N = {args.n}")
    if args.lambda_d is not None:
        lam = args.lambda_d
    else:
        # Exponent implied by the budget, gamma = N^a.
        a = math.log(args.gamma) / math.log(args.n) if args.gamma > 1 else 0.0
        lam = codec.choose_lambda_d(args.n, min(a, 0.99))
    plan = AttackPlan(args.gamma, args.strategy if args.gamma > 0 else "none")
    rep = run_repeated(f, args.k, args.n, plan, lam, args.repetitions, args.seed)
    print(json.dumps({
        "function": f.id, "N": args.n, "K": args.k, "gamma": args.gamma, "strategy": plan.strategy,
        "lambda_d": lam, "repetitions": args.repetitions, "seed": args.seed,
        "mean_error": rep.mean, "stddev": rep.stddev,
        "estimates": np.asarray(rep.results[0].estimates).tolist(),
    }))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="codedspline", description="Smoothing-spline coded computing experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run a convergence sweep from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="CSV path (overrides output_path)")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("slope", help="fit the log-log slope of a sweep CSV")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=_cmd_slope)

    s = sub.add_parser("validate", help="run a named validation suite")
    s.add_argument("--suite", required=True, choices=sorted(experiments.SUITES))
    s.set_defaults(func=_cmd_validate)

    s = sub.add_parser("run", help="run one configuration")
    s.add_argument("--function", required=True, choices=registry_ids())
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--gamma", type=int, default=0)
    s.add_argument("--strategy", default="cluster_max", choices=STRATEGIES)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--repetitions", type=int, default=1)
    s.add_argument("--lambda-d", type=float, default=None)
    s.set_defaults(func=_cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SlopeUndefined as exc:
        print(f"slope undefined: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NotFound, CodedSplineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
