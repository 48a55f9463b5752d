"""Benchmark harness for affine-invariant cubic Newton and its baselines.

Subcommands: run, tune, ref, stepsizes, probe. A config argument is a JSON
file path or the name of a bundled config (a9a, w8a, mnist_binary,
lower_bound, synth_logistic).

Exit codes: 0 success, 2 bad usage or config, 3 I/O or dataset parse
error, 4 numerical failure, 5 no monotone grid point.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import AICNError, ConfigError, NoMonotonePoint, ParseError
from .harness.config import OUTPUT_ENV, SweepConfig, build_objective, initial_point, resolve_config
from .harness.experiment import (
    json_default,
    probe_report,
    reference_solution,
    run_experiment,
    stepsize_comparison,
    tune_monotone,
    write_stepsize_csv,
)

EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_NO_MONOTONE = 2, 3, 4, 5


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, default=json_default) + "\n", encoding="utf-8")
    return path


def cmd_run(args):
    cfg = resolve_config(args.config)
    if args.no_plots:
        cfg = replace(cfg, plots=False)
    res = run_experiment(cfg, args.out)
    for m in res.summary["methods"]:
        status = m["status"] if m["status"] == "ok" else f"error ({m['error']})"
        print(f"{m['label']:<32} iters={m['iterations']:<5} {status}")
    for p in res.files:
        print(p)
    return 0


def cmd_tune(args):
    cfg = resolve_config(args.config)
    sweep = SweepConfig.parse_grid(args.method, args.param, args.grid, args.metric)
    out = cfg.resolved_output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"tune_{args.method}_{args.param}.json"
    try:
        result = tune_monotone(cfg, sweep)
    except NoMonotonePoint as exc:
        _dump({"method": args.method, "param": args.param, "chosen": None,
               "verdicts": exc.verdicts}, path)
        raise
    _dump(result.to_dict(), path)
    print(f"{args.param} = {result.chosen:g}")
    print(path)
    return 0


def cmd_ref(args):
    cfg = resolve_config(args.config)
    obj = build_objective(cfg)
    x_star, f_star = reference_solution(obj, initial_point(cfg, obj), tol=args.tol)
    out = cfg.resolved_output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = _dump({"name": cfg.name, "tol": args.tol, "f_star": f_star, "x_star": x_star}, out / "reference.json")
    print(f"f* = {f_star!r}")
    print(path)
    return 0


def cmd_stepsizes(args):
    rows = stepsize_comparison(args.L, args.min, args.max, args.points)
    out = Path(args.out or os.environ.get(OUTPUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = write_stepsize_csv(rows, out / "stepsizes.csv")
    print(csv_path)
    if not args.no_plots:
        from .harness.plotting import plot_stepsizes

        print(plot_stepsizes(rows, out / "stepsizes.svg", args.L))
    return 0


def cmd_probe(args):
    cfg = resolve_config(args.config)
    report = probe_report(cfg, samples=args.samples, seed=args.seed)
    out = cfg.resolved_output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = _dump(report, out / "probe.json")
    est = report["estimates"]
    print(f"L_semi_hat = {est['L_semi_hat']:.6g}  L_alt_hat = {est['L_alt_hat']:.6g}")
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aicn", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_out(p):
        p.add_argument("--out", help=f"output directory (beats ${OUTPUT_ENV} and the config)")
        return p

    p = with_out(sub.add_parser("run", help="run every configured method"))
    p.add_argument("config")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_run)

    p = with_out(sub.add_parser("tune", help="monotone sweep of one constant"))
    p.add_argument("config")
    p.add_argument("--method", required=True)
    p.add_argument("--param", required=True)
    p.add_argument("--grid", required=True, help="lo:hi:factor")
    p.add_argument("--metric", choices=("f", "grad_dual"), default="f")
    p.set_defaults(func=cmd_tune)

    p = with_out(sub.add_parser("ref", help="high-accuracy reference optimum"))
    p.add_argument("config")
    p.add_argument("--tol", type=float, default=1e-13)
    p.set_defaults(func=cmd_ref)

    p = with_out(sub.add_parser("stepsizes", help="AICN vs classical damped stepsizes"))
    p.add_argument("--L", type=float, default=5.0)
    p.add_argument("--min", type=float, default=1e-3)
    p.add_argument("--max", type=float, default=1e3)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_stepsizes)

    p = with_out(sub.add_parser("probe", help="estimate smoothness constants and check guarantees"))
    p.add_argument("config")
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_probe)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"error[parse]: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_IO
    except NoMonotonePoint as exc:
        print(f"error[tune]: {exc}", file=sys.stderr)
        return EXIT_NO_MONOTONE
    except (AICNError, ValueError, ArithmeticError) as exc:
        k = getattr(exc, "iteration", None)
        where = f" at k={k}" if k is not None else ""
        print(f"error[numerical]{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
