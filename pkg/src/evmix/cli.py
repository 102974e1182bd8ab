"""Command-line interface: ``evmix simulate | fit | forecast | table | design``."""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import sys

from . import config as cfgmod
from . import experiment
from .estimators import EstimatorKnobs, FittedDsm, fit_dsm, forecast, parse_method, read_data
from .exceptions import EvmixError, InputError

MIN_FIT_N = 8


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_simulate(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from None
    cfg = cfgmod.parse_config(text)
    outcomes = experiment.run_outcomes(cfg, threads=args.threads)
    if args.per_rep:
        lines = ["cell,rep,method,mise,mix,error"] + [experiment.format_outcome(o) for o in outcomes]
        Path(args.per_rep).write_text("\n".join(lines) + "\n", encoding="utf-8")
    rows = experiment.aggregate(cfg, outcomes)
    _write(experiment.emit_table(rows, args.format), args.out)
    for r in rows:
        if r.flagged:
            print(f"warning: {r.family}:{r.params} n={r.n} m={r.m} {r.method}: "
                  f"{r.failures} failed replications", file=sys.stderr)
    return 0


def cmd_fit(args) -> int:
    data = read_data(args.data)
    if data.size < MIN_FIT_N:
        raise InputError(f"{args.data}: need at least {MIN_FIT_N} observations, found {data.size}")
    knobs = EstimatorKnobs(block_size=args.block_size, kernel=args.kernel, bandwidth=args.bandwidth)
    fitted = fit_dsm(data, args.m, args.method, knobs)
    _write(fitted.to_json() + "\n", args.out)
    return 0


def cmd_forecast(args) -> int:
    try:
        fitted = FittedDsm.from_json(Path(args.fit).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load fit {args.fit}: {exc}") from None
    report = forecast(fitted, args.probs, args.thresholds)
    _write(json.dumps(report, indent=2) + "\n", args.out)
    return 0


def cmd_table(args) -> int:
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc}") from None
    _write(experiment.emit_table(experiment.read_table(text), args.format), args.out)
    return 0


def cmd_design(args) -> int:
    cfg = cfgmod.study_design(n=args.n, reps=args.reps, master_seed=args.seed)
    _write(cfgmod.serialize_config(cfg), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="evmix",
        description="Semiparametric estimation of the distribution of the maximum of the next m observations.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser(
        "simulate", help="run a Monte Carlo experiment",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Run the configured cells and methods and write a results table.",
        epilog="config keys and defaults:\n  " + cfgmod.defaults_help().replace("\n", "\n  "),
    )
    s.add_argument("--config", required=True, help="experiment config file")
    s.add_argument("--out", help="output path (default stdout)")
    s.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
    s.add_argument("--format", choices=("csv", "markdown"), default="csv")
    s.add_argument("--per-rep", metavar="PATH", help="also write every replication's MISE and mixing weight")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit an estimator to a data file")
    f.add_argument("--data", required=True, help="newline-separated observations")
    f.add_argument("--m", type=int, required=True, help="forecast horizon")
    f.add_argument("--method", type=parse_method, required=True, help="ml | cv | par | np")
    f.add_argument("--kernel", choices=("gaussian", "epanechnikov"), default=None,
                   help="default gaussian")
    f.add_argument("--block-size", type=int, default=None, help="default min(m, n // 20), at least 2")
    f.add_argument("--bandwidth", type=float, default=None, help="default plug-in")
    f.add_argument("--out", help="JSON output path (default stdout)")
    f.set_defaults(func=cmd_fit)

    fc = sub.add_parser("forecast", help="predictive quantiles and exceedance probabilities")
    fc.add_argument("--fit", required=True, help="JSON written by 'evmix fit'")
    fc.add_argument("--probs", type=_floats, default=[], help="e.g. 0.5,0.9,0.99")
    fc.add_argument("--thresholds", type=_floats, default=[], help="e.g. 10,20")
    fc.add_argument("--out", help="JSON output path (default stdout)")
    fc.set_defaults(func=cmd_forecast)

    t = sub.add_parser("table", help="re-render a results CSV")
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    t.add_argument("--out")
    t.set_defaults(func=cmd_table)

    d = sub.add_parser("design", help="write the full simulation-study config")
    d.add_argument("--n", type=int, default=256)
    d.add_argument("--reps", type=int, default=100)
    d.add_argument("--seed", type=int, default=cfgmod.DEFAULT_SEED)
    d.add_argument("--out")
    d.set_defaults(func=cmd_design)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except EvmixError as exc:
        print(f"evmix: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
