"""Command-line front end.

Exit codes: 0 success, 1 runtime/domain failure (I/O, bad filter file,
counter overflow/underflow), 2 usage errors (bad flags or parameter
values).  Element commands read newline-delimited elements on stdin; the
raw line bytes (minus the newline, tolerating CRLF) feed the digest.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analytic_model as model
from .filter_core import (CountingFilter, FilterError, FilterParams,
                          DEFAULT_COUNTER_MAX, digest)
from .harness import ExperimentConfig, run_growth_comparison, \
    run_threshold_sweep, write_records_csv
from .tuner import TuneConstraint, optimize_decision_threshold, \
    optimize_thresholds


def _read_stdin_elements() -> list[bytes]:
    data = sys.stdin.buffer.read()
    if not data:
        return []
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    out = []
    for i, line in enumerate(lines, start=1):
        if line.endswith(b"\r"):
            line = line[:-1]
        if not line:
            raise ValueError(f"empty element on stdin line {i}")
        out.append(line)
    return out


def _stack_digests(lines: list[bytes], params: FilterParams) -> np.ndarray:
    return np.stack([digest(line, params).indices for line in lines])


def _cmd_build(args) -> int:
    params = FilterParams(m=args.m, k=args.k, seed=args.seed,
                          counter_max=args.counter_max)
    CountingFilter(params).save(args.out)
    print(f"created {args.out} (m={params.m}, k={params.k}, "
          f"seed={params.seed}, counter_max={params.counter_max})")
    return 0


def _cmd_insert(args) -> int:
    filt = CountingFilter.load(args.filter)
    lines = _read_stdin_elements()
    if lines:
        filt.insert_many(_stack_digests(lines, filt.params))
        filt.save(args.filter)
    for _ in lines:
        print("ok")
    return 0


def _cmd_remove(args) -> int:
    filt = CountingFilter.load(args.filter)
    lines = _read_stdin_elements()
    if lines:
        filt.remove_many(_stack_digests(lines, filt.params))
        filt.save(args.filter)
    for _ in lines:
        print("ok")
    return 0


def _cmd_query(args) -> int:
    filt = CountingFilter.load(args.filter)
    view = filt.binarize(args.theta, args.decision_threshold)
    for line in _read_stdin_elements():
        print("1" if view.query(digest(line, filt.params)) else "0")
    return 0


def _tune_inputs(args, parser: argparse.ArgumentParser) -> tuple[int, int, int]:
    if args.filter is not None:
        if args.m is not None or args.n is not None or args.k is not None:
            parser.error("--filter cannot be combined with --m/--n/--k")
        filt = CountingFilter.load(args.filter)
        return filt.params.m, filt.n_stored, filt.params.k
    if args.m is None or args.n is None or args.k is None:
        parser.error("provide either --filter or all of --m, --n, --k")
    return args.m, args.n, args.k


def _cmd_tune(args, parser) -> int:
    m, n, k = _tune_inputs(args, parser)
    constraint = TuneConstraint(min_tpr=args.min_tpr)
    if args.theta is not None:
        result = optimize_decision_threshold(m, n, k, args.theta, constraint)
    else:
        result = optimize_thresholds(m, n, k, constraint,
                                     theta_max=args.theta_max)
    print(f"theta={result.theta}")
    print(f"T={result.decision_threshold}")
    print(f"tpr={result.predicted.tpr:.6g}")
    print(f"fpr={result.predicted.fpr:.6g}")
    print(f"acc={result.predicted.acc:.6g}")
    return 0


def _cmd_analyze(args) -> int:
    point = model.ModelPoint(m=args.m, n=args.n, k=args.k, theta=args.theta,
                             decision_threshold=args.decision_threshold)
    for key, value in model.rates(point).as_dict().items():
        print(f"{key}={value:.10g}")
    return 0


def _cmd_sweep_theta(args) -> int:
    config = ExperimentConfig(m=args.m, k=args.k, n=args.n,
                              theta_max=args.theta_max, min_tpr=args.min_tpr,
                              query_count=args.query_count, trials=args.trials,
                              base_seed=args.base_seed)
    result = run_threshold_sweep(config)
    write_records_csv(result.records, args.out)
    print(f"wrote {len(result.records)} rows to {args.out}")
    return 0


def _cmd_compare_growth(args) -> int:
    config = ExperimentConfig(m=args.m, k=args.k,
                              n_range=(args.n_start, args.n_stop, args.n_step),
                              min_tpr=args.min_tpr,
                              query_count=args.query_count, trials=args.trials,
                              base_seed=args.base_seed,
                              erase_fraction=args.erase_fraction)
    result = run_growth_comparison(config)
    write_records_csv(result.records, args.out)
    print(f"wrote {len(result.records)} rows to {args.out} "
          f"({result.rebuild_count()} rebuilds of optimized_bf)")
    return 0


def _add_common_experiment_flags(sp, *, min_tpr_default: float) -> None:
    sp.add_argument("--m", type=int, default=10000, help="slot count")
    sp.add_argument("--k", type=int, default=100, help="hashes per element")
    sp.add_argument("--l-tpr", dest="min_tpr", type=float,
                    default=min_tpr_default,
                    help="recall floor for the tuner (default %(default)s)")
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--query-count", type=int, default=10000)
    sp.add_argument("--base-seed", type=int, default=0xABF15EED)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abloom",
        description="Counting Bloom filter with tuned binarized views")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build", help="create an empty filter file")
    sp.add_argument("--m", type=int, required=True, help="slot count")
    sp.add_argument("--k", type=int, required=True, help="hashes per element")
    sp.add_argument("--seed", type=int, default=0, help="hash seed")
    sp.add_argument("--counter-max", type=int, default=DEFAULT_COUNTER_MAX)
    sp.add_argument("--out", required=True, help="output filter path")
    sp.set_defaults(func=_cmd_build)

    sp = sub.add_parser("insert", help="insert stdin elements (one per line)")
    sp.add_argument("--filter", required=True, help="filter file to update")
    sp.set_defaults(func=_cmd_insert)

    sp = sub.add_parser("remove", help="remove stdin elements (one per line)")
    sp.add_argument("--filter", required=True, help="filter file to update")
    sp.set_defaults(func=_cmd_remove)

    sp = sub.add_parser("query", help="query stdin elements, print 1/0 each")
    sp.add_argument("--filter", required=True)
    sp.add_argument("--theta", type=int, required=True,
                    help="binarization threshold")
    sp.add_argument("--T", dest="decision_threshold", type=int, required=True,
                    help="decision threshold on the dot product")
    sp.set_defaults(func=_cmd_query)

    sp = sub.add_parser("tune", help="pick thresholds maximizing accuracy")
    sp.add_argument("--filter", help="take m, k, n from a filter file")
    sp.add_argument("--m", type=int)
    sp.add_argument("--n", type=int, help="stored element count")
    sp.add_argument("--k", type=int)
    sp.add_argument("--l-tpr", dest="min_tpr", type=float, default=0.97,
                    help="recall floor (default %(default)s)")
    sp.add_argument("--theta", type=int,
                    help="fix theta and only tune the decision threshold")
    sp.add_argument("--theta-max", type=int,
                    help="cap the theta search explicitly")
    sp.set_defaults(func=_cmd_tune, needs_parser=True)

    sp = sub.add_parser("analyze", help="print model rates at one point")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--theta", type=int, required=True)
    sp.add_argument("--T", dest="decision_threshold", type=int, required=True)
    sp.set_defaults(func=_cmd_analyze)

    sp = sub.add_parser("sweep-theta",
                        help="measured vs predicted rates across theta")
    _add_common_experiment_flags(sp, min_tpr_default=0.97)
    sp.add_argument("--n", type=int, default=500, help="stored element count")
    sp.add_argument("--theta-max", type=int, default=5)
    sp.add_argument("--out", default="sweep_theta.csv")
    sp.set_defaults(func=_cmd_sweep_theta)

    sp = sub.add_parser("compare-growth",
                        help="four filter variants vs stored-set size")
    _add_common_experiment_flags(sp, min_tpr_default=0.9)
    sp.add_argument("--n-start", type=int, default=50)
    sp.add_argument("--n-stop", type=int, default=5000)
    sp.add_argument("--n-step", type=int, default=50)
    sp.add_argument("--erase-fraction", type=float, default=0.001)
    sp.add_argument("--out", default="compare_growth.csv")
    sp.set_defaults(func=_cmd_compare_growth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "needs_parser", False):
            return args.func(args, parser)
        return args.func(args)
    except SystemExit as exc:  # parser.error inside a command
        return int(exc.code or 0)
    except FilterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
