"""Command line interface.

    regenlab tradeoff --n 10 --k 5 --d 9 --file-size 1
    regenlab mincut   --n 4 --k 2 --d 3 --alpha 1 --beta 1/2 --worst-case
    regenlab simulate --n 4 --k 2 --d 3 --file-size 2 --point msr --rounds 100
    regenlab model    --trace-name skype --k 7
    regenlab trace    --input trace.csv --timeout-hours 24
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import availmodel, churnsim, flowgraph, traceio, tradeoff
from .tradeoff import SystemParams


class UsageError(Exception):
    pass


def fstr(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def dec(x) -> str:
    return f"{float(x):.12g}"


def rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def render(rows: list[dict], fmt: str, extra: dict | None = None) -> str:
    if fmt == "json":
        doc = dict(extra or {})
        doc["rows"] = rows
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def write_output(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".regenlab-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _params(args, alpha=0, beta=0) -> SystemParams:
    try:
        return SystemParams(args.n, args.k, args.d, args.file_size, alpha, beta)
    except ValueError as e:
        raise UsageError(str(e)) from None


# -- subcommands ----------------------------------------------------------------


def cmd_tradeoff(args) -> str:
    p = _params(args)
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    lo = tradeoff.gamma_min(p)
    hi = tradeoff.f_break(p, 0) * Fraction(3, 2)
    rows = []

    def row(kind, gamma, alpha):
        rows.append({"kind": kind, "gamma": fstr(gamma), "gamma_dec": dec(gamma), "alpha": fstr(alpha), "alpha_dec": dec(alpha)})

    for j in range(args.points):
        g = lo + (hi - lo) * Fraction(j, args.points - 1)
        row("curve", g, tradeoff.threshold_alpha(p, g))
    for pt in (tradeoff.msr_point(p), tradeoff.mbr_point(p)):
        row(pt.regime.lower(), pt.gamma, pt.alpha)
    # conventional erasure coding: download the whole file
    row("erasure", p.M, tradeoff.threshold_alpha(p, p.M))
    return render(rows, args.format, {"n": p.n, "k": p.k, "d": p.d, "M": fstr(p.M)})


def cmd_mincut(args) -> str:
    p = _params(args, args.alpha, args.beta)
    if args.worst_case:
        graph, dc = flowgraph.build_worst_case(p)
        collectors = [dc]
    else:
        if not args.history_file:
            raise UsageError("give --history-file or --worst-case")
        with open(args.history_file) as fh:
            hist = flowgraph.RepairHistory.parse(p.n, fh.read())
        try:
            graph = flowgraph.build_graph(p, hist, relaxed=args.relaxed)
        except flowgraph.InvalidHistory as e:
            raise UsageError(f"invalid history: {e}") from None
        active = sorted(graph.active_nodes)
        collectors = list(itertools.combinations(active, p.k))
        if len(collectors) > args.collectors:
            rng = np.random.default_rng(args.seed)
            pick = np.sort(rng.choice(len(collectors), size=args.collectors, replace=False))
            collectors = [collectors[i] for i in pick]
    bound = flowgraph.lemma2_bound(p)
    rows = []
    for c in collectors:
        res = flowgraph.check_reconstruction_feasible(graph, c)
        rows.append({
            "collector": " ".join(map(str, c)),
            "mincut": fstr(res.cut_value),
            "mincut_dec": dec(res.cut_value),
            "bound": fstr(bound),
            "bound_dec": dec(bound),
            "feasible": int(res.feasible),
        })
    return render(rows, args.format, {"M": fstr(p.M), "bound": fstr(bound)})


def cmd_simulate(args) -> str:
    base = _params(args)
    if args.point:
        pt = tradeoff.msr_point(base) if args.point == "msr" else tradeoff.mbr_point(base)
        p = base.with_point(pt.alpha, pt.gamma)
    elif args.alpha is not None and args.beta is not None:
        p = _params(args, args.alpha, args.beta)
    else:
        raise UsageError("give --point or both --alpha and --beta")
    try:
        cfg = churnsim.SimConfig(
            p,
            rounds=args.rounds,
            failure=args.failure,
            helpers=args.helpers,
            seed=args.seed,
            collectors=args.collectors,
            mincut_every=args.mincut_every,
            mincut_samples=args.mincut_samples,
            bits=args.bits,
            payload=args.payload,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    report = churnsim.run(cfg)
    if args.format == "csv":
        rows = [
            {
                "round": r.round,
                "failed": r.failed,
                "newcomer": r.newcomer,
                "bandwidth_units": r.bandwidth_units,
                "decode_trials": r.decode_trials,
                "decode_successes": r.decode_successes,
                "mincut_violations": sum(not c["ok"] for c in r.mincut),
            }
            for r in report.rounds
        ]
        return render(rows, "csv")
    return report.to_json()


def cmd_model(args) -> str:
    if args.trace_name:
        try:
            model = availmodel.ChurnModel.from_trace(args.trace_name)
        except KeyError as e:
            raise UsageError(e.args[0]) from None
    elif args.f is not None and args.a is not None:
        try:
            model = availmodel.ChurnModel(args.f, args.a)
        except ValueError as e:
            raise UsageError(str(e)) from None
    else:
        raise UsageError("give --trace-name or both --f and --a")
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for s in strategies:
        if s not in availmodel.STRATEGIES:
            raise UsageError(f"unknown strategy {s!r}")
    sweeps = [availmodel.sweep(s, args.file_size, args.k, model, args.target_unavail, args.r_max) for s in strategies]
    if args.format == "json":
        rows = [
            {
                "strategy": p.strategy,
                "n": p.n,
                "k": p.k,
                "R": dec(p.R),
                "unavailability": p.unavailability,
                "bandwidth_bytes_per_day": p.bandwidth,
                "storage_bytes": p.storage,
                "nearest": int(p is s.nearest),
            }
            for s in sweeps
            for p in s.points
        ]
        return render(rows, "json", {"f": model.f, "a": model.a, "k": args.k, "target": args.target_unavail})
    return availmodel.frontier_csv(sweeps)


def cmd_trace(args) -> str:
    with open(args.input) as fh:
        try:
            trace = traceio.parse_trace(fh)
        except traceio.TraceFormatError as e:
            raise UsageError(f"{args.input}: {e}") from None
    if not len(trace.node):
        print("warning: trace is empty", file=sys.stderr)
    if args.clean_planetlab:
        trace = traceio.clean_planetlab(trace)
    try:
        summary = traceio.estimate(trace, args.timeout_hours)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.format == "csv":
        row = {k: v for k, v in summary.__dict__.items()}
        return render([row], "csv")
    return summary.to_json()


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    sysp = argparse.ArgumentParser(add_help=False)
    sysp.add_argument("--n", type=int, required=True)
    sysp.add_argument("--k", type=int, required=True)
    sysp.add_argument("--d", type=int, required=True)
    sysp.add_argument("--file-size", type=rational, default=Fraction(1))

    parser = argparse.ArgumentParser(prog="regenlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tradeoff", parents=[common, sysp], help="optimal storage/bandwidth curve")
    p.add_argument("--points", type=int, default=20)
    p.set_defaults(func=cmd_tradeoff, default_format="csv")

    p = sub.add_parser("mincut", parents=[common, sysp], help="flow-graph min-cuts")
    p.add_argument("--alpha", type=rational, required=True)
    p.add_argument("--beta", type=rational, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--history-file")
    g.add_argument("--worst-case", action="store_true")
    p.add_argument("--relaxed", action="store_true", help="helpers may be inactive nodes")
    p.add_argument("--collectors", type=int, default=100, help="max collectors to evaluate")
    p.set_defaults(func=cmd_mincut, default_format="csv")

    p = sub.add_parser("simulate", parents=[common, sysp], help="churn simulation")
    p.add_argument("--point", choices=("msr", "mbr"))
    p.add_argument("--alpha", type=rational)
    p.add_argument("--beta", type=rational)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--failure", choices=churnsim.FAILURE_POLICIES, default="uniform-random")
    p.add_argument("--helpers", choices=churnsim.HELPER_POLICIES, default="all-active-random-d")
    p.add_argument("--collectors", type=int, default=20)
    p.add_argument("--mincut-every", type=int, default=0)
    p.add_argument("--mincut-samples", type=int, default=1)
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)
    p.add_argument("--payload", type=int, default=0)
    p.set_defaults(func=cmd_simulate, default_format="json")

    p = sub.add_parser("model", parents=[common], help="availability/bandwidth frontier")
    p.add_argument("--trace-name", choices=sorted(traceio.TABLE_I))
    p.add_argument("--f", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--strategies", default=",".join(availmodel.STRATEGIES))
    p.add_argument("--target-unavail", type=float, default=1e-4)
    p.add_argument("--r-max", type=float, default=10)
    p.add_argument("--file-size", type=float, default=1.0)
    p.set_defaults(func=cmd_model, default_format="csv")

    p = sub.add_parser("trace", parents=[common], help="estimate f and a from a trace")
    p.add_argument("--input", required=True)
    p.add_argument("--timeout-hours", type=float, default=traceio.DEFAULT_TIMEOUT_HOURS)
    p.add_argument("--clean-planetlab", action="store_true")
    p.set_defaults(func=cmd_trace, default_format="json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        text = args.func(args)
    except UsageError as e:
        parser.exit(2, f"{parser.prog} {args.command}: error: {e}\n")
    except (OSError, ValueError) as e:
        parser.exit(1, f"{parser.prog} {args.command}: error: {e}\n")
    write_output(text, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
