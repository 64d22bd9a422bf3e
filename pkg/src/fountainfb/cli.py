"""Command-line front end for simulation, analysis, optimization, and bounds.

Output is plain `name=value` lines so runs can be diffed and parsed; given
the same argv (and seed) the bytes are identical. Exit codes: 0 success, 2
usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import sys

from . import __version__
from .analysis import (
    CostModel,
    DegreeProbs3,
    build_markov_k3,
    expected_steps,
    k2_expected,
    k3_fdel,
    k3_ndel,
    k3_nlt,
    optimize_costs,
)
from .bounds import FeedbackSchedule, ml_failure_bound_feedback, ml_failure_bound_nofeedback
from .degree import RobustSolitonParams, robust_soliton
from .errors import FountainError, InvalidParameterError
from .simulator import (
    SCHEMES,
    SessionConfig,
    average_input_degree,
    export_csv,
    run_many,
)


def load_schedule(path: str, k: int, n: int) -> FeedbackSchedule:
    """Read `t,m` CSV rows into a schedule; complain with the line number."""
    t: list[int] = []
    m: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "m"]:
            raise InvalidParameterError(f"{path}:1: expected header 't,m'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise InvalidParameterError(f"{path}:{lineno}: expected two fields")
            try:
                ti, mi = int(row[0]), int(row[1])
            except ValueError:
                raise InvalidParameterError(
                    f"{path}:{lineno}: fields must be integers"
                ) from None
            if t and ti <= t[-1]:
                raise InvalidParameterError(
                    f"{path}:{lineno}: feedback times must be strictly increasing"
                )
            if m and mi < m[-1]:
                raise InvalidParameterError(
                    f"{path}:{lineno}: ack counts must be nondecreasing"
                )
            t.append(ti)
            m.append(mi)
    return FeedbackSchedule(k=k, n=n, t=tuple(t), m=tuple(m))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fountainfb",
        description="Fountain codes with feedback: simulate, analyze, optimize, bound.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run Monte-Carlo sessions")
    sim.add_argument("--scheme", choices=SCHEMES, default="lt")
    sim.add_argument("--k", type=int, required=True)
    sim.add_argument("--s", type=int, default=10, help="symbols per distance report")
    sim.add_argument("--p-fb", type=float, default=1.0, help="per-ack send probability")
    sim.add_argument("--erasure-p", type=float, default=0.0)
    sim.add_argument("--receivers", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--trials", type=int, default=100)
    sim.add_argument("--c", type=float, default=0.1)
    sim.add_argument("--delta", type=float, default=0.5)
    sim.add_argument("--out", help="write the per-transmission traces as CSV")

    a2 = sub.add_parser("analyze-k2", help="closed forms for a 2-input block")
    a2.add_argument("--p1", type=float, required=True, help="probability of degree 1")

    a3 = sub.add_parser("analyze-k3", help="closed forms for a 3-input block")
    a3.add_argument("--p1", type=float, required=True)
    a3.add_argument("--p2", type=float, required=True)

    opt = sub.add_parser("optimize", help="minimize forward/feedback cost over (p1, p2)")
    opt.add_argument("--c1", type=float, default=1.0, help="cost per forward symbol")
    opt.add_argument("--c2", type=float, default=1.0, help="cost per feedback")
    opt.add_argument("--grid-step", type=float, default=0.002)

    bnd = sub.add_parser("bound", help="ML decoder failure bounds")
    bnd.add_argument("--k", type=int, required=True)
    bnd.add_argument("--n", type=int, required=True, help="received symbol count")
    bnd.add_argument("--c", type=float, default=0.1)
    bnd.add_argument("--delta", type=float, default=0.5)
    bnd.add_argument("--schedule", help="CSV of feedback events (header t,m)")

    sub.add_parser("version", help="print the package version")
    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = SessionConfig(
        k=args.k,
        scheme=args.scheme,
        erasure_prob=args.erasure_p,
        s=args.s,
        p_fb=args.p_fb,
        n_receivers=args.receivers,
        c=args.c,
        delta=args.delta,
        seed=args.seed,
    )
    if args.trials < 1:
        raise InvalidParameterError("--trials must be >= 1")
    traces = run_many(config, args.trials)
    forward = [tr.sent for tr in traces]
    print(
        f"scheme={config.scheme} k={config.k} receivers={config.n_receivers} "
        f"trials={args.trials} seed={config.seed}"
    )
    print(
        f"forward_total mean={_mean(forward):.6f} min={min(forward)} max={max(forward)}"
    )
    print(f"received mean={_mean([tr.received for tr in traces]):.6f}")
    print(f"recovered mean={_mean([tr.recovered for tr in traces]):.6f}")
    print(f"feedback_msgs mean={_mean([tr.feedback_msgs for tr in traces]):.6f}")
    print(f"feedback_bits mean={_mean([tr.feedback_bits for tr in traces]):.6f}")
    print(f"avg_degree mean={_mean([average_input_degree(tr) for tr in traces]):.6f}")
    print(f"completed={sum(tr.completed for tr in traces)}/{len(traces)}")
    if args.out:
        export_csv(traces, args.out)
        print(f"csv={args.out}")
    return 0


def _mean(values) -> float:
    return sum(values) / len(values)


def _cmd_analyze_k2(args: argparse.Namespace) -> int:
    if not 0.0 < args.p1 <= 1.0:
        raise InvalidParameterError("--p1 must be in (0, 1]")
    result = k2_expected(args.p1 / 2.0)
    print(f"n_del={result.n_del:.6f}")
    print(f"f_del={result.f_del:.6f}")
    print(f"n_lt={result.n_lt:.6f}")
    return 0


def _cmd_analyze_k3(args: argparse.Namespace) -> int:
    probs = DegreeProbs3.from_p12(args.p1, args.p2)
    print(f"n_del={k3_ndel(probs):.6f}")
    print(f"f_del={k3_fdel(probs):.6f}")
    print(f"n_lt={k3_nlt(probs):.6f}")
    # the chain's own expectation; see analysis module notes on the offset
    print(f"chain_n_del={expected_steps(build_markov_k3(probs)):.6f}")
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    result = optimize_costs(CostModel(args.c1, args.c2), grid_step=args.grid_step)
    print(f"p1={result.p1:.6f}")
    print(f"p2={result.p2:.6f}")
    print(f"p3={result.p3:.6f}")
    print(f"objective={result.cost:.6f}")
    return 0


def _cmd_bound(args: argparse.Namespace) -> int:
    params = RobustSolitonParams(args.k, args.c, args.delta)
    no_fb = ml_failure_bound_nofeedback(args.k, args.n, robust_soliton(params))
    print(f"bound_nofeedback={no_fb:.6e}")
    if args.schedule:
        schedule = load_schedule(args.schedule, args.k, args.n)
        with_fb = ml_failure_bound_feedback(schedule, params)
        print(f"bound_feedback={with_fb:.6e}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/--help text
        return int(exc.code or 0)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "analyze-k2":
            return _cmd_analyze_k2(args)
        if args.command == "analyze-k3":
            return _cmd_analyze_k3(args)
        if args.command == "optimize":
            return _cmd_optimize(args)
        if args.command == "bound":
            return _cmd_bound(args)
        if args.command == "version":
            print(f"fountainfb {__version__}")
            return 0
    except (FountainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command!r}")
