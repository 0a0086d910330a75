"""Command-line entry point: ``acf bench | attack | gen-trace | audit``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .adversary import AttackConfig, run_attack_trials, write_transcript
from .checks import fuzz_suite, summarize
from .errors import (BudgetError, ConsistencyError, ConstructionError, ContractViolation,
                     ParameterError)
from .variants import equal_space_roster
from .workload import (DEFAULT_RATIOS, ZipfConfig, build_experiment, generate_zipf_trace,
                       mean_fp_rate, parse_trace, run_experiment, write_results)

log = logging.getLogger("adaptive_cuckoo")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ratios(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ratio list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty ratio list")
    return [int(v) if v.is_integer() else v for v in vals]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="acf", description="Adaptive cuckoo filter experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bench", help="false-positive rates of the filter roster on a trace")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", help="newline-delimited key file")
    src.add_argument("--synthetic", action="store_true", help="generate a Zipf trace")
    b.add_argument("--flows", type=int, default=20000)
    b.add_argument("--length", type=int, default=2_000_000)
    b.add_argument("--zipf", type=float, default=1.1)
    b.add_argument("--ratios", type=_ratios, default=None,
                   help="comma-separated |A|/|S| values (default: 1,3,5,10,20,...,100)")
    b.add_argument("--fbits", type=int, default=8)
    b.add_argument("--occupancy", type=float, default=0.95)
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--filters", default=None, help="comma-separated subset of roster names")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--dataset", default=None)
    b.add_argument("--out", required=True)

    a = sub.add_parser("attack", help="run an adaptive adversary for several trials")
    a.add_argument("--variant", required=True, choices=["cyclic", "swapping", "cuckooing"])
    a.add_argument("--n", type=int, default=4096)
    a.add_argument("--k", type=int, default=2)
    a.add_argument("--b", type=int, default=None, help="bin size (default 1, or 2 for swapping)")
    a.add_argument("--s", type=int, default=1)
    a.add_argument("--fbits", type=int, default=4)
    a.add_argument("--gamma", type=float, default=None, help="load parameter (default b*k)")
    a.add_argument("--budget-multiplier", type=float, default=8)
    a.add_argument("--qd-factor", type=int, default=4)
    a.add_argument("--trials", type=int, default=50)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", default=None, help="transcript CSV")

    g = sub.add_parser("gen-trace", help="write a synthetic Zipf trace")
    g.add_argument("--flows", type=int, default=20000)
    g.add_argument("--length", type=int, default=2_000_000)
    g.add_argument("--zipf", type=float, default=1.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    u = sub.add_parser("audit", help="randomized no-false-negative and consistency fuzzing")
    u.add_argument("--seeds", type=int, default=20)
    u.add_argument("--ops", type=int, default=12500, help="operations per (filter, seed)")
    u.add_argument("--seed", type=int, default=0)
    return p


def cmd_bench(args) -> int:
    if args.trace:
        trace = parse_trace(args.trace)
        dataset = args.dataset or args.trace
    else:
        trace = generate_zipf_trace(ZipfConfig(args.flows, args.length, args.zipf, args.seed))
        dataset = args.dataset or f"zipf{args.zipf}"
    roster = equal_space_roster(args.fbits)
    if args.filters:
        wanted = args.filters.split(",")
        unknown = set(wanted) - {s.name for s in roster}
        if unknown:
            raise ParameterError(f"unknown filters: {', '.join(sorted(unknown))}")
        roster = [s for s in roster if s.name in wanted]
    if args.ratios is None:
        ratios = [r for r in DEFAULT_RATIOS if trace.unique_count // (1 + r) >= 1]
        if not ratios:
            raise ParameterError("trace too small for any default ratio")
    else:
        ratios = args.ratios
    rows = []
    for r in ratios:
        plan = build_experiment(trace, r, dataset)
        rows.extend(run_experiment(plan, roster, args.trials, args.seed, args.occupancy))
        log.info("ratio %s: %s", r, ", ".join(
            f"{s.name}={mean_fp_rate(rows, s.name, r):.5f}" for s in roster))
    with open(args.out, "w", newline="") as fh:
        write_results(rows, fh)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_attack(args) -> int:
    kind = "round_robin" if args.variant == "cuckooing" else args.variant
    b = args.b if args.b is not None else (2 if kind == "swapping" else 1)
    cfg = AttackConfig(kind, n=args.n, k=args.k, b=b, f=args.fbits, s=args.s, gamma=args.gamma,
                       budget_multiplier=args.budget_multiplier, qd_factor=args.qd_factor)
    trials = run_attack_trials(cfg, args.trials, args.seed)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_transcript(trials, fh)
    wins = sum(t.win for t in trials)
    print(f"win rate: {wins / len(trials):.4f} ({wins}/{len(trials)})")
    print(f"mean queries_used: {np.mean([t.outcome.queries_used for t in trials]):.1f}")
    return 0


def cmd_gen_trace(args) -> int:
    trace = generate_zipf_trace(ZipfConfig(args.flows, args.length, args.zipf, args.seed))
    with open(args.out, "wb") as fh:
        fh.write(b"# zipf exponent=%g flows=%d length=%d seed=%d\n"
                 % (args.zipf, args.flows, args.length, args.seed))
        trace.write(fh)
    print(f"wrote {len(trace)} records ({trace.unique_count} unique) to {args.out}")
    return 0


def cmd_audit(args) -> int:
    reports = fuzz_suite(range(args.seed, args.seed + args.seeds), args.ops)
    print(summarize(reports))
    bad = [r for r in reports if not r.ok]
    for r in bad:
        print(f"FAIL {r.filter} seed={r.seed}: {r.false_negatives} false negatives")
    return 1 if bad else 0


COMMANDS = {"bench": cmd_bench, "attack": cmd_attack, "gen-trace": cmd_gen_trace,
            "audit": cmd_audit}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"acf: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"acf: parameter error: {exc}", file=sys.stderr)
        return 2
    except (ContractViolation, ConsistencyError, ConstructionError, BudgetError) as exc:
        print(f"acf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
