"""
Command-line entry point for the conflict generalisation toolkit.

Subcommands: solve | learn | reduce | gen-hcp | gen-3cc | bench
Exit codes: 0 success, 1 UNSAT (solve), 2 usage error, 3 limit hit.
"""

import argparse
import json
import os
import sys
from typing import List, Optional

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from utils.config import Config
from utils.errors import AspError, GroundingExplosionError
from stage1_program.parser import load_facts, load_program
from stage2_grounding.grounder import ground_program
from stage3_solving.cdnl_solver import CdnlSolver, SolveLimits, SolveStatus
from stage3_solving.generaliser import ConflictGeneraliser, merge_classes
from stage4_constraints.emitter import UIP_MODES, load_constraint_report, rank_and_emit
from stage4_constraints.reducer import reduce_constraint
from stage5_benchmark.benchmark_pipeline import BenchmarkPipeline, summarize
from stage5_benchmark.instance_generator import (
    FAMILIES, InstanceGenerator, gen_3cc, gen_hcp, validation_battery,
)

EXIT_OK, EXIT_UNSAT, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return number


def _non_negative(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError("must not be negative")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="app.py", description="Non-ground conflict generalisation for ASP")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, learning=False):
        p.add_argument("--input-pred", action="append", default=[], metavar="p/n",
                       help="declare an input predicate (repeatable)")
        p.add_argument("--num-answer-sets", type=_non_negative, default=Config.NUM_ANSWER_SETS,
                       help="answer sets to search for, 0 for all (default %(default)s)")
        p.add_argument("--max-conflicts", type=_positive, default=50 if learning else None)
        p.add_argument("--max-time", type=float, default=None, metavar="S")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--restarts", action="store_true", help="Luby restarts")
        p.add_argument("--report", metavar="FILE")
        p.add_argument("--verbose-trace", action="store_true")

    def learning_flags(p):
        p.add_argument("--uip", choices=UIP_MODES, default="both")
        p.add_argument("--resolution-lookback", type=_positive, default=Config.RESOLUTION_LOOKBACK)
        p.add_argument("--top-k", type=_non_negative, default=Config.TOP_K)
        p.add_argument("--emit-constraints", metavar="FILE")

    solve_p = sub.add_parser("solve", help="search for answer sets")
    solve_p.add_argument("encoding")
    solve_p.add_argument("instances", nargs="*")
    common(solve_p)
    solve_p.add_argument("--no-support", action="store_true", help="omit support nogoods")
    solve_p.add_argument("--json", action="store_true", help="print the report as JSON")
    solve_p.add_argument("--dump-nogoods", metavar="FILE", help="write the nogood store after search")

    learn_p = sub.add_parser("learn", help="learn non-ground constraints")
    learn_p.add_argument("encoding")
    learn_p.add_argument("instances", nargs="+")
    common(learn_p, learning=True)
    learning_flags(learn_p)

    reduce_p = sub.add_parser("reduce", help="reduce emitted constraints")
    reduce_p.add_argument("encoding")
    reduce_p.add_argument("constraints", help="constraint report file")
    reduce_p.add_argument("--input-pred", action="append", default=[], metavar="p/n")
    reduce_p.add_argument("--family", choices=FAMILIES, help="validation battery family")
    reduce_p.add_argument("--battery", nargs="*", default=[], help="validation instance files")
    reduce_p.add_argument("--max-conflicts", type=_positive, default=Config.REDUCTION_CONFLICT_BUDGET,
                          help="total conflict budget of the Skolem checks")
    reduce_p.add_argument("--seed", type=int, default=None)
    reduce_p.add_argument("--emit-constraints", metavar="FILE")

    hcp_p = sub.add_parser("gen-hcp", help="generate a house configuration instance")
    for name in ("persons", "things", "cabinets", "rooms"):
        hcp_p.add_argument(name, type=_positive)
    hcp_p.add_argument("--seed", type=int, default=0)
    hcp_p.add_argument("--out", metavar="FILE")

    cc_p = sub.add_parser("gen-3cc", help="generate a 3-colouring chain instance")
    cc_p.add_argument("length", type=_positive)
    cc_p.add_argument("--unsat", action="store_true", help="close the chain into a non-3-colourable graph")
    cc_p.add_argument("--seed", type=int, default=0)
    cc_p.add_argument("--out", metavar="FILE")

    bench_p = sub.add_parser("bench", help="learn, reduce and re-solve a family")
    bench_p.add_argument("encoding")
    bench_p.add_argument("instances", nargs="*")
    common(bench_p, learning=True)
    learning_flags(bench_p)
    bench_p.add_argument("--family", choices=FAMILIES)
    bench_p.add_argument("--generate", type=_positive, metavar="N", help="generate N instances of --family")
    bench_p.add_argument("--train", nargs="*", default=None, help="training instances (default: smallest)")
    bench_p.add_argument("--no-reduce", action="store_true")
    bench_p.add_argument("--workers", type=_positive, default=Config.BENCH_WORKERS)
    bench_p.add_argument("--output-dir", default=Config.RESULTS_DIR)
    return parser


def _limits(args, max_conflicts: Optional[int]) -> SolveLimits:
    return SolveLimits(max_conflicts=max_conflicts, max_time=args.max_time,
                       target_answer_sets=args.num_answer_sets)


def _trace_sink(enabled: bool):
    if not enabled:
        return None
    return lambda line: print(line, file=sys.stderr)


def _section(title: str) -> None:
    print("\n" + "="*80)
    print(title)
    print("-"*80)


def _trace_line(event) -> str:
    if event[0] == "learn":
        return "learn {" + ", ".join(event[1]) + "}"
    return " ".join(event)


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)


def cmd_solve(args) -> int:
    program = load_program(args.encoding, args.input_pred)
    ground = ground_program(program, load_facts(args.instances), with_support=not args.no_support)
    solver = CdnlSolver(ground, seed=args.seed, restarts=args.restarts, record_trace=args.verbose_trace)
    report = solver.solve(_limits(args, args.max_conflicts))

    if args.verbose_trace:
        for event in report.trace:
            print(_trace_line(event), file=sys.stderr)
        if report.incomplete_propagation_risk:
            print("% incomplete propagation risk: positive loops are checked on total assignments only",
                  file=sys.stderr)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        for index, model in enumerate(report.answer_sets, 1):
            print(f"Answer: {index}")
            print(" ".join(sorted(str(a) for a in model)))
        print(report.status.value)
        print(f"Conflicts: {report.conflicts}  Decisions: {report.decisions}  "
              f"Grounding: {report.grounding_time:.3f}s  Solving: {report.solving_time:.3f}s")
    if args.dump_nogoods:
        with open(args.dump_nogoods, "w", encoding="utf-8") as f:
            f.write(solver.store.dump())
    if args.report:
        _write_json(args.report, report.to_dict())

    if report.status is SolveStatus.UNSAT:
        return EXIT_UNSAT
    if report.status is SolveStatus.LIMIT:
        return EXIT_LIMIT
    return EXIT_OK


def cmd_learn(args) -> int:
    program = load_program(args.encoding, args.input_pred)
    _section("LEARNING")
    tables = []
    for instance in args.instances:
        generaliser = ConflictGeneraliser(lookback=args.resolution_lookback, trace=_trace_sink(args.verbose_trace))
        ground = ground_program(program, load_facts([instance]))
        report = CdnlSolver(ground, generaliser, seed=args.seed, restarts=args.restarts).solve(
            _limits(args, args.max_conflicts))
        print(f"✓ {os.path.basename(instance)}: {report.status.value}, {report.conflicts} conflicts, "
              f"{len(generaliser.classes)} class(es)")
        tables.append(generaliser.classes)

    classes = merge_classes(tables)
    emitted = rank_and_emit(classes, program, args.top_k, args.emit_constraints, uip=args.uip)
    _section(f"CONSTRAINTS ({len(classes)} class(es))")
    print(emitted.text, end="")
    if args.emit_constraints:
        print(f"✓ Constraints saved to: {args.emit_constraints}")
    if args.report:
        _write_json(args.report, [
            {"key": str(c.key), "violations": c.violation_count,
             "first_uip": {str(k): v for k, v in c.first_uip.items()},
             "last_uip": {str(k): v for k, v in c.last_uip.items()}}
            for c in sorted(classes.values(), key=lambda c: (-c.violation_count, str(c.key)))])
    return EXIT_OK


def cmd_reduce(args) -> int:
    program = load_program(args.encoding, args.input_pred)
    battery = [load_facts([path]) for path in args.battery]
    if args.family:
        battery.extend(validation_battery(args.family, seed=args.seed or 0))

    lines = []
    partial = False
    for constraint in load_constraint_report(args.constraints):
        reduced = reduce_constraint(constraint, program, battery, args.max_conflicts, seed=args.seed)
        partial = partial or reduced.partial
        marker = "✓" if reduced.reduced_from is not None else "-"
        print(f"{marker} {constraint.text}\n  -> {reduced.text}{' (partial)' if reduced.partial else ''}")
        lines.append(f"{reduced.provenance}, reduced{' (partial)' if reduced.partial else ''}")
        lines.append(reduced.text)
    if args.emit_constraints:
        with open(args.emit_constraints, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + ("\n" if lines else ""))
        print(f"✓ Reduced constraints saved to: {args.emit_constraints}")
    return EXIT_LIMIT if partial else EXIT_OK


def _emit_text(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
        print(f"✓ Instance saved to: {out}")
    else:
        sys.stdout.write(text)


def cmd_gen_hcp(args) -> int:
    _emit_text(gen_hcp(args.persons, args.things, args.cabinets, args.rooms, args.seed), args.out)
    return EXIT_OK


def cmd_gen_3cc(args) -> int:
    _emit_text(gen_3cc(args.length, not args.unsat, args.seed), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    instances = list(args.instances)
    if args.generate:
        if not args.family:
            raise argparse.ArgumentTypeError("--generate needs --family")
        instances.extend(InstanceGenerator().family(args.family, args.generate, args.seed or 0))
    battery = validation_battery(args.family, seed=args.seed or 0) if args.family else []

    pipeline = BenchmarkPipeline(
        args.encoding, args.input_pred, family=args.family or "", max_conflicts=args.max_conflicts,
        lookback=args.resolution_lookback, top_k=args.top_k, uip=args.uip, reduce=not args.no_reduce,
        battery=battery, limits=SolveLimits(max_time=args.max_time, target_answer_sets=args.num_answer_sets),
        workers=args.workers, seed=args.seed, output_dir=args.output_dir)
    result = pipeline.run(instances, args.train)

    _section("CONSTRAINTS")
    print(result.report.text or "% no constraints learned\n", end="")
    if args.emit_constraints:
        result.report.write(args.emit_constraints)
    _section("SUMMARY")
    print(summarize(result.records).to_string(index=False))
    failed = result.records[result.records["note"].fillna("") != ""]
    if len(failed):
        print(f"✗ {len(failed)} record(s) failed, see the note column")
    print(f"✓ {len(result.records)} record(s) saved to: {os.path.join(args.output_dir, 'records.csv')}")
    if args.report:
        result.records.to_csv(args.report, index=False)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "learn": cmd_learn,
    "reduce": cmd_reduce,
    "gen-hcp": cmd_gen_hcp,
    "gen-3cc": cmd_gen_3cc,
    "bench": cmd_bench,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv`` and run one subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        return COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE
    except GroundingExplosionError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_LIMIT
    except (AspError, ValueError, OSError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(cli_main())
