"""
Stage 5: Benchmark Pipeline
Learns constraints on training instances, emits and reduces them, then
re-solves every instance under each encoding variant.

Phases:
- learn: conflict generalisation on the training instance(s) under a conflict budget
- emit/reduce: ranked constraint report, reduced constraints
- re-solve: original, first-uip, last-uip and reduced encodings on all instances
"""

import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Set

import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from stage1_program.parser import load_facts, load_program
from stage1_program.syntax import Atom, Program
from stage2_grounding.grounder import ground_program
from stage3_solving.cdnl_solver import CdnlSolver, SolveLimits, SolveStatus, solve
from stage3_solving.generaliser import ConflictGeneraliser, merge_classes
from stage4_constraints.emitter import ConstraintReport, LearnedConstraint, augment_encoding, rank_and_emit
from stage4_constraints.reducer import reduce_constraint
from utils.config import Config
from utils.errors import AspError
from utils.log import get_logger

logger = get_logger(__name__)

VARIANTS = ("original", "first-uip", "last-uip", "reduced")

RECORD_COLUMNS = ["instance", "family", "variant", "status", "conflicts", "decisions",
                  "grounding_time", "solving_time", "answer_sets", "note"]


@dataclass
class BenchmarkRecord:
    instance: str
    family: str
    variant: str
    status: str
    conflicts: int = 0
    decisions: int = 0
    grounding_time: float = 0.0
    solving_time: float = 0.0
    answer_sets: int = 0
    note: str = ""

    def __post_init__(self):
        if self.status not in {s.value for s in SolveStatus}:
            raise ValueError(f"bad status {self.status!r}")
        if min(self.conflicts, self.decisions, self.answer_sets) < 0:
            raise ValueError("counters must not be negative")


@dataclass
class PipelineResult:
    report: ConstraintReport
    reduced: List[LearnedConstraint] = field(default_factory=list)
    variants: Dict[str, Program] = field(default_factory=dict)
    records: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=RECORD_COLUMNS))


def solve_instance(program: Program, instance: str, variant: str, family: str = "",
                   limits: Optional[SolveLimits] = None, seed: Optional[int] = None) -> BenchmarkRecord:
    """Solve one instance file; failures become LIMIT rows with the error in ``note``."""
    name = os.path.basename(instance)
    try:
        facts = load_facts([instance])
        ground = ground_program(program, facts)
        report = CdnlSolver(ground, seed=seed).solve(limits)
    except AspError as e:
        logger.warning("%s (%s) failed: %s", name, variant, e)
        return BenchmarkRecord(name, family, variant, SolveStatus.LIMIT.value, note=str(e))
    record = BenchmarkRecord(name, family, variant, report.status.value, report.conflicts, report.decisions,
                             report.grounding_time, report.solving_time, len(report.answer_sets))
    logger.info("%s [%s] %s: %d conflicts, %d answer set(s)", name, variant, record.status,
                record.conflicts, record.answer_sets)
    return record


def cactus_table(records: pd.DataFrame) -> str:
    """Per variant: instances solved against cumulative solving time (plain text)."""
    lines = ["variant\tsolved\tcumulative_time"]
    solved = records[records["status"] != SolveStatus.LIMIT.value]
    for variant in [v for v in VARIANTS if v in set(records["variant"])]:
        times = sorted(solved.loc[solved["variant"] == variant, "solving_time"])
        total = 0.0
        for count, seconds in enumerate(times, 1):
            total += seconds
            lines.append(f"{variant}\t{count}\t{total:.6f}")
    return "\n".join(lines) + "\n"


def summarize(records: pd.DataFrame) -> pd.DataFrame:
    """
    Per family and variant: median conflicts and, over instances SAT under the
    original encoding, the share where the variant needed strictly fewer conflicts.
    """
    rows = []
    original = records[records["variant"] == "original"].set_index("instance")
    for (family, variant), group in records.groupby(["family", "variant"], sort=True):
        sat = group[group["instance"].map(lambda i: i in original.index and original.at[i, "status"] == "SAT")]
        fewer = sum(int(row.conflicts) < int(original.at[row.instance, "conflicts"]) for row in sat.itertuples())
        rows.append({
            "family": family,
            "variant": variant,
            "instances": len(group),
            "median_conflicts": float(group["conflicts"].median()) if len(group) else 0.0,
            "fewer_conflicts_share": fewer / len(sat) if len(sat) else 0.0,
        })
    return pd.DataFrame(rows, columns=["family", "variant", "instances", "median_conflicts", "fewer_conflicts_share"])


class BenchmarkPipeline:
    """Learn, select, reduce and re-solve for one encoding and one instance family."""

    def __init__(self, encoding: str, input_preds: Optional[Sequence[str]] = None, family: str = "",
                 max_conflicts: int = 50, lookback: Optional[int] = None, top_k: Optional[int] = None,
                 uip: str = "both", reduce: bool = True, battery: Sequence[Set[Atom]] = (),
                 limits: Optional[SolveLimits] = None, workers: Optional[int] = None,
                 seed: Optional[int] = None, output_dir: Optional[str] = None):
        """
        Initialize the benchmark pipeline.

        Args:
            encoding: path of the encoding
            input_preds: extra ``name/arity`` input declarations
            family: label written to every record
            max_conflicts: conflict budget of the learning phase
            lookback: resolution lookback for generalisation
            top_k: number of conflict classes to emit
            uip: which UIP constraints to emit (first, last, both, all)
            reduce: run the reduction phase
            battery: tiny instances validating the reductions
            limits: limits for the re-solve phase
            workers: threads for the re-solve phase
            seed: solver seed
            output_dir: where records.csv, cactus.txt and the report go
        """
        self.encoding = encoding
        self.program = load_program(encoding, input_preds)
        self.family = family or os.path.splitext(os.path.basename(encoding))[0]
        self.max_conflicts = max_conflicts
        self.lookback = lookback
        self.top_k = Config.TOP_K if top_k is None else top_k
        self.uip = uip
        self.reduce = reduce
        self.battery = list(battery)
        self.limits = limits or SolveLimits()
        self.workers = workers or Config.BENCH_WORKERS
        self.seed = seed
        self.output_dir = output_dir or Config.RESULTS_DIR
        os.makedirs(self.output_dir, exist_ok=True)

    def learn(self, training: Sequence[str]) -> ConstraintReport:
        """Phase 1 and the emit half of phase 2."""
        tables = []
        for instance in training:
            generaliser = ConflictGeneraliser(lookback=self.lookback)
            limits = SolveLimits(max_conflicts=self.max_conflicts, target_answer_sets=self.limits.target_answer_sets)
            report = solve(self.program, load_facts([instance]), limits, generaliser=generaliser, seed=self.seed)
            logger.info("Learned on %s: %d conflicts, %d class(es)", os.path.basename(instance),
                        report.conflicts, len(generaliser.classes))
            tables.append(generaliser.classes)
        classes = merge_classes(tables)
        if not classes:
            return ConstraintReport()
        return rank_and_emit(classes, self.program, self.top_k, uip=self.uip)

    def reduce_all(self, constraints: Sequence[LearnedConstraint]) -> List[LearnedConstraint]:
        """The reduce half of phase 2, first-UIP constraints only."""
        reduced: List[LearnedConstraint] = []
        seen: Set[str] = set()
        for constraint in constraints:
            if constraint.uip != "first":
                continue
            result = reduce_constraint(constraint, self.program, self.battery, seed=self.seed)
            if result.text not in seen:
                seen.add(result.text)
                reduced.append(result)
        return reduced

    def variants(self, report: ConstraintReport, reduced: Sequence[LearnedConstraint]) -> Dict[str, Program]:
        programs = {"original": self.program}
        first = [c for c in report.constraints if c.uip == "first"]
        last = [c for c in report.constraints if c.uip == "last"]
        if first:
            programs["first-uip"] = augment_encoding(self.program, first)
        if last:
            programs["last-uip"] = augment_encoding(self.program, last)
        if reduced:
            programs["reduced"] = augment_encoding(self.program, reduced)
        return programs

    def resolve(self, instances: Sequence[str], programs: Dict[str, Program]) -> pd.DataFrame:
        """Phase 3: every instance under every variant."""
        jobs = [(variant, instance) for instance in instances for variant in programs]

        def run(job):
            variant, instance = job
            return solve_instance(programs[variant], instance, variant, self.family, self.limits, self.seed)

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                records = list(pool.map(run, jobs))
        else:
            records = [run(job) for job in jobs]
        return pd.DataFrame([asdict(r) for r in records], columns=RECORD_COLUMNS)

    def run(self, instances: Sequence[str], training: Optional[Sequence[str]] = None) -> PipelineResult:
        """
        Run all phases.

        Args:
            instances: instance files to re-solve
            training: training instances; defaults to the smallest instance file,
                an empty list skips learning

        Returns:
            PipelineResult with the report, the reduced constraints and the records
        """
        started = time.perf_counter()
        if training is None:
            training = [min(instances, key=os.path.getsize)] if instances else []

        report = self.learn(training) if training else ConstraintReport()
        reduced = self.reduce_all(report.constraints) if self.reduce and report.constraints else []
        programs = self.variants(report, reduced)
        records = self.resolve(instances, programs)

        self.save(report, reduced, records)
        logger.info("Pipeline finished in %.1fs: %d record(s)", time.perf_counter() - started, len(records))
        return PipelineResult(report, reduced, programs, records)

    def save(self, report: ConstraintReport, reduced: Sequence[LearnedConstraint], records: pd.DataFrame) -> None:
        records.to_csv(os.path.join(self.output_dir, "records.csv"), index=False)
        with open(os.path.join(self.output_dir, "cactus.txt"), "w", encoding="utf-8") as f:
            f.write(cactus_table(records))
        summarize(records).to_csv(os.path.join(self.output_dir, "summary.csv"), index=False)
        report.write(os.path.join(self.output_dir, "constraints.asp"))
        if reduced:
            with open(os.path.join(self.output_dir, "reduced.asp"), "w", encoding="utf-8") as f:
                for constraint in reduced:
                    f.write(f"{constraint.provenance}, reduced{' (partial)' if constraint.partial else ''}\n")
                    f.write(f"{constraint.text}\n")


def run_pipeline(encoding: str, instances: Sequence[str], training: Optional[Sequence[str]] = None,
                 **options) -> PipelineResult:
    """Convenience wrapper around BenchmarkPipeline(encoding, **options).run(...)."""
    return BenchmarkPipeline(encoding, **options).run(instances, training)


def main():
    """Benchmark the bundled 3CC encoding on a small generated family."""
    from stage5_benchmark.instance_generator import InstanceGenerator, validation_battery

    print("\nRunning 3CC benchmark...")
    print("=" * 80 + "\n")

    instances = InstanceGenerator().three_cc_family(10, min_length=5, max_length=20)
    result = run_pipeline(Config.encoding_path("3cc.asp"), instances, family="3cc", lookback=2,
                          battery=validation_battery("3cc"))
    print(result.report.text or "(no constraints learned)")
    print(summarize(result.records).to_string(index=False))
    print(f"\n✓ Records saved to: {os.path.join(Config.RESULTS_DIR, 'records.csv')}")


if __name__ == "__main__":
    main()
