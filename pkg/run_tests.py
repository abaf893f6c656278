"""
Test Runner Script
Runs all stages sequentially on the bundled encodings to verify the complete pipeline.
"""

import os
import sys
import traceback

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from utils.config import Config


def main():
    """Run an end-to-end pass: generate, learn, reduce, re-solve."""
    print("="*80)
    print("CONFLICT GENERALISATION - COMPLETE PIPELINE TEST")
    print("="*80)
    print()

    Config.validate()
    instances_dir = os.path.join(Config.INSTANCES_DIR, "smoke")

    # Step 1: Generate instances
    print("STEP 1: Generating Instances")
    print("-"*80)

    try:
        from stage5_benchmark.instance_generator import InstanceGenerator, validation_battery

        generator = InstanceGenerator(instances_dir)
        hcp_paths = generator.hcp_family(3)
        cc_paths = generator.three_cc_family(5, min_length=3, max_length=12)
        print(f"✓ {len(hcp_paths)} HCP and {len(cc_paths)} 3CC instances in {instances_dir}")
    except Exception as e:
        print(f"✗ Error generating instances: {e}")
        return False

    # Step 2: Learn on a crowded house
    print("\n" + "="*80)
    print("STEP 2: Learning Constraints (HCP)")
    print("-"*80)

    try:
        from stage1_program.parser import load_program, parse_facts
        from stage3_solving.cdnl_solver import SolveLimits, solve
        from stage3_solving.generaliser import ConflictGeneraliser
        from stage4_constraints.emitter import rank_and_emit
        from stage5_benchmark.instance_generator import gen_hcp

        house = load_program(Config.encoding_path("house.asp"))
        generaliser = ConflictGeneraliser()
        report = solve(house, parse_facts(gen_hcp(2, 1, 1, 2)), SolveLimits(max_conflicts=50),
                       generaliser=generaliser)
        emitted = rank_and_emit(generaliser.classes, house, uip="both")
        print(f"✓ {report.status.value} after {report.conflicts} conflicts, "
              f"{len(generaliser.classes)} class(es), {len(emitted)} constraint(s)")
        print(emitted.text, end="")
    except Exception as e:
        print(f"✗ Error in learning: {e}")
        traceback.print_exc()
        return False

    # Step 3: Reduce the first-UIP constraints
    print("\n" + "="*80)
    print("STEP 3: Reducing Constraints (HCP)")
    print("-"*80)

    try:
        from stage4_constraints.reducer import reduce_constraint

        battery = validation_battery("hcp")
        for constraint in [c for c in emitted.constraints if c.uip == "first"]:
            reduced = reduce_constraint(constraint, house, battery)
            print(f"✓ {constraint.text}")
            print(f"  -> {reduced.text}{' (partial)' if reduced.partial else ''}")
    except Exception as e:
        print(f"✗ Error in reduction: {e}")
        traceback.print_exc()
        return False

    # Step 4: Benchmark the 3CC family
    print("\n" + "="*80)
    print("STEP 4: Benchmarking Encoding Variants (3CC)")
    print("-"*80)

    try:
        from stage5_benchmark.benchmark_pipeline import run_pipeline, summarize

        unsat = [p for p in cc_paths if p.endswith("_unsat.asp")]
        result = run_pipeline(Config.encoding_path("3cc.asp"), cc_paths, training=unsat[:1], family="3cc",
                              lookback=2, battery=validation_battery("3cc"),
                              limits=SolveLimits(target_answer_sets=1))
        print(summarize(result.records).to_string(index=False))

        statuses = result.records.groupby("instance")["status"].nunique()
        if (statuses > 1).any():
            print("✗ Encoding variants disagree on satisfiability")
            return False
        print(f"\n✓ {len(result.records)} record(s) saved to: {Config.RESULTS_DIR}")
    except Exception as e:
        print(f"✗ Error in benchmark: {e}")
        traceback.print_exc()
        return False

    # Summary
    print("\n" + "="*80)
    print("TEST SUMMARY")
    print("="*80)
    print("✓ All stages completed successfully!")
    print(f"\nResults saved to: {Config.RESULTS_DIR}")
    print("\nFiles created:")
    print("  - records.csv")
    print("  - summary.csv")
    print("  - cactus.txt")
    print("  - constraints.asp")
    print("\nFor the unit and acceptance suite:")
    print("  pytest")
    print("="*80)

    return True


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
