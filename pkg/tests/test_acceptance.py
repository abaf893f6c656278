"""Desk-scale acceptance runs: full learning, soundness and benchmark passes."""

import random

import pytest

from oracle.stable_models import check_equivalence, enumerate_stable_models
from stage1_program.parser import parse_facts, parse_program
from stage2_grounding.grounder import ground_program
from stage3_solving.cdnl_solver import CdnlSolver, SolveLimits, SolveStatus, solve
from stage3_solving.generaliser import ConflictGeneraliser, merge_classes
from stage4_constraints.emitter import augment_encoding, rank_and_emit
from stage5_benchmark.benchmark_pipeline import run_pipeline, summarize
from stage5_benchmark.instance_generator import (
    InstanceGenerator, gen_3cc, gen_hcp, gen_random_graph, validation_battery,
)
from utils.config import Config
from utils.errors import OracleCapacityError

pytestmark = pytest.mark.slow

REDUCED_HOUSE = ":- cabinetTOthing(C,T1), personTOthing(P1,T1), cabinetTOthing(C,T2), personTOthing(P2,T2), P1 < P2."


def learn_classes(program, instances, lookback, max_conflicts=50):
    tables, conflicts, checks = [], 0, 0
    for facts in instances:
        generaliser = ConflictGeneraliser(lookback=lookback, check_invariants=True)
        report = CdnlSolver(ground_program(program, facts), generaliser, check_invariants=True).solve(
            SolveLimits(max_conflicts=max_conflicts, target_answer_sets=0))
        assert generaliser.witness_failures == 0
        conflicts += report.conflicts
        checks += generaliser.witness_checks
        tables.append(generaliser.classes)
    return merge_classes(tables), conflicts, checks


def small_house_instances(count, seed=0):
    rng = random.Random(seed)
    shapes = [(1, 1, 1, 1), (1, 2, 1, 1), (1, 2, 2, 1), (2, 1, 1, 1), (2, 1, 2, 1), (2, 1, 1, 2), (2, 1, 2, 2)]
    return [parse_facts(gen_hcp(*rng.choice(shapes), seed=rng.randrange(1000))) for _ in range(count)]


def small_graphs(count, seed=0):
    rng = random.Random(seed)
    graphs = [parse_facts(gen_3cc(1, sat)) for sat in (True, False)]
    while len(graphs) < count:
        text = gen_random_graph(rng.randint(3, 6), 0.5, rng.randrange(1000))
        if text:
            graphs.append(parse_facts(text))
    return graphs


def assert_sound(program, constraints, instances):
    augmented = augment_encoding(program, constraints)
    checked = 0
    for facts in instances:
        try:
            result = check_equivalence(program, augmented, facts)
        except OracleCapacityError:
            continue
        assert result, f"constraint set loses or adds answer set {sorted(map(str, result.witness))}"
        checked += 1
    assert checked


def test_witness_invariant_over_learning_runs(house, three_cc):
    houses = [parse_facts(gen_hcp(p, 2, p, p, seed=p)) for p in range(2, 7)]
    chains = [parse_facts(gen_3cc(length, satisfiable=length % 3 != 0, seed=length)) for length in range(3, 23)]
    _, house_conflicts, house_checks = learn_classes(house, houses, lookback=1, max_conflicts=100)
    _, chain_conflicts, chain_checks = learn_classes(three_cc, chains, lookback=2, max_conflicts=100)
    assert house_checks and chain_checks
    assert house_conflicts + chain_conflicts > 0


def test_house_constraints_are_sound(house, crowded_house):
    classes, _, _ = learn_classes(house, [crowded_house], lookback=1)
    report = rank_and_emit(classes, house, top_k=5, uip="all")
    assert report.constraints
    reduced = parse_program(REDUCED_HOUSE).rules
    assert_sound(house, list(report.constraints) + list(reduced), small_house_instances(20))


def test_colouring_constraints_are_sound(three_cc):
    training = [parse_facts(gen_3cc(length, satisfiable=False, seed=length)) for length in (3, 4, 5)]
    classes, _, _ = learn_classes(three_cc, training, lookback=2)
    report = rank_and_emit(classes, three_cc, top_k=5, uip="both")
    assert report.constraints
    assert_sound(three_cc, report.constraints, small_graphs(20))


@pytest.mark.parametrize("seed", range(100))
def test_solver_matches_oracle_on_random_programs(seed):
    rng = random.Random(1000 + seed)
    names = [chr(ord("a") + i) for i in range(rng.randint(3, 7))]
    lines = []
    for _ in range(rng.randint(3, 10)):
        body = [n if rng.random() < 0.5 else f"not {n}" for n in rng.sample(names, rng.randint(0, 3))]
        if body and rng.random() < 0.2:
            lines.append(f":- {', '.join(body)}.")
        elif body:
            lines.append(f"{rng.choice(names)} :- {', '.join(body)}.")
        else:
            lines.append(f"{rng.choice(names)}.")
    program = parse_program("\n".join(lines))
    report = solve(program, (), SolveLimits(target_answer_sets=0))
    assert set(report.answer_sets) == enumerate_stable_models(program)


def test_benchmark_keeps_every_status(tmp_path, three_cc):
    instances = InstanceGenerator(str(tmp_path / "instances")).three_cc_family(6, min_length=5, max_length=10,
                                                                               unsat_every=3)
    unsat = [p for p in instances if p.endswith("_unsat.asp")]
    result = run_pipeline(Config.encoding_path("3cc.asp"), instances, training=unsat[:1], family="3cc",
                          lookback=2, reduce=False, limits=SolveLimits(target_answer_sets=1),
                          output_dir=str(tmp_path / "out"))
    records = result.records
    assert len(result.variants) > 1
    for instance, group in records.groupby("instance"):
        assert group["status"].nunique() == 1
        if instance.endswith("_unsat.asp"):
            assert (group["status"] == SolveStatus.UNSAT.value).all()


def test_learned_colouring_constraints_cut_conflicts(tmp_path):
    instances = InstanceGenerator(str(tmp_path / "instances")).three_cc_family(20, min_length=5, max_length=30,
                                                                               unsat_every=5)
    unsat = [p for p in instances if p.endswith("_unsat.asp")]
    result = run_pipeline(Config.encoding_path("3cc.asp"), instances, training=unsat[:2], family="3cc",
                          lookback=2, battery=validation_battery("3cc"),
                          limits=SolveLimits(target_answer_sets=1), output_dir=str(tmp_path / "out"))
    assert {"original", "first-uip", "reduced"} <= set(result.variants)
    for _, group in result.records.groupby("instance"):
        assert group["status"].nunique() == 1

    summary = summarize(result.records).set_index("variant")
    assert summary.at["reduced", "fewer_conflicts_share"] >= 0.8
    assert summary.at["first-uip", "median_conflicts"] < summary.at["original", "median_conflicts"]
