import random

import pytest

from oracle.stable_models import enumerate_stable_models
from stage1_program.parser import parse_facts, parse_program
from stage2_grounding.grounder import ground_program
from stage3_solving.cdnl_solver import CdnlSolver, SolveLimits, SolveStatus, luby, solve
from stage3_solving.generaliser import ConflictGeneraliser
from stage5_benchmark.instance_generator import gen_3cc, gen_hcp

ALL = SolveLimits(target_answer_sets=0)


def answer_sets(program, facts=()):
    report = solve(program, facts, ALL)
    return report, {frozenset(m) for m in report.answer_sets}


def random_program(rng, atoms=5, rules=7):
    names = [chr(ord("a") + i) for i in range(atoms)]
    lines = []
    for _ in range(rules):
        body = []
        for name in rng.sample(names, rng.randint(0, 3)):
            body.append(name if rng.random() < 0.5 else f"not {name}")
        if rng.random() < 0.15 and body:
            lines.append(f":- {', '.join(body)}.")
        else:
            head = rng.choice(names)
            lines.append(f"{head} :- {', '.join(body)}." if body else f"{head}.")
    return "\n".join(lines)


def test_luby_sequence():
    assert [luby(i) for i in range(1, 10)] == [1, 1, 2, 1, 1, 2, 4, 1, 1]


def test_limits_are_validated():
    with pytest.raises(ValueError):
        SolveLimits(max_conflicts=0)
    with pytest.raises(ValueError):
        SolveLimits(target_answer_sets=-1)


def test_even_loop_enumerates_both_models():
    report, found = answer_sets(parse_program("a :- not b. b :- not a."))
    assert report.status is SolveStatus.SAT
    assert {frozenset(str(a) for a in m) for m in found} == {frozenset({"a"}), frozenset({"b"})}


def test_unsat_at_level_zero():
    report, found = answer_sets(parse_program("a. :- a."))
    assert report.status is SolveStatus.UNSAT
    assert not found


def test_positive_loop_is_rejected_by_stability_check():
    report, found = answer_sets(parse_program("a :- b. b :- a. a :- not c. c :- not a."))
    assert {frozenset(str(x) for x in m) for m in found} == {frozenset({"a", "b"}), frozenset({"c"})}
    assert report.incomplete_propagation_risk


@pytest.mark.parametrize("seed", range(25))
def test_agrees_with_oracle_on_random_programs(seed):
    program = parse_program(random_program(random.Random(seed)))
    _, found = answer_sets(program)
    assert found == enumerate_stable_models(program)


def test_agrees_with_oracle_on_small_colouring(three_cc):
    facts = parse_facts(gen_3cc(1))
    report, found = answer_sets(three_cc, facts)
    assert len(found) == 6
    assert found == enumerate_stable_models(three_cc, facts)


def test_agrees_with_oracle_on_small_house(house):
    facts = parse_facts(gen_hcp(1, 2, 2, 1))
    _, found = answer_sets(house, facts)
    assert found == enumerate_stable_models(house, facts)
    assert found


def test_closed_chain_is_unsat(three_cc):
    report = solve(three_cc, parse_facts(gen_3cc(1, satisfiable=False)), ALL)
    assert report.status is SolveStatus.UNSAT
    assert report.conflicts > 0


def test_conflict_budget_gives_limit(three_cc):
    report = solve(three_cc, parse_facts(gen_3cc(12, satisfiable=False)), SolveLimits(max_conflicts=1))
    assert report.status is SolveStatus.LIMIT
    assert report.conflicts == 1


def test_answer_set_target_stops_early(three_cc, short_chain):
    report = solve(three_cc, short_chain, SolveLimits(target_answer_sets=2))
    assert report.status is SolveStatus.SAT
    assert len(report.answer_sets) == 2


def test_learning_leaves_the_search_untouched(three_cc):
    ground = ground_program(three_cc, parse_facts(gen_3cc(4, satisfiable=False, seed=3)))
    plain = CdnlSolver(ground, seed=7, record_trace=True).solve(ALL)
    learning = CdnlSolver(ground, ConflictGeneraliser(), seed=7, record_trace=True).solve(ALL)
    assert plain.trace == learning.trace
    assert plain.status is learning.status is SolveStatus.UNSAT
    assert learning.classes


def test_report_dictionary(three_cc, short_chain):
    data = solve(three_cc, short_chain, SolveLimits(target_answer_sets=1), learn_mode=True).to_dict()
    assert data["status"] == "SAT"
    assert len(data["answer_sets"]) == 1
    assert {"conflicts", "decisions", "backjumps", "classes", "learned"} <= set(data)


def test_first_decision_sets_a_body_atom_false():
    program = parse_program("{ q(X) } :- p(X).", ["p/1"])
    ground = ground_program(program, parse_facts("p(1)."))
    report = CdnlSolver(ground, record_trace=True).solve(SolveLimits(target_answer_sets=1))
    kind, atom, truth = report.trace[0]
    assert kind == "decide"
    assert atom.startswith("_beta")
    assert truth == "F"
    assert "q(1)" in {str(a) for a in report.answer_sets[0]}
