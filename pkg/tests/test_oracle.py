import pytest

from oracle.stable_models import check_equivalence, enumerate_stable_models
from stage1_program.parser import parse_facts, parse_program
from utils.errors import OracleCapacityError


def models(text, facts=""):
    found = enumerate_stable_models(parse_program(text), parse_facts(facts))
    return {frozenset(str(a) for a in m) for m in found}


def test_single_fact():
    assert models("a.") == {frozenset({"a"})}


def test_even_negative_loop_has_two_models():
    assert models("a :- not b. b :- not a.") == {frozenset({"a"}), frozenset({"b"})}


def test_odd_negative_loop_has_none():
    assert models("a :- not a.") == set()


def test_positive_loop_is_not_self_supporting():
    assert models("a :- b. b :- a. c :- not a.") == {frozenset({"c"})}


def test_constraints_remove_models():
    assert models("a :- not b. b :- not a. :- a.") == {frozenset({"b"})}
    assert models(":- not a.") == set()


def test_choice_rules_enumerate_subsets():
    found = models("{ p(X) } :- d(X).", "d(1). d(2).")
    assert len(found) == 4
    assert frozenset({"d(1)", "d(2)"}) in found


def test_three_colouring_of_one_block(three_cc, short_chain):
    assert len(enumerate_stable_models(three_cc, short_chain)) == 6


def test_equivalence_witness():
    first = parse_program("a :- not b. b :- not a.")
    second = parse_program("a :- not b. b :- not a. :- a.")
    result = check_equivalence(first, second)
    assert not result
    assert {str(x) for x in result.witness} == {"a"}
    assert result.witness_side == "first"
    assert check_equivalence(first, first)


def test_projection():
    first = parse_program("a :- not b. b :- not a. c :- a.")
    second = parse_program("a :- not b. b :- not a.")
    assert not check_equivalence(first, second)
    assert check_equivalence(first, second, projection=[("a", 0), ("b", 0)])


def test_capacity():
    with pytest.raises(OracleCapacityError):
        enumerate_stable_models(parse_program("{ p(X) } :- d(X)."), parse_facts("d(1). d(2). d(3)."), atom_cap=4)
