import random

import pytest

from stage1_program.parser import input_directives, parse_facts, parse_program
from stage1_program.syntax import AtomKind, Constant, Literal, hat_atom
from stage1_program.transform import (
    canonicalise_constraint, pretty_print_constraint, translate_choice_rules,
)
from utils.errors import (
    InputPredicateError, InternalAtomError, ProgramSyntaxError, UnsafeRuleError,
    UnsupportedConstructError,
)


def test_house_encoding_parses(house):
    assert len(house.rules) == 14
    assert sum(r.is_choice for r in house.rules) == 2
    assert house.input_predicates == {("personTOthing", 2), ("cabinetDomain", 1), ("roomDomain", 1)}


def test_input_directives_and_extra_declarations():
    text = "% #input edge/2.\nreach(X) :- edge(X,Y).\n"
    assert input_directives(text) == {("edge", 2)}
    program = parse_program(text, ["start/1"])
    assert program.input_predicates == {("edge", 2), ("start", 1)}


@pytest.mark.parametrize("text, construct", [
    ("a :- #count { X : p(X) } > 2.", "aggregate"),
    ("#minimize { X : p(X) }.", "optimisation statement"),
    (":~ p(X). [1]", "weak constraint"),
    ("a | b.", "disjunctive head"),
    ("p(1..3).", "interval term"),
    ("q(Y) :- p(X), Y = X + 1.", "arithmetic term"),
])
def test_unsupported_constructs_are_rejected(text, construct):
    with pytest.raises(UnsupportedConstructError) as info:
        parse_program(text)
    assert info.value.construct == construct
    assert info.value.line == 1


def test_choice_bounds_are_rejected():
    with pytest.raises(UnsupportedConstructError):
        parse_program("1 { a; b } 1.")


def test_comment_text_is_not_scanned():
    program = parse_program("% a | b and 1..3 are fine here\na.\n")
    assert len(program.rules) == 1


def test_unsafe_rule():
    with pytest.raises(UnsafeRuleError):
        parse_program("p(X) :- not q(X).")
    with pytest.raises(UnsafeRuleError):
        parse_program(":- p(X), X < Y.")


def test_input_predicate_in_head():
    with pytest.raises(InputPredicateError):
        parse_program("edge(a,b).", ["edge/2"])


def test_syntax_error_reports_position():
    with pytest.raises(ProgramSyntaxError) as info:
        parse_program("a :- b\nc.")
    assert info.value.line is not None


def test_instance_files_hold_facts_only():
    facts = parse_facts("link(n1,n2). link(n2,n3).")
    assert len(facts) == 2
    assert all(a.args[0] in (Constant("n1"), Constant("n2")) for a in facts)
    with pytest.raises(ProgramSyntaxError):
        parse_facts("a :- b.")


def test_choice_translation_adds_hat_rules(house):
    translated = translate_choice_rules(house)
    assert not any(r.is_choice for r in translated.rules)
    assert len(translated.rules) == 16
    cabinet = [r for r in translated.rules if r.choice_source == 1]
    assert len(cabinet) == 2
    chosen, hat = cabinet
    assert chosen.head.predicate == "cabinetTOthing"
    assert chosen.body[-1].negated and chosen.body[-1].atom == hat_atom(chosen.head)
    assert hat.head.kind is AtomKind.HAT
    assert hat.body[-1].negated and hat.body[-1].atom == chosen.head


def test_canonical_form_ignores_renaming_and_order():
    first = parse_program(":- p(X,Y), q(Y), not r(X), X < Y.").rules[0]
    second = parse_program(":- X1 < Y1, not r(X1), q(Y1), p(X1,Y1).").rules[0]
    assert canonicalise_constraint(first) == canonicalise_constraint(second)
    assert canonicalise_constraint(first).text == ":- p(V1,V2), q(V2), not r(V1), V1<V2."


def test_canonical_form_merges_duplicates():
    rule = parse_program(":- p(X), p(X), q(X).").rules[0]
    assert len(canonicalise_constraint(rule).body) == 2


def test_negated_builtin_prints_as_complement():
    rule = parse_program(":- p(X,Y), X < Y.").rules[0]
    body = (rule.body[0], Literal(rule.body[1].atom, negated=True))
    assert pretty_print_constraint(body) == ":- p(X,Y), X>=Y."


def test_internal_atoms_never_print(house):
    translated = translate_choice_rules(house)
    chosen = next(r for r in translated.rules if r.choice_source == 1)
    with pytest.raises(InternalAtomError):
        pretty_print_constraint(chosen.body)


@pytest.mark.parametrize("body", [
    # a path and a cycle of interchangeable edges
    "link(A,B), link(B,C), link(C,D), link(D,E), link(E,F), link(F,G), link(G,A)",
    "link(A,B), link(B,C), link(C,A), link(D,E), link(E,F), link(F,D), link(G,H), link(H,A)",
    "link(A,B), link(C,D), link(E,F), link(G,H), link(I,J), link(K,L), link(M,N), link(A,N), A < M",
])
def test_canonical_form_ignores_order_of_many_ties(body):
    literals = list(parse_program(f":- {body}.").rules[0].body)
    rng = random.Random(11)
    forms = set()
    for _ in range(20):
        rng.shuffle(literals)
        forms.add(canonicalise_constraint(literals).text)
    assert len(forms) == 1


def test_canonical_form_tells_apart_same_shape_bodies():
    path = parse_program(":- link(A,B), link(B,C), link(C,D).").rules[0]
    star = parse_program(":- link(A,B), link(A,C), link(A,D).").rules[0]
    assert canonicalise_constraint(path) != canonicalise_constraint(star)
