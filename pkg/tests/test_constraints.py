import io

import pytest

from stage1_program.parser import parse_program
from stage1_program.syntax import Atom, Literal, SignedLiteral, Variable, body_atom, builtin_atom, hat_atom
from stage1_program.transform import canonicalise_constraint
from stage2_grounding.grounder import ground_program
from stage3_solving.cdnl_solver import CdnlSolver, SolveLimits
from stage3_solving.generaliser import ConflictGeneraliser
from stage4_constraints.emitter import (
    InternalLiteralReplacer, LearnedConstraint, augment_encoding, rank_and_emit,
    read_constraint_report, replace_internal_literals,
)
from stage4_constraints.reducer import oracle_battery, reduce_constraint, skolem_unsat, skolemise
from stage5_benchmark.instance_generator import validation_battery
from utils.errors import InternalAtomError, IrreplaceableLiteralError

X, Y = Variable("X"), Variable("Y")

FIRST_UIP = (":- roomTOcabinet(R,C), cabinetTOthing(C,T1), personTOthing(P1,T1), "
             "cabinetTOthing(C,T2), personTOthing(P2,T2), P1 < P2.")
REDUCED = ":- cabinetTOthing(C,T1), personTOthing(P1,T1), cabinetTOthing(C,T2), personTOthing(P2,T2), P1 < P2."


def canonical(text):
    return canonicalise_constraint(parse_program(text).rules[0])


def text(nogood, program, **options):
    return InternalLiteralReplacer(program, **options).replace(nogood).text


def test_hat_literal_flips_onto_its_atom():
    program = parse_program("{ q(X) } :- p(X).")
    nogood = (SignedLiteral(Atom("p", (X,))), SignedLiteral(hat_atom(Atom("q", (X,))), False))
    assert text(nogood, program) == ":- p(V1), q(V1)."


def test_true_body_atom_splices_the_rule_body():
    program = parse_program("r(X) :- p(X), not s(X).")
    nogood = (SignedLiteral(body_atom(0, (X,))), SignedLiteral(Atom("t", (X,))))
    assert text(nogood, program) == ":- p(V1), not s(V1), t(V1)."
    assert text(nogood, program, prefer_head=True) == ":- r(V1), t(V1)."


def test_false_body_atom_becomes_false_head():
    program = parse_program("r(X) :- p(X), not s(X).")
    nogood = (SignedLiteral(Atom("t", (X,))), SignedLiteral(body_atom(0, (X,)), False))
    assert text(nogood, program) == ":- not r(V1), t(V1)."


def test_false_body_atom_falls_back_to_a_body_literal():
    program = parse_program("r(X) :- p(X), not s(X).")
    assert text((SignedLiteral(body_atom(0, (X,)), False),), program) == ":- s(V1)."


def test_false_builtin_uses_the_complement_operator():
    program = parse_program("p(1,2).")
    nogood = (SignedLiteral(Atom("p", (X, Y))), SignedLiteral(builtin_atom("<", X, Y), False))
    assert text(nogood, program) == ":- p(V1,V2), V1>=V2."


def test_unsafe_replacements_are_refused():
    program = parse_program("r(X) :- p(X).")
    with pytest.raises(IrreplaceableLiteralError):
        replace_internal_literals((SignedLiteral(body_atom(0, (X,)), False),), program)


def test_augment_appends_constraints(house):
    constraint = LearnedConstraint(canonical(REDUCED).body)
    augmented = augment_encoding(house, [constraint])
    assert len(augmented.rules) == len(house.rules) + 1
    assert augmented.rules[-1].is_constraint
    assert augmented.rules[-1].id == house.next_rule_id
    internal = LearnedConstraint((Literal(body_atom(0, (X,))),))
    with pytest.raises(InternalAtomError):
        augment_encoding(house, [internal])


def test_report_lists_provenance_and_reads_back(house, crowded_house):
    generaliser = ConflictGeneraliser()
    CdnlSolver(ground_program(house, crowded_house), generaliser).solve(SolveLimits(max_conflicts=50))
    out = io.StringIO()
    report = rank_and_emit(generaliser.classes, house, top_k=5, out=out, uip="both")
    assert len(report) >= 2
    assert all(c.body and not any(l.atom.is_internal for l in c.body) for c in report.constraints)
    assert canonical(FIRST_UIP) in {c.canonical for c in report.constraints}
    written = out.getvalue()
    assert "% class violations:" in written and "uip: first" in written and "uip: last" in written
    assert [c.text for c in read_constraint_report(written)] == [c.text for c in report.constraints]


def test_unknown_uip_mode(house):
    with pytest.raises(ValueError):
        rank_and_emit({}, house, uip="middle")


def test_skolem_constants_follow_the_builtins():
    body = canonical(":- p(X,Y,Z), Y < X, Z < Y.").body
    mapping = skolemise(body)
    assert [str(mapping[v]) for v in ("V3", "V2", "V1")] == ["sk001", "sk002", "sk003"]
    assert skolemise(canonical(":- p(X,Y), X < Y, Y < X.").body) is None
    merged = skolemise(canonical(":- p(X,Y), X = Y.").body)
    assert len(set(merged.values())) == 1


def test_skolem_check_separates_entailed_bodies(house):
    assert skolem_unsat(canonical(REDUCED).body, house).unsat is True
    weaker = ":- roomTOcabinet(R,C), personTOthing(P1,T1), cabinetTOthing(C,T2), personTOthing(P2,T2), P1 < P2."
    assert skolem_unsat(canonical(weaker).body, house).unsat is False


def test_oracle_battery_rejects_a_lossy_constraint(house):
    battery = validation_battery("hcp")
    assert oracle_battery(house, canonical(REDUCED).body, battery) == (True, len(battery))
    lossy = ":- cabinetTOthing(C,T1), personTOthing(P1,T1), cabinetTOthing(C,T2), personTOthing(P2,T2)."
    equal, checked = oracle_battery(house, canonical(lossy).body, battery)
    assert not equal and checked == len(battery)


def test_first_uip_constraint_reduces_to_the_short_form(house):
    learned = LearnedConstraint(canonical(FIRST_UIP).body, "first", violations=3)
    reduced = reduce_constraint(learned, house, validation_battery("hcp"))
    assert reduced.canonical == canonical(REDUCED)
    assert reduced.reduced_from is learned
    assert not reduced.partial
    assert reduced.uip == "first" and reduced.violations == 3


def test_reduction_budget_marks_partial(house):
    learned = LearnedConstraint(canonical(FIRST_UIP).body)
    reduced = reduce_constraint(learned, house, (), validation_budget=1)
    assert reduced.partial
