from stage1_program.parser import parse_facts, parse_program
from stage1_program.syntax import Atom, Constant, SignedLiteral, Variable
from stage1_program.transform import canonicalise_constraint, canonicalise_nogood
from stage2_grounding.grounder import ground_program
from stage2_grounding.nogoods import NoGoodKind, NoGoodStore
from stage2_grounding.substitution import EMPTY
from stage3_solving.assignment import Assignment, Truth
from stage3_solving.cdnl_solver import CdnlSolver, SolveLimits
from stage3_solving.generaliser import (
    ConflictClass, ConflictGeneraliser, ResolutionState, compute_witness, find_next_literal_for_resolution,
    merge_classes, rank_classes, resolve_pair, unify_duplicate_literals,
)
from stage4_constraints.emitter import replace_internal_literals
from utils.errors import IrreplaceableLiteralError
from stage5_benchmark.instance_generator import gen_3cc, gen_hcp

ONE_PERSON_PER_ROOM = ":- personTOroom(P1,R), personTOroom(P2,R), P1 < P2."
FIRST_UIP = (":- roomTOcabinet(R,C), cabinetTOthing(C,T1), personTOthing(P1,T1), "
             "cabinetTOthing(C,T2), personTOthing(P2,T2), P1 < P2.")
LAST_UIP = (":- roomTOcabinet(R,C), roomDomain(R), cabinet(C), cabinetTOthing(C,T1), personTOthing(P1,T1), "
            "cabinetTOthing(C,T2), personTOthing(P2,T2), P1 < P2.")


def canonical(text):
    return canonicalise_constraint(parse_program(text).rules[0])


def learn(program, facts, lookback=1, max_conflicts=50):
    generaliser = ConflictGeneraliser(lookback=lookback, check_invariants=True)
    solver = CdnlSolver(ground_program(program, facts), generaliser, check_invariants=True)
    report = solver.solve(SolveLimits(max_conflicts=max_conflicts, target_answer_sets=0))
    return generaliser, report


def test_witness_maps_twin_onto_ground():
    x = Variable("X")
    ground = (SignedLiteral(Atom("p", (Constant("a"),))),)
    twin = (SignedLiteral(Atom("p", (x,))),)
    assert compute_witness(ground, twin).apply_literal(twin[0]) == ground[0]
    assert compute_witness(ground, (SignedLiteral(Atom("p", (x,)), False),)) is None


def test_house_classes_hold_both_uip_constraints(house, crowded_house):
    generaliser, report = learn(house, crowded_house)
    assert generaliser.witness_failures == 0
    key = canonical(ONE_PERSON_PER_ROOM)
    assert key in generaliser.classes
    cls = generaliser.classes[key]
    emitted = set()
    for nogood in cls.learned:
        try:
            emitted.add(replace_internal_literals(nogood, house).canonical)
        except IrreplaceableLiteralError:
            pass
    assert canonical(FIRST_UIP) in emitted
    assert canonical(LAST_UIP) in emitted
    assert replace_internal_literals(cls.best_first, house).canonical == canonical(FIRST_UIP)


def test_witness_invariant_on_colouring_runs(three_cc):
    total = 0
    for length, lookback in ((3, 1), (4, 2), (6, 2)):
        facts = parse_facts(gen_3cc(length, satisfiable=False, seed=length))
        generaliser, report = learn(three_cc, facts, lookback, max_conflicts=200)
        assert generaliser.witness_failures == 0
        total += generaliser.witness_checks
    assert total > 0


def test_witness_invariant_on_house_runs(house):
    for persons in (2, 3):
        facts = parse_facts(gen_hcp(persons, 2, persons, persons, seed=persons))
        generaliser, _ = learn(house, facts, max_conflicts=100)
        assert generaliser.witness_failures == 0


def test_learned_nogoods_carry_their_twin(three_cc):
    _, report = learn(three_cc, parse_facts(gen_3cc(3, satisfiable=False)))
    learned = [p for p in report.learned if p.has_twin]
    assert learned
    assert all(p.twin_instantiates() for p in learned)


def test_class_merge_and_ranking():
    a = canonicalise_nogood((SignedLiteral(Atom("a")),))
    b = canonicalise_nogood((SignedLiteral(Atom("b")),))
    first = {a: ConflictClass(a, violation_count=2), b: ConflictClass(b, violation_count=5)}
    second = {a: ConflictClass(a, violation_count=4)}
    first[a].first_uip[b] += 1
    merged = merge_classes([first, second])
    assert merged[a].violation_count == 6
    assert merged[a].best_first == b
    assert [c.key for c in rank_classes(merged)] == [a, b]


def lit(name, term, truth=True):
    return SignedLiteral(Atom(name, (term,)), truth)


def test_next_literal_is_latest_implied_within_lookback():
    a = Constant("a")
    store = NoGoodStore()
    reason = store.add((lit("q", a), lit("r", a)), NoGoodKind.STATIC)
    p, q, r = (store.atom_id(Atom(name, (a,))) for name in "pqr")
    assignment = Assignment(store)
    assignment.new_level()
    assignment.assign(p, Truth.T, None)
    assignment.new_level()
    assignment.assign(r, Truth.T, None)
    assignment.assign(q, Truth.F, reason.id)

    omega = (lit("p", a), lit("q", a, False), lit("r", a))
    assert find_next_literal_for_resolution(omega, assignment) == lit("q", a, False)
    assert find_next_literal_for_resolution(omega, assignment, skip=[lit("q", a, False)]) is None


def test_resolution_step_keeps_variables_linked():
    a, x, y = Constant("a"), Variable("X"), Variable("Y")
    store = NoGoodStore()
    antecedent = store.add((lit("q", a), lit("r", a)), NoGoodKind.STATIC, (lit("q", y), lit("r", y)))
    omega = (lit("p", a), lit("q", a, False))
    Omega = (lit("p", x), lit("q", x, False))
    state = ResolutionState(omega, Omega, compute_witness(omega, Omega))

    resolved, _, _ = resolve_pair(state, lit("q", a, False), antecedent)
    assert resolved.omega == (lit("p", a), lit("r", a))
    assert resolved.witness_holds()
    first, second = resolved.Omega
    assert first.atom.args == second.atom.args


def test_resolution_merges_shared_literals():
    a, x, y, z = Constant("a"), Variable("X"), Variable("Y"), Variable("Z")
    store = NoGoodStore()
    antecedent = store.add((lit("q", a), lit("p", a)), NoGoodKind.STATIC, (lit("q", y), lit("p", z)))
    omega = (lit("p", a), lit("q", a, False))
    Omega = (lit("p", x), lit("q", x, False))
    state = ResolutionState(omega, Omega, compute_witness(omega, Omega))

    resolved, _, _ = resolve_pair(state, lit("q", a, False), antecedent)
    assert resolved.omega == (lit("p", a),)
    assert len(resolved.Omega) == 1 and resolved.witness_holds()


def test_duplicate_twins_are_unified():
    a, x, y = Constant("a"), Variable("X"), Variable("Y")
    subst = unify_duplicate_literals((lit("p", x),), (lit("p", y),), (lit("p", a),), (lit("p", a),), EMPTY)
    assert subst.apply_literal(lit("p", x)) == subst.apply_literal(lit("p", y))


def test_resolving_against_learned_twin_keeps_witness():
    a, b, c = Constant("a"), Constant("b"), Constant("c")
    g1, g2, y, z = Variable("_G1"), Variable("_G2"), Variable("Y"), Variable("Z")
    store = NoGoodStore()
    antecedent = store.add((SignedLiteral(Atom("q", (a, c))), lit("p", a, False)), NoGoodKind.STATIC,
                           (SignedLiteral(Atom("q", (y, z))), lit("p", y, False)))
    omega = (lit("p", a), lit("r", b))
    Omega = (lit("p", g2), lit("r", g1))
    state = ResolutionState(omega, Omega, compute_witness(omega, Omega))

    resolved, counter, _ = resolve_pair(state, lit("p", a), antecedent, 0)
    assert resolved.omega == (lit("r", b), SignedLiteral(Atom("q", (a, c))))
    assert resolved.witness_holds()
    assert counter > 2


def test_fresh_names_survive_across_conflicts(house, crowded_house):
    generaliser, _ = learn(house, crowded_house)
    assert generaliser.witness_failures == 0
    assert generaliser.fresh_counter > 0


def test_generalisation_trace_lines():
    a, x, y = Constant("a"), Variable("X"), Variable("Y")
    store = NoGoodStore()
    reason = store.add((lit("q", a), lit("r", a)), NoGoodKind.STATIC, (lit("q", y), lit("r", y)))
    violated = store.add((lit("p", a), lit("q", a, False)), NoGoodKind.STATIC, (lit("p", x), lit("q", x, False)))
    p, q, r = (store.atom_id(Atom(name, (a,))) for name in "pqr")
    assignment = Assignment(store)
    assignment.new_level()
    assignment.assign(p, Truth.T, None)
    assignment.new_level()
    assignment.assign(r, Truth.T, None)
    assignment.assign(q, Truth.F, reason.id)

    lines = []
    generaliser = ConflictGeneraliser(lookback=1, check_invariants=True, trace=lines.append)
    result = generaliser.analyze_conflict(violated, assignment, store)
    assert lines == ["step 1: resolve on F q(a) | {T p(a), T r(a)} | {T p(X), T r(X)} | {_G1->X}"]
    assert result.steps == 1
    assert len(result.nonground) == 2
    assert generaliser.fresh_counter == 1
