"""
Greedy reduction of learned constraints.

A literal is dropped when the shorter constraint survives two checks:

1. Skolem witness: the remaining body is asserted over fresh constants, the
   input predicates are opened up over a bounded universe, and the encoding
   must become unsatisfiable within a conflict budget.
2. Oracle battery: on every tiny validation instance, adding the shorter
   constraint leaves the stable models unchanged.

Adequacy of the bounded universe is not proven; the battery catches the
cases where it is too small to refute a wrong drop.
"""

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from oracle.stable_models import check_equivalence
from stage1_program.syntax import (
    Atom, AtomKind, ChoiceElement, Constant, Literal, Program, Rule, Term, Variable,
    evaluate_builtin, is_ground_term,
)
from stage1_program.transform import canonicalise_constraint
from stage3_solving.cdnl_solver import SolveLimits, SolveStatus, solve
from stage4_constraints.emitter import LearnedConstraint, augment_encoding, is_safe
from utils.config import Config
from utils.errors import OracleCapacityError
from utils.log import get_logger

logger = get_logger(__name__)

SKOLEM_PREFIX = "sk"
DOMAIN_PREDICATE = "skolem_domain"

Instance = Set[Atom]


@dataclass(frozen=True)
class SkolemTest:
    """Outcome of one bounded unsatisfiability check."""

    # True: unsatisfiable, False: a model exists, None: budget or setup failure
    unsat: Optional[bool]
    conflicts: int = 0
    reason: str = ""
    exhausted: bool = False


def _skolem_names(count: int, taken: Set[Term]) -> List[Constant]:
    names: List[Constant] = []
    index = 1
    while len(names) < count:
        candidate = Constant(f"{SKOLEM_PREFIX}{index:03d}")
        if candidate not in taken:
            names.append(candidate)
        index += 1
    return names


def skolemise(body: Sequence[Literal], taken: Set[Term] = frozenset()) -> Optional[Dict[str, Term]]:
    """
    Map every variable of ``body`` to a fresh constant so that all builtins hold.

    Variables equated by ``=`` share a constant; the order builtins fix the
    order of the constants. Returns None when no such naming exists.
    """
    order: Dict[str, int] = {}
    for literal in body:
        for name in literal.atom.variables():
            order.setdefault(name, len(order))

    graph = nx.DiGraph()
    graph.add_nodes_from(order)
    equal = nx.Graph()
    equal.add_nodes_from(order)
    for literal in body:
        atom = literal.atom
        if atom.kind is not AtomKind.BUILTIN:
            continue
        left, right = atom.args
        if not (isinstance(left, Variable) and isinstance(right, Variable)):
            continue
        if atom.predicate == "=":
            equal.add_edge(left.name, right.name)
        elif atom.predicate in ("<", "<="):
            graph.add_edge(left.name, right.name)
        elif atom.predicate in (">", ">="):
            graph.add_edge(right.name, left.name)

    representative: Dict[str, str] = {}
    for component in nx.connected_components(equal):
        leader = min(component, key=order.__getitem__)
        for name in component:
            representative[name] = leader
    merged = nx.DiGraph()
    merged.add_nodes_from(set(representative.values()))
    merged.add_edges_from((representative[a], representative[b]) for a, b in graph.edges)
    try:
        ranked = list(nx.lexicographical_topological_sort(merged, key=order.__getitem__))
    except nx.NetworkXUnfeasible:
        return None

    constants = dict(zip(ranked, _skolem_names(len(ranked), set(taken))))
    mapping = {name: constants[representative[name]] for name in order}
    for literal in body:
        if literal.atom.kind is AtomKind.BUILTIN:
            holds = evaluate_builtin(literal.atom.substitute(mapping))
            if holds == literal.negated:
                return None
    return mapping


def skolem_program(body: Sequence[Literal], program: Program,
                   extra_constants: Optional[int] = None) -> Optional[Program]:
    """
    ``program`` plus the Skolemised ``body`` and choices over its input predicates.

    Positive literals become facts, NaF literals become constraints, and each
    input predicate is opened as a choice over the Skolem constants, the
    encoding's constants and ``extra_constants`` fresh ones.
    """
    extra = Config.SKOLEM_EXTRA_CONSTANTS if extra_constants is None else extra_constants
    taken = set(program.universe)
    mapping = skolemise(body, taken)
    if mapping is None:
        return None

    skolems = set(mapping.values())
    fresh = _skolem_names(len(skolems) + extra, taken)[len(skolems):]
    universe = sorted((t for t in taken | skolems | set(fresh) if is_ground_term(t)), key=str)

    rules = list(program.rules)
    next_id = program.next_rule_id

    def append(rule: Rule) -> None:
        nonlocal next_id
        rules.append(replace(rule, id=next_id))
        next_id += 1

    for term in universe:
        append(Rule(-1, head=Atom(DOMAIN_PREDICATE, (term,))))
    for name, arity in sorted(program.input_predicates):
        variables = tuple(Variable(f"X{i}") for i in range(arity))
        append(Rule(-1, choice=(ChoiceElement(Atom(name, variables)),), is_choice=True,
                    body=tuple(Literal(Atom(DOMAIN_PREDICATE, (v,))) for v in variables)))
    for literal in body:
        if literal.atom.kind is AtomKind.BUILTIN:
            continue
        atom = literal.atom.substitute(mapping)
        if literal.negated:
            append(Rule(-1, body=(Literal(atom),)))
        else:
            append(Rule(-1, head=atom))
    return program.with_rules(rules)


def skolem_unsat(body: Sequence[Literal], program: Program, conflict_budget: Optional[int] = None,
                 extra_constants: Optional[int] = None, seed: Optional[int] = None) -> SkolemTest:
    """Bounded check that no stable model can violate the constraint ``:- body``."""
    budget = Config.REDUCTION_CONFLICT_BUDGET if conflict_budget is None else conflict_budget
    if budget <= 0:
        return SkolemTest(None, 0, "conflict budget exhausted", exhausted=True)
    extended = skolem_program(body, program, extra_constants)
    if extended is None:
        return SkolemTest(None, 0, "builtins cannot be satisfied by fresh constants")
    # hat bodies decided true leave the opened input atoms false, keeping candidate worlds small
    report = solve(extended, (), SolveLimits(max_conflicts=budget, target_answer_sets=1),
                   seed=seed, sign_preference="T")
    if report.status is SolveStatus.UNSAT:
        return SkolemTest(True, report.conflicts)
    if report.status is SolveStatus.SAT:
        return SkolemTest(False, report.conflicts, "bounded program has a model")
    return SkolemTest(None, report.conflicts, "conflict budget exhausted", exhausted=True)


def oracle_battery(program: Program, body: Sequence[Literal], battery: Iterable[Instance],
                   atom_cap: Optional[int] = None, workers: Optional[int] = None) -> Tuple[bool, int]:
    """
    Check that adding ``:- body`` keeps the stable models of every instance.

    Returns (all equal, number of instances checked); instances above the
    oracle cap are skipped.
    """
    augmented = augment_encoding(program, [Rule(-1, body=tuple(body))])
    instances = list(battery)

    def check(facts: Instance) -> Optional[bool]:
        try:
            return bool(check_equivalence(program, augmented, facts, atom_cap=atom_cap))
        except OracleCapacityError:
            return None

    workers = workers or Config.BENCH_WORKERS
    if workers > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(check, instances))
    else:
        outcomes = [check(facts) for facts in instances]
    checked = [o for o in outcomes if o is not None]
    return all(checked), len(checked)


def _drop_order(body: Sequence[Literal]) -> List[int]:
    """Positions of ``body`` by descending count of their predicate, then position."""
    counts = Counter((l.atom.predicate, l.atom.arity) for l in body)
    return sorted(range(len(body)), key=lambda i: (-counts[(body[i].atom.predicate, body[i].atom.arity)], i))


def reduce_constraint(constraint: LearnedConstraint, program: Program, battery: Iterable[Instance] = (),
                      validation_budget: Optional[int] = None, atom_cap: Optional[int] = None,
                      extra_constants: Optional[int] = None, workers: Optional[int] = None,
                      seed: Optional[int] = None) -> LearnedConstraint:
    """
    Drop literals of ``constraint`` one at a time while both checks pass.

    Args:
        constraint: emitted, safe constraint
        program: encoding the constraint was learned on
        battery: fact sets of tiny validation instances
        validation_budget: total conflicts for all Skolem checks
        atom_cap: oracle cap
        extra_constants: fresh constants beyond the Skolem ones
        workers: threads for the oracle battery
        seed: solver seed for the Skolem checks

    Returns:
        the reduced constraint (``reduced_from`` set when shorter), or the
        input itself when nothing could be dropped; ``partial`` marks an
        early stop on the budget
    """
    budget = Config.REDUCTION_CONFLICT_BUDGET if validation_budget is None else validation_budget
    battery = list(battery)
    if not battery:
        logger.warning("No validation instances; reduction relies on the Skolem check alone")

    body = list(constraint.body)
    partial = False
    for position in _drop_order(constraint.body):
        literal = constraint.body[position]
        candidate = [l for l in body if l != literal]
        if not candidate or not is_safe(candidate):
            continue
        test = skolem_unsat(candidate, program, budget, extra_constants, seed)
        budget -= test.conflicts
        if test.exhausted:
            partial = True
            logger.info("Reduction budget exhausted while trying to drop %s", literal)
            break
        if not test.unsat:
            logger.debug("Keeping %s: %s", literal, test.reason)
            continue
        equal, checked = oracle_battery(program, candidate, battery, atom_cap, workers)
        if not equal:
            logger.debug("Keeping %s: oracle found a lost answer set", literal)
            continue
        if battery and not checked:
            logger.warning("All validation instances exceed the oracle cap; dropping %s on the Skolem check", literal)
        logger.info("Dropped %s from %s", literal, constraint.text)
        body = candidate

    if len(body) == len(constraint.body):
        return replace(constraint, partial=partial) if partial else constraint
    return LearnedConstraint(canonicalise_constraint(body).body, constraint.uip, constraint.class_key,
                             constraint.violations, reduced_from=constraint, partial=partial)
