"""
Brute-force stable-model enumeration for tiny programs.

A candidate is fixed by guessing the truth of every atom that occurs under
negation as failure; the candidate is stable when the least model of the
reduct reproduces the guess and satisfies every constraint. The search
branches over the guessed atoms and prunes with the least models of the
surely-applicable and possibly-applicable rules.
"""

from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterable, List, Optional, Set, Tuple

from stage1_program.syntax import Atom, AtomKind, Program
from stage2_grounding.grounder import GroundRuleRecord, ground_program
from utils.config import Config
from utils.errors import OracleCapacityError
from utils.log import get_logger

logger = get_logger(__name__)

Interpretation = FrozenSet[Atom]


def _least_model(rules: List[GroundRuleRecord], facts: Set[Atom],
                 applicable: Callable[[GroundRuleRecord], bool]) -> Set[Atom]:
    model = set(facts)
    active = [r for r in rules if applicable(r)]
    changed = True
    while changed:
        changed = False
        for rule in active:
            if rule.head not in model and all(p in model for p in rule.positive):
                model.add(rule.head)
                changed = True
    return model


def _violates(constraint: GroundRuleRecord, model: Set[Atom]) -> bool:
    return all(p in model for p in constraint.positive) and not any(n in model for n in constraint.negative)


def enumeration_base(records: Iterable[GroundRuleRecord]) -> List[Atom]:
    """Atoms occurring under negation as failure, in first-occurrence order."""
    seen = {}
    for record in records:
        for atom in record.negative:
            seen.setdefault(atom)
    return list(seen)


def enumerate_stable_models(program: Program, facts: Iterable[Atom] = (),
                            atom_cap: Optional[int] = None) -> Set[Interpretation]:
    """
    All stable models of ``program`` with ``facts``, projected to classical atoms.

    Raises:
        OracleCapacityError: more than ``atom_cap`` atoms occur under negation
    """
    cap = atom_cap if atom_cap is not None else Config.ORACLE_ATOM_CAP
    ground = ground_program(program, facts)
    rules = [r for r in ground.records if r.head is not None]
    constraints = [r for r in ground.records if r.head is None]
    fixed = set(ground.facts)
    base = [a for a in enumeration_base(ground.records) if a not in fixed]
    if len(base) > cap:
        raise OracleCapacityError(f"base too large: {len(base)} atoms under negation, cap is {cap}")
    logger.debug("enumerating over %d atoms", len(base))

    models: Set[Interpretation] = set()

    def search(index: int, true_set: Set[Atom], false_set: Set[Atom]) -> None:
        lower = _least_model(rules, fixed, lambda r: all(n in false_set for n in r.negative))
        upper = _least_model(rules, fixed, lambda r: not any(n in true_set or n in fixed for n in r.negative))
        if true_set - upper or false_set & lower:
            return
        if any(all(p in lower for p in c.positive) and not any(n in upper for n in c.negative)
               for c in constraints):
            return
        if index == len(base):
            if not any(_violates(c, lower) for c in constraints):
                models.add(frozenset(a for a in lower if a.kind is AtomKind.CLASSICAL))
            return
        atom = base[index]
        search(index + 1, true_set | {atom}, false_set)
        search(index + 1, true_set, false_set | {atom})

    search(0, set(), set())
    return models


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    witness: Optional[Interpretation] = None
    # "first" or "second": the program whose models contain the witness
    witness_side: Optional[str] = None

    def __bool__(self) -> bool:
        return self.equivalent


def _project(models: Set[Interpretation], predicates: Optional[Set[Tuple[str, int]]]) -> Set[Interpretation]:
    if predicates is None:
        return models
    return {frozenset(a for a in m if a.signature in predicates) for m in models}


def check_equivalence(first: Program, second: Program, facts: Iterable[Atom] = (),
                      projection: Optional[Iterable[Tuple[str, int]]] = None,
                      atom_cap: Optional[int] = None) -> EquivalenceResult:
    """
    Compare the (projected) stable models of two programs on the same facts.

    Returns an EquivalenceResult; when the sets differ, the witness is a
    model found on exactly one side.
    """
    facts = list(facts)
    predicates = set(projection) if projection is not None else None
    left = _project(enumerate_stable_models(first, facts, atom_cap), predicates)
    right = _project(enumerate_stable_models(second, facts, atom_cap), predicates)
    if left == right:
        return EquivalenceResult(True)
    only_left = sorted(left - right, key=lambda m: sorted(map(str, m)))
    if only_left:
        return EquivalenceResult(False, only_left[0], "first")
    only_right = sorted(right - left, key=lambda m: sorted(map(str, m)))
    return EquivalenceResult(False, only_right[0], "second")
