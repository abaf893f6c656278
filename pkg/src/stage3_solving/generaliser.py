"""
Conflict generalisation.

Conflict analysis runs resolution on the violated ground nogood and, in
lockstep, on its non-ground twin. Every time the ground resolvent has a single
literal on the conflict level, the pair (ground, non-ground) is collected; the
first collected pair belongs to the first UIP, the last one to the last UIP.
Non-ground nogoods are grouped into conflict classes keyed by the canonical
twin of the violated nogood.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple

from stage1_program.syntax import SignedLiteral
from stage1_program.transform import CanonicalConstraint, canonicalise_nogood
from stage2_grounding.nogoods import NoGoodPair, NoGoodStore, format_literals
from stage2_grounding.substitution import (
    EMPTY, Substitution, match, rename_apart, unify_literals,
)
from stage3_solving.assignment import Assignment, code_atom
from utils.config import Config
from utils.errors import GeneralisationError
from utils.log import get_logger

logger = get_logger(__name__)

Nogood = Tuple[SignedLiteral, ...]

FRESH_PREFIX = "_G"


def compute_witness(omega: Nogood, Omega: Nogood) -> Optional[Substitution]:
    """A substitution mapping Omega onto omega position by position, or None."""
    if len(omega) != len(Omega):
        return None
    bindings: Dict = {}
    for ground, twin in zip(omega, Omega):
        if ground.truth != twin.truth or ground.atom.kind is not twin.atom.kind:
            return None
        bindings = match(twin.atom, ground.atom, bindings)
        if bindings is None:
            return None
    return Substitution(bindings)


@dataclass(frozen=True)
class ResolutionState:
    omega: Nogood
    Omega: Nogood
    sigma_witness: Optional[Substitution]

    def witness_holds(self) -> bool:
        if self.sigma_witness is None or len(self.omega) != len(self.Omega):
            return False
        return all(self.sigma_witness.apply_literal(n) == g for g, n in zip(self.omega, self.Omega))


@dataclass
class GeneralisationResult:
    unsat: bool = False
    ground: List[Nogood] = field(default_factory=list)
    nonground: List[Nogood] = field(default_factory=list)
    witnesses: List[Substitution] = field(default_factory=list)
    steps: int = 0
    # a literal was skipped because its antecedent had no twin
    deviated: bool = False
    truncated: bool = False

    def add(self, state: ResolutionState) -> None:
        self.ground.append(state.omega)
        self.nonground.append(state.Omega)
        self.witnesses.append(state.sigma_witness)

    @property
    def first(self) -> Optional[Tuple[Nogood, Nogood, Substitution]]:
        if not self.ground:
            return None
        return self.ground[0], self.nonground[0], self.witnesses[0]

    @property
    def last(self) -> Optional[Tuple[Nogood, Nogood, Substitution]]:
        if not self.ground:
            return None
        return self.ground[-1], self.nonground[-1], self.witnesses[-1]


@dataclass
class ConflictClass:
    """Violations of one non-ground nogood and the constraints learned from them."""

    key: CanonicalConstraint
    violation_count: int = 0
    learned: Dict[CanonicalConstraint, int] = field(default_factory=dict)
    first_uip: Counter = field(default_factory=Counter)
    last_uip: Counter = field(default_factory=Counter)

    def add_learned(self, index: int, constraint: CanonicalConstraint) -> None:
        if constraint not in self.learned or index < self.learned[constraint]:
            self.learned[constraint] = index

    def ordered_learned(self) -> List[Tuple[int, CanonicalConstraint]]:
        """Learned non-ground nogoods, nearest to the conflict first."""
        return sorted(((i, c) for c, i in self.learned.items()), key=lambda item: (item[0], str(item[1])))

    @property
    def best_first(self) -> Optional[CanonicalConstraint]:
        return self.first_uip.most_common(1)[0][0] if self.first_uip else None

    @property
    def best_last(self) -> Optional[CanonicalConstraint]:
        return self.last_uip.most_common(1)[0][0] if self.last_uip else None

    def merge(self, other: "ConflictClass") -> None:
        self.violation_count += other.violation_count
        for constraint, index in other.learned.items():
            self.add_learned(index, constraint)
        self.first_uip.update(other.first_uip)
        self.last_uip.update(other.last_uip)


def merge_classes(tables: Iterable[Dict[CanonicalConstraint, ConflictClass]]) -> Dict[CanonicalConstraint, ConflictClass]:
    merged: Dict[CanonicalConstraint, ConflictClass] = {}
    for table in tables:
        for key, cls in table.items():
            merged.setdefault(key, ConflictClass(key)).merge(cls)
    return merged


def _merge_within(omega: Nogood, Omega: Nogood, subst: Substitution) -> Tuple[Nogood, Nogood, Substitution]:
    """Collapse repeated ground literals, unifying their twins."""
    first: Dict[SignedLiteral, int] = {}
    ground: List[SignedLiteral] = []
    twins: List[SignedLiteral] = []
    for g, n in zip(omega, Omega):
        if g in first:
            unified = unify_literals(n, twins[first[g]], subst)
            if unified is None:
                raise GeneralisationError(f"cannot unify duplicate twins {n} and {twins[first[g]]} of {g}")
            subst = unified
        else:
            first[g] = len(ground)
            ground.append(g)
            twins.append(n)
    return tuple(ground), tuple(subst.apply_literal(n) for n in twins), subst


def find_next_literal_for_resolution(omega: Nogood, assignment: Assignment, lookback: int = 1,
                                     skip: Iterable[SignedLiteral] = ()) -> Optional[SignedLiteral]:
    """
    The most recently assigned literal of ``omega`` that has an antecedent and
    lies within ``lookback`` levels of the current decision level.
    """
    floor = assignment.decision_level - lookback + 1
    skipped = set(skip)
    best, best_position = None, -1
    for literal in omega:
        if literal in skipped:
            continue
        code = assignment.literal_code(literal)
        if code is None:
            continue
        atom = code_atom(code)
        if assignment.antecedent[atom] is None or assignment.level[atom] < floor:
            continue
        if assignment.position[atom] > best_position:
            best, best_position = literal, assignment.position[atom]
    return best


def unify_duplicate_literals(Omega: Nogood, Omega_ant: Nogood, omega: Nogood, omega_ant: Nogood,
                             base: Substitution = EMPTY) -> Substitution:
    """
    Unify the twins of ground literals shared by ``omega`` and ``omega_ant``.

    Shared literals are visited in ascending position of ``omega``; the
    running unifier is extended at each step.
    """
    positions: Dict[SignedLiteral, int] = {}
    for j, g in enumerate(omega_ant):
        positions.setdefault(g, j)
    subst = base
    for i, g in enumerate(omega):
        j = positions.get(g)
        if j is None:
            continue
        unified = unify_literals(Omega_ant[j], Omega[i], subst)
        if unified is None:
            raise GeneralisationError(f"twins {Omega[i]} and {Omega_ant[j]} of {g} do not unify")
        subst = unified
    return subst


def resolve_pair(state: ResolutionState, literal: SignedLiteral, antecedent: NoGoodPair,
                 counter: int = 0) -> Tuple[ResolutionState, int, Substitution]:
    """
    One resolution step on ``literal`` with its antecedent, ground and non-ground.

    Returns the new state, the next fresh-variable counter and the unifier.
    """
    if antecedent.nonground is None:
        raise GeneralisationError(f"antecedent of {literal} has no non-ground twin")

    in_use = {name for n in state.Omega for name in n.atom.variables()}
    renamed, counter = rename_apart(antecedent.nonground, FRESH_PREFIX, counter, in_use)
    ant_g, ant_ng, subst = _merge_within(antecedent.ground, renamed, EMPTY)

    complement = literal.complement()
    hits = [i for i, g in enumerate(state.omega) if g == literal]
    pivots = [j for j, g in enumerate(ant_g) if g == complement]
    if not hits or len(pivots) != 1:
        raise GeneralisationError(f"cannot resolve {literal} against {format_literals(ant_g)}")
    pivot = ant_ng[pivots[0]].complement()
    for i in hits:
        unified = unify_literals(pivot, state.Omega[i], subst)
        if unified is None:
            raise GeneralisationError(f"{pivot} and {state.Omega[i]} do not unify")
        subst = unified

    rest_g = tuple(g for i, g in enumerate(state.omega) if i not in hits)
    rest_ng = tuple(n for i, n in enumerate(state.Omega) if i not in hits)
    other_g = tuple(g for j, g in enumerate(ant_g) if j != pivots[0])
    other_ng = tuple(n for j, n in enumerate(ant_ng) if j != pivots[0])
    subst = unify_duplicate_literals(rest_ng, other_ng, rest_g, other_g, subst)

    present = set(rest_g)
    new_g = list(rest_g)
    new_ng = list(rest_ng)
    for g, n in zip(other_g, other_ng):
        if g not in present:
            present.add(g)
            new_g.append(g)
            new_ng.append(n)
    new_ng = [subst.apply_literal(n) for n in new_ng]
    witness = compute_witness(tuple(new_g), tuple(new_ng))
    return ResolutionState(tuple(new_g), tuple(new_ng), witness), counter, subst


class ConflictGeneraliser:
    """Runs non-ground conflict analysis alongside a solver and keeps the class table."""

    def __init__(self, lookback: Optional[int] = None, step_budget: Optional[int] = None,
                 uip_window: bool = False, check_invariants: Optional[bool] = None,
                 trace: Optional[Callable[[str], None]] = None):
        self.lookback = lookback if lookback is not None else Config.RESOLUTION_LOOKBACK
        self.step_budget = step_budget if step_budget is not None else Config.GENERALISATION_STEP_BUDGET
        self.uip_window = uip_window
        self.check_invariants = Config.CHECK_INVARIANTS if check_invariants is None else check_invariants
        self.trace = trace
        self.classes: Dict[CanonicalConstraint, ConflictClass] = {}
        self.total_steps = 0
        self.fresh_counter = 0
        self.witness_checks = 0
        self.witness_failures = 0

    def _is_uip(self, omega: Nogood, assignment: Assignment) -> bool:
        level = assignment.decision_level
        floor = level - self.lookback + 1 if self.uip_window else level
        count = 0
        for literal in omega:
            if assignment.literal_level(literal) >= floor:
                count += 1
                if count > 1:
                    return False
        return count == 1

    def analyze_conflict(self, violated: NoGoodPair, assignment: Assignment,
                         store: NoGoodStore) -> GeneralisationResult:
        """
        Resolve the violated nogood back from the conflict, collecting a
        (ground, non-ground) pair at every UIP.

        The assignment must sit on the conflict level. At level 0 the result
        is marked unsat.
        """
        if assignment.decision_level == 0:
            return GeneralisationResult(unsat=True)
        result = GeneralisationResult()
        if violated.nonground is None:
            return result

        omega, Omega, _ = _merge_within(violated.ground, violated.nonground, EMPTY)
        state = ResolutionState(omega, Omega, compute_witness(omega, Omega))
        skip: Set[SignedLiteral] = set()
        counter = self.fresh_counter
        changed = True
        while True:
            if changed and self._is_uip(state.omega, assignment):
                result.add(state)
            changed = False

            literal = find_next_literal_for_resolution(state.omega, assignment, self.lookback, skip)
            if literal is None:
                break
            antecedent = store[assignment.literal_antecedent(literal)]
            if not antecedent.has_twin:
                skip.add(literal)
                result.deviated = True
                continue
            if result.steps >= self.step_budget:
                result.truncated = True
                logger.debug("Generalisation budget of %d steps reached", self.step_budget)
                break

            state, counter, unifier = resolve_pair(state, literal, antecedent, counter)
            self.fresh_counter = counter
            result.steps += 1
            changed = True
            if self.trace is not None:
                self.trace(f"step {result.steps}: resolve on {literal} | {format_literals(state.omega)} | "
                           f"{format_literals(state.Omega)} | {unifier}")

            self.witness_checks += 1
            if not state.witness_holds():
                self.witness_failures += 1
                if self.check_invariants:
                    raise GeneralisationError(
                        f"witness lost after resolving on {literal}: {format_literals(state.omega)} "
                        f"vs {format_literals(state.Omega)}")
                logger.warning("Witness lost after resolving on %s; stopping generalisation", literal)
                break

        self.total_steps += result.steps
        return result

    def record_conflict_class(self, violated: NoGoodPair, result: GeneralisationResult) -> Optional[ConflictClass]:
        """Count the violation and merge the learned non-ground nogoods into its class."""
        if violated.nonground is None:
            return None
        key = canonicalise_nogood(violated.nonground)
        cls = self.classes.get(key)
        if cls is None:
            cls = self.classes[key] = ConflictClass(key)
        cls.violation_count += 1
        last = len(result.nonground) - 1
        for index, nogood in enumerate(result.nonground):
            canonical = canonicalise_nogood(nogood)
            cls.add_learned(index, canonical)
            if index == 0:
                cls.first_uip[canonical] += 1
            if index == last:
                cls.last_uip[canonical] += 1
        return cls

    def ranked_classes(self) -> List[ConflictClass]:
        return rank_classes(self.classes)


def rank_classes(classes: Dict[CanonicalConstraint, ConflictClass]) -> List[ConflictClass]:
    """Most violated first; ties broken by canonical key text."""
    return sorted(classes.values(), key=lambda c: (-c.violation_count, str(c.key)))
