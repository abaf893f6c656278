"""
Conflict-driven nogood learning over a grounded program.

The solver propagates the nogood store with two watched literals, learns the
first-UIP nogood on every conflict, backjumps, and enumerates answer sets
with blocking nogoods over the decisions. When a ConflictGeneraliser is
attached, each conflict is also analysed at the non-ground level; that
analysis never influences the search.
"""

import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from stage1_program.syntax import Atom, AtomKind, Program, SignedLiteral
from stage2_grounding.grounder import GroundProgram, defining_key, ground_program
from stage2_grounding.nogoods import NoGoodKind, NoGoodPair
from stage3_solving.assignment import Assignment, Truth, code_atom, encode
from stage3_solving.generaliser import ConflictClass, ConflictGeneraliser, GeneralisationResult
from stage3_solving.heuristic import ActivityHeuristic
from utils.config import Config
from utils.errors import GeneralisationError
from utils.log import get_logger

logger = get_logger(__name__)


class SolveStatus(Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    LIMIT = "LIMIT"


@dataclass
class SolveLimits:
    max_conflicts: Optional[int] = None
    max_time: Optional[float] = None
    # 0 enumerates every answer set
    target_answer_sets: int = field(default_factory=lambda: Config.NUM_ANSWER_SETS)

    def __post_init__(self):
        if self.max_conflicts is not None and self.max_conflicts <= 0:
            raise ValueError("max_conflicts must be positive")
        if self.max_time is not None and self.max_time <= 0:
            raise ValueError("max_time must be positive")
        if self.target_answer_sets < 0:
            raise ValueError("target_answer_sets must not be negative")


@dataclass
class SolveReport:
    status: SolveStatus
    answer_sets: List[FrozenSet[Atom]] = field(default_factory=list)
    conflicts: int = 0
    decisions: int = 0
    backjumps: Counter = field(default_factory=Counter)
    grounding_time: float = 0.0
    solving_time: float = 0.0
    classes: Dict = field(default_factory=dict)
    learned: List[NoGoodPair] = field(default_factory=list)
    trace: List[Tuple] = field(default_factory=list)
    incomplete_propagation_risk: bool = False

    def to_dict(self) -> Dict:
        """Machine-readable summary (keys documented in the README)."""
        return {
            "status": self.status.value,
            "answer_sets": [sorted(str(a) for a in model) for model in self.answer_sets],
            "conflicts": self.conflicts,
            "decisions": self.decisions,
            "backjumps": {str(k): v for k, v in sorted(self.backjumps.items())},
            "grounding_time": round(self.grounding_time, 6),
            "solving_time": round(self.solving_time, 6),
            "classes": [
                {"key": str(c.key), "violations": c.violation_count,
                 "first_uip": str(c.best_first) if c.best_first else None,
                 "last_uip": str(c.best_last) if c.best_last else None}
                for c in sorted(self.classes.values(), key=lambda c: (-c.violation_count, str(c.key)))
            ],
            "learned": [str(p) if p.nonground is None else "{" + ", ".join(str(l) for l in p.nonground) + "}"
                        for p in self.learned],
        }


def luby(index: int) -> int:
    """The ``index``-th element (1-based) of the Luby sequence 1,1,2,1,1,2,4,..."""
    k = 1
    while (1 << k) - 1 < index:
        k += 1
    while index != (1 << k) - 1:
        index -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < index:
            k += 1
    return 1 << (k - 1)


def has_positive_loop(program: Program) -> bool:
    """True when the positive dependency graph has a cycle (the program is not tight)."""
    graph = nx.DiGraph()
    for rule in program.rules:
        if rule.head is None or rule.is_fact:
            continue
        head = defining_key(rule.head)
        graph.add_node(head)
        for literal in rule.positive_body:
            graph.add_edge(head, defining_key(literal.atom))
    return not nx.is_directed_acyclic_graph(graph)


class CdnlSolver:
    """One search over one grounded program. Not thread-safe; create one per thread."""

    def __init__(self, ground: GroundProgram, generaliser: Optional[ConflictGeneraliser] = None,
                 sign_preference: Optional[str] = None, decay: Optional[float] = None,
                 seed: Optional[int] = None, restarts: bool = False,
                 check_invariants: Optional[bool] = None, record_trace: bool = False):
        self.ground = ground
        self.store = ground.store.copy()
        self.facts = ground.facts
        self.generaliser = generaliser
        self.restarts = restarts
        self.check_invariants = Config.CHECK_INVARIANTS if check_invariants is None else check_invariants
        self.record_trace = record_trace

        self.assignment = Assignment(self.store)
        self.nogoods: List[Optional[List[int]]] = []
        self.watch_pair: List[Optional[List[int]]] = []
        self.watches: Dict[int, List[int]] = defaultdict(list)
        self.qhead = 0
        self._pending_conflict: Optional[int] = None
        self._units: List[int] = []

        choice_points, hat_points = set(), set()
        for record in ground.records:
            if record.beta_atom is not None and record.negative:
                atom_id = self.store.atom_id(record.beta_atom)
                choice_points.add(atom_id)
                if record.head is not None and record.head.kind is AtomKind.HAT:
                    hat_points.add(atom_id)
        self.assignment.grow()
        self.heuristic = ActivityHeuristic(len(self.store.atoms), choice_points, sign_preference, decay, seed,
                                           hat_points)

        self.conflicts = 0
        self.decisions = 0
        self.backjumps: Counter = Counter()
        self.learned: List[NoGoodPair] = []
        self.trace: List[Tuple] = []
        self.models: List[FrozenSet[Atom]] = []

        for pair in self.store.pairs:
            self._register(pair)

    # Nogood bookkeeping

    def _compile(self, pair: NoGoodPair) -> Optional[List[int]]:
        """Literal codes without fixed-true slots; None when the nogood can never be violated."""
        codes: Dict[int, None] = {}
        for literal in pair.ground:
            if literal.atom.kind is AtomKind.BUILTIN:
                continue
            if literal.atom in self.facts:
                if literal.truth:
                    continue
                return None
            code = encode(self.store.atom_id(literal.atom), literal.truth)
            if -code in codes:
                return None
            codes[code] = None
        return list(codes)

    def _register(self, pair: NoGoodPair) -> None:
        codes = self._compile(pair)
        self.nogoods.append(codes)
        self.watch_pair.append(None)
        if codes is None:
            return
        if not codes:
            self._pending_conflict = pair.id if self._pending_conflict is None else self._pending_conflict
        elif len(codes) == 1:
            self._units.append(pair.id)
        else:
            self._watch(pair.id, codes[0], codes[1])

    def _watch(self, pid: int, first: int, second: int) -> None:
        self.watch_pair[pid] = [first, second]
        self.watches[first].append(pid)
        self.watches[second].append(pid)

    def _forced_truth(self, pid: int, atom_id: int) -> Truth:
        """M for a rule head derived through its head nogood, T otherwise."""
        pair = self.store.pairs[pid]
        if (pair.kind is NoGoodKind.STATIC and len(pair.ground) == 2
                and pair.ground[1].atom.kind is AtomKind.BODY and not pair.ground[0].truth
                and self.store.find_atom(pair.ground[0].atom) == atom_id):
            return Truth.M
        return Truth.T

    def _force(self, code: int, pid: int) -> None:
        """Assign the complement of the nogood literal ``code``."""
        atom_id = code_atom(code)
        truth = Truth.F if code > 0 else self._forced_truth(pid, atom_id)
        self.assignment.assign(atom_id, truth, pid)

    def _attach(self, pid: int) -> Optional[int]:
        """
        Watch a nogood added during search and act on it at the current level.

        Returns the pair id when the nogood is violated.
        """
        codes = self.nogoods[pid]
        if codes is None:
            return None
        a = self.assignment
        if not codes:
            return pid
        if len(codes) == 1:
            if a.satisfied(codes[0]):
                return pid
            if a.unassigned(codes[0]):
                self._force(codes[0], pid)
            return None

        def rank(code):
            if not a.satisfied(code):
                return (0, 0)
            return (1, -a.position[code_atom(code)])

        ordered = sorted(codes, key=rank)
        first, second = ordered[0], ordered[1]
        self._watch(pid, first, second)
        if a.satisfied(first):
            return pid
        if a.unassigned(first) and a.satisfied(second) and all(a.satisfied(c) for c in ordered[1:]):
            self._force(first, pid)
        return None

    def _store_nogood(self, ground: Tuple[SignedLiteral, ...], kind: NoGoodKind, nonground=None,
                      sigma=None, codes: Optional[List[int]] = None) -> NoGoodPair:
        pair = self.store.add(ground, kind, nonground, sigma)
        self.assignment.grow()
        self.nogoods.append(list(codes) if codes is not None else self._compile(pair))
        self.watch_pair.append(None)
        return pair

    def add_nogood(self, ground: Tuple[SignedLiteral, ...], kind: NoGoodKind,
                   nonground=None, sigma=None) -> Tuple[NoGoodPair, Optional[int]]:
        """Add a nogood during search; returns the pair and its id if it is violated."""
        pair = self._store_nogood(ground, kind, nonground, sigma)
        return pair, self._attach(pair.id)

    # Propagation

    def propagate(self) -> Optional[int]:
        """
        Unit propagation to a fixpoint.

        Returns the id of the first violated nogood, or None.
        """
        a = self.assignment
        while self.qhead < len(a.trail):
            atom_id = a.trail[self.qhead]
            self.qhead += 1
            code = atom_id + 1 if a.truth[atom_id].is_true else -(atom_id + 1)
            watchers = self.watches[code]
            kept: List[int] = []
            for index, pid in enumerate(watchers):
                pair_watch = self.watch_pair[pid]
                slot = 0 if pair_watch[0] == code else 1
                other = pair_watch[1 - slot]
                if a.falsified(other):
                    kept.append(pid)
                    continue
                replacement = None
                for candidate in self.nogoods[pid]:
                    if candidate != code and candidate != other and not a.satisfied(candidate):
                        replacement = candidate
                        break
                if replacement is not None:
                    pair_watch[slot] = replacement
                    self.watches[replacement].append(pid)
                    continue
                kept.append(pid)
                if a.unassigned(other):
                    self._force(other, pid)
                    continue
                kept.extend(watchers[index + 1:])
                self.watches[code] = kept
                return pid
            self.watches[code] = kept
        return None

    # Conflict handling

    def _literal(self, code: int) -> SignedLiteral:
        return SignedLiteral(self.store.atoms[code_atom(code)], code > 0)

    def _first_uip(self, pid: int) -> Tuple[List[int], int, int, Set[int]]:
        """Ground first-UIP analysis: (learned codes, UIP code, backjump level, atoms seen)."""
        a = self.assignment
        level = a.decision_level
        omega = set(self.nogoods[pid])
        seen = {code_atom(c) for c in omega}
        while True:
            current = [c for c in omega if a.level[code_atom(c)] == level]
            if len(current) == 1:
                break
            latest = max(current, key=lambda c: a.position[code_atom(c)])
            antecedent = a.antecedent[code_atom(latest)]
            omega.discard(latest)
            for c in self.nogoods[antecedent]:
                if c != -latest:
                    omega.add(c)
                    seen.add(code_atom(c))
        uip = current[0]
        rest = [a.level[code_atom(c)] for c in omega if c != uip]
        return sorted(omega, key=lambda c: -a.position[code_atom(c)]), uip, max(rest, default=0), seen

    def _generalise(self, pid: int) -> Optional[GeneralisationResult]:
        if self.generaliser is None:
            return None
        violated = self.store.pairs[pid]
        try:
            result = self.generaliser.analyze_conflict(violated, self.assignment, self.store)
        except GeneralisationError:
            if self.check_invariants:
                raise
            logger.exception("Generalisation failed on %s", violated)
            return None
        self.generaliser.record_conflict_class(violated, result)
        return result

    def _handle_conflict(self, pid: int) -> bool:
        """Learn from a conflict and backjump. False when the search space is exhausted."""
        a = self.assignment
        codes = self.nogoods[pid]
        conflict_level = max((a.level[code_atom(c)] for c in codes), default=0)
        if conflict_level < a.decision_level:
            self._backtrack(conflict_level)
        if conflict_level == 0:
            return False

        result = self._generalise(pid)
        learned_codes, uip, target, seen = self._first_uip(pid)
        self.heuristic.bump(seen)
        self.heuristic.on_conflict()

        ground = tuple(self._literal(c) for c in learned_codes)
        nonground, sigma, kind = None, None, NoGoodKind.INTERNAL
        if result is not None and result.first is not None:
            first_ground, first_twin, witness = result.first
            first_codes = set(self._compile(NoGoodPair(-1, first_ground, NoGoodKind.LEARNED)) or ())
            if first_codes == set(learned_codes):
                ground, nonground, sigma, kind = first_ground, first_twin, witness, NoGoodKind.LEARNED
            elif self.check_invariants and self.generaliser.lookback == 1 and not result.deviated:
                raise GeneralisationError(
                    f"first UIP differs: ground {[str(self._literal(c)) for c in learned_codes]} "
                    f"vs generalised {[str(l) for l in first_ground]}")

        if self.record_trace:
            self.trace.append(("learn", tuple(sorted(str(self._literal(c)) for c in learned_codes))))

        # the solver's own literal order is kept so watches do not depend on learning
        pair = self._store_nogood(ground, kind, nonground, sigma, codes=learned_codes)
        self.learned.append(pair)
        if self.backjump(pair) is not None:
            raise GeneralisationError(f"learned nogood {pair} is violated after backjump")
        return True

    def backjump(self, learned: NoGoodPair) -> Optional[int]:
        """
        Jump to the second-highest level of an asserting nogood and let it
        force its remaining literal there.
        """
        a = self.assignment
        codes = self.nogoods[learned.id] or []
        levels = sorted({a.level[code_atom(c)] for c in codes}, reverse=True)
        target = levels[1] if len(levels) > 1 else 0
        self.backjumps[a.decision_level - target] += 1
        self._backtrack(target)
        return self._attach(learned.id)

    def _backtrack(self, level: int) -> None:
        undone = self.assignment.backtrack(level)
        if undone:
            self.heuristic.requeue(undone)
        self.qhead = min(self.qhead, len(self.assignment.trail))

    # Models

    def _is_stable(self) -> bool:
        """
        The true classical and hat atoms must form the least model of the
        reduct. This also rejects M atoms that no applicable rule derives.
        """
        a = self.assignment
        true_atoms = {self.store.atoms[i] for i in a.true_atoms()
                      if self.store.atoms[i].kind is not AtomKind.BODY}
        derived = set(self.facts)
        applicable = [r for r in self.ground.records
                      if r.head is not None and not any(n in true_atoms for n in r.negative)]
        changed = True
        while changed:
            changed = False
            for record in applicable:
                if record.head not in derived and all(p in derived for p in record.positive):
                    derived.add(record.head)
                    changed = True
        return derived == true_atoms

    def _model(self) -> FrozenSet[Atom]:
        a = self.assignment
        return frozenset(self.store.atoms[i] for i in a.true_atoms()
                         if self.store.atoms[i].kind is AtomKind.CLASSICAL)

    def _block_decisions(self) -> Optional[int]:
        decided = []
        for atom_id in self.assignment.decisions():
            truth = self.assignment.truth[atom_id].is_true
            decided.append(SignedLiteral(self.store.atoms[atom_id], truth))
        _, conflict = self.add_nogood(tuple(decided), NoGoodKind.INTERNAL)
        return conflict

    # Decisions

    def decide(self) -> bool:
        choice = self.heuristic.decide(self.assignment)
        if choice is None:
            return False
        atom_id, truth = choice
        self.assignment.new_level()
        self.assignment.assign(atom_id, truth, None)
        self.decisions += 1
        if self.record_trace:
            self.trace.append(("decide", str(self.store.atoms[atom_id]), truth.value))
        return True

    # Main loop

    def _initialise(self) -> Optional[int]:
        a = self.assignment
        for fact in sorted(self.facts, key=str):
            atom_id = self.store.atom_id(fact)
            if a.truth[atom_id] is Truth.U:
                a.assign(atom_id, Truth.T, None)
        if self._pending_conflict is not None:
            return self._pending_conflict
        for pid in self._units:
            code = self.nogoods[pid][0]
            if a.satisfied(code):
                return pid
            if a.unassigned(code):
                self._force(code, pid)
        return None

    def solve(self, limits: Optional[SolveLimits] = None) -> SolveReport:
        limits = limits or SolveLimits()
        started = time.perf_counter()
        status: Optional[SolveStatus] = None
        restart_index, since_restart = 1, 0
        unit = Config.LUBY_UNIT

        conflict = self._initialise()
        while status is None:
            if conflict is None:
                conflict = self.propagate()
            if conflict is not None:
                self.conflicts += 1
                since_restart += 1
                if not self._handle_conflict(conflict):
                    status = SolveStatus.SAT if self.models else SolveStatus.UNSAT
                    break
                conflict = None
                if limits.max_conflicts is not None and self.conflicts >= limits.max_conflicts:
                    status = SolveStatus.LIMIT
                elif limits.max_time is not None and time.perf_counter() - started >= limits.max_time:
                    status = SolveStatus.LIMIT
                elif self.restarts and since_restart >= luby(restart_index) * unit:
                    logger.debug("Restart %d after %d conflicts", restart_index, since_restart)
                    self._backtrack(0)
                    restart_index += 1
                    since_restart = 0
                continue

            if self.decide():
                continue

            # total assignment
            if self.check_invariants:
                ok, message = self.assignment.check_trail()
                if not ok:
                    raise GeneralisationError(f"trail invariant broken: {message}")
            if not self._is_stable():
                conflict = self._block_decisions()
                if conflict is None:
                    status = SolveStatus.SAT if self.models else SolveStatus.UNSAT
                continue
            self.models.append(self._model())
            logger.debug("Answer set %d found after %d conflicts", len(self.models), self.conflicts)
            if limits.target_answer_sets and len(self.models) >= limits.target_answer_sets:
                status = SolveStatus.SAT
            elif self.assignment.decision_level == 0:
                status = SolveStatus.SAT
            else:
                conflict = self._block_decisions()

        return SolveReport(
            status=status, answer_sets=list(self.models), conflicts=self.conflicts,
            decisions=self.decisions, backjumps=self.backjumps,
            grounding_time=self.ground.grounding_time,
            solving_time=time.perf_counter() - started,
            classes=dict(self.generaliser.classes) if self.generaliser is not None else {},
            learned=list(self.learned), trace=list(self.trace),
            incomplete_propagation_risk=has_positive_loop(self.ground.program))


def solve(program: Program, facts: Iterable[Atom], limits: Optional[SolveLimits] = None,
          learn_mode: bool = False, generaliser: Optional[ConflictGeneraliser] = None,
          **solver_options) -> SolveReport:
    """
    Ground ``program`` with ``facts`` and search for answer sets.

    Args:
        program: encoding (choice rules are translated on the way)
        facts: instance facts
        limits: conflict/time/answer-set limits
        learn_mode: attach a ConflictGeneraliser built from Config defaults
        generaliser: explicit generaliser (implies learning)
        **solver_options: passed to CdnlSolver (seed, sign_preference, restarts, ...)

    Returns:
        SolveReport
    """
    ground = ground_program(program, facts)
    if generaliser is None and learn_mode:
        generaliser = ConflictGeneraliser()
    report = CdnlSolver(ground, generaliser, **solver_options).solve(limits)
    if report.incomplete_propagation_risk:
        logger.debug("Program has positive loops; stability is checked on total assignments only")
    logger.info("Solved: %s, %d answer set(s), %d conflicts, %d decisions",
                report.status.value, len(report.answer_sets), report.conflicts, report.decisions)
    return report
