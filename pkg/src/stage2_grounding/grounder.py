"""
Semi-naive bottom-up grounder.

Instantiates every rule over the atoms that are possibly derivable from the
facts, then writes the nogood schema of each ground rule into a NoGoodStore.
Every static and support nogood keeps its non-ground twin; completion
nogoods for atoms without a support nogood are internal (no twin).
"""

import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple

from stage1_program.syntax import (
    HAT_PREDICATE, Atom, AtomKind, Constant, Function, Literal, Program, Rule,
    SignedLiteral, Term, Variable, body_atom, evaluate_builtin, is_ground_term,
)
from stage1_program.transform import translate_choice_rules
from stage2_grounding.nogoods import NoGoodKind, NoGoodPair, NoGoodStore
from stage2_grounding.substitution import Substitution, match
from utils.config import Config
from utils.errors import GroundingExplosionError
from utils.log import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class GroundRuleRecord:
    rule_id: int
    sigma: Substitution
    beta_atom: Optional[Atom]
    nogoods: Tuple[int, ...]
    head: Optional[Atom] = None
    positive: Tuple[Atom, ...] = ()
    negative: Tuple[Atom, ...] = ()


@dataclass
class GroundProgram:
    """Everything the solver and the oracle need from one grounding run."""

    program: Program
    facts: FrozenSet[Atom]
    records: List[GroundRuleRecord]
    store: NoGoodStore
    support_keys: FrozenSet[Tuple[str, int]]
    grounding_time: float = 0.0
    rules_for_head: Dict[Atom, List[int]] = field(default_factory=dict)


def defining_key(atom: Atom) -> Tuple[str, int]:
    """Predicate key of a head; choice-hat heads are keyed by the atom they wrap."""
    if atom.kind is AtomKind.HAT:
        inner = atom.args[0]
        return (f"{HAT_PREDICATE}[{inner.name}]", len(inner.args))
    return atom.signature


def _constants(term: Term, found: Set[Term]) -> None:
    if isinstance(term, Constant):
        found.add(term)
    elif isinstance(term, Function):
        if term.args and is_ground_term(term):
            found.add(term)
        for arg in term.args:
            _constants(arg, found)


def compute_universe(program: Program, instance_facts: Iterable[Atom]) -> Set[Term]:
    """Constants of the encoding together with those of the instance facts."""
    universe = set(program.universe)
    for fact in instance_facts:
        if program.input_predicates and fact.signature not in program.input_predicates:
            name, arity = fact.signature
            logger.warning("Fact %s uses %s/%d, which is not a declared input predicate", fact, name, arity)
        for arg in fact.args:
            _constants(arg, universe)
    return universe


def completion_support_set(program: Program) -> Set[Tuple[str, int]]:
    """Head keys defined by exactly one non-fact rule."""
    counts: Dict[Tuple[str, int], int] = defaultdict(int)
    rules = translate_choice_rules(program).rules if any(r.is_choice for r in program.rules) else program.rules
    for rule in rules:
        if rule.head is not None and not rule.is_fact:
            counts[defining_key(rule.head)] += 1
    return {key for key, count in counts.items() if count == 1}


def _signed(literal: Literal) -> SignedLiteral:
    return SignedLiteral(literal.atom, not literal.negated)


def emit_nogoods(rule: Rule, sigma: Substitution, store: NoGoodStore, support: bool = False) -> List[NoGoodPair]:
    """
    Add the nogood schema of the ground instance ``rule``·``sigma`` to ``store``.

    A constraint yields its whole body. A rule ``h :- b1..bm, not bm+1..not bn``
    yields the body nogood, the head nogood, one nogood per positive classical
    literal, one per NaF literal and, when ``support`` is set, the support
    nogood ``{T h, F β}``.
    """
    twin_body = tuple(_signed(l) for l in rule.body)
    ground_body = tuple(sigma.apply_literal(l) for l in twin_body)

    if rule.is_constraint:
        return [store.add(ground_body, NoGoodKind.STATIC, twin_body, sigma, rule.id)]

    names = rule.variables()
    twin_beta = body_atom(rule.id, tuple(Variable(n) for n in names))
    beta = sigma.apply(twin_beta)
    head = sigma.apply(rule.head)

    schema = [
        ((SignedLiteral(beta, False),) + ground_body,
         (SignedLiteral(twin_beta, False),) + twin_body, NoGoodKind.STATIC),
        ((SignedLiteral(head, False), SignedLiteral(beta, True)),
         (SignedLiteral(rule.head, False), SignedLiteral(twin_beta, True)), NoGoodKind.STATIC),
    ]
    for literal, ground in zip(rule.body, ground_body):
        if literal.atom.kind is AtomKind.BUILTIN:
            continue
        twin = _signed(literal)
        # {T β, F b} for positive literals, {T β, T b} for NaF literals
        schema.append(((SignedLiteral(beta, True), ground.complement()),
                       (SignedLiteral(twin_beta, True), twin.complement()), NoGoodKind.STATIC))
    if support:
        schema.append(((SignedLiteral(head, True), SignedLiteral(beta, False)),
                       (SignedLiteral(rule.head, True), SignedLiteral(twin_beta, False)), NoGoodKind.SUPPORT))

    return [store.add(g, kind, n, sigma, rule.id) for g, n, kind in schema]


class _AtomIndex:
    """Possibly-derivable atoms indexed by signature and bound argument, stamped by round."""

    def __init__(self):
        self.stamp: Dict[Atom, int] = {}
        self.by_signature: Dict[Tuple[str, int], List[Atom]] = defaultdict(list)
        self.by_argument: Dict[Tuple[str, int, int, Term], List[Atom]] = defaultdict(list)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.stamp

    def add(self, atom: Atom, round_no: int) -> bool:
        if atom in self.stamp:
            return False
        self.stamp[atom] = round_no
        self.by_signature[atom.signature].append(atom)
        for position, arg in enumerate(atom.args):
            self.by_argument[(atom.predicate, atom.arity, position, arg)].append(atom)
        return True

    def candidates(self, pattern: Atom, bindings: Dict[str, Term]) -> List[Atom]:
        for position, arg in enumerate(pattern.args):
            if isinstance(arg, Variable):
                value = bindings.get(arg.name)
            elif is_ground_term(arg):
                value = arg
            else:
                value = None
            if value is not None:
                return self.by_argument.get((pattern.predicate, pattern.arity, position, value), [])
        return self.by_signature.get(pattern.signature, [])


class Grounder:
    """Grounds one program against one fact set."""

    def __init__(self, program: Program, facts: Iterable[Atom], cap: Optional[int] = None):
        if any(r.is_choice for r in program.rules):
            program = translate_choice_rules(program)
        self.program = program
        self.facts = frozenset(set(facts) | set(program.facts))
        self.cap = cap if cap is not None else Config.GROUNDING_CAP
        self.index = _AtomIndex()
        self.instances: Dict[Tuple[int, Tuple[Term, ...]], Tuple[Rule, Dict[str, Term]]] = {}
        self._plans: Dict[Tuple[int, int], List[int]] = {}

    def _plan(self, rule: Rule, first: int) -> List[int]:
        """Join order over positive literals: ``first``, then greedily most-bound."""
        key = (rule.id, first)
        if key not in self._plans:
            positives = rule.positive_body
            order = [first] if first >= 0 else []
            bound = set(positives[first].atom.variables()) if first >= 0 else set()
            remaining = [i for i in range(len(positives)) if i != first]
            while remaining:
                best = max(remaining, key=lambda i: (len(set(positives[i].atom.variables()) & bound),
                                                     -len(set(positives[i].atom.variables()) - bound),
                                                     -i))
                order.append(best)
                bound.update(positives[best].atom.variables())
                remaining.remove(best)
            self._plans[key] = order
        return self._plans[key]

    def _join(self, rule: Rule, order: List[int], windows: Dict[int, Tuple[int, int]]) -> Iterator[Dict[str, Term]]:
        positives = rule.positive_body
        pending = list(rule.builtins)
        checks: List[List[Literal]] = []
        bound: Set[str] = set()
        for index in order:
            bound.update(positives[index].atom.variables())
            ready = [b for b in pending if set(b.atom.variables()) <= bound]
            pending = [b for b in pending if b not in ready]
            checks.append(ready)
        # builtins left over are ground or mention unbound variables (unsafe rules are rejected at parse time)
        initial = [b for b in pending if b.atom.is_ground()]
        if not all(evaluate_builtin(b.atom) for b in initial):
            return

        def step(depth: int, bindings: Dict[str, Term]) -> Iterator[Dict[str, Term]]:
            if depth == len(order):
                yield bindings
                return
            pattern = positives[order[depth]].atom
            low, high = windows[order[depth]]
            for candidate in self.index.candidates(pattern, bindings):
                if not low <= self.index.stamp[candidate] <= high:
                    continue
                extended = match(pattern, candidate, bindings)
                if extended is None:
                    continue
                if all(evaluate_builtin(b.atom.substitute(extended)) for b in checks[depth]):
                    yield from step(depth + 1, extended)

        yield from step(0, {})

    def _record(self, rule: Rule, bindings: Dict[str, Term]) -> Optional[Atom]:
        for literal in rule.negative_body:
            if literal.atom.substitute(bindings) in self.facts:
                return None
        key = (rule.id, tuple(bindings[n] for n in rule.variables()))
        if key in self.instances:
            return None
        self.instances[key] = (rule, bindings)
        if len(self.instances) > self.cap:
            raise GroundingExplosionError(
                f"grounding exceeded {self.cap} ground rules; instance too large")
        return rule.head.substitute(bindings) if rule.head is not None else None

    def _instantiate_all(self) -> None:
        for fact in sorted(self.facts, key=str):
            self.index.add(fact, 0)

        rules = [r for r in self.program.rules if not r.is_fact and not r.is_constraint]
        constraints = [r for r in self.program.rules if r.is_constraint]

        round_no = 1
        while True:
            derived: List[Atom] = []
            for rule in rules:
                positives = rule.positive_body
                if not positives:
                    if round_no == 1:
                        for bindings in self._join(rule, [], {}):
                            head = self._record(rule, bindings)
                            if head is not None:
                                derived.append(head)
                    continue
                for first in range(len(positives)):
                    windows = {j: (0, round_no - 2) if j < first else (0, round_no - 1)
                               for j in range(len(positives))}
                    windows[first] = (round_no - 1, round_no - 1)
                    for bindings in self._join(rule, self._plan(rule, first), windows):
                        head = self._record(rule, bindings)
                        if head is not None:
                            derived.append(head)
            fresh = [atom for atom in derived if atom not in self.index]
            if not fresh:
                break
            for atom in fresh:
                self.index.add(atom, round_no)
            round_no += 1

        everything = {j: (0, round_no) for j in range(max((len(r.positive_body) for r in constraints), default=0))}
        for rule in constraints:
            order = self._plan(rule, 0 if rule.positive_body else -1)
            for bindings in self._join(rule, order, everything):
                self._record(rule, bindings)

    def ground(self, with_support: bool = True) -> GroundProgram:
        started = time.perf_counter()
        self._instantiate_all()

        store = NoGoodStore(self.facts)
        support_keys = frozenset(completion_support_set(self.program))
        records: List[GroundRuleRecord] = []
        rules_for_head: Dict[Atom, List[int]] = defaultdict(list)
        supported: Set[Atom] = set()

        for rule, bindings in self.instances.values():
            sigma = Substitution({n: bindings[n] for n in rule.variables()})
            head = sigma.apply(rule.head) if rule.head is not None else None
            support = (with_support and head is not None and head not in self.facts
                       and defining_key(rule.head) in support_keys
                       and set(rule.variables()) <= set(rule.head.variables()))
            pairs = emit_nogoods(rule, sigma, store, support)
            beta = None
            if head is not None:
                beta = pairs[1].ground[1].atom
                rules_for_head[head].append(len(records))
                if support:
                    supported.add(head)
            records.append(GroundRuleRecord(
                rule.id, sigma, beta, tuple(p.id for p in pairs), head,
                tuple(sigma.apply(l.atom) for l in rule.positive_body),
                tuple(sigma.apply(l.atom) for l in rule.negative_body)))

        # Completion: an atom that is neither a fact nor supported needs a true body
        for atom in list(store.atoms):
            if atom.kind is AtomKind.BODY or atom in self.facts or atom in supported:
                continue
            betas = tuple(SignedLiteral(records[i].beta_atom, False) for i in rules_for_head.get(atom, ()))
            store.add((SignedLiteral(atom, True),) + betas, NoGoodKind.INTERNAL)

        elapsed = time.perf_counter() - started
        logger.info("Grounded %d rule instances into %d nogoods over %d atoms in %.3fs",
                    len(records), len(store), len(store.atoms), elapsed)
        return GroundProgram(self.program, self.facts, records, store, support_keys,
                             elapsed, dict(rules_for_head))


def ground_program(program: Program, facts: Iterable[Atom], cap: Optional[int] = None,
                   with_support: bool = True) -> GroundProgram:
    """
    Ground ``program`` against ``facts``.

    Args:
        program: encoding, choice rules translated or not
        facts: instance facts
        cap: maximum number of ground rules (defaults to Config.GROUNDING_CAP)
        with_support: emit support nogoods for single-rule heads

    Returns:
        GroundProgram with the rule records and the nogood store
    """
    return Grounder(program, facts, cap).ground(with_support)
