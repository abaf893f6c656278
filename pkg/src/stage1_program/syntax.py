"""
Program data model: terms, atoms, literals, rules and programs.

All values are frozen dataclasses, so programs, rules and nogood literals can
be hashed, compared structurally and shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterator, Optional, Tuple, Union


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant:
    value: Union[int, str]

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Function:
    name: str
    args: Tuple["Term", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(str(a) for a in self.args)})"


Term = Union[Variable, Constant, Function]


def term_variables(term: Term) -> Iterator[str]:
    """Variable names of a term in left-to-right order (with repeats)."""
    if isinstance(term, Variable):
        yield term.name
    elif isinstance(term, Function):
        for arg in term.args:
            yield from term_variables(arg)


def is_ground_term(term: Term) -> bool:
    return next(term_variables(term), None) is None


def substitute_term(term: Term, mapping: Dict[str, Term]) -> Term:
    """Apply a variable mapping once (no chasing of bindings)."""
    if isinstance(term, Variable):
        return mapping.get(term.name, term)
    if isinstance(term, Function):
        return Function(term.name, tuple(substitute_term(a, mapping) for a in term.args))
    return term


def term_order_key(term: Term) -> tuple:
    """Total order on ground terms: integers < symbols < strings < functions."""
    if isinstance(term, Constant):
        if isinstance(term.value, int):
            return (0, term.value)
        if term.value.startswith('"'):
            return (2, term.value)
        return (1, term.value)
    if isinstance(term, Function):
        return (3, term.name, len(term.args), tuple(term_order_key(a) for a in term.args))
    raise ValueError(f"cannot order non-ground term {term}")


class AtomKind(Enum):
    CLASSICAL = "classical"
    BUILTIN = "builtin"
    BODY = "body"
    HAT = "hat"


BUILTIN_OPERATORS = ("<", "<=", ">", ">=", "=", "!=")

COMPLEMENT_OPERATOR = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}

BODY_PREDICATE = "_beta"
HAT_PREDICATE = "_hat"


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: Tuple[Term, ...] = ()
    kind: AtomKind = AtomKind.CLASSICAL

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> Tuple[str, int]:
        return (self.predicate, len(self.args))

    @property
    def is_internal(self) -> bool:
        return self.kind in (AtomKind.BODY, AtomKind.HAT)

    def variables(self) -> Iterator[str]:
        for arg in self.args:
            yield from term_variables(arg)

    def is_ground(self) -> bool:
        return next(self.variables(), None) is None

    def substitute(self, mapping: Dict[str, Term]) -> "Atom":
        if not self.args:
            return self
        return Atom(self.predicate, tuple(substitute_term(a, mapping) for a in self.args), self.kind)

    def __str__(self) -> str:
        if self.kind is AtomKind.BUILTIN:
            return f"{self.args[0]}{self.predicate}{self.args[1]}"
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(a) for a in self.args)})"


def builtin_atom(operator: str, left: Term, right: Term) -> Atom:
    if operator not in BUILTIN_OPERATORS:
        raise ValueError(f"unknown comparison operator {operator!r}")
    return Atom(operator, (left, right), AtomKind.BUILTIN)


def evaluate_builtin(atom: Atom) -> bool:
    """Truth value of a ground comparison atom."""
    left, right = atom.args
    if atom.predicate == "=":
        return left == right
    if atom.predicate == "!=":
        return left != right
    lk, rk = term_order_key(left), term_order_key(right)
    if atom.predicate == "<":
        return lk < rk
    if atom.predicate == "<=":
        return lk <= rk
    if atom.predicate == ">":
        return lk > rk
    return lk >= rk


def body_atom(rule_id: int, terms: Tuple[Term, ...]) -> Atom:
    """Body-representing atom of rule ``rule_id`` over ``terms`` (vars(r) or their instances)."""
    return Atom(BODY_PREDICATE, (Constant(rule_id), Function("vars", tuple(terms))), AtomKind.BODY)


def body_atom_rule(atom: Atom) -> int:
    return atom.args[0].value


def body_atom_terms(atom: Atom) -> Tuple[Term, ...]:
    return atom.args[1].args


def hat_atom(atom: Atom) -> Atom:
    """Choice-hat complement of a classical atom."""
    return Atom(HAT_PREDICATE, (Function(atom.predicate, atom.args),), AtomKind.HAT)


def unwrap_hat(atom: Atom) -> Atom:
    inner = atom.args[0]
    return Atom(inner.name, inner.args)


@dataclass(frozen=True)
class Literal:
    """Body literal of a rule: an atom, possibly under negation as failure."""

    atom: Atom
    negated: bool = False

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negated else str(self.atom)


@dataclass(frozen=True)
class SignedLiteral:
    """Nogood literal: ``T a`` (truth=True) or ``F a`` (truth=False)."""

    atom: Atom
    truth: bool = True

    def complement(self) -> "SignedLiteral":
        return SignedLiteral(self.atom, not self.truth)

    def substitute(self, mapping: Dict[str, Term]) -> "SignedLiteral":
        return SignedLiteral(self.atom.substitute(mapping), self.truth)

    def __str__(self) -> str:
        return f"{'T' if self.truth else 'F'} {self.atom}"


@dataclass(frozen=True)
class ChoiceElement:
    atom: Atom
    condition: Tuple[Literal, ...] = ()

    def __str__(self) -> str:
        if not self.condition:
            return str(self.atom)
        return f"{self.atom} : {', '.join(str(l) for l in self.condition)}"


@dataclass(frozen=True)
class Rule:
    id: int
    head: Optional[Atom] = None
    body: Tuple[Literal, ...] = ()
    choice: Tuple[ChoiceElement, ...] = ()
    is_choice: bool = False
    # id of the choice rule this normal rule was translated from
    choice_source: Optional[int] = None

    @property
    def is_constraint(self) -> bool:
        return self.head is None and not self.is_choice

    @property
    def is_fact(self) -> bool:
        return self.head is not None and not self.body and not self.is_choice

    @property
    def positive_body(self) -> Tuple[Literal, ...]:
        return tuple(l for l in self.body if not l.negated and l.atom.kind is not AtomKind.BUILTIN)

    @property
    def negative_body(self) -> Tuple[Literal, ...]:
        return tuple(l for l in self.body if l.negated)

    @property
    def builtins(self) -> Tuple[Literal, ...]:
        return tuple(l for l in self.body if l.atom.kind is AtomKind.BUILTIN)

    def variables(self) -> Tuple[str, ...]:
        """vars(r) in declaration order: head, choice elements, then body."""
        seen: Dict[str, None] = {}
        if self.head is not None:
            for name in self.head.variables():
                seen.setdefault(name)
        for element in self.choice:
            for name in element.atom.variables():
                seen.setdefault(name)
            for lit in element.condition:
                for name in lit.atom.variables():
                    seen.setdefault(name)
        for lit in self.body:
            for name in lit.atom.variables():
                seen.setdefault(name)
        return tuple(seen)

    def __str__(self) -> str:
        body = ", ".join(str(l) for l in self.body)
        if self.is_choice:
            head = "{ " + "; ".join(str(e) for e in self.choice) + " }" if self.choice else "{ }"
            return f"{head} :- {body}." if body else f"{head}."
        if self.head is None:
            return f":- {body}."
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {body}."


@dataclass(frozen=True)
class Program:
    rules: Tuple[Rule, ...] = ()
    input_predicates: FrozenSet[Tuple[str, int]] = field(default_factory=frozenset)

    @property
    def universe(self) -> FrozenSet[Term]:
        """All constants (and ground function terms) appearing in the rules."""
        found = set()

        def collect(term: Term) -> None:
            if isinstance(term, Constant):
                found.add(term)
            elif isinstance(term, Function):
                if term.args and is_ground_term(term):
                    found.add(term)
                for arg in term.args:
                    collect(arg)

        for rule in self.rules:
            atoms = [l.atom for l in rule.body]
            if rule.head is not None:
                atoms.append(rule.head)
            for element in rule.choice:
                atoms.append(element.atom)
                atoms.extend(l.atom for l in element.condition)
            for atom in atoms:
                if atom.kind in (AtomKind.CLASSICAL, AtomKind.BUILTIN):
                    for arg in atom.args:
                        collect(arg)
        return frozenset(found)

    @property
    def facts(self) -> Tuple[Atom, ...]:
        return tuple(r.head for r in self.rules if r.is_fact)

    def rule_by_id(self, rule_id: int) -> Rule:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KeyError(rule_id)

    @property
    def next_rule_id(self) -> int:
        return max((r.id for r in self.rules), default=-1) + 1

    def with_rules(self, rules) -> "Program":
        return Program(tuple(rules), self.input_predicates)

    def __str__(self) -> str:
        lines = [f"% #input {name}/{arity}." for name, arity in sorted(self.input_predicates)]
        lines.extend(str(r) for r in self.rules)
        return "\n".join(lines) + ("\n" if lines else "")
