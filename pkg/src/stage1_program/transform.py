"""
Program transformations: choice-rule translation and canonical constraint forms.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from stage1_program.syntax import (
    COMPLEMENT_OPERATOR, Atom, AtomKind, Constant, Literal, Program, Rule,
    SignedLiteral, Term, Variable, hat_atom, term_order_key,
)
from utils.errors import InternalAtomError

_KIND_RANK = {AtomKind.CLASSICAL: 0, AtomKind.HAT: 1, AtomKind.BODY: 2, AtomKind.BUILTIN: 3}


def translate_choice_rules(program: Program) -> Program:
    """
    Replace each choice rule by two normal rules per choice element.

    ``{ a : c } :- b.`` becomes ``a :- b, c, not â.`` and ``â :- b, c, not a.``
    The new rules remember the choice rule they came from in ``choice_source``.
    """
    next_id = program.next_rule_id
    rules: List[Rule] = []
    for rule in program.rules:
        if not rule.is_choice:
            rules.append(rule)
            continue
        for element in rule.choice:
            hat = hat_atom(element.atom)
            body = rule.body + element.condition
            rules.append(Rule(next_id, head=element.atom,
                              body=body + (Literal(hat, negated=True),),
                              choice_source=rule.id))
            rules.append(Rule(next_id + 1, head=hat,
                              body=body + (Literal(element.atom, negated=True),),
                              choice_source=rule.id))
            next_id += 2
    return program.with_rules(rules)


@dataclass(frozen=True)
class CanonicalConstraint:
    """Constraint body in canonical literal order with variables V1, V2, ..."""

    body: Tuple[Literal, ...]

    @property
    def text(self) -> str:
        return pretty_print_constraint(self)

    def __str__(self) -> str:
        return ":- " + ", ".join(str(l) for l in self.body) + "."


def _skeleton(term: Term, names: Optional[Dict[str, int]]) -> tuple:
    if isinstance(term, Variable):
        if names is None:
            return (0,)
        if term.name not in names:
            names[term.name] = len(names)
        return (0, names[term.name])
    if isinstance(term, Constant):
        return (1,) + term_order_key(term)
    return (2, term.name, len(term.args)) + tuple(_skeleton(a, names) for a in term.args)


def _literal_key(literal: Literal, names: Optional[Dict[str, int]]) -> tuple:
    atom = literal.atom
    return (_KIND_RANK[atom.kind], atom.predicate, atom.arity, literal.negated,
            tuple(_skeleton(a, names) for a in atom.args))


def _canonical_order(literals: List[Literal]) -> List[Literal]:
    """
    The ordering with the least key among those sorted by shape.

    Only literals tied on the least key at a position are branched on. The
    remaining search depends on the unplaced literals and the names of
    their variables alone, so those states are memoised.
    """
    def shape(lit):
        return _literal_key(lit, None)

    shapes = sorted(shape(l) for l in literals)
    memo: Dict[tuple, Tuple[tuple, Tuple[Literal, ...]]] = {}

    def best(remaining: FrozenSet[Literal], names: Dict[str, int]) -> Tuple[tuple, Tuple[Literal, ...]]:
        if not remaining:
            return (), ()
        in_scope = {v for lit in remaining for v in lit.atom.variables()}
        state = (remaining, tuple(sorted((v, names[v]) for v in in_scope if v in names)), len(names))
        cached = memo.get(state)
        if cached is not None:
            return cached

        wanted = shapes[len(literals) - len(remaining)]
        scored = []
        for lit in remaining:
            if shape(lit) == wanted:
                trial = dict(names)
                scored.append((_literal_key(lit, trial), lit, trial))
        low = min(key for key, _, _ in scored)
        result = None
        for key, lit, trial in scored:
            if key != low:
                continue
            keys, order = best(remaining - {lit}, trial)
            if result is None or keys < result[0][1:]:
                result = ((key,) + keys, (lit,) + order)
        memo[state] = result
        return result

    return list(best(frozenset(literals), {})[1])


def canonicalise_constraint(constraint: Union[Rule, CanonicalConstraint, Sequence[Literal]]) -> CanonicalConstraint:
    """
    Renaming-invariant canonical form of a constraint body.

    Duplicate literals are merged, literals are sorted by (kind, predicate,
    arity, sign, argument skeleton) and variables are renamed V1, V2, ... by
    first occurrence.
    """
    if isinstance(constraint, Rule):
        literals = constraint.body
    elif isinstance(constraint, CanonicalConstraint):
        literals = constraint.body
    else:
        literals = tuple(constraint)

    ordering = _canonical_order(list(dict.fromkeys(literals)))
    names: Dict[str, int] = {}
    for lit in ordering:
        _literal_key(lit, names)
    mapping = {name: Variable(f"V{index + 1}") for name, index in names.items()}
    return CanonicalConstraint(tuple(Literal(l.atom.substitute(mapping), l.negated) for l in ordering))


def nogood_as_body(literals: Sequence[SignedLiteral]) -> Tuple[Literal, ...]:
    """Read a nogood as a constraint body: ``T a`` as ``a``, ``F a`` as ``not a``."""
    return tuple(Literal(l.atom, negated=not l.truth) for l in literals)


def canonicalise_nogood(literals: Sequence[SignedLiteral]) -> CanonicalConstraint:
    return canonicalise_constraint(nogood_as_body(literals))


def _printable(literal: Literal) -> Literal:
    atom = literal.atom
    if atom.is_internal:
        raise InternalAtomError(f"internal atom present: {atom}")
    if literal.negated and atom.kind is AtomKind.BUILTIN:
        return Literal(Atom(COMPLEMENT_OPERATOR[atom.predicate], atom.args, AtomKind.BUILTIN))
    return literal


def pretty_print_constraint(constraint: Union[Rule, CanonicalConstraint, Sequence[Literal]]) -> str:
    """ASP text of a constraint over classical and builtin atoms only."""
    if isinstance(constraint, (Rule, CanonicalConstraint)):
        literals = constraint.body
    else:
        literals = tuple(constraint)
    return ":- " + ", ".join(str(_printable(l)) for l in literals) + "."
