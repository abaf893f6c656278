"""
Substitutions, one-way matching and most general unifiers over terms and atoms.
"""

from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple

from stage1_program.syntax import (
    Atom, Constant, Function, SignedLiteral, Term, Variable, substitute_term,
)


class Substitution:
    """
    Immutable mapping from variable names to terms.

    Bindings are kept normalised: no bound term mentions a variable that is
    itself bound, so ``apply`` needs a single pass.
    """

    __slots__ = ("_mapping",)

    def __init__(self, mapping: Optional[Mapping[str, Term]] = None):
        self._mapping: Dict[str, Term] = dict(mapping or {})

    @property
    def mapping(self) -> Dict[str, Term]:
        return dict(self._mapping)

    def __getitem__(self, name: str) -> Term:
        return self._mapping[name]

    def __contains__(self, name: str) -> bool:
        return name in self._mapping

    def __iter__(self) -> Iterator[str]:
        return iter(self._mapping)

    def __len__(self) -> int:
        return len(self._mapping)

    def __eq__(self, other) -> bool:
        return isinstance(other, Substitution) and self._mapping == other._mapping

    def __hash__(self) -> int:
        return hash(frozenset(self._mapping.items()))

    def items(self):
        return self._mapping.items()

    def get(self, name: str, default=None):
        return self._mapping.get(name, default)

    def apply_term(self, term: Term) -> Term:
        return substitute_term(term, self._mapping)

    def apply(self, atom: Atom) -> Atom:
        return atom.substitute(self._mapping)

    def apply_literal(self, literal: SignedLiteral) -> SignedLiteral:
        return literal.substitute(self._mapping)

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}->{t}" for n, t in sorted(self._mapping.items()))
        return "{" + inner + "}"

    __str__ = __repr__


EMPTY = Substitution()


def _walk(term: Term, bindings: Dict[str, Term]) -> Term:
    while isinstance(term, Variable) and term.name in bindings:
        term = bindings[term.name]
    return term


def _occurs(name: str, term: Term, bindings: Dict[str, Term]) -> bool:
    term = _walk(term, bindings)
    if isinstance(term, Variable):
        return term.name == name
    if isinstance(term, Function):
        return any(_occurs(name, arg, bindings) for arg in term.args)
    return False


def _unify_terms(left: Term, right: Term, bindings: Dict[str, Term]) -> bool:
    stack = [(left, right)]
    while stack:
        a, b = stack.pop()
        a, b = _walk(a, bindings), _walk(b, bindings)
        if a == b:
            continue
        if isinstance(a, Variable):
            if _occurs(a.name, b, bindings):
                return False
            bindings[a.name] = b
        elif isinstance(b, Variable):
            if _occurs(b.name, a, bindings):
                return False
            bindings[b.name] = a
        elif isinstance(a, Function) and isinstance(b, Function):
            if a.name != b.name or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
        else:
            return False
    return True


def _resolve(term: Term, bindings: Dict[str, Term]) -> Term:
    term = _walk(term, bindings)
    if isinstance(term, Function):
        return Function(term.name, tuple(_resolve(a, bindings) for a in term.args))
    return term


def unify(left: Atom, right: Atom, base: Optional[Substitution] = None) -> Optional[Substitution]:
    """
    Most general unifier of two atoms (Robinson with occurs check).

    Returns None when the atoms clash. With ``base`` the result extends it.
    """
    if left.predicate != right.predicate or left.kind is not right.kind or left.arity != right.arity:
        return None
    bindings = dict(base.items()) if base is not None else {}
    for a, b in zip(left.args, right.args):
        if not _unify_terms(a, b, bindings):
            return None
    return Substitution({name: _resolve(term, bindings) for name, term in bindings.items()})


def unify_literals(left: SignedLiteral, right: SignedLiteral,
                   base: Optional[Substitution] = None) -> Optional[Substitution]:
    if left.truth != right.truth:
        return None
    return unify(left.atom, right.atom, base)


def match(pattern: Atom, ground: Atom, bindings: Dict[str, Term]) -> Optional[Dict[str, Term]]:
    """One-way matching of ``pattern`` against a ground atom, extending ``bindings``."""
    if pattern.predicate != ground.predicate or pattern.arity != ground.arity:
        return None
    result = bindings
    for p, g in zip(pattern.args, ground.args):
        result = _match_term(p, g, result)
        if result is None:
            return None
    return result


def _match_term(pattern: Term, ground: Term, bindings: Dict[str, Term]) -> Optional[Dict[str, Term]]:
    if isinstance(pattern, Variable):
        bound = bindings.get(pattern.name)
        if bound is None:
            extended = dict(bindings)
            extended[pattern.name] = ground
            return extended
        return bindings if bound == ground else None
    if isinstance(pattern, Constant):
        return bindings if pattern == ground else None
    if not isinstance(ground, Function) or pattern.name != ground.name or len(pattern.args) != len(ground.args):
        return None
    for p, g in zip(pattern.args, ground.args):
        bindings = _match_term(p, g, bindings)
        if bindings is None:
            return None
    return bindings


def rename_apart(literals: Tuple[SignedLiteral, ...], prefix: str, counter: int,
                 avoid: Iterable[str] = ()) -> Tuple[Tuple[SignedLiteral, ...], int]:
    """
    Rename every variable of ``literals`` to ``<prefix><k>`` with fresh k.

    Names in ``avoid`` and names already used by ``literals`` are never
    produced. Returns the renamed literals and the next unused counter value.
    """
    taken = set(avoid)
    for literal in literals:
        taken.update(literal.atom.variables())
    mapping: Dict[str, Term] = {}
    for literal in literals:
        for name in literal.atom.variables():
            if name not in mapping:
                counter += 1
                while f"{prefix}{counter}" in taken:
                    counter += 1
                mapping[name] = Variable(f"{prefix}{counter}")
    return tuple(l.substitute(mapping) for l in literals), counter
