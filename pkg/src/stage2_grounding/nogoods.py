"""
Nogood pairs and the nogood store.

A NoGoodPair couples a ground nogood with the non-ground nogood it was
instantiated from. Positions line up: ``ground[i] == sigma(nonground[i])``.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

from stage1_program.syntax import Atom, AtomKind, SignedLiteral
from stage2_grounding.substitution import Substitution


class NoGoodKind(Enum):
    STATIC = "static"
    SUPPORT = "support"
    LEARNED = "learned"
    INTERNAL = "internal"


def format_literals(literals: Iterable[SignedLiteral]) -> str:
    return "{" + ", ".join(str(l) for l in literals) + "}"


@dataclass(frozen=True)
class NoGoodPair:
    id: int
    ground: Tuple[SignedLiteral, ...]
    kind: NoGoodKind
    nonground: Optional[Tuple[SignedLiteral, ...]] = None
    sigma: Optional[Substitution] = None
    source_rule: Optional[int] = None

    @property
    def has_twin(self) -> bool:
        return self.nonground is not None

    def twin_instantiates(self) -> bool:
        """True when every twin position instantiates to its ground position."""
        if self.nonground is None:
            return self.kind is NoGoodKind.INTERNAL
        if len(self.nonground) != len(self.ground):
            return False
        return all(self.sigma.apply_literal(n) == g for n, g in zip(self.nonground, self.ground))

    def dump_line(self) -> str:
        twin = format_literals(self.nonground) if self.nonground is not None else "-"
        sigma = str(self.sigma) if self.sigma is not None else "-"
        return f"{self.kind.value}\t{format_literals(self.ground)}\t{twin}\t{sigma}"

    def __str__(self) -> str:
        return format_literals(self.ground)


class NoGoodStore:
    """
    Indexed collection of nogood pairs plus the atom table they range over.

    Grounding fills a store once; a solver works on its own ``copy()`` and
    appends learned nogoods there.
    """

    def __init__(self, facts: Iterable[Atom] = ()):
        self.pairs: List[NoGoodPair] = []
        self.facts: Set[Atom] = set(facts)
        self._atom_ids: Dict[Atom, int] = {}
        self.atoms: List[Atom] = []
        for fact in sorted(self.facts, key=str):
            self.atom_id(fact)

    def atom_id(self, atom: Atom) -> int:
        index = self._atom_ids.get(atom)
        if index is None:
            index = len(self.atoms)
            self._atom_ids[atom] = index
            self.atoms.append(atom)
        return index

    def find_atom(self, atom: Atom) -> Optional[int]:
        return self._atom_ids.get(atom)

    def add(self, ground: Tuple[SignedLiteral, ...], kind: NoGoodKind,
            nonground: Optional[Tuple[SignedLiteral, ...]] = None,
            sigma: Optional[Substitution] = None,
            source_rule: Optional[int] = None) -> NoGoodPair:
        for literal in ground:
            if literal.atom.kind is not AtomKind.BUILTIN:
                self.atom_id(literal.atom)
        pair = NoGoodPair(len(self.pairs), tuple(ground), kind, nonground, sigma, source_rule)
        self.pairs.append(pair)
        return pair

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[NoGoodPair]:
        return iter(self.pairs)

    def __getitem__(self, index: int) -> NoGoodPair:
        return self.pairs[index]

    def copy(self) -> "NoGoodStore":
        clone = NoGoodStore.__new__(NoGoodStore)
        clone.pairs = list(self.pairs)
        clone.facts = set(self.facts)
        clone._atom_ids = dict(self._atom_ids)
        clone.atoms = list(self.atoms)
        return clone

    def count_by_kind(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in NoGoodKind}
        for pair in self.pairs:
            counts[pair.kind.value] += 1
        return counts

    def dump(self) -> str:
        """One line per pair: kind, ground nogood, twin, sigma (tab separated)."""
        return "\n".join(pair.dump_line() for pair in self.pairs) + ("\n" if self.pairs else "")
