"""
Four-valued assignment with a chronological trail.

Truth values: T (true), M (must-be-true, derived from a rule head),
F (false), U (unassigned). ``T a`` is satisfied by T or M, ``F a`` by F.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Tuple

from stage1_program.syntax import AtomKind, SignedLiteral
from stage2_grounding.nogoods import NoGoodStore


class Truth(Enum):
    T = "T"
    M = "M"
    F = "F"
    U = "U"

    @property
    def is_true(self) -> bool:
        return self is Truth.T or self is Truth.M


@dataclass(frozen=True)
class AtomState:
    truth: Truth
    dl: int
    antecedent: Optional[int]


UNASSIGNED = AtomState(Truth.U, -1, None)


def encode(atom_id: int, truth: bool) -> int:
    """Literal code: ``+(id+1)`` for ``T a``, ``-(id+1)`` for ``F a``."""
    return atom_id + 1 if truth else -(atom_id + 1)


def code_atom(code: int) -> int:
    return abs(code) - 1


class Assignment:
    """Per-atom state arrays plus the trail and per-level trail offsets."""

    def __init__(self, store: NoGoodStore):
        self.store = store
        self.truth: List[Truth] = []
        self.level: List[int] = []
        self.antecedent: List[Optional[int]] = []
        self.position: List[int] = []
        self.trail: List[int] = []
        self.level_starts: List[int] = []
        self.grow()

    def grow(self) -> None:
        """Extend the arrays to cover atoms added to the store since the last call."""
        missing = len(self.store.atoms) - len(self.truth)
        if missing > 0:
            self.truth.extend([Truth.U] * missing)
            self.level.extend([-1] * missing)
            self.antecedent.extend([None] * missing)
            self.position.extend([-1] * missing)

    @property
    def decision_level(self) -> int:
        return len(self.level_starts)

    def __len__(self) -> int:
        return len(self.trail)

    def state(self, atom_id: int) -> AtomState:
        if self.truth[atom_id] is Truth.U:
            return UNASSIGNED
        return AtomState(self.truth[atom_id], self.level[atom_id], self.antecedent[atom_id])

    def satisfied(self, code: int) -> bool:
        value = self.truth[abs(code) - 1]
        return value.is_true if code > 0 else value is Truth.F

    def falsified(self, code: int) -> bool:
        value = self.truth[abs(code) - 1]
        return value is Truth.F if code > 0 else value.is_true

    def unassigned(self, code: int) -> bool:
        return self.truth[abs(code) - 1] is Truth.U

    def assign(self, atom_id: int, truth: Truth, antecedent: Optional[int]) -> None:
        self.truth[atom_id] = truth
        self.level[atom_id] = self.decision_level
        self.antecedent[atom_id] = antecedent
        self.position[atom_id] = len(self.trail)
        self.trail.append(atom_id)

    def new_level(self) -> None:
        self.level_starts.append(len(self.trail))

    def backtrack(self, level: int) -> List[int]:
        """Undo every assignment above ``level``; returns the unassigned atoms."""
        if level >= self.decision_level:
            return []
        cut = self.level_starts[level]
        undone = self.trail[cut:]
        for atom_id in undone:
            self.truth[atom_id] = Truth.U
            self.level[atom_id] = -1
            self.antecedent[atom_id] = None
            self.position[atom_id] = -1
        del self.trail[cut:]
        del self.level_starts[level:]
        return undone

    def is_total(self) -> bool:
        return len(self.trail) == len(self.truth)

    def decisions(self) -> List[int]:
        return [self.trail[start] for start in self.level_starts]

    def true_atoms(self) -> Iterator[int]:
        return (a for a in self.trail if self.truth[a].is_true)

    # Views over signed literals, used by conflict analysis

    def literal_code(self, literal: SignedLiteral) -> Optional[int]:
        """Code of a nogood literal, None for builtin slots."""
        if literal.atom.kind is AtomKind.BUILTIN:
            return None
        atom_id = self.store.find_atom(literal.atom)
        return None if atom_id is None else encode(atom_id, literal.truth)

    def literal_level(self, literal: SignedLiteral) -> int:
        code = self.literal_code(literal)
        return -1 if code is None else self.level[code_atom(code)]

    def literal_position(self, literal: SignedLiteral) -> int:
        code = self.literal_code(literal)
        return -1 if code is None else self.position[code_atom(code)]

    def literal_antecedent(self, literal: SignedLiteral) -> Optional[int]:
        code = self.literal_code(literal)
        return None if code is None else self.antecedent[code_atom(code)]

    def check_trail(self) -> Tuple[bool, str]:
        """Trail levels are non-decreasing and each level starts with its decision."""
        previous = 0
        for index, atom_id in enumerate(self.trail):
            if self.level[atom_id] < previous:
                return False, f"level drops at trail position {index}"
            previous = self.level[atom_id]
        for level, start in enumerate(self.level_starts, 1):
            if start < len(self.trail) and self.antecedent[self.trail[start]] is not None:
                return False, f"level {level} does not start with a decision"
        return True, ""
