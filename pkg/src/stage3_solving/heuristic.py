"""Activity-based decision heuristic with choice points decided first."""

import heapq
import random
from typing import Iterable, List, Optional, Set, Tuple

from stage3_solving.assignment import Assignment, Truth
from utils.config import Config

_RESCALE_LIMIT = 1e100


class ActivityHeuristic:
    """
    Picks the unassigned atom with the highest activity, preferring choice
    points (body atoms of rules with a NaF literal) over everything else.
    Among choice points, bodies of choice-hat rules come first: deciding one
    false commits its choice atom to true.

    Activities are bumped for atoms met during conflict analysis and decay
    geometrically per conflict. Ties fall to the lower atom id, so runs are
    reproducible; a seed adds a small random initial activity.
    """

    def __init__(self, atom_count: int, choice_points: Set[int], sign_preference: Optional[str] = None,
                 decay: Optional[float] = None, seed: Optional[int] = None, hat_points: Iterable[int] = ()):
        self.sign_preference = (sign_preference or Config.SIGN_PREFERENCE).upper()
        self.decay = decay if decay is not None else Config.ACTIVITY_DECAY
        self.increment = 1.0
        self.choice_points = set(choice_points)
        self.hat_points = set(hat_points) & self.choice_points
        rng = random.Random(seed) if seed is not None else None
        self.activity: List[float] = [rng.random() * 1e-5 if rng else 0.0 for _ in range(atom_count)]
        self._rebuild()

    def _tier(self, atom_id: int) -> int:
        if atom_id in self.hat_points:
            return 0
        return 1 if atom_id in self.choice_points else 2

    def _rebuild(self) -> None:
        self.heap: List[Tuple[int, float, int]] = [(self._tier(a), -act, a) for a, act in enumerate(self.activity)]
        heapq.heapify(self.heap)

    def bump(self, atoms: Iterable[int]) -> None:
        for atom_id in atoms:
            self.activity[atom_id] += self.increment
            heapq.heappush(self.heap, (self._tier(atom_id), -self.activity[atom_id], atom_id))
            if self.activity[atom_id] > _RESCALE_LIMIT:
                self.activity = [a / _RESCALE_LIMIT for a in self.activity]
                self.increment /= _RESCALE_LIMIT
                self._rebuild()

    def on_conflict(self) -> None:
        self.increment /= self.decay

    def requeue(self, atoms: Iterable[int]) -> None:
        for atom_id in atoms:
            heapq.heappush(self.heap, (self._tier(atom_id), -self.activity[atom_id], atom_id))

    def decide(self, assignment: Assignment) -> Optional[Tuple[int, Truth]]:
        """Next decision, or None when every atom is assigned."""
        while self.heap:
            tier, negative, atom_id = heapq.heappop(self.heap)
            if assignment.truth[atom_id] is not Truth.U or -negative != self.activity[atom_id]:
                continue
            if tier < 2 and self.sign_preference == "T":
                return atom_id, Truth.T
            return atom_id, Truth.F
        return None
