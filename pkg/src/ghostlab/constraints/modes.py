from __future__ import annotations

import functools
from typing import Iterator

from ghostlab._typing import WaveVectorLike
from ghostlab.core.lattice import ModeSet, WaveVector, shell, shells_mode_set

ACTIVE_SHELLS = (1, 2, 5)


def build_active_sets() -> tuple[tuple[WaveVector, ...], ...]:
    """(S₁, S₂, S₃): the shells |k|² = 1, 2 and 5."""
    return tuple(shell(mu) for mu in ACTIVE_SHELLS)


class ModeIndex:
    """
    The 16 wave vectors of S₁ ∪ S₂ ∪ S₃ in canonical order, with the
    conjugate pairing k ↔ -k.
    """

    def __init__(self):
        self.S1, self.S2, self.S3 = build_active_sets()
        self.mode_set: ModeSet = shells_mode_set(ACTIVE_SHELLS)
        self.low = frozenset(self.S1 + self.S2)

    def __len__(self):
        return len(self.mode_set)

    def __iter__(self) -> Iterator[WaveVector]:
        return iter(self.mode_set)

    def __contains__(self, k):
        return WaveVector.of(k) in self.mode_set

    def index(self, k: WaveVector | WaveVectorLike) -> int:
        return self.mode_set.index(k)

    def conjugate(self, k: WaveVector | WaveVectorLike) -> WaveVector:
        return -WaveVector.of(k)

    def set_of(self, k: WaveVector | WaveVectorLike) -> int:
        """1, 2 or 3 for a member of S₁, S₂ or S₃."""
        return ACTIVE_SHELLS.index(WaveVector.of(k).norm_sq) + 1

    def ordered(self, modes) -> list[WaveVector]:
        return sorted(modes, key=self.index)


@functools.lru_cache(maxsize=None)
def mode_index() -> ModeIndex:
    return ModeIndex()
