from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from ghostlab._typing import WaveVectorLike
from ghostlab.errors import ZeroModeViolation


@dataclass(frozen=True)
class WaveVector:
    """Integer lattice vector k = (k1, k2) of the periodic box [0, 2π)²."""

    k1: int
    k2: int

    @classmethod
    def of(cls, value: WaveVector | WaveVectorLike) -> WaveVector:
        if isinstance(value, WaveVector):
            return value
        k1, k2 = value
        if int(k1) != k1 or int(k2) != k2:
            raise TypeError(f"Wave vector components must be integers, got {value!r}")
        return cls(int(k1), int(k2))

    @property
    def norm_sq(self) -> int:
        return self.k1 * self.k1 + self.k2 * self.k2

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    @property
    def perp(self) -> WaveVector:
        return WaveVector(-self.k2, self.k1)

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return self.norm_sq, self.k1, self.k2

    def is_zero(self) -> bool:
        return self.k1 == 0 and self.k2 == 0

    def dot(self, other: WaveVector) -> int:
        return self.k1 * other.k1 + self.k2 * other.k2

    def __add__(self, other: WaveVector) -> WaveVector:
        return WaveVector(self.k1 + other.k1, self.k2 + other.k2)

    def __sub__(self, other: WaveVector) -> WaveVector:
        return WaveVector(self.k1 - other.k1, self.k2 - other.k2)

    def __neg__(self) -> WaveVector:
        return WaveVector(-self.k1, -self.k2)

    def __iter__(self) -> Iterator[int]:
        yield self.k1
        yield self.k2

    def __str__(self):
        return f"({self.k1},{self.k2})"


# HELPERS


def is_eigenvalue(mu: int) -> bool:
    """True if some lattice vector has |k|² = mu, i.e. mu ∈ sp(A)."""
    if mu < 1 or int(mu) != mu:
        return False
    return len(shell(int(mu))) > 0


@functools.lru_cache(maxsize=None)
def shell(mu: int) -> tuple[WaveVector, ...]:
    r = math.isqrt(mu)
    vectors = [
        WaveVector(k1, k2)
        for k1 in range(-r, r + 1)
        for k2 in range(-r, r + 1)
        if k1 * k1 + k2 * k2 == mu and (k1, k2) != (0, 0)
    ]
    return tuple(sorted(vectors, key=lambda k: k.sort_key))


@functools.lru_cache(maxsize=None)
def ball(radius_sq: int) -> tuple[WaveVector, ...]:
    """All nonzero lattice vectors with |k|² <= radius_sq, canonically ordered."""
    r = math.isqrt(radius_sq)
    vectors = [
        WaveVector(k1, k2)
        for k1 in range(-r, r + 1)
        for k2 in range(-r, r + 1)
        if 0 < k1 * k1 + k2 * k2 <= radius_sq
    ]
    return tuple(sorted(vectors, key=lambda k: k.sort_key))


def eigenvalues(up_to: int) -> list[int]:
    return [mu for mu in range(1, up_to + 1) if is_eigenvalue(mu)]


class ModeSet:
    """
    Immutable, canonically ordered and negation-closed set of wave vectors.

    Holds the numpy views used by the vectorized operators. Instances are
    interned through `ModeSet.of`, so equal mode sets share their caches.
    """

    __slots__ = ("modes", "vectors", "norm_sq", "perp", "conjugate", "_index", "_hash")

    def __init__(self, modes: tuple[WaveVector, ...]):
        self.modes = modes
        self._index = {k: i for i, k in enumerate(modes)}
        self._hash = hash(modes)

        self.vectors = np.array([(k.k1, k.k2) for k in modes], dtype=np.int64).reshape(
            -1, 2
        )
        self.norm_sq = np.array([k.norm_sq for k in modes], dtype=np.int64)
        self.perp = np.stack(
            [-self.vectors[:, 1], self.vectors[:, 0]], axis=1
        ).reshape(-1, 2)
        self.conjugate = np.array([self._index[-k] for k in modes], dtype=np.int64)

        for array in (self.vectors, self.norm_sq, self.perp, self.conjugate):
            array.flags.writeable = False

    @classmethod
    def of(cls, modes: Iterable[WaveVector | WaveVectorLike]) -> ModeSet:
        """Canonical mode set of `modes`, completed with every -k."""
        keys = set()
        for k in modes:
            k = WaveVector.of(k)
            if k.is_zero():
                raise ZeroModeViolation("The zero wave vector carries the mean flow.")
            keys.add(k)
            keys.add(-k)
        return _intern(tuple(sorted(keys, key=lambda k: k.sort_key)))

    @classmethod
    def empty(cls) -> ModeSet:
        return _intern(())

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __contains__(self, k):
        return WaveVector.of(k) in self._index

    def __eq__(self, other):
        if not isinstance(other, ModeSet):
            return False
        return self is other or self.modes == other.modes

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"<ModeSet n={len(self)} shells={sorted(self.shells())}>"

    def index(self, k: WaveVector | WaveVectorLike) -> int:
        return self._index[WaveVector.of(k)]

    def get_index(self, k: WaveVector | WaveVectorLike, default=None):
        return self._index.get(WaveVector.of(k), default)

    def shells(self) -> set[int]:
        return {k.norm_sq for k in self.modes}

    @property
    def max_norm_sq(self) -> int:
        return int(self.norm_sq.max()) if len(self) else 0

    def union(self, other: ModeSet) -> ModeSet:
        if self == other:
            return self
        return ModeSet.of(self.modes + other.modes)

    def restrict(self, shells: Iterable[int]) -> ModeSet:
        shells = set(shells)
        return ModeSet.of(k for k in self.modes if k.norm_sq in shells)


@functools.lru_cache(maxsize=1024)
def _intern(modes: tuple[WaveVector, ...]) -> ModeSet:
    return ModeSet(modes)


def shells_mode_set(shells: Iterable[int]) -> ModeSet:
    return ModeSet.of(k for mu in sorted(set(shells)) for k in shell(mu))
