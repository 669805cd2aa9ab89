from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from typing_extensions import Self

from ghostlab._typing import ComplexPair, WaveVectorLike
from ghostlab.core.lattice import ModeSet, WaveVector
from ghostlab.errors import (
    DivergenceViolation,
    RealityViolation,
    TruncationViolation,
    ZeroModeViolation,
)

REALITY_RTOL = 1e-12
DIVERGENCE_RTOL = 1e-12


class _ModeArray:
    """Shared plumbing for fields stored as one array row per mode."""

    __slots__ = ("modes", "_values", "truncation_radius_sq")

    _shape: tuple[int, ...] = ()
    # Let numpy scalars defer to the reflected operators below.
    __array_ufunc__ = None

    def __init__(self, modes: ModeSet, values, truncation_radius_sq: int):
        values = np.array(values, dtype=np.complex128).reshape(
            (len(modes),) + self._shape
        )
        values.flags.writeable = False
        if len(modes) and modes.max_norm_sq > truncation_radius_sq:
            raise TruncationViolation(
                f"Mode with |k|²={modes.max_norm_sq} exceeds truncation radius²"
                f" {truncation_radius_sq}."
            )
        self.modes = modes
        self._values = values
        self.truncation_radius_sq = int(truncation_radius_sq)

    @classmethod
    def zeros(cls, modes: ModeSet, truncation_radius_sq: int) -> Self:
        return cls(modes, np.zeros((len(modes),) + cls._shape), truncation_radius_sq)

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self):
        return len(self.modes)

    def __contains__(self, k):
        return k in self.modes

    def __getitem__(self, k: WaveVector | WaveVectorLike):
        i = self.modes.get_index(k)
        if i is None:
            return np.zeros(self._shape, dtype=np.complex128) if self._shape else 0j
        return self._values[i]

    def items(self) -> Iterator[tuple[WaveVector, object]]:
        return zip(self.modes, self._values)

    def shells(self) -> set[int]:
        return self.modes.shells()

    def support(self) -> ModeSet:
        """Modes carrying a nonzero coefficient."""
        values = self._values.reshape(len(self.modes), -1)
        nonzero = np.any(values != 0, axis=1)
        return ModeSet.of(k for k, nz in zip(self.modes, nonzero) if nz)

    def reindex(self, modes: ModeSet, truncation_radius_sq: int | None = None) -> Self:
        """Same field stored on `modes`. Dropped modes must be zero."""
        radius = (
            self.truncation_radius_sq
            if truncation_radius_sq is None
            else truncation_radius_sq
        )
        if modes == self.modes:
            return type(self)(modes, self._values, radius)
        values = np.zeros((len(modes),) + self._shape, dtype=np.complex128)
        for k, value in self.items():
            i = modes.get_index(k)
            if i is None:
                if np.any(value != 0):
                    raise TruncationViolation(f"Mode {k} is not part of the target set.")
                continue
            values[i] = value
        return type(self)(modes, values, radius)

    def with_radius(self, truncation_radius_sq: int) -> Self:
        return type(self)(self.modes, self._values, truncation_radius_sq)

    def _align(self, other: _ModeArray) -> tuple[ModeSet, np.ndarray, np.ndarray, int]:
        radius = max(self.truncation_radius_sq, other.truncation_radius_sq)
        if self.modes == other.modes:
            return self.modes, self._values, other._values, radius
        modes = self.modes.union(other.modes)
        return (
            modes,
            self.reindex(modes, radius)._values,
            other.reindex(modes, radius)._values,
            radius,
        )

    # Arithmetic

    def __add__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        modes, a, b, radius = self._align(other)
        return type(self)(modes, a + b, radius)

    def __sub__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        modes, a, b, radius = self._align(other)
        return type(self)(modes, a - b, radius)

    def __neg__(self):
        return type(self)(self.modes, -self._values, self.truncation_radius_sq)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return type(self)(self.modes, float(scalar) * self._values, self.truncation_radius_sq)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def allclose(self, other: _ModeArray, *, rtol=1e-12, atol=1e-14) -> bool:
        _, a, b, _ = self._align(other)
        return bool(np.allclose(a, b, rtol=rtol, atol=atol))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self._values)))

    def reality_defect(self) -> float:
        """max |c(-k) - conj c(k)| over the stored modes."""
        if not len(self.modes):
            return 0.0
        conj = np.conj(self._values[self.modes.conjugate])
        return float(np.max(np.abs(self._values - conj)))

    def __repr__(self):
        return (
            f"<{type(self).__name__} modes={len(self.modes)}"
            f" shells={sorted(self.shells())} radius²={self.truncation_radius_sq}>"
        )


class SpectralField(_ModeArray):
    """
    Truncated divergence-free velocity field û(k) ∈ C² on the 2π-periodic box.

    Both k and -k are stored; û(-k) = conj û(k).
    """

    __slots__ = ()
    _shape = (2,)

    def divergence_defect(self) -> float:
        """max |k·û(k)| / (|k||û(k)|) over nonzero modes."""
        if not len(self.modes):
            return 0.0
        k = self.modes.vectors
        div = np.abs(np.einsum("ij,ij->i", self._values, k))
        scale = np.sqrt(self.modes.norm_sq) * np.linalg.norm(self._values, axis=1)
        mask = scale > 0
        if not np.any(mask):
            return 0.0
        return float(np.max(div[mask] / scale[mask]))

    def check_invariants(self, *, rtol=REALITY_RTOL):
        scale = float(np.max(np.abs(self._values))) if len(self.modes) else 0.0
        if self.reality_defect() > rtol * max(scale, 1e-300):
            raise RealityViolation(f"û(-k) != conj û(k) (defect {self.reality_defect()})")
        if self.divergence_defect() > DIVERGENCE_RTOL:
            raise DivergenceViolation(
                f"k·û(k) != 0 (relative defect {self.divergence_defect()})"
            )
        return self


class ScalarAmplitudeField(_ModeArray):
    """α(k) with û(k) = iα(k) k⊥/|k| and α(-k) = conj α(k)."""

    __slots__ = ()
    _shape = ()

    @classmethod
    def from_mapping(
        cls,
        amplitudes: Mapping[WaveVector | WaveVectorLike, complex],
        truncation_radius_sq: int | None = None,
    ) -> ScalarAmplitudeField:
        """
        Build from a partial mapping. Missing partners -k are filled with the
        conjugate; supplied partners must agree with it.
        """
        given = {WaveVector.of(k): complex(v) for k, v in amplitudes.items()}
        completed = dict(given)
        for k, value in given.items():
            if k.is_zero():
                raise ZeroModeViolation("α((0,0)) is not part of the field.")
            partner = -k
            if partner in given:
                expected = np.conj(value)
                if abs(given[partner] - expected) > REALITY_RTOL * max(abs(value), 1e-300):
                    raise RealityViolation(
                        f"α({partner}) = {given[partner]} but conj α({k}) = {expected}"
                    )
            else:
                completed[partner] = np.conj(value)

        modes = ModeSet.of(completed)
        values = np.array([completed[k] for k in modes], dtype=np.complex128)
        radius = modes.max_norm_sq if truncation_radius_sq is None else truncation_radius_sq
        return cls(modes, values, radius)

    def check_invariants(self, *, rtol=REALITY_RTOL):
        scale = float(np.max(np.abs(self._values))) if len(self.modes) else 0.0
        if self.reality_defect() > rtol * max(scale, 1e-300):
            raise RealityViolation(f"α(-k) != conj α(k) (defect {self.reality_defect()})")
        return self


def make_field(
    entries: Sequence[tuple[WaveVector | WaveVectorLike, ComplexPair]]
    | Mapping[WaveVector | WaveVectorLike, ComplexPair],
    truncation_radius_sq: int,
) -> SpectralField:
    """Validated construction of a SpectralField; -k partners are filled in."""
    if isinstance(entries, Mapping):
        entries = list(entries.items())

    given: dict[WaveVector, np.ndarray] = {}
    for key, pair in entries:
        k = WaveVector.of(key)
        value = np.asarray(pair, dtype=np.complex128).reshape(2)
        if k.is_zero():
            raise ZeroModeViolation("The zero wave vector carries the mean flow.")
        if k.norm_sq > truncation_radius_sq:
            raise TruncationViolation(
                f"|{k}|² = {k.norm_sq} exceeds truncation radius² {truncation_radius_sq}"
            )
        magnitude = float(np.linalg.norm(value))
        divergence = abs(value[0] * k.k1 + value[1] * k.k2)
        if divergence > DIVERGENCE_RTOL * k.norm * magnitude:
            raise DivergenceViolation(f"k·û(k) = {divergence} at k={k}")
        if k in given and not np.allclose(given[k], value, rtol=REALITY_RTOL, atol=0):
            raise ValueError(f"Conflicting entries for mode {k}")
        given[k] = value

    completed = dict(given)
    for k, value in given.items():
        expected = np.conj(value)
        if -k in given:
            scale = max(float(np.linalg.norm(value)), 1e-300)
            if np.linalg.norm(given[-k] - expected) > REALITY_RTOL * scale:
                raise RealityViolation(f"û({-k}) != conj û({k})")
        else:
            completed[-k] = expected

    modes = ModeSet.of(completed)
    values = np.array([completed[k] for k in modes], dtype=np.complex128).reshape(-1, 2)
    return SpectralField(modes, values, truncation_radius_sq)


def from_scalar(
    amps: ScalarAmplitudeField, truncation_radius_sq: int | None = None
) -> SpectralField:
    amps.check_invariants()
    radius = amps.truncation_radius_sq if truncation_radius_sq is None else truncation_radius_sq
    modes = amps.modes
    if not len(modes):
        return SpectralField.zeros(modes, radius)
    norm = np.sqrt(modes.norm_sq)
    values = 1j * (amps.values / norm)[:, None] * modes.perp
    return SpectralField(modes, values, radius)


def to_scalar(u: SpectralField) -> ScalarAmplitudeField:
    """α(k) = -i û(k)·k⊥/|k|."""
    modes = u.modes
    if not len(modes):
        return ScalarAmplitudeField.zeros(modes, u.truncation_radius_sq)
    alpha = -1j * np.einsum("ij,ij->i", u.values, modes.perp) / np.sqrt(modes.norm_sq)
    return ScalarAmplitudeField(modes, alpha, u.truncation_radius_sq)


def scalar_field(
    modes: ModeSet, amplitudes: Iterable[complex], truncation_radius_sq: int | None = None
) -> ScalarAmplitudeField:
    radius = modes.max_norm_sq if truncation_radius_sq is None else truncation_radius_sq
    return ScalarAmplitudeField(modes, np.fromiter(amplitudes, dtype=np.complex128), radius)
