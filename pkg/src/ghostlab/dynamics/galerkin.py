from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ghostlab.core.field import (
    ScalarAmplitudeField,
    SpectralField,
    from_scalar,
    to_scalar,
)
from ghostlab.core.lattice import ModeSet, ball, is_eigenvalue, shells_mode_set
from ghostlab.core.operators import (
    apply_stokes_power,
    bilinear,
    norm_As,
    project_shells,
)
from ghostlab.errors import NotAnEigenvalue, ShellViolation, SupportViolation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GalerkinSpec:
    """Eigenspace-compressed system du/dt + Au + ÊB(u,u) = g on `mode_shells`."""

    mode_shells: frozenset[int]
    force: SpectralField
    lambda_: int

    def __post_init__(self):
        object.__setattr__(self, "mode_shells", frozenset(int(s) for s in self.mode_shells))
        if not self.mode_shells:
            raise ValueError("mode_shells must not be empty")
        for mu in self.mode_shells:
            if not is_eigenvalue(mu):
                raise NotAnEigenvalue(f"Shell {mu} contains no lattice vector")
        if self.lambda_ not in self.mode_shells:
            raise ShellViolation(f"λ={self.lambda_} must be one of the mode shells")
        off_shell = self.force.support().shells() - {self.lambda_}
        if off_shell:
            raise ShellViolation(
                f"Force has support on shells {sorted(off_shell)}, expected only"
                f" {self.lambda_}"
            )

    @property
    def modes(self) -> ModeSet:
        return shells_mode_set(self.mode_shells)

    @property
    def truncation_radius_sq(self) -> int:
        return max(self.mode_shells)


def rhs_full(u: SpectralField, g: SpectralField) -> SpectralField:
    """g - Au - B(u,u), with B truncated to the radius of u."""
    radius = u.truncation_radius_sq
    return g - apply_stokes_power(u, 1) - bilinear(u, u, radius)


def check_support(u: SpectralField, shells: Iterable[int]):
    outside = u.support().shells() - set(shells)
    if outside:
        raise SupportViolation(f"Field carries modes on shells {sorted(outside)}")


def rhs_compressed(u: SpectralField, spec: GalerkinSpec) -> SpectralField:
    """g - Au - ÊB(u,u) where Ê projects onto the union of `spec.mode_shells`."""
    check_support(u, spec.mode_shells)
    radius = spec.truncation_radius_sq
    b = project_shells(bilinear(u, u), spec.mode_shells)
    result = spec.force - apply_stokes_power(u, 1) - b
    return result.reindex(spec.modes, max(radius, result.truncation_radius_sq))


class GalerkinSystem:
    """
    A Galerkin system compiled to scalar-amplitude coordinates α(k).

    The nonlinear term becomes a sparse triad sum over unordered pairs

        β(k) = -Σ_{h+j=k} α(h)α(j)(h⊥·j)(|j|² - |h|²)/(|h||j||k|)

    restricted to the system modes, and the linear part is -|k|² α(k).
    Pairs on a common shell cancel and are not compiled. Amplitude arrays
    may carry leading batch axes; each row is advanced independently.
    """

    def __init__(self, modes: ModeSet, force: SpectralField, truncation_radius_sq: int, kind: str):
        self.modes = modes
        self.kind = kind
        self.truncation_radius_sq = truncation_radius_sq
        self.force = force
        self.force_norm = norm_As(force)

        self.eigenvalues = modes.norm_sq.astype(np.float64)
        self.linear = -self.eigenvalues
        self.forcing = to_scalar(force.reindex(modes, truncation_radius_sq)).values

        self._out, self._left, self._right, self._coef = _compile_triads(modes)
        self._batch_indices: dict[int, np.ndarray] = {}
        logger.debug(
            "Compiled %s Galerkin system: %d modes, %d triads",
            kind,
            len(modes),
            len(self._coef),
        )

    @classmethod
    def compressed(cls, spec: GalerkinSpec) -> GalerkinSystem:
        return cls(spec.modes, spec.force, spec.truncation_radius_sq, "compressed")

    @classmethod
    def full(cls, force: SpectralField, truncation_radius_sq: int) -> GalerkinSystem:
        modes = ModeSet.of(ball(truncation_radius_sq))
        if force.support().max_norm_sq > truncation_radius_sq:
            raise ShellViolation("Force lies outside the truncation ball")
        return cls(modes, force, truncation_radius_sq, "full")

    def __repr__(self):
        return f"<GalerkinSystem {self.kind} modes={len(self.modes)} shells={sorted(self.modes.shells())}>"

    # Scalar coordinates

    def nonlinear(self, alpha: np.ndarray) -> np.ndarray:
        """Scalar amplitudes of B(u,u), projected on the system modes."""
        n = len(self.modes)
        terms = (self._coef * alpha[..., self._left] * alpha[..., self._right]).reshape(-1)
        if alpha.ndim == 1:
            index, size = self._out, n
        else:
            rows = alpha.size // n
            index, size = self._batch_index(rows), rows * n
        summed = np.bincount(index, weights=terms.real, minlength=size) + 1j * np.bincount(
            index, weights=terms.imag, minlength=size
        )
        return summed.reshape(alpha.shape)

    def _batch_index(self, rows: int) -> np.ndarray:
        # Row r scatters into bins r*n .. r*n + n-1 in the flattened output.
        index = self._batch_indices.get(rows)
        if index is None:
            index = (np.arange(rows)[:, None] * len(self.modes) + self._out[None, :]).reshape(-1)
            self._batch_indices[rows] = index
        return index

    def explicit_part(self, alpha: np.ndarray) -> np.ndarray:
        return self.forcing - self.nonlinear(alpha)

    def rhs_amplitudes(self, alpha: np.ndarray) -> np.ndarray:
        return self.explicit_part(alpha) + self.linear * alpha

    # Field coordinates

    def amplitudes_of(self, u: SpectralField) -> np.ndarray:
        if self.kind == "compressed":
            check_support(u, self.modes.shells())
        return to_scalar(u.reindex(self.modes, self.truncation_radius_sq)).values

    def field_of(self, alpha: np.ndarray) -> SpectralField:
        return from_scalar(
            ScalarAmplitudeField(self.modes, alpha, self.truncation_radius_sq)
        )

    def rhs(self, u: SpectralField) -> SpectralField:
        return self.field_of(self.rhs_amplitudes(self.amplitudes_of(u)))


def _compile_triads(modes: ModeSet):
    out, left, right, coef = [], [], [], []
    vectors = list(modes)
    norms = np.sqrt(modes.norm_sq.astype(np.float64))
    for p, h in enumerate(vectors):
        for q in range(p + 1, len(vectors)):
            j = vectors[q]
            r = modes.get_index(h + j)
            if r is None:
                continue
            weight = h.perp.dot(j) * (j.norm_sq - h.norm_sq)
            if weight == 0:
                continue
            out.append(r)
            left.append(p)
            right.append(q)
            coef.append(-weight / (norms[p] * norms[q] * norms[r]))
    return (
        np.array(out, dtype=np.int64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(coef, dtype=np.float64),
    )
