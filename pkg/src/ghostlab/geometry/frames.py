from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ghostlab.core.field import SpectralField
from ghostlab.core.operators import apply_stokes_power, inner, norm_As
from ghostlab.errors import DegenerateDiagnostics, FrameDegenerate
from ghostlab.geometry.diagnostics import GhostDiagnostics

DEGENERACY_RTOL = 1e-10


class FrameKind(str, Enum):
    OLD = "old"  # g, u, u̇, Au
    NEW = "new"  # g, u, Au, A²u


@dataclass(frozen=True)
class Frame:
    vectors: tuple[SpectralField, ...]
    kind: FrameKind

    def __post_init__(self):
        if len(self.vectors) != 4:
            raise ValueError("A frame has exactly four vectors")

    def coordinates(self, v: SpectralField) -> np.ndarray:
        return np.array([inner(f, v) for f in self.vectors])

    def combine(self, coordinates: Sequence[float]) -> SpectralField:
        out = coordinates[0] * self.vectors[0]
        for c, f in zip(coordinates[1:], self.vectors[1:]):
            out = out + c * f
        return out

    def project(self, v: SpectralField) -> SpectralField:
        return self.combine(self.coordinates(v))

    def gram(self) -> np.ndarray:
        return np.array([[inner(a, b) for b in self.vectors] for a in self.vectors])

    def orthonormality_defect(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(4))))


def _orthonormalize(candidates: Sequence[SpectralField], names: Sequence[str]) -> list[SpectralField]:
    frame: list[SpectralField] = []
    for index, (v, name) in enumerate(zip(candidates, names)):
        size = norm_As(v)
        w = v
        # Two passes keep the frame orthonormal to round-off
        for _ in range(2):
            for f in frame:
                w = w - inner(f, w) * f
        residual = norm_As(w)
        if size == 0 or residual <= DEGENERACY_RTOL * size:
            raise FrameDegenerate(
                f"{name} lies in the span of the previous frame vectors", index=index
            )
        frame.append(w / residual)
    return frame


def old_frame(u: SpectralField, udot: SpectralField, g: SpectralField) -> Frame:
    """f₀ = g/G, f₁ from u, f₂ = u̇/|u̇|, f₃ from Au."""
    vectors = _orthonormalize([g, u, udot, apply_stokes_power(u, 1)], ["g", "u", "u̇", "Au"])
    return Frame(tuple(vectors), FrameKind.OLD)


def fit_chained_coefficients(u: SpectralField, g: SpectralField) -> tuple[float, float, float]:
    """Least-squares (γ, β, α) with A²u ≈ γg + βu + αAu."""
    au = apply_stokes_power(u, 1)
    a2u = apply_stokes_power(u, 2)
    basis = [g, u, au]
    gram = np.array([[inner(a, b) for b in basis] for a in basis])
    rhs = np.array([inner(b, a2u) for b in basis])
    gamma, beta, alpha = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    return float(gamma), float(beta), float(alpha)


def new_frame(u: SpectralField, g: SpectralField) -> Frame:
    """
    f₀ = g/G, f₁ from u, f₂ from Au, f₃ from A²u.

    Degenerates exactly when A²u ∈ span{g, u, Au}; the error then carries
    the fitted chained coefficients (γ, β, α).
    """
    au = apply_stokes_power(u, 1)
    a2u = apply_stokes_power(u, 2)
    try:
        vectors = _orthonormalize([g, u, au, a2u], ["g", "u", "Au", "A²u"])
    except FrameDegenerate as exc:
        if exc.index == 3:
            raise FrameDegenerate(
                str(exc), index=3, coefficients=fit_chained_coefficients(u, g)
            ) from exc
        raise
    return Frame(tuple(vectors), FrameKind.NEW)


@dataclass(frozen=True)
class OldFrameCoordinates:
    u: np.ndarray
    Au: np.ndarray
    g: np.ndarray
    udot: np.ndarray
    B: np.ndarray


def old_frame_coordinates(d: GhostDiagnostics) -> OldFrameCoordinates:
    """Closed-form coordinates of u, Au, g, u̇ and B(u,u) in the old frame of a ghost."""
    e, E, P, G2 = d.e, d.E, d.P, d.G_sq
    G = math.sqrt(G2)
    if math.isnan(d.udot_sq):
        raise ValueError("old frame coordinates need |u̇|²")
    spread = e - E * E / G2
    if not spread > 0:
        raise DegenerateDiagnostics("e - E²/G² must be positive (u ∥ g otherwise)")
    eta1 = math.sqrt(spread)
    au1 = (E - E * P / G2) / eta1
    radicand = P - P * P / G2 - au1 * au1
    if radicand < -1e-12 * max(P, 1e-300):
        raise DegenerateDiagnostics("Inconsistent diagnostics: |Au|² below its projections")
    au3 = math.sqrt(max(radicand, 0.0))
    udot = math.sqrt(d.udot_sq)
    return OldFrameCoordinates(
        u=np.array([E / G, eta1, 0.0, 0.0]),
        Au=np.array([P / G, au1, 0.0, au3]),
        g=np.array([G, 0.0, 0.0, 0.0]),
        udot=np.array([0.0, 0.0, udot, 0.0]),
        B=np.array([G - P / G, -au1, -udot, -au3]),
    )


@dataclass(frozen=True)
class FrameTransport:
    """
    W = Σ_j f̃_j ⊗ f_j mapping frame_a onto frame_b.

    `matrix[i, j] = (f_i, f̃_j)` are the overlaps of the two frames. They
    represent W only when both frames span the same subspace; otherwise the
    matrix is not orthogonal and `unitarity_defect` measures by how much.
    """

    frame_a: Frame
    frame_b: Frame
    matrix: np.ndarray

    def apply(self, v: SpectralField) -> SpectralField:
        return self.frame_b.combine(self.frame_a.coordinates(v))

    def transport_coordinates(self, coordinates: Sequence[float]) -> SpectralField:
        return self.frame_b.combine(coordinates)

    def unitarity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix.T - np.eye(4))))


def frame_transport(frame_a: Frame, frame_b: Frame) -> FrameTransport:
    matrix = np.array([[inner(fa, fb) for fb in frame_b.vectors] for fa in frame_a.vectors])
    return FrameTransport(frame_a, frame_b, matrix)
