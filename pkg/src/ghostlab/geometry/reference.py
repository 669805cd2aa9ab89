"""
Four-dimensional reference model of a ghost: the SPD matrix Ã acting like A
on the old-frame coordinates, and a tensor B̃ reproducing B(u,u) there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ghostlab.errors import DegenerateCoordinates, DegenerateDiagnostics, NotPositiveDefinite
from ghostlab.geometry.diagnostics import GhostDiagnostics


def stokes_matrix(d: GhostDiagnostics, b_factor: float = 2.0) -> np.ndarray:
    """
    Ã on indices (0, 1, 2, 3):

        [[λ, 0, 0, 0],
         [0, a, 0, c],
         [0, 0, 1, 0],
         [0, c, 0, b]]

    with a = (E - EP/G²)/(e - E²/G²), c = |Au₃|/√(e - E²/G²) and b = s·c²/a.
    """
    if not b_factor > 1:
        raise NotPositiveDefinite(f"b_factor must exceed 1 (got {b_factor}); ab - c² = 0 at s = 1")
    e, E, P, G2 = d.e, d.E, d.P, d.G_sq
    spread = e - E * E / G2
    offset = E - E * P / G2
    if not spread > 0 or not offset > 0:
        raise DegenerateDiagnostics("Need e > E²/G² and P < G² for the reference matrix")
    a = offset / spread
    radicand = P - P * P / G2 - offset * offset / spread
    if radicand <= 0:
        raise NotPositiveDefinite("Au has no component outside span{g, u}; c vanishes")
    c = math.sqrt(radicand) / math.sqrt(spread)
    b = b_factor * c * c / a

    matrix = np.zeros((4, 4))
    matrix[0, 0] = d.lambda_
    matrix[1, 1] = a
    matrix[2, 2] = 1.0
    matrix[3, 3] = b
    matrix[1, 3] = matrix[3, 1] = c
    return matrix


def leading_minors(matrix: np.ndarray) -> list[float]:
    return [float(np.linalg.det(matrix[:n, :n])) for n in range(1, len(matrix) + 1)]


def nonlinear_tensor(eta0: float, eta1: float, betas: Sequence[float]) -> np.ndarray:
    """
    Entries B[h, j, k] = B^h_{jk} of a bilinear map on R⁴ with B̃(ũ,ũ) = β for
    ũ = (η₀, η₁, 0, 0). Unprescribed entries are zero.
    """
    scale = max(abs(eta0), abs(eta1))
    if scale == 0 or min(abs(eta0), abs(eta1)) < 1e-12 * scale:
        raise DegenerateCoordinates(f"η₀={eta0}, η₁={eta1} must both be nonzero")
    beta0, beta1, beta2, beta3 = (float(b) for b in betas)

    B = np.zeros((4, 4, 4))
    B[0, 0, 1] = beta0 / (eta0 * eta1)
    B[1, 1, 0] = beta1 / (eta0 * eta1)
    B[2, 0, 0] = beta2 / eta0**2
    B[3, 0, 0] = beta3 / eta0**2
    B[0, 2, 0] = B[2, 0, 0]
    B[0, 0, 2] = -B[2, 0, 0]
    B[0, 3, 0] = B[3, 0, 0]
    B[0, 0, 3] = -B[3, 0, 0]
    return B


def apply_tensor(B: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("hjk,j,k->h", B, x, y)


@dataclass(frozen=True)
class TensorCheck:
    reproduction: float  # |B̃(ũ,ũ) - β|
    skew: float  # max |(B̃(ũ,v),w) + (B̃(ũ,w),v)|
    symmetry: float  # max |B^h_{jk} - B^j_{hk}|
    enstrophy: float  # max |(B̃(Ãv,v),w) - (B̃(w,v),Ãv)|

    def worst(self) -> float:
        return max(self.reproduction, self.skew, self.symmetry, self.enstrophy)


def check_tensor(
    B: np.ndarray,
    u: np.ndarray,
    betas: Sequence[float],
    stokes: np.ndarray,
    rng: np.random.Generator,
    samples: int = 32,
) -> TensorCheck:
    """Residuals of the defining relations of B̃ on random 4-vectors."""
    betas = np.asarray(betas, dtype=np.float64)
    reproduction = float(np.max(np.abs(apply_tensor(B, u, u) - betas)))
    symmetry = float(np.max(np.abs(B - B.transpose(1, 0, 2))))
    skew = enstrophy = 0.0
    for _ in range(samples):
        v, w = rng.standard_normal(4), rng.standard_normal(4)
        skew = max(skew, abs(apply_tensor(B, u, v) @ w + apply_tensor(B, u, w) @ v))
        av = stokes @ v
        enstrophy = max(enstrophy, abs(apply_tensor(B, av, v) @ w - apply_tensor(B, w, v) @ av))
    return TensorCheck(reproduction, float(skew), symmetry, float(enstrophy))
