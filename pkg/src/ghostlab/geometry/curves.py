"""
The (e, E) curve a chained ghost with λ = 2 has to lie on, together with the
boundary curves of the admissible region it is drawn against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ghostlab.errors import DomainError, NoAdmissibleBranch
from ghostlab.geometry.diagnostics import enstrophy_lower_bound

CURVE_COLUMNS = (
    "e",
    "E_curve",
    "E_sqrt_e",
    "E_eq_e",
    "E_2e",
    "E_boundary_parabola",
    "E_lower_bound",
)


@dataclass(frozen=True)
class CurvePoint:
    e: float
    E: float
    inside: bool  # strictly inside E² - G²E + eG² < 0
    endpoint: bool  # (0, 0) or (G²/4, G²/2)


@dataclass(frozen=True)
class ParabolaCurve:
    mu_plus: float
    G: float
    points: tuple[CurvePoint, ...]

    @property
    def coefficients(self) -> tuple[float, float, float]:
        """(a, b, c) of aE² + bE + c·e = 0."""
        mu, G2 = self.mu_plus, self.G * self.G
        return 2 - mu, (mu - 1) * G2, -mu * G2

    def residuals(self) -> np.ndarray:
        a, b, c = self.coefficients
        e = np.array([p.e for p in self.points])
        E = np.array([p.E for p in self.points])
        return a * E * E + b * E + c * e

    def admissible(self) -> bool:
        return all(p.inside or p.endpoint for p in self.points)


def parabola_point(mu_plus: float, G: float, e: float) -> float:
    """
    The root of (2 - μ₊)E² + (μ₊ - 1)G²E - μ₊G²e = 0 through the origin,
    written without cancellation.
    """
    G2 = G * G
    disc = (mu_plus - 1) ** 2 * G2 * G2 - 4 * (mu_plus - 2) * mu_plus * G2 * e
    return 2 * mu_plus * G2 * e / ((mu_plus - 1) * G2 + math.sqrt(max(disc, 0.0)))


def boundary_lower_root(G: float, e: float) -> float:
    """Lower root of E² - G²E + eG² = 0."""
    G2 = G * G
    return (G2 - math.sqrt(max(G2 * G2 - 4 * e * G2, 0.0))) / 2


def parabola_curve(mu_plus: float, G: float, e_grid: Iterable[float]) -> ParabolaCurve:
    if not mu_plus > 2:
        raise ValueError(f"μ₊ must exceed 2 (got {mu_plus})")
    if not G > 0:
        raise ValueError(f"G must be positive (got {G})")

    G2 = G * G
    e_max = G2 / 4
    tol = 1e-12 * G2
    points = []
    for e in e_grid:
        e = float(e)
        if e < -tol or e > e_max + tol:
            raise NoAdmissibleBranch(f"e = {e} lies outside [0, G²/4] = [0, {e_max}]")
        e = min(max(e, 0.0), e_max)
        E = parabola_point(mu_plus, G, e)
        endpoint = e <= tol or abs(e - e_max) <= tol
        boundary = E * E - G2 * E + e * G2
        inside = (
            boundary < 0
            and E > boundary_lower_root(G, e)
            and E < G * math.sqrt(e)
        )
        points.append(CurvePoint(e, E, inside, endpoint))
    return ParabolaCurve(mu_plus, G, tuple(points))


def curve_table(curve: ParabolaCurve, *, lambda_: int = 2, c_bg: float | None = None) -> np.ndarray:
    """
    One row per point with the columns in CURVE_COLUMNS. The lower bound
    column is nan where it is undefined or when no c_bg was supplied.
    """
    G = curve.G
    rows = []
    for p in curve.points:
        lower = math.nan
        if c_bg is not None:
            try:
                lower = enstrophy_lower_bound(p.e, lambda_, G, c_bg)
            except DomainError:
                pass
        rows.append(
            (
                p.e,
                p.E,
                G * math.sqrt(p.e),
                p.e,
                2 * p.e,
                boundary_lower_root(G, p.e),
                lower,
            )
        )
    return np.array(rows, dtype=np.float64).reshape(-1, len(CURVE_COLUMNS))


def default_e_grid(G: float, num: int = 101) -> Sequence[float]:
    return np.linspace(0.0, G * G / 4, num)
