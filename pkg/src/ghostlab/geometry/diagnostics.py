from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from ghostlab.core.field import SpectralField, to_scalar
from ghostlab.core.operators import apply_stokes_power, inner, norm_As
from ghostlab.errors import DomainError

if TYPE_CHECKING:
    from ghostlab.dynamics.integrator import Trajectory

RELATION_RTOL = 1e-9


@dataclass(frozen=True)
class GhostDiagnostics:
    """
    Scalars of a state u with force g:
    e=|u|², E=|A^½u|², P=|Au|², G²=|g|², |A^{3/2}u|², |u̇|² and (g,u).
    """

    e: float
    E: float
    P: float
    G_sq: float
    lambda_: int
    A32_sq: float = math.nan
    udot_sq: float = math.nan
    gu: float = math.nan

    @classmethod
    def ghost(cls, e: float, E: float, G_sq: float, lambda_: int, **kwargs) -> GhostDiagnostics:
        """Diagnostics with the ghost relations E = (g,u) and P = λE imposed."""
        return cls(e=e, E=E, P=lambda_ * E, G_sq=G_sq, lambda_=lambda_, gu=E, **kwargs)

    @property
    def G(self) -> float:
        return math.sqrt(self.G_sq)

    @property
    def eta(self) -> float:
        return self.E / self.G_sq

    def relation_defects(self) -> tuple[float, float]:
        """(E - (g,u), P - λE)"""
        return self.E - self.gu, self.P - self.lambda_ * self.E

    def ghost_relations_hold(self, rtol: float = RELATION_RTOL) -> bool:
        scale = max(self.G_sq, self.P, 1e-300)
        d_energy, d_enstrophy = self.relation_defects()
        return abs(d_energy) <= rtol * scale and abs(d_enstrophy) <= rtol * self.lambda_ * scale

    def set_quantity(self) -> float:
        """(λe - E)(E/e), reported alongside ghost checks without a decision."""
        if self.e == 0:
            return math.nan
        return (self.lambda_ * self.e - self.E) * self.E / self.e


def diagnostics(
    u: SpectralField, udot: SpectralField | None, g: SpectralField, lambda_: int
) -> GhostDiagnostics:
    return GhostDiagnostics(
        e=norm_As(u, 0) ** 2,
        E=norm_As(u, 0.5) ** 2,
        P=norm_As(u, 1) ** 2,
        G_sq=norm_As(g, 0) ** 2,
        lambda_=lambda_,
        A32_sq=norm_As(u, 1.5) ** 2,
        udot_sq=math.nan if udot is None else norm_As(udot, 0) ** 2,
        gu=inner(g, u),
    )


@dataclass(frozen=True)
class DiagnosticsSeries:
    times: np.ndarray
    e: np.ndarray
    E: np.ndarray
    P: np.ndarray
    A32_sq: np.ndarray
    udot_sq: np.ndarray
    gu: np.ndarray
    G_sq: float
    lambda_: int

    def __len__(self):
        return len(self.times)

    def at(self, i: int) -> GhostDiagnostics:
        return GhostDiagnostics(
            e=float(self.e[i]),
            E=float(self.E[i]),
            P=float(self.P[i]),
            G_sq=self.G_sq,
            lambda_=self.lambda_,
            A32_sq=float(self.A32_sq[i]),
            udot_sq=float(self.udot_sq[i]),
            gu=float(self.gu[i]),
        )

    @property
    def eta(self) -> np.ndarray:
        return self.E / self.G_sq


def series_diagnostics(traj: Trajectory, g: SpectralField, lambda_: int) -> DiagnosticsSeries:
    """Vectorized diagnostics over every sample of a trajectory."""
    g_alpha = to_scalar(g.reindex(traj.modes, traj.truncation_radius_sq)).values
    mu = traj.modes.norm_sq.astype(np.float64)
    power = np.abs(traj.amplitudes) ** 2
    return DiagnosticsSeries(
        times=traj.times,
        e=power.sum(axis=1),
        E=power @ mu,
        P=power @ mu**2,
        A32_sq=power @ mu**3,
        udot_sq=(np.abs(traj.rates) ** 2).sum(axis=1),
        gu=(traj.amplitudes @ np.conj(g_alpha)).real,
        G_sq=float(np.sum(np.abs(g_alpha) ** 2)),
        lambda_=lambda_,
    )


# Inequalities


class Comparison(str, Enum):
    STRICT = "strict"
    EQUAL = "equal"
    VIOLATED = "violated"


def _compare(lhs: float, rhs: float, scale: float, rtol: float = 1e-12) -> Comparison:
    """Classify lhs < rhs."""
    gap = rhs - lhs
    if abs(gap) <= rtol * scale:
        return Comparison.EQUAL
    return Comparison.STRICT if gap > 0 else Comparison.VIOLATED


@dataclass(frozen=True)
class InequalityReport:
    palinstrophy_below_force: Comparison  # P < G²
    enstrophy_below_lambda_energy: Comparison  # E < λe
    enstrophy_sq_below_energy_force: Comparison  # E² < eG²
    enstrophy_sq_below_energy_palinstrophy: Comparison  # E² < eP
    energy_bounds_hold: bool  # E <= λe <= λE

    @property
    def comparisons(self) -> tuple[Comparison, ...]:
        return (
            self.palinstrophy_below_force,
            self.enstrophy_below_lambda_energy,
            self.enstrophy_sq_below_energy_force,
            self.enstrophy_sq_below_energy_palinstrophy,
        )

    @property
    def all_strict(self) -> bool:
        return all(c is Comparison.STRICT for c in self.comparisons)

    @property
    def all_equal(self) -> bool:
        return all(c is Comparison.EQUAL for c in self.comparisons)

    @property
    def consistent(self) -> bool:
        """The four statements are equivalent; they must agree."""
        return self.all_strict or self.all_equal


def inequality_report(d: GhostDiagnostics) -> InequalityReport:
    e, E, P, G2, lam = d.e, d.E, d.P, d.G_sq, d.lambda_
    square_scale = max(G2 * G2, E * E, e * P, 1e-300)
    linear_scale = max(G2, P, lam * e, 1e-300)
    tol = 1e-12 * linear_scale
    return InequalityReport(
        palinstrophy_below_force=_compare(P, G2, linear_scale),
        enstrophy_below_lambda_energy=_compare(E, lam * e, linear_scale),
        enstrophy_sq_below_energy_force=_compare(E * E, e * G2, square_scale),
        enstrophy_sq_below_energy_palinstrophy=_compare(E * E, e * P, square_scale),
        energy_bounds_hold=E <= lam * e + tol and lam * e <= lam * E + tol,
    )


def perturbation_bounds(d: GhostDiagnostics) -> tuple[float, float]:
    """
    (δ_P, δ_E) = (√(G²-P), √(λ(λe-E))).

    For a ghost δ_P = |A(u - u*)| and δ_E = |Au - λu|.
    """
    gap_P = d.G_sq - d.P
    gap_E = d.lambda_ * (d.lambda_ * d.e - d.E)
    tol = 1e-12 * max(d.G_sq, d.P, d.lambda_**2 * d.e, 1e-300)
    if gap_P < -tol or gap_E < -tol:
        raise ValueError("perturbation_bounds needs G² >= P and λe >= E")
    return math.sqrt(max(gap_P, 0.0)), math.sqrt(max(gap_E, 0.0))


def enstrophy_lower_bound(e: float, lambda_: int, G: float, c_bg: float) -> float:
    """E >= G²/(λ + c_bg·G·√ln(eλ)), valid for eλ > 1."""
    if not e * lambda_ > 1:
        raise DomainError(f"Need eλ > 1 for the logarithm, got eλ = {e * lambda_}")
    if c_bg < 0:
        raise ValueError("c_bg must be non-negative")
    return G * G / (lambda_ + c_bg * G * math.sqrt(math.log(e * lambda_)))


def stationary_state(g: SpectralField, lambda_: int) -> SpectralField:
    """u* = g/λ"""
    return g / lambda_


def stokes_residual(u: SpectralField, lambda_: int) -> float:
    """|Au - λu|"""
    return norm_As(apply_stokes_power(u, 1) - lambda_ * u)
