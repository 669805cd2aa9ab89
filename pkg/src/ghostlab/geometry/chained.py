"""
Chained ghosts: A²u = γg + βu + αAu with constant coefficients.

H₀₁₂ = span{g, u, Au}. Its Gram matrix M is written with the ghost
relations (g,u) = E and (g,Au) = λE = P imposed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from ghostlab.core.field import SpectralField
from ghostlab.core.lattice import shells_mode_set
from ghostlab.core.operators import (
    EigenforceSpec,
    apply_stokes_power,
    bilinear,
    eigenspace_project,
    inner,
    make_eigenforce,
    norm_As,
    random_field,
)
from ghostlab.errors import (
    ChainedInvariantViolation,
    DecompositionResidual,
    DegenerateDiagnostics,
    SingularGram,
)
from ghostlab.geometry.diagnostics import DiagnosticsSeries, GhostDiagnostics

if TYPE_CHECKING:
    from ghostlab.dynamics.integrator import Trajectory

logger = logging.getLogger(__name__)

DENOMINATOR_RTOL = 1e-12
DECOMPOSITION_RTOL = 1e-10


@dataclass(frozen=True)
class GramMatrix:
    matrix: np.ndarray
    det: float  # (λe - E)·E·(G² - P)


def gram_matrix(d: GhostDiagnostics) -> GramMatrix:
    e, E, P, G2 = d.e, d.E, d.P, d.G_sq
    matrix = np.array(
        [
            [G2, E, P],
            [E, e, E],
            [P, E, P],
        ]
    )
    return GramMatrix(matrix, (d.lambda_ * e - E) * E * (G2 - P))


@dataclass(frozen=True)
class H012Projection:
    omega: np.ndarray  # P₀₁₂B(u,u) = ω₁g + ω₂u + ω₃Au
    norm_sq: float  # |P₀₁₂B(u,u)|²

    def closed_form_defect(self) -> float:
        """Distance of ω from (1, 0, -1), i.e. from P₀₁₂B(u,u) = g - Au."""
        return float(np.max(np.abs(self.omega - np.array([1.0, 0.0, -1.0]))))


def project_B_onto_H012(d: GhostDiagnostics) -> H012Projection:
    gram = gram_matrix(d)
    scale = max(d.G_sq, d.P, 1e-300) ** 3
    if not gram.det > DENOMINATOR_RTOL * scale:
        raise SingularGram(f"det(M) = {gram.det} (u is at or near u*)")
    rhs = np.array([d.G_sq - d.P, 0.0, 0.0])
    omega = np.linalg.solve(gram.matrix, rhs)
    return H012Projection(omega, float(omega @ gram.matrix @ omega))


@dataclass(frozen=True)
class ChainedCoefficients:
    gamma: float
    beta: float
    alpha: float
    mu_minus: float
    mu_plus: float
    eta: float
    lambda_: int
    discriminant: float  # α² + 4β

    def root_identity_defects(self) -> tuple[float, float]:
        """(μ₊ + μ₋ - α, μ₊μ₋ + β)"""
        return (
            self.mu_plus + self.mu_minus - self.alpha,
            self.mu_plus * self.mu_minus + self.beta,
        )

    def residual(self, u: SpectralField, g: SpectralField) -> float:
        """|A²u - γg - βu - αAu|"""
        a2u = apply_stokes_power(u, 2)
        au = apply_stokes_power(u, 1)
        return norm_As(a2u - self.gamma * g - self.beta * u - self.alpha * au)


def chained_coefficients(d: GhostDiagnostics, *, strict: bool = True) -> ChainedCoefficients:
    """
    γ = (λP - |A^{3/2}u|²)/(G² - P), β = (λP - |A^{3/2}u|²)/(λe - E),
    α = P/E - γ - (e/E)β (= λ - γ - (e/E)β under P = λE).

    `strict` asserts the sign pattern and root ordering of a nonstationary
    ghost; trajectory scans use strict=False and only need the numbers.
    """
    e, E, P, G2, lam = d.e, d.E, d.P, d.G_sq, d.lambda_
    if math.isnan(d.A32_sq):
        raise ValueError("chained coefficients need |A^{3/2}u|²")
    cutoff = DENOMINATOR_RTOL * G2
    for name, value in (("G² - P", G2 - P), ("λe - E", lam * e - E), ("E", E)):
        if abs(value) <= cutoff:
            raise DegenerateDiagnostics(f"{name} = {value:.3e} is below {cutoff:.1e}")
    rho = lam * P - d.A32_sq
    if abs(rho) <= DENOMINATOR_RTOL * max(lam * P, d.A32_sq):
        raise DegenerateDiagnostics("λP = |A^{3/2}u|², which happens only at u*")

    gamma = rho / (G2 - P)
    beta = rho / (lam * e - E)
    alpha = P / E - gamma - (e / E) * beta
    discriminant = alpha * alpha + 4 * beta
    if discriminant >= 0:
        root = math.sqrt(discriminant)
        mu_minus, mu_plus = (alpha - root) / 2, (alpha + root) / 2
    else:
        mu_minus = mu_plus = math.nan

    cc = ChainedCoefficients(
        gamma=gamma,
        beta=beta,
        alpha=alpha,
        mu_minus=mu_minus,
        mu_plus=mu_plus,
        eta=E / G2,
        lambda_=lam,
        discriminant=discriminant,
    )
    if strict:
        _check_invariants(cc)
    return cc


def chained_coefficient_series(s: DiagnosticsSeries) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (γ, β, α) at every sample of a series, computed as `chained_coefficients`
    does with strict=False. Samples where it would raise DegenerateDiagnostics
    are nan.
    """
    e, E, P, A32, G2, lam = s.e, s.E, s.P, s.A32_sq, s.G_sq, s.lambda_
    cutoff = DENOMINATOR_RTOL * G2
    rho = lam * P - A32
    singular = (
        (np.abs(G2 - P) <= cutoff)
        | (np.abs(lam * e - E) <= cutoff)
        | (np.abs(E) <= cutoff)
        | (np.abs(rho) <= DENOMINATOR_RTOL * np.maximum(lam * P, A32))
        | np.isnan(A32)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = rho / (G2 - P)
        beta = rho / (lam * e - E)
        alpha = P / E - gamma - (e / E) * beta
    for values in (gamma, beta, alpha):
        values[singular] = np.nan
    return gamma, beta, alpha


def _check_invariants(cc: ChainedCoefficients):
    lam = cc.lambda_
    if not (cc.gamma < 0 and cc.beta < 0 and cc.alpha > lam):
        raise ChainedInvariantViolation(
            f"Expected γ < 0, β < 0, α > λ; got γ={cc.gamma}, β={cc.beta}, α={cc.alpha}"
        )
    if cc.discriminant <= 0:
        if lam == 2:
            raise ChainedInvariantViolation(f"α² + 4β = {cc.discriminant} must be positive")
        logger.warning("α² + 4β = %g is not positive for λ = %d", cc.discriminant, lam)
        return
    tol = 1e-12 * lam
    if not (cc.mu_minus < lam - tol and cc.mu_plus > lam + tol):
        raise ChainedInvariantViolation(
            f"Expected μ₋ < λ < μ₊; got μ₋={cc.mu_minus}, μ₊={cc.mu_plus}"
        )


# λ = 2


def _require_lambda_two(d: GhostDiagnostics):
    if d.lambda_ != 2:
        raise ValueError(f"This relation holds for λ = 2 only (got λ = {d.lambda_})")


def beta_from_energies(d: GhostDiagnostics) -> float:
    """β = -1/(1 - e/E - (2e - E)/(G² - P)) for a chained ghost with λ = 2."""
    _require_lambda_two(d)
    return -1.0 / (1.0 - d.e / d.E - (2 * d.e - d.E) / (d.G_sq - d.P))


def palinstrophy_identity_defect(d: GhostDiagnostics) -> float:
    """2P - |A^{3/2}u|² + 1/((1 - e/E)/(2e - E) - 1/(G² - P)) for λ = 2."""
    _require_lambda_two(d)
    expected = -1.0 / ((1.0 - d.e / d.E) / (2 * d.e - d.E) - 1.0 / (d.G_sq - d.P))
    return 2 * d.P - d.A32_sq - expected


# Decomposition


@dataclass(frozen=True)
class ChainedDecomposition:
    u_plus: SpectralField
    u_minus: SpectralField
    eta: float
    residual: float  # |u - u₊ - u₋ - ηg|
    u_plus_sq: float
    u_minus_sq: float
    u_plus_sq_formula: float
    u_minus_sq_formula: float
    balance: float  # μ₊|u₊|²(λ - μ₊) + μ₋|u₋|²(λ - μ₋)
    # |u₊|² = 0 turns the norm formula into P = G², i.e. u = u*.
    forces_stationary: bool = field(default=False)


def _shell_of(mu: float, name: str) -> int:
    rounded = int(round(mu))
    if not math.isfinite(mu) or abs(mu - rounded) > 1e-8 * max(abs(mu), 1.0):
        raise DecompositionResidual(f"{name} = {mu} is not an eigenvalue shell")
    return rounded


def decompose_chained(
    u: SpectralField, g: SpectralField, cc: ChainedCoefficients
) -> ChainedDecomposition:
    """u = u₊ + u₋ + ηg with u± the components on the shells μ±."""
    lam = cc.lambda_
    mu_plus = _shell_of(cc.mu_plus, "μ₊")
    mu_minus = _shell_of(cc.mu_minus, "μ₋")

    outside = u.support().shells() - {mu_minus, lam, mu_plus}
    if outside:
        raise DecompositionResidual(
            f"u has support on shells {sorted(outside)} outside {{{mu_minus}, {lam}, {mu_plus}}}"
        )

    u_plus = eigenspace_project(u, mu_plus)
    u_minus = eigenspace_project(u, mu_minus)
    residual = norm_As(u - u_plus - u_minus - cc.eta * g)
    scale = max(norm_As(u), norm_As(g), 1e-300)
    if residual > DECOMPOSITION_RTOL * scale:
        raise DecompositionResidual(f"|u - u₊ - u₋ - ηg| = {residual:.3e}")

    E = norm_As(u, 0.5) ** 2
    P = norm_As(u, 1) ** 2
    G2 = norm_As(g) ** 2
    base = E * (1 - P / G2)
    u_plus_sq = norm_As(u_plus) ** 2
    u_minus_sq = norm_As(u_minus) ** 2
    return ChainedDecomposition(
        u_plus=u_plus,
        u_minus=u_minus,
        eta=cc.eta,
        residual=residual,
        u_plus_sq=u_plus_sq,
        u_minus_sq=u_minus_sq,
        u_plus_sq_formula=(lam - mu_minus) / (mu_plus * (mu_plus - mu_minus)) * base,
        u_minus_sq_formula=(mu_plus - lam) / (mu_minus * (mu_plus - mu_minus)) * base,
        balance=mu_plus * u_plus_sq * (lam - mu_plus) + mu_minus * u_minus_sq * (lam - mu_minus),
        forces_stationary=u_plus_sq <= DECOMPOSITION_RTOL * scale * scale,
    )


# Synthetic states


@dataclass(frozen=True)
class SyntheticChainedState:
    """
    u = u₊ + u₋ + ηg on the shells μ₋ < λ < μ₊ with norms chosen so that
    E = (g,u) and P = λE. Not a solution of the evolution equation.
    """

    u: SpectralField
    u_plus: SpectralField
    u_minus: SpectralField
    g: SpectralField
    eta: float
    mu_minus: int
    mu_plus: int
    lambda_: int

    def with_phases(self, phase_plus: float, phase_minus: float) -> SyntheticChainedState:
        """Rotate the phases of u₊ and u₋ keeping every mode modulus."""
        u_plus = _rotate(self.u_plus, phase_plus)
        u_minus = _rotate(self.u_minus, phase_minus)
        return SyntheticChainedState(
            u=u_plus + u_minus + self.eta * self.g,
            u_plus=u_plus,
            u_minus=u_minus,
            g=self.g,
            eta=self.eta,
            mu_minus=self.mu_minus,
            mu_plus=self.mu_plus,
            lambda_=self.lambda_,
        )

    def orthogonal_rate(self, rng: np.random.Generator, shell_value: int, norm: float) -> SpectralField:
        """A u̇ on a shell outside the state's support, orthogonal to g, u and Au."""
        if shell_value in (self.mu_minus, self.lambda_, self.mu_plus):
            raise ValueError("The rate shell must differ from the state shells")
        return random_field(
            shells_mode_set([shell_value]),
            rng,
            norm=norm,
            truncation_radius_sq=max(shell_value, self.u.truncation_radius_sq),
        )


def _rotate(u: SpectralField, phase: float) -> SpectralField:
    # α(k) -> α(k)·e^{iφ·sign(k)} keeps reality and every mode modulus.
    signs = np.array([1.0 if (k.k1, k.k2) > (0, 0) else -1.0 for k in u.modes])
    rotation = np.exp(1j * phase * signs)
    return SpectralField(u.modes, u.values * rotation[:, None], u.truncation_radius_sq)


def synthetic_chained_state(
    rng: np.random.Generator,
    *,
    mu_minus: int = 1,
    lambda_: int = 2,
    mu_plus: int = 5,
    eta: float = 0.25,
    G: float = 1.0,
    force: SpectralField | None = None,
) -> SyntheticChainedState:
    if not mu_minus < lambda_ < mu_plus:
        raise ValueError("Need μ₋ < λ < μ₊")
    if not 0 < eta < 1 / lambda_:
        raise ValueError(f"η must lie in (0, 1/λ) = (0, {1 / lambda_})")
    g = force if force is not None else make_eigenforce(EigenforceSpec(lambda_, G))
    G2 = norm_As(g) ** 2

    remainder = eta * G2 * (1 - lambda_ * eta)
    plus_sq = remainder * (lambda_ - mu_minus) / (mu_plus * (mu_plus - mu_minus))
    minus_sq = remainder * (mu_plus - lambda_) / (mu_minus * (mu_plus - mu_minus))

    radius = mu_plus
    u_plus = random_field(
        shells_mode_set([mu_plus]), rng, norm=math.sqrt(plus_sq), truncation_radius_sq=radius
    )
    u_minus = random_field(
        shells_mode_set([mu_minus]), rng, norm=math.sqrt(minus_sq), truncation_radius_sq=radius
    )
    g = g.with_radius(max(g.truncation_radius_sq, radius))
    return SyntheticChainedState(
        u=u_plus + u_minus + eta * g,
        u_plus=u_plus,
        u_minus=u_minus,
        g=g,
        eta=eta,
        mu_minus=mu_minus,
        mu_plus=mu_plus,
        lambda_=lambda_,
    )


# Corollary-type constancy over trajectories


@dataclass(frozen=True)
class ConstancyReport:
    s_values: tuple[float, ...]
    norm_deviation: dict[float, float]  # max_t ||A^s u(t)| - |A^s u(0)||
    pairing_deviation: dict[float, float]  # same for (A^{2s}u, B(u,u))

    def worst(self) -> float:
        return max([*self.norm_deviation.values(), *self.pairing_deviation.values()], default=0.0)


def powers_constancy_check(traj: Trajectory, s_values: Sequence[float]) -> ConstancyReport:
    states = traj.states
    pairs = [bilinear(u, u) for u in states]
    norm_deviation, pairing_deviation = {}, {}
    for s in s_values:
        norms = np.array([norm_As(u, s) for u in states])
        pairing = np.array(
            [inner(apply_stokes_power(u, 2 * s), b) for u, b in zip(states, pairs)]
        )
        norm_deviation[s] = float(np.max(np.abs(norms - norms[0]), initial=0.0))
        pairing_deviation[s] = float(np.max(np.abs(pairing - pairing[0]), initial=0.0))
    return ConstancyReport(tuple(s_values), norm_deviation, pairing_deviation)
