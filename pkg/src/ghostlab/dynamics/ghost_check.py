"""
Computational search for chained ghosts.

A run integrates the compressed Galerkin system from Êu₀ and watches two
smallness tests along the trajectory: |η'(t)| with η = |A^½u|²/G², and
the residual |A²u - γg - βu - αAu| of the chained relation. Passing both
only makes a run a candidate.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from ghostlab.core.field import SpectralField, to_scalar
from ghostlab.core.operators import (
    apply_stokes_power,
    bilinear,
    inner,
    norm_As,
    project_shells,
    random_field,
)
from ghostlab.dynamics.galerkin import GalerkinSpec, GalerkinSystem
from ghostlab.dynamics.integrator import Trajectory, integrate, integrate_ensemble
from ghostlab.errors import DegenerateDiagnostics
from ghostlab.geometry.chained import SyntheticChainedState, chained_coefficient_series
from ghostlab.geometry.diagnostics import DiagnosticsSeries, series_diagnostics

logger = logging.getLogger(__name__)

DEFAULT_EPS_ETA_FACTOR = 1e-6
DEFAULT_EPS_CHAINED = 1e-3
DEFAULT_BATCH_SIZE = 64


class Verdict(str, Enum):
    CANDIDATE = "CandidateChainedGhost"
    NOT_GHOST = "NotGhost"
    CONVERGED = "ConvergedToSteadyState"


@dataclass(frozen=True)
class GhostCheckReport:
    series: DiagnosticsSeries
    eta_derivative: np.ndarray
    chained_residual: np.ndarray
    eta_derivative_max: float
    final_rate_norm: float
    eps_eta: float
    eps_chained: float
    verdict: Verdict
    seed: int | None = None

    @property
    def times(self) -> np.ndarray:
        return self.series.times

    @property
    def eta_series(self) -> np.ndarray:
        return np.column_stack([self.series.times, self.series.eta])

    @property
    def chained_residual_series(self) -> np.ndarray:
        return np.column_stack([self.series.times, self.chained_residual])

    @property
    def chained_residual_max(self) -> float:
        if np.all(np.isnan(self.chained_residual)):
            return math.nan
        return float(np.nanmax(self.chained_residual))

    @property
    def set_quantity(self) -> float:
        """(λe - E)(E/e) at the last sample."""
        return self.series.at(len(self.series) - 1).set_quantity()

    def rows(self) -> np.ndarray:
        """t, e, E, P, |A^{3/2}u|², η, chained residual"""
        s = self.series
        return np.column_stack([s.times, s.e, s.E, s.P, s.A32_sq, s.eta, self.chained_residual])


def chained_residual_series(traj: Trajectory, g: SpectralField, series: DiagnosticsSeries) -> np.ndarray:
    """
    |A²u - γg - βu - αAu| per sample with (γ, β, α) evaluated from that
    sample's diagnostics; nan where the coefficients are singular.
    """
    mu = traj.modes.norm_sq.astype(np.float64)
    g_alpha = to_scalar(g.reindex(traj.modes, traj.truncation_radius_sq)).values
    gamma, beta, alpha = (c[:, None] for c in chained_coefficient_series(series))
    residual = (mu * mu - alpha * mu - beta) * traj.amplitudes - gamma * g_alpha
    return np.sqrt(np.sum(np.abs(residual) ** 2, axis=1))


def _time_derivative(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    if len(times) < 2:
        return np.zeros_like(values)
    return np.gradient(values, times, edge_order=2 if len(times) > 2 else 1)


def assess_trajectory(
    traj: Trajectory,
    g: SpectralField,
    lambda_: int,
    *,
    eps_eta: float | None = None,
    eps_chained: float = DEFAULT_EPS_CHAINED,
    seed: int | None = None,
) -> GhostCheckReport:
    series = series_diagnostics(traj, g, lambda_)
    if eps_eta is None:
        eps_eta = DEFAULT_EPS_ETA_FACTOR * series.G_sq
    if not eps_eta > 0 or not eps_chained > 0:
        raise ValueError("Ghost-check thresholds must be positive")

    eta_derivative = _time_derivative(series.eta, series.times)
    eta_derivative_max = float(np.max(np.abs(eta_derivative), initial=0.0))
    residual = chained_residual_series(traj, g, series)
    final_rate_norm = math.sqrt(float(series.udot_sq[-1]))

    if final_rate_norm < eps_eta:
        verdict = Verdict.CONVERGED
    elif np.all(np.isnan(residual)):
        raise DegenerateDiagnostics(
            "Chained coefficients are singular at every sample of a non-converged run"
        )
    elif eta_derivative_max < eps_eta and np.nanmax(residual) < eps_chained:
        verdict = Verdict.CANDIDATE
    else:
        verdict = Verdict.NOT_GHOST

    logger.debug(
        "Ghost check%s: max|η'|=%.3e, max residual=%.3e, |u̇(T)|=%.3e -> %s",
        "" if seed is None else f" (seed {seed})",
        eta_derivative_max,
        np.nanmax(residual) if not np.all(np.isnan(residual)) else math.nan,
        final_rate_norm,
        verdict.value,
    )
    return GhostCheckReport(
        series=series,
        eta_derivative=eta_derivative,
        chained_residual=residual,
        eta_derivative_max=eta_derivative_max,
        final_rate_norm=final_rate_norm,
        eps_eta=eps_eta,
        eps_chained=eps_chained,
        verdict=verdict,
        seed=seed,
    )


def ghost_check(
    u0: SpectralField,
    spec: GalerkinSpec,
    T: float,
    dt: float,
    eps_eta: float | None = None,
    eps_chained: float = DEFAULT_EPS_CHAINED,
    *,
    sample_every: int = 10,
    seed: int | None = None,
) -> GhostCheckReport:
    start = project_shells(u0, spec.mode_shells)
    system = GalerkinSystem.compressed(spec)
    traj = integrate(start, system, T, dt, sample_every)
    return assess_trajectory(
        traj,
        spec.force,
        spec.lambda_,
        eps_eta=eps_eta,
        eps_chained=eps_chained,
        seed=seed,
    )


def ghost_check_ensemble(
    seeds: Iterable[int],
    spec: GalerkinSpec,
    T: float,
    dt: float,
    eps_eta: float | None = None,
    eps_chained: float = DEFAULT_EPS_CHAINED,
    *,
    u0_norm: float | None = None,
    sample_every: int = 10,
    jobs: int = 1,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> list[GhostCheckReport]:
    """
    Independent runs from random u₀ on the Galerkin shells, ordered by seed.

    Seeds are advanced `batch_size` at a time as one amplitude array; `jobs`
    threads work through the batches. Batches depend on the sorted seeds
    only, so the reports do not depend on `jobs`.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    seeds = sorted(seeds)
    norm = u0_norm if u0_norm is not None else norm_As(spec.force) / spec.lambda_
    system = GalerkinSystem.compressed(spec)

    def start(seed: int) -> SpectralField:
        rng = np.random.default_rng(seed)
        u0 = random_field(spec.modes, rng, norm=norm, truncation_radius_sq=spec.truncation_radius_sq)
        return project_shells(u0, spec.mode_shells)

    def run(batch: list[int]) -> list[GhostCheckReport]:
        trajectories = integrate_ensemble(
            [start(seed) for seed in batch], system, T, dt, sample_every, labels=batch
        )
        return [
            assess_trajectory(
                traj, spec.force, spec.lambda_, eps_eta=eps_eta, eps_chained=eps_chained, seed=seed
            )
            for seed, traj in zip(batch, trajectories)
        ]

    batches = [seeds[i : i + batch_size] for i in range(0, len(seeds), batch_size)]
    logger.info("Ghost-check ensemble: %d seeds in %d batches", len(seeds), len(batches))
    if jobs <= 1 or len(batches) <= 1:
        results = [run(batch) for batch in batches]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, batches))
    return [report for batch in results for report in batch]


# Balances


@dataclass(frozen=True)
class BalanceResiduals:
    """
    `energy` and `enstrophy` take the time derivatives from the stored
    rates, ½ d|u|²/dt = (u, u̇) and ½ d||u||²/dt = (A^½u, A^½u̇). The `_fd`
    arrays take them by finite differences of the sampled e and E instead,
    with one-sided stencils at the two end samples.
    """

    times: np.ndarray
    energy: np.ndarray  # ½ d|u|²/dt + ||u||² - (g,u)
    enstrophy: np.ndarray  # ½ d||u||²/dt + |Au|² - λ(g,u)
    energy_fd: np.ndarray
    enstrophy_fd: np.ndarray

    def max(self, *, finite_difference: bool = False) -> tuple[float, float]:
        if finite_difference:
            # interior samples only
            energy, enstrophy = self.energy_fd[1:-1], self.enstrophy_fd[1:-1]
        else:
            energy, enstrophy = self.energy, self.enstrophy
        return (
            float(np.max(np.abs(energy), initial=0.0)),
            float(np.max(np.abs(enstrophy), initial=0.0)),
        )


def balance_residuals(traj: Trajectory, g: SpectralField, lambda_: int) -> BalanceResiduals:
    if len(traj) < 2:
        raise ValueError("Balance residuals need at least two samples")
    s = series_diagnostics(traj, g, lambda_)
    mu = traj.modes.norm_sq.astype(np.float64)
    pairing = (np.conj(traj.amplitudes) * traj.rates).real
    half_de = pairing.sum(axis=1)
    half_dE = pairing @ mu
    return BalanceResiduals(
        times=s.times,
        energy=half_de + s.E - s.gu,
        enstrophy=half_dE + s.P - lambda_ * s.gu,
        energy_fd=0.5 * _time_derivative(s.e, s.times) + s.E - s.gu,
        enstrophy_fd=0.5 * _time_derivative(s.E, s.times) + s.P - lambda_ * s.gu,
    )


# Ghost relations


INSTANTANEOUS_RELATIONS = ("rate_state", "rate_stokes", "stokes_pairing")


@dataclass(frozen=True)
class GhostRelationResiduals:
    """Relative residuals of the relations satisfied by any ghost state."""

    rate_force: float  # (u̇, g)
    rate_state: float  # (u̇, u)
    rate_stokes: float  # (u̇, Au)
    energy_identity: float  # |B|² + |Au|² - |u̇|² - |g|²
    force_pairing: float  # (B, g) - (G² - P)
    force_pairing_rate: float  # |B|² - |u̇|² - (G² - P)
    half_force: float  # |B - g/2|² - |u̇ + g/2|²
    half_force_sign: float  # |u̇ + g/2|² - |u̇ - g/2|²
    stokes_pairing: float  # (B, Au)
    rate_pairing: float  # (B, u̇) + |u̇|²

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def max(self) -> float:
        return max(abs(v) for v in self.as_dict().values())

    def instantaneous_max(self) -> float:
        """
        Largest residual among the relations fixed at one instant by
        E = (g,u), P = λE and u̇ = g - Au - B(u,u). The others hold only
        when the ghost relations persist in time.
        """
        return max(abs(getattr(self, name)) for name in INSTANTANEOUS_RELATIONS)


def ghost_relation_residuals(
    u: SpectralField,
    udot: SpectralField,
    g: SpectralField,
    lambda_: int,
    nonlinear: SpectralField | None = None,
) -> GhostRelationResiduals:
    """
    `nonlinear` defaults to g - Au - u̇, the value of B(u,u) that the
    evolution equation assigns to the pair (u, u̇).
    """
    au = apply_stokes_power(u, 1)
    b = nonlinear if nonlinear is not None else g - au - udot
    G2 = norm_As(g) ** 2
    P = norm_As(au) ** 2
    rate_sq = norm_As(udot) ** 2
    b_sq = norm_As(b) ** 2
    scale = max(G2 + rate_sq + P, 1e-300)
    half = g / 2

    return GhostRelationResiduals(
        rate_force=inner(udot, g) / scale,
        rate_state=inner(udot, u) / scale,
        rate_stokes=inner(udot, au) / scale,
        energy_identity=(b_sq + P - rate_sq - G2) / scale,
        force_pairing=(inner(b, g) - (G2 - P)) / scale,
        force_pairing_rate=(b_sq - rate_sq - (G2 - P)) / scale,
        half_force=(norm_As(b - half) ** 2 - norm_As(udot + half) ** 2) / scale,
        half_force_sign=(norm_As(udot + half) ** 2 - norm_As(udot - half) ** 2) / scale,
        stokes_pairing=inner(b, au) / scale,
        rate_pairing=(inner(b, udot) + rate_sq) / scale,
    )


# Extension of Galerkin trajectories


@dataclass(frozen=True)
class ExtensionDefect:
    leak_max: float  # max_t |(1 - Ê)B(u,u)|
    energy_drift: float  # max_t ||u(t)|² - |u(0)|²|
    enstrophy_drift: float  # max_t |||u(t)||² - ||u(0)||²|


def extension_defect(traj: Trajectory, spec: GalerkinSpec) -> ExtensionDefect:
    """
    How far a compressed trajectory is from extending to a solution of the
    full system: the part of B(u,u) that Ê discards, next to the drift of
    |u| and ||u||.
    """
    leaks = []
    for u in traj.states:
        b = bilinear(u, u)
        leaks.append(norm_As(b - project_shells(b, spec.mode_shells)))
    s = series_diagnostics(traj, spec.force, spec.lambda_)
    return ExtensionDefect(
        leak_max=max(leaks, default=0.0),
        energy_drift=float(np.max(np.abs(s.e - s.e[0]), initial=0.0)),
        enstrophy_drift=float(np.max(np.abs(s.E - s.E[0]), initial=0.0)),
    )


# Manufactured trajectories


def manufactured_chained_trajectory(
    state: SyntheticChainedState,
    times: Sequence[float],
    omega_plus: float = 1.0,
    omega_minus: float = 0.5,
) -> Trajectory:
    """
    Phases of u₊ and u₋ rotating at fixed mode moduli. The energy and
    enstrophy are constant and every sample satisfies the chained relation,
    although this is not a solution of the evolution equation.
    """
    states, rates = [], []
    quarter = math.pi / 2
    for t in times:
        rotated = state.with_phases(omega_plus * t, omega_minus * t)
        turned = state.with_phases(omega_plus * t + quarter, omega_minus * t + quarter)
        states.append(rotated.u)
        rates.append(omega_plus * turned.u_plus + omega_minus * turned.u_minus)
    return Trajectory.from_states(times, states, rates)
