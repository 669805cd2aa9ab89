import math

import numpy as np
import pytest

from ghostlab.core.operators import EigenforceSpec, apply_stokes_power, bilinear, make_eigenforce, random_field
from ghostlab.dynamics.galerkin import GalerkinSpec, GalerkinSystem
from ghostlab.dynamics.ghost_check import (
    Verdict,
    assess_trajectory,
    ghost_check,
    ghost_check_ensemble,
    chained_residual_series,
    ghost_relation_residuals,
    manufactured_chained_trajectory,
)
from ghostlab.dynamics.integrator import Trajectory, integrate
from ghostlab.geometry.chained import (
    chained_coefficient_series,
    chained_coefficients,
    synthetic_chained_state,
)
from ghostlab.geometry.diagnostics import series_diagnostics, stationary_state


@pytest.fixture
def spec():
    g = make_eigenforce(EigenforceSpec(lambda_=2, magnitude=1.0))
    return GalerkinSpec(frozenset({1, 2, 5}), g, 2)


@pytest.fixture
def state():
    return synthetic_chained_state(np.random.default_rng(21))


def test_manufactured_chained_trajectory_is_candidate(state):
    times = np.linspace(0.0, 2.0, 41)
    traj = manufactured_chained_trajectory(state, times)
    report = assess_trajectory(traj, state.g, 2)

    assert report.verdict is Verdict.CANDIDATE
    assert report.eta_derivative_max < 1e-12
    assert report.chained_residual_max < 1e-12
    assert report.final_rate_norm == pytest.approx(math.sqrt(0.00625 + 0.25 * 0.09375))
    assert report.eps_eta == pytest.approx(1e-6)
    assert report.set_quantity == pytest.approx(0.075 * 0.25 / 0.1625)


def test_report_tables(state):
    times = np.linspace(0.0, 1.0, 11)
    report = assess_trajectory(manufactured_chained_trajectory(state, times), state.g, 2)
    assert report.rows().shape == (11, 7)
    np.testing.assert_allclose(report.rows()[:, 0], times)
    np.testing.assert_allclose(report.eta_series[:, 1], 0.25)
    assert report.chained_residual_series.shape == (11, 2)


def test_drifting_energy_is_not_candidate(state):
    times = np.linspace(0.0, 1.0, 11)
    states = [(1 + 0.1 * t) * state.u for t in times]
    rates = [0.1 * state.u for _ in times]
    report = assess_trajectory(Trajectory.from_states(times, states, rates), state.g, 2)
    assert report.verdict is Verdict.NOT_GHOST
    assert report.eta_derivative_max > 1e-2


def test_thresholds_must_be_positive(state):
    traj = manufactured_chained_trajectory(state, [0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        assess_trajectory(traj, state.g, 2, eps_chained=0.0)
    with pytest.raises(ValueError):
        assess_trajectory(traj, state.g, 2, eps_eta=-1.0)


def test_stationary_start_converges(spec):
    u_star = stationary_state(spec.force, 2).with_radius(5)
    report = ghost_check(u_star, spec, T=1.0, dt=0.1, seed=7)
    assert report.verdict is Verdict.CONVERGED
    assert report.seed == 7
    assert math.isnan(report.chained_residual_max)


def test_random_runs_are_not_candidates(spec):
    reports = ghost_check_ensemble([2, 0, 1], spec, T=2.0, dt=0.02, jobs=2)
    assert [r.seed for r in reports] == [0, 1, 2]
    assert all(r.verdict is not Verdict.CANDIDATE for r in reports)
    assert all(r.final_rate_norm > r.eps_eta for r in reports)


def test_ensemble_is_deterministic(spec):
    serial = ghost_check_ensemble([3], spec, T=0.5, dt=0.05)
    threaded = ghost_check_ensemble([3], spec, T=0.5, dt=0.05, jobs=4)
    np.testing.assert_array_equal(serial[0].rows(), threaded[0].rows())


def test_long_run_converges_to_stationary_state(spec):
    (report,) = ghost_check_ensemble([5], spec, T=40.0, dt=0.05, sample_every=20)
    assert report.verdict is Verdict.CONVERGED
    assert report.series.e[-1] == pytest.approx(0.25, rel=1e-8)


def test_ghost_relations_on_synthetic_state(state):
    udot = state.orthogonal_rate(np.random.default_rng(1), 10, norm=0.2)
    residuals = ghost_relation_residuals(state.u, udot, state.g, 2)
    assert residuals.max() < 1e-12
    assert set(residuals.as_dict()) == {
        "rate_force",
        "rate_state",
        "rate_stokes",
        "energy_identity",
        "force_pairing",
        "force_pairing_rate",
        "half_force",
        "half_force_sign",
        "stokes_pairing",
        "rate_pairing",
    }


def test_ghost_relations_detect_rate_along_force(state):
    udot = 0.1 * state.g
    residuals = ghost_relation_residuals(state.u, udot, state.g, 2)
    assert abs(residuals.rate_force) > 1e-3


def test_ghost_relations_hold_for_the_evolution_rate(state):
    b_uu = bilinear(state.u, state.u)
    rate = state.g - apply_stokes_power(state.u, 1) - b_uu
    residuals = ghost_relation_residuals(state.u, rate, state.g, 2, nonlinear=b_uu)
    assert residuals.instantaneous_max() < 1e-12

    broken = b_uu + 0.1 * state.u
    residuals = ghost_relation_residuals(state.u, state.g - apply_stokes_power(state.u, 1) - broken, state.g, 2, nonlinear=broken)
    assert residuals.instantaneous_max() > 1e-3


def test_chained_residual_series_matches_pointwise(spec):
    system = GalerkinSystem.compressed(spec)
    u0 = random_field(spec.modes, np.random.default_rng(8), norm=0.5, truncation_radius_sq=5)
    traj = integrate(u0, system, T=1.0, dt=0.05, sample_every=2)
    series = series_diagnostics(traj, spec.force, 2)

    gamma, beta, alpha = chained_coefficient_series(series)
    residual = chained_residual_series(traj, spec.force, series)
    for i, u in enumerate(traj.states):
        cc = chained_coefficients(series.at(i), strict=False)
        np.testing.assert_allclose([gamma[i], beta[i], alpha[i]], [cc.gamma, cc.beta, cc.alpha], rtol=1e-12)
        assert residual[i] == pytest.approx(cc.residual(u, spec.force), rel=1e-9)


def test_chained_residual_series_is_nan_at_stationary_state(spec):
    u_star = stationary_state(spec.force, 2)
    traj = Trajectory.from_states([0.0, 1.0], [u_star, u_star], [0.0 * u_star, 0.0 * u_star])
    series = series_diagnostics(traj, spec.force, 2)
    assert np.isnan(chained_residual_series(traj, spec.force, series)).all()


def test_ensemble_batches_agree_with_single_runs(spec):
    whole = ghost_check_ensemble([4, 5, 6], spec, T=0.5, dt=0.05)
    split = ghost_check_ensemble([6, 5, 4], spec, T=0.5, dt=0.05, batch_size=2, jobs=2)
    for a, b in zip(whole, split):
        assert a.seed == b.seed
        np.testing.assert_allclose(a.rows(), b.rows(), rtol=1e-10, atol=1e-13)

    u0 = random_field(spec.modes, np.random.default_rng(5), norm=0.5, truncation_radius_sq=5)
    single = ghost_check(u0, spec, T=0.5, dt=0.05, seed=5)
    np.testing.assert_allclose(single.rows(), whole[1].rows(), rtol=1e-10, atol=1e-13)

    with pytest.raises(ValueError, match="batch_size"):
        ghost_check_ensemble([1], spec, T=0.5, dt=0.05, batch_size=0)


@pytest.mark.slow
def test_hundred_seed_ensemble_has_no_candidates(spec):
    reports = ghost_check_ensemble(range(100), spec, T=100.0, dt=1e-3, jobs=2)
    assert [r.seed for r in reports] == list(range(100))
    assert not [r.seed for r in reports if r.verdict is Verdict.CANDIDATE]
