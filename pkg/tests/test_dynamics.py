import numpy as np
import pytest

from ghostlab.core.lattice import ModeSet, ball, shells_mode_set
from ghostlab.core.operators import EigenforceSpec, make_eigenforce, norm_As, random_field
from ghostlab.dynamics.galerkin import GalerkinSpec, GalerkinSystem, rhs_compressed, rhs_full
from ghostlab.dynamics.ghost_check import balance_residuals, extension_defect
from ghostlab.core.field import SpectralField
from ghostlab.dynamics.integrator import (
    Trajectory,
    _check_growth,
    integrate,
    integrate_ensemble,
    step_etdrk4,
)
from ghostlab.errors import NonFinite, NotAnEigenvalue, ShellViolation, SupportViolation
from ghostlab.geometry.diagnostics import series_diagnostics, stationary_state


@pytest.fixture
def spec():
    g = make_eigenforce(EigenforceSpec(lambda_=2, magnitude=1.0))
    return GalerkinSpec(frozenset({1, 2, 5}), g, 2)


def test_spec_validation():
    g = make_eigenforce(EigenforceSpec(lambda_=2, magnitude=1.0))
    with pytest.raises(ShellViolation):
        GalerkinSpec(frozenset({1, 5}), g, 2)
    with pytest.raises(NotAnEigenvalue):
        GalerkinSpec(frozenset({2, 3}), g, 2)
    with pytest.raises(ValueError):
        GalerkinSpec(frozenset(), g, 2)


def test_compiled_system_matches_compressed_rhs(spec):
    system = GalerkinSystem.compressed(spec)
    u = random_field(spec.modes, np.random.default_rng(4), norm=0.7, truncation_radius_sq=5)
    assert system.rhs(u).allclose(rhs_compressed(u, spec), rtol=1e-12, atol=1e-13)


def test_compiled_system_matches_full_rhs():
    g = make_eigenforce(EigenforceSpec(lambda_=5, magnitude=2.0))
    system = GalerkinSystem.full(g, 10)
    u = random_field(ModeSet.of(ball(10)), np.random.default_rng(5), norm=1.0)
    assert system.rhs(u).allclose(rhs_full(u, g.with_radius(10)), rtol=1e-12, atol=1e-12)


def test_compressed_rhs_rejects_foreign_support(spec):
    u = random_field(shells_mode_set([4]), np.random.default_rng(0), norm=1.0)
    with pytest.raises(SupportViolation):
        rhs_compressed(u, spec)


def test_stationary_state_is_reproduced(spec):
    system = GalerkinSystem.compressed(spec)
    u_star = stationary_state(spec.force, 2).with_radius(5)
    traj = integrate(u_star, system, T=100.0, dt=0.05, sample_every=100)

    s = series_diagnostics(traj, spec.force, 2)
    for values in (s.e, s.E, s.P):
        assert np.max(np.abs(values - values[0])) < 1e-10
    assert s.e[0] == pytest.approx(0.25)
    assert s.E[0] == pytest.approx(0.5)
    assert s.P[0] == pytest.approx(1.0)
    assert np.max(s.udot_sq) < 1e-20


def test_trajectory_sampling(spec):
    system = GalerkinSystem.compressed(spec)
    u0 = random_field(spec.modes, np.random.default_rng(1), norm=0.5, truncation_radius_sq=5)
    traj = integrate(u0, system, T=0.35, dt=0.01, sample_every=10)

    np.testing.assert_allclose(traj.times, [0.0, 0.1, 0.2, 0.3, 0.35])
    assert len(traj.states) == 5
    traj.check_invariants(system)
    assert traj.final_state.allclose(traj.states[-1])


def test_etdrk4_converges(spec):
    system = GalerkinSystem.compressed(spec)
    u0 = random_field(spec.modes, np.random.default_rng(2), norm=0.5, truncation_radius_sq=5)
    coarse = integrate(u0, system, T=0.5, dt=0.01, sample_every=50).final_state
    fine = integrate(u0, system, T=0.5, dt=0.001, sample_every=500).final_state
    assert norm_As(coarse - fine) < 1e-6

    stepped = step_etdrk4(u0, system, 0.01)
    first = integrate(u0, system, T=0.01, dt=0.01, sample_every=1).final_state
    assert stepped.allclose(first)


def test_integrate_validates_arguments(spec):
    system = GalerkinSystem.compressed(spec)
    u0 = stationary_state(spec.force, 2).with_radius(5)
    with pytest.raises(ValueError):
        integrate(u0, system, T=1.0, dt=0.0)
    with pytest.raises(ValueError):
        integrate(u0, system, T=1.0, dt=0.1, sample_every=0)


@pytest.mark.parametrize("seed", [9, 10, 11])
def test_energy_and_enstrophy_balance(spec, seed):
    system = GalerkinSystem.compressed(spec)
    u0 = random_field(spec.modes, np.random.default_rng(seed), norm=0.5, truncation_radius_sq=5)
    traj = integrate(u0, system, T=2.0, dt=1e-3, sample_every=1)

    balances = balance_residuals(traj, spec.force, 2)
    energy, enstrophy = balances.max()
    assert energy < 1e-6
    assert enstrophy < 1e-6

    energy_fd, enstrophy_fd = balances.max(finite_difference=True)
    assert energy_fd < 5e-4
    assert enstrophy_fd < 5e-4


def test_balance_needs_two_samples(spec):
    u = stationary_state(spec.force, 2).with_radius(5)
    traj = Trajectory.from_states([0.0], [u], [u * 0.0])
    with pytest.raises(ValueError):
        balance_residuals(traj, spec.force, 2)


def test_extension_defect_of_stationary_state(spec):
    system = GalerkinSystem.compressed(spec)
    u_star = stationary_state(spec.force, 2).with_radius(5)
    traj = integrate(u_star, system, T=1.0, dt=0.1, sample_every=5)
    defect = extension_defect(traj, spec)
    assert defect.leak_max < 1e-13
    assert defect.energy_drift < 1e-13


def test_etdrk4_is_fourth_order(spec):
    system = GalerkinSystem.compressed(spec)
    u0 = random_field(spec.modes, np.random.default_rng(2), norm=0.5, truncation_radius_sq=5)

    def final(dt):
        return integrate(u0, system, T=0.5, dt=dt, sample_every=10_000).amplitudes[-1]

    reference = final(0.000625)
    errors = [np.linalg.norm(final(dt) - reference) for dt in (0.02, 0.01, 0.005)]
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all((orders > 3.6) & (orders < 4.4)), errors


def test_single_shell_state_decays_without_force():
    zero = SpectralField.zeros(shells_mode_set([2]), 2)
    spec = GalerkinSpec(frozenset({2, 5}), zero, 2)
    system = GalerkinSystem.compressed(spec)
    u0 = random_field(shells_mode_set([5]), np.random.default_rng(6), norm=1.0, truncation_radius_sq=5)

    traj = integrate(u0, system, T=1.0, dt=0.01, sample_every=10)
    assert traj.final_state.allclose(u0 * np.exp(-5.0), rtol=1e-12, atol=1e-15)
    s = series_diagnostics(traj, zero, 2)
    np.testing.assert_allclose(s.e, np.exp(-10.0 * traj.times), rtol=1e-12)


def test_integrate_ensemble_matches_single_runs(spec):
    system = GalerkinSystem.compressed(spec)
    starts = [
        random_field(spec.modes, np.random.default_rng(seed), norm=0.5, truncation_radius_sq=5)
        for seed in (1, 2, 3)
    ]
    batched = list(integrate_ensemble(starts, system, T=0.3, dt=0.01, sample_every=5))
    assert len(batched) == 3
    for u0, traj in zip(starts, batched):
        single = integrate(u0, system, T=0.3, dt=0.01, sample_every=5)
        np.testing.assert_array_equal(traj.times, single.times)
        np.testing.assert_allclose(traj.amplitudes, single.amplitudes, rtol=1e-13, atol=1e-15)
        traj.check_invariants(system)


def test_growth_check_names_the_member():
    alpha = np.array([[1.0 + 0j, 0.5j], [np.nan, 0.0]])
    with pytest.raises(NonFinite, match="Non-finite coefficients at t=0.5 \\(ensemble member 8\\)"):
        _check_growth(alpha, np.array([10.0, 10.0]), 0.5, [7, 8])
    with pytest.raises(NonFinite, match="exceeded 1"):
        _check_growth(alpha[:1] * 3, np.array([1.0]), 0.1, None)
    _check_growth(alpha[0], np.array(10.0), 0.1, None)
