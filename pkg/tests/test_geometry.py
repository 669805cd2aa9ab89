import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ghostlab.core.operators import EigenforceSpec, apply_stokes_power, make_eigenforce, norm_As
from ghostlab.dynamics.integrator import Trajectory
from ghostlab.errors import (
    DecompositionResidual,
    DegenerateCoordinates,
    DegenerateDiagnostics,
    DomainError,
    FrameDegenerate,
    NoAdmissibleBranch,
    NotPositiveDefinite,
    SingularGram,
)
from ghostlab.geometry import (
    GhostDiagnostics,
    beta_from_energies,
    chained_coefficients,
    check_tensor,
    curve_table,
    decompose_chained,
    diagnostics,
    enstrophy_lower_bound,
    frame_transport,
    gram_matrix,
    inequality_report,
    new_frame,
    nonlinear_tensor,
    old_frame,
    old_frame_coordinates,
    palinstrophy_identity_defect,
    parabola_curve,
    perturbation_bounds,
    powers_constancy_check,
    project_B_onto_H012,
    stationary_state,
    stokes_matrix,
    synthetic_chained_state,
)
from ghostlab.geometry.curves import default_e_grid
from ghostlab.geometry.diagnostics import Comparison, stokes_residual
from ghostlab.geometry.reference import leading_minors


@pytest.fixture
def state():
    return synthetic_chained_state(np.random.default_rng(11))


@pytest.fixture
def stationary():
    return GhostDiagnostics(e=0.25, E=0.5, P=1.0, G_sq=1.0, lambda_=2, A32_sq=2.0, gu=0.5)


def test_synthetic_state_diagnostics(state):
    d = diagnostics(state.u, None, state.g, state.lambda_)
    assert d.e == pytest.approx(0.1625)
    assert d.E == pytest.approx(0.25)
    assert d.P == pytest.approx(0.5)
    assert d.A32_sq == pytest.approx(1.375)
    assert d.G_sq == pytest.approx(1.0)
    assert d.eta == pytest.approx(0.25)
    assert d.ghost_relations_hold()
    assert math.isnan(d.udot_sq)


def test_phase_rotation_keeps_diagnostics(state):
    rotated = state.with_phases(0.7, -1.3)
    before = diagnostics(state.u, None, state.g, 2)
    after = diagnostics(rotated.u, None, rotated.g, 2)
    for name in ("e", "E", "P", "A32_sq", "gu"):
        assert getattr(after, name) == pytest.approx(getattr(before, name), rel=1e-12)
    assert not rotated.u.allclose(state.u)


def test_chained_coefficients(state):
    cc = chained_coefficients(diagnostics(state.u, None, state.g, 2))
    assert cc.gamma == pytest.approx(-0.75)
    assert cc.beta == pytest.approx(-5.0)
    assert cc.alpha == pytest.approx(6.0)
    assert cc.discriminant == pytest.approx(16.0)
    assert cc.mu_plus == pytest.approx(5.0)
    assert cc.mu_minus == pytest.approx(1.0)
    assert_allclose(cc.root_identity_defects(), (0.0, 0.0), atol=1e-12)
    assert cc.residual(state.u, state.g) < 1e-12


def test_lambda_two_energy_relations(state):
    d = diagnostics(state.u, None, state.g, 2)
    assert beta_from_energies(d) == pytest.approx(-5.0)
    assert palinstrophy_identity_defect(d) == pytest.approx(0.0, abs=1e-12)

    other = GhostDiagnostics.ghost(0.3, 0.5, 4.0, 5, A32_sq=20.0)
    with pytest.raises(ValueError):
        beta_from_energies(other)


def test_chained_coefficients_degenerate_at_stationary_point(stationary):
    with pytest.raises(DegenerateDiagnostics):
        chained_coefficients(stationary)
    with pytest.raises(ValueError):
        chained_coefficients(GhostDiagnostics.ghost(0.1625, 0.25, 1.0, 2))


def test_gram_matrix_and_projection(state, stationary):
    d = diagnostics(state.u, None, state.g, 2)
    gram = gram_matrix(d)
    assert gram.det == pytest.approx(0.009375)
    assert np.linalg.det(gram.matrix) == pytest.approx(gram.det, rel=1e-10)

    projection = project_B_onto_H012(d)
    assert projection.closed_form_defect() < 1e-10
    # |g - Au|² = G² - P under the ghost relations
    assert projection.norm_sq == pytest.approx(0.5)

    with pytest.raises(SingularGram):
        project_B_onto_H012(stationary)


def test_decomposition(state):
    cc = chained_coefficients(diagnostics(state.u, None, state.g, 2))
    dec = decompose_chained(state.u, state.g, cc)
    assert dec.residual < 1e-12
    assert dec.u_plus.allclose(state.u_plus)
    assert dec.u_minus.allclose(state.u_minus)
    assert dec.u_plus_sq == pytest.approx(0.00625)
    assert dec.u_minus_sq == pytest.approx(0.09375)
    assert dec.u_plus_sq_formula == pytest.approx(dec.u_plus_sq)
    assert dec.u_minus_sq_formula == pytest.approx(dec.u_minus_sq)
    assert dec.balance == pytest.approx(0.0, abs=1e-12)
    assert not dec.forces_stationary


def test_decomposition_rejects_foreign_shells(state):
    cc = chained_coefficients(diagnostics(state.u, None, state.g, 2))
    other = synthetic_chained_state(np.random.default_rng(3), mu_plus=8)
    with pytest.raises(DecompositionResidual):
        decompose_chained(other.u, other.g, cc)


def test_synthetic_state_arguments():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        synthetic_chained_state(rng, mu_minus=2)
    with pytest.raises(ValueError):
        synthetic_chained_state(rng, eta=0.5)
    with pytest.raises(ValueError):
        synthetic_chained_state(rng).orthogonal_rate(rng, 5, norm=1.0)


def test_inequalities(state, stationary):
    report = inequality_report(diagnostics(state.u, None, state.g, 2))
    assert report.all_strict
    assert report.consistent
    assert report.energy_bounds_hold

    report = inequality_report(stationary)
    assert report.comparisons == (Comparison.EQUAL,) * 4
    assert report.consistent


def test_perturbation_bounds(state):
    d = diagnostics(state.u, None, state.g, 2)
    delta_P, delta_E = perturbation_bounds(d)
    assert delta_P == pytest.approx(math.sqrt(0.5))
    assert delta_E == pytest.approx(math.sqrt(0.15))
    assert norm_As(state.u - stationary_state(state.g, 2), 1) == pytest.approx(delta_P)
    assert stokes_residual(state.u, 2) == pytest.approx(delta_E)

    with pytest.raises(ValueError):
        perturbation_bounds(GhostDiagnostics.ghost(0.3, 0.6, 1.0, 2))


def test_enstrophy_lower_bound():
    assert enstrophy_lower_bound(1.0, 2, 2.0, 0.0) == pytest.approx(2.0)
    assert enstrophy_lower_bound(1.0, 2, 2.0, 1.0) == pytest.approx(4 / (2 + 2 * math.sqrt(math.log(2))))
    with pytest.raises(DomainError):
        enstrophy_lower_bound(0.4, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        enstrophy_lower_bound(1.0, 2, 1.0, -1.0)


def test_old_frame_coordinates(state):
    rng = np.random.default_rng(2)
    udot = state.orthogonal_rate(rng, 10, norm=0.4)
    u, g = state.u, state.g
    d = diagnostics(u, udot, g, 2)
    frame = old_frame(u, udot, g)
    assert frame.orthonormality_defect() < 1e-12

    closed = old_frame_coordinates(d)
    assert_allclose(frame.coordinates(u), closed.u, atol=1e-12)
    assert_allclose(frame.coordinates(apply_stokes_power(u, 1)), closed.Au, atol=1e-12)
    assert_allclose(frame.coordinates(g), closed.g, atol=1e-12)
    assert_allclose(frame.coordinates(udot), closed.udot, atol=1e-12)
    assert_allclose(closed.udot, [0.0, 0.0, 0.4, 0.0], atol=1e-12)

    with pytest.raises(ValueError):
        old_frame_coordinates(diagnostics(u, None, g, 2))


def test_old_frame_degenerates_on_parallel_state(state):
    g = state.g
    with pytest.raises(FrameDegenerate) as info:
        old_frame(0.5 * g, state.orthogonal_rate(np.random.default_rng(0), 10, 1.0), g)
    assert info.value.index == 1


def test_new_frame_detects_chained_state(state):
    with pytest.raises(FrameDegenerate) as info:
        new_frame(state.u, state.g)
    assert info.value.index == 3
    assert_allclose(info.value.coefficients, (-0.75, -5.0, 6.0), rtol=1e-8)


def test_new_frame_on_generic_state():
    rng = np.random.default_rng(8)
    state = synthetic_chained_state(rng)
    extra = state.orthogonal_rate(rng, 10, norm=0.1)
    frame = new_frame(state.u + extra, state.g)
    assert frame.orthonormality_defect() < 1e-12


def test_frame_transport(state):
    rng = np.random.default_rng(4)
    udot = state.orthogonal_rate(rng, 10, norm=1.0)
    rotated = state.with_phases(0.3, 0.9)
    frame_a = old_frame(state.u, udot, state.g)
    frame_b = old_frame(rotated.u, udot, rotated.g)

    identity = frame_transport(frame_a, frame_a)
    assert_allclose(identity.matrix, np.eye(4), atol=1e-12)
    assert identity.unitarity_defect() < 1e-12

    transport = frame_transport(frame_a, frame_b)
    for j in range(4):
        assert transport.apply(frame_a.vectors[j]).allclose(frame_b.vectors[j], atol=1e-12)
    coordinates = [1.0, -2.0, 0.5, 3.0]
    assert transport.transport_coordinates(coordinates).allclose(frame_b.combine(coordinates))
    assert transport.unitarity_defect() > 1e-2


def test_stokes_matrix(state):
    udot = state.orthogonal_rate(np.random.default_rng(5), 10, norm=0.3)
    d = diagnostics(state.u, udot, state.g, 2)
    closed = old_frame_coordinates(d)
    stokes = stokes_matrix(d)

    assert_allclose(stokes, stokes.T)
    assert all(m > 0 for m in leading_minors(stokes))
    assert_allclose(stokes @ closed.u, closed.Au, atol=1e-12)
    assert stokes[0, 0] == 2

    with pytest.raises(NotPositiveDefinite):
        stokes_matrix(d, b_factor=1.0)


def test_nonlinear_tensor(state):
    rng = np.random.default_rng(6)
    udot = state.orthogonal_rate(rng, 10, norm=0.3)
    d = diagnostics(state.u, udot, state.g, 2)
    closed = old_frame_coordinates(d)
    tensor = nonlinear_tensor(closed.u[0], closed.u[1], closed.B)
    check = check_tensor(tensor, closed.u, closed.B, stokes_matrix(d), rng)
    assert check.reproduction < 1e-12
    assert check.symmetry == 0.0
    assert check.skew < 1e-12

    with pytest.raises(DegenerateCoordinates):
        nonlinear_tensor(0.0, 1.0, closed.B)


def test_powers_constancy_on_rotated_states(state):
    rotated = state.with_phases(1.1, 0.4)
    zero = state.u * 0.0
    traj = Trajectory.from_states([0.0, 1.0], [state.u, rotated.u], [zero, zero])
    report = powers_constancy_check(traj, [0.0, 0.5, 1.0])
    assert report.s_values == (0.0, 0.5, 1.0)
    assert max(report.norm_deviation.values()) < 1e-14


@pytest.mark.parametrize("mu_plus", [4, 5, 25, 81])
def test_parabola_curve(mu_plus):
    curve = parabola_curve(mu_plus, 1.0, default_e_grid(1.0))
    assert len(curve.points) == 101
    assert np.max(np.abs(curve.residuals())) < 1e-12

    first, last = curve.points[0], curve.points[-1]
    assert (first.e, first.E) == (0.0, 0.0)
    assert last.e == pytest.approx(0.25)
    assert last.E == pytest.approx(0.5)
    assert first.endpoint and last.endpoint
    assert curve.coefficients == (2 - mu_plus, mu_plus - 1, -mu_plus)


@pytest.mark.parametrize("mu_plus", [4, 5, 25])
def test_parabola_curve_is_admissible(mu_plus):
    assert parabola_curve(mu_plus, 1.0, default_e_grid(1.0)).admissible()


def test_parabola_curve_arguments():
    with pytest.raises(ValueError):
        parabola_curve(2, 1.0, [0.1])
    with pytest.raises(ValueError):
        parabola_curve(5, 0.0, [0.1])
    with pytest.raises(NoAdmissibleBranch):
        parabola_curve(5, 1.0, [0.3])


def test_parabola_passes_through_synthetic_state():
    # (e, E) of a chained ghost with μ₊ = 5 and G = 1
    curve = parabola_curve(5, 1.0, [0.1625])
    assert curve.points[0].E == pytest.approx(0.25)


def test_curve_table():
    curve = parabola_curve(5, 4.0, default_e_grid(4.0, num=9))
    table = curve_table(curve)
    assert table.shape == (9, 7)
    assert np.all(np.isnan(table[:, 6]))
    assert_allclose(table[:, 3], table[:, 0])
    assert_allclose(table[:, 4], 2 * table[:, 0])
    assert_allclose(table[:, 2], 4.0 * np.sqrt(table[:, 0]))

    table = curve_table(curve, c_bg=0.5)
    assert math.isnan(table[0, 6])
    assert table[-1, 6] == pytest.approx(enstrophy_lower_bound(4.0, 2, 4.0, 0.5))


def test_stationary_state_of_eigenforce():
    g = make_eigenforce(EigenforceSpec(lambda_=5, magnitude=2.0))
    u_star = stationary_state(g, 5)
    assert stokes_residual(u_star, 5) < 1e-14
    assert norm_As(u_star) == pytest.approx(0.4)
