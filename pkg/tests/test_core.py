import numpy as np
import pytest
from inline_snapshot import snapshot

from ghostlab.core.document import field_document_bytes, read_field, write_field_document
from ghostlab.core.field import ScalarAmplitudeField, from_scalar, make_field, to_scalar
from ghostlab.core.lattice import ModeSet, WaveVector, eigenvalues, is_eigenvalue, shell
from ghostlab.core.operators import (
    EigenforceSpec,
    apply_stokes_power,
    eigenspace_project,
    inner,
    make_eigenforce,
    norm_As,
)
from ghostlab.errors import (
    DivergenceViolation,
    DocumentError,
    NotAnEigenvalue,
    RealityViolation,
    ShellViolation,
    TruncationViolation,
    ZeroModeViolation,
)

from .util import random_ball_field


def test_shells_are_canonically_ordered():
    assert [str(k) for k in shell(1)] == ["(-1,0)", "(0,-1)", "(0,1)", "(1,0)"]
    assert [str(k) for k in shell(5)] == [
        "(-2,-1)",
        "(-2,1)",
        "(-1,-2)",
        "(-1,2)",
        "(1,-2)",
        "(1,2)",
        "(2,-1)",
        "(2,1)",
    ]
    assert eigenvalues(10) == [1, 2, 4, 5, 8, 9, 10]
    assert not is_eigenvalue(3)


def test_mode_set_is_negation_closed():
    modes = ModeSet.of([(1, 2), (0, 1)])
    assert len(modes) == 4
    assert (-1, -2) in modes
    assert ModeSet.of([(0, 1), (1, 2)]) is modes
    assert modes.shells() == {1, 5}

    with pytest.raises(ZeroModeViolation):
        ModeSet.of([(0, 0)])


def test_wave_vector_arithmetic():
    k = WaveVector(1, 2)
    assert k.perp == WaveVector(-2, 1)
    assert k.perp.dot(k) == 0
    assert (k - WaveVector(1, 0)).norm_sq == 4
    assert -k == WaveVector.of((-1, -2))


def test_make_field_validates_invariants():
    u = make_field({(1, 0): (0, 1j)}, truncation_radius_sq=1)
    np.testing.assert_allclose(u[(-1, 0)], [0, -1j])
    u.check_invariants()

    with pytest.raises(DivergenceViolation):
        make_field({(1, 0): (1, 0)}, truncation_radius_sq=1)
    with pytest.raises(TruncationViolation):
        make_field({(2, 0): (0, 1)}, truncation_radius_sq=1)
    with pytest.raises(RealityViolation):
        make_field({(1, 0): (0, 1), (-1, 0): (0, 2)}, truncation_radius_sq=1)
    with pytest.raises(ZeroModeViolation):
        make_field({(0, 0): (0, 1)}, truncation_radius_sq=1)


def test_scalar_amplitudes_preserve_norms():
    amps = ScalarAmplitudeField.from_mapping({(1, 2): 1 + 2j, (1, 1): -0.5j, (0, 1): 3.0})
    u = from_scalar(amps)
    assert u.divergence_defect() < 1e-15
    assert norm_As(u) == pytest.approx(np.sqrt(np.sum(np.abs(amps.values) ** 2)))
    np.testing.assert_allclose(to_scalar(u).values, amps.values, atol=1e-15)


def test_scalar_amplitudes_reject_conflicting_partners():
    with pytest.raises(RealityViolation):
        ScalarAmplitudeField.from_mapping({(1, 0): 1 + 1j, (-1, 0): 1 + 1j})


def test_stokes_powers_on_a_shell():
    u = eigenspace_project(random_ball_field(3, radius_sq=10), 5)
    assert u.shells() == {5}
    assert apply_stokes_power(u, 1).allclose(5 * u)
    assert norm_As(u, 0.5) ** 2 == pytest.approx(5 * norm_As(u) ** 2)
    assert inner(u, u) == pytest.approx(norm_As(u) ** 2)


def test_eigenforce():
    g = make_eigenforce(EigenforceSpec(lambda_=2, magnitude=1.5))
    assert norm_As(g) == pytest.approx(1.5)
    assert g.shells() == {2}

    with pytest.raises(NotAnEigenvalue):
        make_eigenforce(EigenforceSpec(lambda_=3, magnitude=1.0))
    with pytest.raises(ShellViolation):
        make_eigenforce(EigenforceSpec(lambda_=2, magnitude=1.0, pattern={(1, 0): 1.0}))
    with pytest.raises(ShellViolation, match="off the shell 2"):
        make_eigenforce(EigenforceSpec(lambda_=2, magnitude=1.0, pattern={(1, 1): 1.0, (2, 0): 1.0}))
    with pytest.raises(ValueError):
        make_eigenforce(EigenforceSpec(lambda_=2, magnitude=0.0))


def test_field_document():
    amps = ScalarAmplitudeField.from_mapping({(1, 0): 1 + 2j}, truncation_radius_sq=1)

    assert field_document_bytes(amps).decode() == snapshot("""\
<?xml version='1.0' encoding='utf-8'?>
<field truncation-radius-sq="1" representation="scalar-amplitude">
  <mode k1="-1" k2="0" re="1" im="-2"/>
  <mode k1="1" k2="0" re="1" im="2"/>
</field>
""")


def test_field_document_file(tmp_path):
    u = random_ball_field(7, radius_sq=8)
    path = tmp_path / "u.xml"
    write_field_document(u, path)
    v = read_field(str(path))
    assert v.truncation_radius_sq == 8
    assert v.allclose(u, rtol=1e-13, atol=1e-15)


def test_field_document_errors(tmp_path):
    path = tmp_path / "bad.xml"
    path.write_text("<field truncation-radius-sq='1'><mode k1='1' k2='0' re='1'/>")
    with pytest.raises(DocumentError, match="Malformed"):
        read_field(str(path))

    path.write_text(
        "<field truncation-radius-sq='1'>"
        "<mode k1='1' k2='0' re='1'/><mode k1='1' k2='0' re='2'/>"
        "</field>"
    )
    with pytest.raises(DocumentError, match="twice"):
        read_field(str(path))

    path.write_text("<field truncation-radius-sq='1'><mode k1='2' k2='0' re='1'/></field>")
    with pytest.raises(DocumentError):
        read_field(str(path))
