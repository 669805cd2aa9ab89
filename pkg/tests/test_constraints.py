from fractions import Fraction

import numpy as np
import pytest
from inline_snapshot import snapshot

from ghostlab.constraints import (
    TRANSCRIBED,
    Amplitude,
    ConstraintCompiler,
    compare_systems,
    evaluate_constraints,
    generate_constraints,
    generation_report,
    mode_index,
    mu_plus_elimination_check,
    nonexistence_report,
    propagate,
    search_mixed_support,
    transcribed_constraints,
)
from ghostlab.constraints.generator import EXPECTED_CONSTRAINTS
from ghostlab.constraints.verification import u_plus_coefficient
from ghostlab.core.field import ScalarAmplitudeField, SpectralField
from ghostlab.core.lattice import WaveVector, shells_mode_set
from ghostlab.errors import (
    ConstraintParseError,
    GenerationMismatch,
    PropagationStall,
    SupportViolation,
)

from .util import format_constraints, format_lines

CORRUPTED = TRANSCRIBED.replace(
    "a(0,-1)*a(2,1) - a(0,1)*a(2,-1)", "a(0,-1)*a(2,1) + a(0,1)*a(2,-1)"
)


@pytest.fixture(scope="module")
def report():
    return generation_report()


def test_mode_index():
    index = mode_index()
    assert len(index) == 16
    assert (len(index.S1), len(index.S2), len(index.S3)) == (4, 4, 8)
    assert index.set_of((1, 2)) == 3
    assert index.conjugate((1, 2)) == WaveVector(-1, -2)


def test_generated_system(report):
    constraints = report.constraints
    assert len(constraints) == EXPECTED_CONSTRAINTS == 28
    assert report.constraint_shells == {4, 8, 9, 10, 13}
    assert report.annihilated_shells == {16, 18, 20}
    assert [c.target.sort_key for c in constraints] == sorted(c.target.sort_key for c in constraints)

    index = mode_index()
    for c in constraints:
        assert 1 <= len(c.monomials) <= 2
        for m in c.monomials:
            a, b = m.factors
            assert (a in index.low) != (b in index.low)
            assert m.target == c.target


def test_generated_system_text():
    text = format_constraints(generate_constraints())
    lines = text.splitlines()
    assert len(lines) == 28
    assert "R(2,0): a(0,-1)*a(2,1) - a(0,1)*a(2,-1)" in lines
    assert sum(" - " in line for line in lines) == 12


def test_transcribed_system_agrees(report):
    transcribed = transcribed_constraints()
    compare_systems(report.constraints, transcribed)
    assert transcribed == report.constraints


def test_corrupted_transcription_is_detected(report):
    with pytest.raises(GenerationMismatch) as info:
        compare_systems(report.constraints, transcribed_constraints(CORRUPTED))
    assert info.value.ids == ("R(2,0)",)

    shortened = "\n".join(TRANSCRIBED.splitlines()[1:])
    with pytest.raises(GenerationMismatch, match="28 generated vs 27 transcribed"):
        compare_systems(report.constraints, transcribed_constraints(shortened))


def test_compiler_normalizes_scaling():
    compiler = ConstraintCompiler()
    scaled = compiler.parse_constraint("R(2,0): -2*a(2,1)*a(0,-1) + 2*a(0,1)*a(2,-1)")
    plain = compiler.parse_constraint("a(0,-1)*a(2,1) - a(0,1)*a(2,-1)")
    assert compiler.canonical(scaled) == compiler.canonical(plain)
    assert compiler.compile(scaled) == plain
    assert compiler.format_constraint(compiler.compile(scaled)) == snapshot(
        "R(2,0): a(0,-1)*a(2,1) - a(0,1)*a(2,-1)"
    )


def test_compiler_formats_fractions():
    compiler = ConstraintCompiler()
    form = compiler.parse_form("1/2*a(0,1)*a(1,2) - 3*a(1,0)*a(0,3)")
    assert compiler.format_form(form) == snapshot("1/2*a(0,1)*a(1,2) - 3*a(1,0)*a(0,3)")
    assert compiler.format_form(compiler.normalize(form)) == snapshot(
        "a(0,1)*a(1,2) - 6*a(1,0)*a(0,3)"
    )


def test_symbolic_forms_match_parsed_forms():
    a = Amplitude
    built = a((0, -1)) * a((2, 1)) - a((0, 1)) * a((2, -1))
    parsed = ConstraintCompiler().parse_form("a(0,-1)*a(2,1) - a(0,1)*a(2,-1)")
    assert built == parsed
    assert str(a((1, 2)).conjugate()) == "α(-1,-2)"


@pytest.mark.parametrize(
    "line",
    [
        "a(0,1)*a(1,2) + a(1,0)",
        "a(0,1)^a(1,2)",
        "R(1,1): a(0,1)*a(1,2)",
        "a(0,1)*a(1,2) - a(1,0)*a(1,1)",
        "a(0,1)*a(1,2) - a(1,2)*a(0,1)",
        "2 a(0,1)*a(1,2)",
    ],
)
def test_compiler_rejects(line):
    with pytest.raises(ConstraintParseError):
        ConstraintCompiler().parse_constraint(line)


def test_parse_system_skips_comments():
    text = "# header\na(0,1)*a(1,2)  # trailing\n\n"
    (constraint,) = ConstraintCompiler().parse_system(text)
    assert constraint.id == "R(1,3)"
    assert constraint.is_single_product()


def test_high_only_amplitudes_satisfy_every_constraint():
    amps = ScalarAmplitudeField.from_mapping({(1, 2): 1 + 1j, (2, -1): 0.5j}, truncation_radius_sq=5)
    values = evaluate_constraints(amps)
    assert len(values) == 28
    assert all(value == 0 for _, value in values)


def test_mixed_amplitudes_violate_a_constraint():
    amps = ScalarAmplitudeField.from_mapping({(1, 2): 1.0, (0, 1): 1.0}, truncation_radius_sq=5)
    values = dict(evaluate_constraints(amps))
    assert values["R(1,3)"] != 0


def test_evaluate_rejects_foreign_support():
    amps = ScalarAmplitudeField.from_mapping({(3, 0): 1.0}, truncation_radius_sq=9)
    with pytest.raises(SupportViolation):
        evaluate_constraints(amps)


def test_propagation_transcript():
    state = propagate((1, 2))
    assert format_lines(state.log) == snapshot("""\
assume: α(1,2) nonzero
reality: α(-1,-2) nonzero (conjugate of α(1,2))
constraint R(-1,-3): α(0,-1) forced zero (other factor α(-1,-2) nonzero)
reality: α(0,1) forced zero (conjugate of α(0,-1))
constraint R(-2,-3): α(-1,-1) forced zero (other factor α(-1,-2) nonzero)
reality: α(1,1) forced zero (conjugate of α(-1,-1))
constraint R(-2,-2): reduces to α(-1,0)α(-1,-2) since α(0,-1) is zero
constraint R(-2,-2): α(-1,0) forced zero (other factor α(-1,-2) nonzero)
reality: α(1,0) forced zero (conjugate of α(-1,0))
constraint R(0,-3): reduces to α(1,-1)α(-1,-2) since α(-1,-1) is zero
constraint R(0,-3): α(1,-1) forced zero (other factor α(-1,-2) nonzero)
reality: α(-1,1) forced zero (conjugate of α(1,-1))\
""")


@pytest.mark.parametrize("k0", mode_index().S3, ids=str)
def test_every_case_closes(k0):
    index = mode_index()
    state = propagate(k0)
    assert set(index.low) <= state.known_zero
    assert {k0, -k0} <= state.known_nonzero
    state.check_invariants()


def test_propagation_arguments():
    with pytest.raises(ValueError):
        propagate((1, 0))
    first = generate_constraints()[:1]
    with pytest.raises(PropagationStall) as info:
        propagate((1, 2), first)
    assert info.value.state is not None


def test_mu_plus_elimination():
    elimination = mu_plus_elimination_check()
    assert elimination.reached_shells == {1, 5}
    assert elimination.admissible == (5,)
    assert elimination.passed
    assert 5 in elimination.candidates and 2 not in elimination.candidates


def test_u_plus_coefficient():
    assert u_plus_coefficient() == Fraction(1, 20)
    assert u_plus_coefficient(5, 2, 8) == Fraction(3, 48)


def test_mixed_support_search_finds_nothing():
    search = search_mixed_support(2000, np.random.default_rng(1), chunk=500)
    assert search.samples == 2000
    assert search.counterexamples == 0
    assert search.examples == ()
    assert search.with_high_support > 0


def test_nonexistence_report():
    result = nonexistence_report(jobs=2)
    assert result.passed
    assert result.verdict == "NONEXISTENT"
    assert [step.name for step in result.steps] == [
        "generation",
        "propagation",
        "force branch",
        "stationary contradiction",
        "mu_plus elimination",
    ]
    assert len(result.cases) == 8

    lines = result.transcript
    assert lines[0] == "constraint system: 28 generated"
    assert "annihilated shells: 16, 18, 20" in lines
    assert "generation check: 28 transcribed constraints agree" in lines
    assert "case k0=(1,2)" in lines
    assert lines.count("  result: α vanishes on S1 ∪ S2") == 8
    assert any(line.endswith("the branch with α = 0 on S1 ∪ S2 is excluded, so u₊ ≡ 0") for line in lines)
    assert "μ₊ elimination: (S1, S2) pairs reach shells 1, 5" in lines
    assert lines[-1] == "verdict: NONEXISTENT"


def test_nonexistence_report_is_deterministic():
    assert nonexistence_report(jobs=1).render() == nonexistence_report(jobs=4).render()


def test_nonexistence_report_with_search():
    result = nonexistence_report(jobs=2, search_samples=500, seed=3)
    assert result.passed
    assert result.steps[-2].name == "mixed-support search"
    assert any(
        line.startswith("mixed-support search (seed 3): 500 samples, 0 counterexamples")
        for line in result.transcript
    )


def test_nonexistence_report_with_corrupted_transcription():
    result = nonexistence_report(CORRUPTED, jobs=2)
    assert not result.passed
    assert result.verdict == "UNDECIDED"
    assert result.first_failure.name == "generation"
    assert "R(2,0)" in result.first_failure.detail
    assert result.transcript[-2:] == ["failed step: generation", "verdict: UNDECIDED"]


def test_nonexistence_report_without_force_on_the_low_shell():
    zero = SpectralField.zeros(shells_mode_set([2]), 2)
    result = nonexistence_report(jobs=2, force=zero)
    assert not result.passed
    assert result.verdict == "UNDECIDED"
    assert result.first_failure.name == "force branch"
    assert "g vanishes on S2: the branch with α = 0 on S1 ∪ S2 is not excluded" in result.transcript
    assert result.transcript[-2:] == ["failed step: force branch", "verdict: UNDECIDED"]
