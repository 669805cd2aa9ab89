from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ghostlab.constraints.compiler import ConstraintCompiler
from ghostlab.constraints.generator import (
    GenerationReport,
    compare_systems,
    generation_report,
    transcribed_constraints,
)
from ghostlab.constraints.modes import mode_index
from ghostlab.constraints.propagation import PropagationState, propagate
from ghostlab.constraints.symbolic import BilinearConstraint
from ghostlab.core.field import ScalarAmplitudeField, SpectralField, to_scalar
from ghostlab.core.lattice import WaveVector, eigenvalues
from ghostlab.core.operators import EigenforceSpec, make_eigenforce
from ghostlab.errors import ConstraintError, SupportViolation

logger = logging.getLogger(__name__)

LAMBDA, MU_MINUS, MU_PLUS = 2, 1, 5


def evaluate_constraints(
    amps: ScalarAmplitudeField, constraints: Sequence[BilinearConstraint] | None = None
) -> list[tuple[str, complex]]:
    index = mode_index()
    outside = [k for k in amps.support() if k not in index]
    if outside:
        raise SupportViolation(
            f"Amplitudes outside S₁ ∪ S₂ ∪ S₃ at {', '.join(map(str, outside))}"
        )
    if constraints is None:
        constraints = generation_report().constraints
    return [(c.id, c.evaluate(amps)) for c in constraints]


def u_plus_coefficient(lambda_: int = LAMBDA, mu_minus: int = MU_MINUS, mu_plus: int = MU_PLUS) -> Fraction:
    """(λ - μ₋)/(μ₊(μ₊ - μ₋)), the factor in |u₊|² = c·E(1 - P/G²)."""
    return Fraction(lambda_ - mu_minus, mu_plus * (mu_plus - mu_minus))


# μ₊ elimination


@dataclass(frozen=True)
class EliminationReport:
    candidates: tuple[int, ...]
    # shell -> (h, j) with h ∈ S₁, j ∈ S₂ and |h + j|² = shell
    hits: dict[int, tuple[tuple[WaveVector, WaveVector], ...]]

    @property
    def reached_shells(self) -> set[int]:
        return set(self.hits)

    @property
    def admissible(self) -> tuple[int, ...]:
        return tuple(mu for mu in self.candidates if mu in self.hits)

    @property
    def passed(self) -> bool:
        return self.admissible == (MU_PLUS,)


def mu_plus_elimination_check(max_shell: int = 100) -> EliminationReport:
    """Shells that receive energy from the interaction of g (on S₂) with u₋ (on S₁)."""
    index = mode_index()
    hits: dict[int, list] = {}
    for h in index.S1:
        for j in index.S2:
            k = -(h + j)
            hits.setdefault(k.norm_sq, []).append((h, j))
    candidates = tuple(mu for mu in eigenvalues(max_shell) if mu not in (1, 2))
    return EliminationReport(candidates, {mu: tuple(pairs) for mu, pairs in sorted(hits.items())})


# Random search


@dataclass(frozen=True)
class SearchReport:
    samples: int
    counterexamples: int
    # Samples that kept S₃ support after projection onto the constraints
    with_high_support: int
    # Samples that kept S₁ ∪ S₂ support after projection
    with_low_support: int
    examples: tuple[np.ndarray, ...] = ()


class _CompiledSystem:
    """Constraints as padded index arrays for batched evaluation."""

    def __init__(self, constraints: Sequence[BilinearConstraint]):
        index = mode_index()
        n = len(constraints)
        self.left = np.zeros((n, 2), dtype=np.int64)
        self.right = np.zeros((n, 2), dtype=np.int64)
        self.low = np.zeros((n, 2), dtype=np.int64)
        self.coef = np.zeros((n, 2))
        for c, constraint in enumerate(constraints):
            for t, m in enumerate(constraint.monomials[:2]):
                a, b = m.factors
                self.left[c, t] = index.index(a)
                self.right[c, t] = index.index(b)
                self.low[c, t] = index.index(a if a in index.low else b)
                self.coef[c, t] = float(m.coefficient)
        self.conjugate = index.mode_set.conjugate
        self.low_mask = np.array([k in index.low for k in index])

    def residuals(self, amps: np.ndarray) -> np.ndarray:
        terms = self.coef[None] * amps[:, self.left] * amps[:, self.right]
        return terms.sum(axis=2)


def search_mixed_support(
    samples: int,
    rng: np.random.Generator,
    constraints: Sequence[BilinearConstraint] | None = None,
    *,
    chunk: int = 20_000,
    keep_probability: float = 0.5,
    tol: float = 1e-12,
    max_rounds: int = 16,
) -> SearchReport:
    """
    Random conjugate-closed supports with complex amplitudes, projected on the
    constraint set by repeatedly zeroing the S₁ ∪ S₂ factors of violated
    constraints. A counterexample satisfies every constraint and keeps
    support on both S₃ and S₁ ∪ S₂.
    """
    if constraints is None:
        constraints = generation_report().constraints
    system = _CompiledSystem(constraints)
    conj = system.conjugate
    n_modes = len(conj)

    counterexamples = high = low = 0
    examples: list[np.ndarray] = []
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        done += size

        keep = rng.random((size, n_modes)) < keep_probability
        keep = keep & keep[:, conj]
        amps = rng.standard_normal((size, n_modes)) + 1j * rng.standard_normal((size, n_modes))
        amps = 0.5 * (amps + np.conj(amps[:, conj]))
        amps = np.where(keep, amps, 0)

        for _ in range(max_rounds):
            violated = np.abs(system.residuals(amps)) > tol
            if not violated.any():
                break
            rows, cs, ts = np.nonzero(violated[:, :, None] & (system.coef != 0)[None])
            kill = np.zeros(amps.shape, dtype=bool)
            columns = system.low[cs, ts]
            kill[rows, columns] = True
            kill[rows, conj[columns]] = True
            amps = np.where(kill, 0, amps)

        satisfied = np.all(np.abs(system.residuals(amps)) <= tol, axis=1)
        nonzero = amps != 0
        has_low = np.any(nonzero[:, system.low_mask], axis=1)
        has_high = np.any(nonzero[:, ~system.low_mask], axis=1)
        mixed = satisfied & has_low & has_high

        counterexamples += int(mixed.sum())
        high += int(has_high.sum())
        low += int(has_low.sum())
        examples.extend(amps[mixed][: max(0, 5 - len(examples))])

    return SearchReport(samples, counterexamples, high, low, tuple(examples))


# Nonexistence


@dataclass
class VerificationStep:
    name: str
    passed: bool
    detail: str


@dataclass
class NonexistenceReport:
    generation: GenerationReport | None
    cases: dict[WaveVector, PropagationState]
    steps: list[VerificationStep]
    transcript: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "NONEXISTENT" if self.passed else "UNDECIDED"

    @property
    def passed(self) -> bool:
        return all(step.passed for step in self.steps)

    @property
    def first_failure(self) -> VerificationStep | None:
        return next((s for s in self.steps if not s.passed), None)

    def render(self) -> str:
        return "\n".join(self.transcript) + "\n"


def _propagate_both(k0: WaveVector, generated, transcribed):
    try:
        primary = propagate(k0, generated)
    except ConstraintError as exc:
        return k0, None, str(exc), False
    try:
        replay = propagate(k0, transcribed)
    except ConstraintError:
        return k0, primary, None, False
    return k0, primary, None, replay.known_zero == primary.known_zero


def nonexistence_report(
    transcribed_text: str | None = None,
    jobs: int = 8,
    *,
    search_samples: int = 0,
    seed: int = 0,
    force: SpectralField | None = None,
) -> NonexistenceReport:
    """
    Mechanized argument that no chained ghost exists for λ = 2. Failing steps
    are recorded in the report and named in the transcript. With
    `search_samples` > 0 a randomized mixed-support search is added as a
    further step. `force` defaults to the uniform eigenforce on the λ-shell.
    """
    index = mode_index()
    compiler = ConstraintCompiler()
    steps: list[VerificationStep] = []
    lines: list[str] = []

    generation = generation_report()
    generated = generation.constraints
    lines.append(f"constraint system: {len(generated)} generated")
    lines.extend(compiler.format_constraint(c) for c in generated)
    lines.append(
        "annihilated shells: " + ", ".join(map(str, sorted(generation.annihilated_shells)))
    )

    try:
        transcribed = transcribed_constraints(transcribed_text)
        compare_systems(generated, transcribed)
    except ConstraintError as exc:
        transcribed = None
        detail = f"{type(exc).__name__}: {exc}"
        steps.append(VerificationStep("generation", False, detail))
        lines.append(f"generation check FAILED: {detail}")
    else:
        steps.append(VerificationStep("generation", True, f"{len(transcribed)} constraints agree"))
        lines.append(f"generation check: {len(transcribed)} transcribed constraints agree")

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(
            pool.map(
                lambda k0: _propagate_both(k0, generated, transcribed or generated),
                index.S3,
            )
        )

    cases: dict[WaveVector, PropagationState] = {}
    failures = []
    for k0, state, error, agrees in results:
        lines.append(f"case k0={k0}")
        if state is None:
            lines.append(f"  FAILED: {error}")
            failures.append(str(k0))
            continue
        cases[k0] = state
        lines.extend(f"  {line}" for line in state.log)
        lines.append("  result: α vanishes on S1 ∪ S2")
        if transcribed is not None and not agrees:
            lines.append("  replay against the transcribed system disagrees")
            failures.append(str(k0))
    steps.append(
        VerificationStep(
            "propagation",
            not failures,
            f"{len(index.S3) - len(failures)}/{len(index.S3)} cases close",
        )
    )

    # u = u₊ + u₋ + ηg carries ηg on S₂, so a nonzero force on S₂ excludes
    # the branch with α = 0 on S₁ ∪ S₂.
    if force is None:
        force = make_eigenforce(EigenforceSpec(lambda_=LAMBDA, magnitude=1.0))
    amplitudes = to_scalar(force)
    force_on_s2 = float(np.sqrt(sum(abs(amplitudes[k]) ** 2 for k in index.S2)))
    steps.append(
        VerificationStep("force branch", force_on_s2 > 0, f"|g| on S2 = {force_on_s2:.17g}")
    )
    if force_on_s2 > 0:
        lines.append(
            f"|g| on S2 = {force_on_s2:.17g}: the branch with α = 0 on S1 ∪ S2 is excluded,"
            " so u₊ ≡ 0"
        )
    else:
        lines.append("g vanishes on S2: the branch with α = 0 on S1 ∪ S2 is not excluded")
    coefficient = u_plus_coefficient()
    positive = coefficient > 0
    steps.append(VerificationStep("stationary contradiction", positive, f"coefficient {coefficient}"))
    lines.append(
        f"|u₊|² = {coefficient}·E(1 - P/G²) with λ={LAMBDA}, μ₋={MU_MINUS}, μ₊={MU_PLUS}:"
        " u₊ ≡ 0 forces P = G², so u = u*"
    )

    if search_samples > 0:
        search = search_mixed_support(search_samples, np.random.default_rng(seed), generated)
        steps.append(
            VerificationStep(
                "mixed-support search",
                search.counterexamples == 0,
                f"{search.counterexamples} counterexamples in {search.samples} samples",
            )
        )
        lines.append(
            f"mixed-support search (seed {seed}): {search.samples} samples,"
            f" {search.counterexamples} counterexamples,"
            f" {search.with_high_support} keep S3 support"
        )

    elimination = mu_plus_elimination_check()
    steps.append(
        VerificationStep(
            "mu_plus elimination",
            elimination.passed,
            f"admissible shells {list(elimination.admissible)}",
        )
    )
    lines.append(
        "μ₊ elimination: (S1, S2) pairs reach shells "
        + ", ".join(map(str, sorted(elimination.reached_shells)))
    )

    report = NonexistenceReport(generation, cases, steps, lines)
    failure = report.first_failure
    if failure is not None:
        lines.append(f"failed step: {failure.name}")
    lines.append(f"verdict: {report.verdict}")
    logger.info("Nonexistence check: %s", report.verdict)
    return report
