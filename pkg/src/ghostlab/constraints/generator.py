"""
Regeneration of the wave vector constraints of a chained ghost with λ = 2.

Such a ghost lives on S₁ ∪ S₂ ∪ S₃, so B(u,u) must have no component at any
k = h + j with |k|² outside {1, 2, 5}. Taking the component of B(u,u) at k,

    R_k = Σ_{h+j=k} α(h)α(j)(h⊥·j)(k·j)/(|h||j||k|) = 0.

All surviving terms of one R_k share the radicand |h|²|j|²|k|², which is
stripped together with the common integer factor.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ghostlab.constraints.compiler import ConstraintCompiler
from ghostlab.constraints.modes import ACTIVE_SHELLS, mode_index
from ghostlab.constraints.symbolic import BilinearConstraint, BilinearForm, factor_pair
from ghostlab.core.lattice import WaveVector
from ghostlab.errors import GenerationMismatch

logger = logging.getLogger(__name__)

EXPECTED_CONSTRAINTS = 28

# α(x)α(y) - α(z)α(w) = 0 and α(x)α(y) = 0 as written out by hand, in the
# order of the original derivation.
TRANSCRIBED = """\
a(0,-1)*a(2,1) - a(0,1)*a(2,-1)
a(1,0)*a(-1,2) - a(-1,0)*a(1,2)
a(0,1)*a(-2,-1) - a(0,-1)*a(-2,1)
a(-1,0)*a(1,-2) - a(1,0)*a(-1,-2)
a(1,0)*a(1,2) - a(0,1)*a(2,1)
a(0,1)*a(-2,1) - a(-1,0)*a(-1,2)
a(0,-1)*a(2,-1) - a(1,0)*a(1,-2)
a(-1,0)*a(-1,-2) - a(0,-1)*a(-2,-1)
a(2,1)*a(1,-1) - a(2,-1)*a(1,1)
a(-1,2)*a(1,1) - a(1,2)*a(-1,1)
a(-2,-1)*a(-1,1) - a(-2,1)*a(-1,-1)
a(1,-2)*a(-1,-1) - a(-1,-2)*a(1,-1)
a(0,1)*a(1,2)
a(1,0)*a(2,1)
a(0,1)*a(-1,2)
a(-1,0)*a(-2,1)
a(0,-1)*a(1,-2)
a(0,-1)*a(-1,-2)
a(1,0)*a(2,-1)
a(-1,0)*a(-2,-1)
a(1,2)*a(1,1)
a(2,1)*a(1,1)
a(-1,2)*a(-1,1)
a(-2,1)*a(-1,1)
a(-1,-2)*a(-1,-1)
a(1,-2)*a(1,-1)
a(1,-1)*a(2,-1)
a(-2,-1)*a(-1,-1)
"""


@dataclass
class GenerationReport:
    constraints: list[BilinearConstraint]
    visited_shells: set[int] = field(default_factory=set)
    # Shells reached by some h + j whose constraints all vanish identically
    annihilated_shells: set[int] = field(default_factory=set)
    # Ordered pairs with (h⊥·j)(k·j) = 0
    dropped_terms: int = 0
    # Unordered pairs whose two orderings cancel
    cancelled_pairs: int = 0

    @property
    def constraint_shells(self) -> set[int]:
        return {c.source_shell for c in self.constraints}


def _sort_constraints(constraints: Sequence[BilinearConstraint]) -> list[BilinearConstraint]:
    return sorted(constraints, key=lambda c: c.target.sort_key)


def generation_report() -> GenerationReport:
    index = mode_index()
    compiler = ConstraintCompiler()

    # target -> factor pair -> [numerator, radicand]
    sums: dict[WaveVector, dict[tuple, list[int]]] = {}
    report = GenerationReport(constraints=[])
    for h, j in itertools.product(index, repeat=2):
        k = h + j
        if k.is_zero():
            continue
        report.visited_shells.add(k.norm_sq)
        if k.norm_sq in ACTIVE_SHELLS:
            continue
        numerator = h.perp.dot(j) * k.dot(j)
        if numerator == 0:
            report.dropped_terms += 1
            continue
        entry = sums.setdefault(k, {}).setdefault(
            factor_pair(h, j), [0, h.norm_sq * j.norm_sq * k.norm_sq]
        )
        entry[0] += numerator

    live_shells = set()
    for k, pairs in sums.items():
        terms = {}
        radicands = set()
        for pair, (numerator, radicand) in pairs.items():
            if numerator == 0:
                report.cancelled_pairs += 1
                continue
            terms[pair] = Fraction(numerator)
            radicands.add(radicand)
        if not terms:
            continue
        if len(radicands) > 1:
            raise ValueError(f"Terms of R{k} carry different radicands {sorted(radicands)}")
        constraint = compiler.compile(BilinearConstraint(BilinearForm(terms), k))
        report.constraints.append(constraint)
        live_shells.add(k.norm_sq)

    report.constraints = _sort_constraints(report.constraints)
    report.annihilated_shells = {
        mu for mu in report.visited_shells if mu not in ACTIVE_SHELLS and mu not in live_shells
    }
    logger.debug(
        "Generated %d constraints on shells %s; annihilated shells %s",
        len(report.constraints),
        sorted(live_shells),
        sorted(report.annihilated_shells),
    )
    return report


def generate_constraints() -> list[BilinearConstraint]:
    return generation_report().constraints


def transcribed_constraints(text: str | None = None) -> list[BilinearConstraint]:
    compiler = ConstraintCompiler()
    parsed = compiler.parse_system(TRANSCRIBED if text is None else text)
    return _sort_constraints([compiler.compile(c) for c in parsed])


def compare_systems(
    generated: Sequence[BilinearConstraint], transcribed: Sequence[BilinearConstraint]
) -> None:
    """Raises GenerationMismatch unless both systems agree after normalization."""
    compiler = ConstraintCompiler()
    by_id_generated = {c.id: compiler.canonical(c) for c in generated}
    by_id_transcribed = {c.id: compiler.canonical(c) for c in transcribed}

    problems = []
    if len(generated) != len(transcribed):
        problems.append(f"{len(generated)} generated vs {len(transcribed)} transcribed constraints")
    if len(by_id_transcribed) != len(transcribed):
        problems.append("the transcribed system repeats a target")
    differing = sorted(
        {
            cid
            for cid in by_id_generated.keys() | by_id_transcribed.keys()
            if by_id_generated.get(cid) != by_id_transcribed.get(cid)
        }
    )
    if differing:
        problems.append(f"differing constraints {', '.join(differing)}")
    if problems:
        raise GenerationMismatch("; ".join(problems), ids=differing)
