"""
Support propagation over the constraint system.

Nonzero is a generic-value assumption: a vanishing product has a vanishing
factor. Rules, applied to a fixpoint over the constraints in canonical order:

- a single product with one factor known nonzero forces the other to zero;
- a two-term constraint with one product known zero reduces to a single product;
- α(-k) = conj α(k), so zeros and nonzeros come in conjugate pairs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from ghostlab._typing import WaveVectorLike
from ghostlab.constraints.generator import generate_constraints
from ghostlab.constraints.modes import mode_index
from ghostlab.constraints.symbolic import BilinearConstraint, Monomial
from ghostlab.core.lattice import WaveVector
from ghostlab.errors import PropagationConflict, PropagationStall

logger = logging.getLogger(__name__)


@dataclass
class PropagationState:
    known_zero: set[WaveVector] = field(default_factory=set)
    known_nonzero: set[WaveVector] = field(default_factory=set)
    log: list[str] = field(default_factory=list)

    def check_invariants(self):
        overlap = self.known_zero & self.known_nonzero
        if overlap:
            raise PropagationConflict(
                f"Modes both zero and nonzero: {', '.join(map(str, sorted(overlap, key=lambda k: k.sort_key)))}"
            )
        for known in (self.known_zero, self.known_nonzero):
            if any(-k not in known for k in known):
                raise PropagationConflict("Known sets are not closed under k -> -k")
        return self

    def is_dead(self, monomial: Monomial) -> bool:
        return any(k in self.known_zero for k in monomial.factors)

    def undecided(self, modes) -> list[WaveVector]:
        return [k for k in modes if k not in self.known_zero]

    def assume_nonzero(self, k: WaveVector):
        self.known_nonzero.add(k)
        self.log.append(f"assume: α{k} nonzero")
        if -k != k:
            self.known_nonzero.add(-k)
            self.log.append(f"reality: α{-k} nonzero (conjugate of α{k})")

    def force_zero(self, constraint: BilinearConstraint, k: WaveVector, other: WaveVector):
        if k in self.known_nonzero:
            raise PropagationConflict(
                f"constraint {constraint.id} forces α{k} zero but it is assumed nonzero"
            )
        self.known_zero.add(k)
        self.log.append(
            f"constraint {constraint.id}: α{k} forced zero (other factor α{other} nonzero)"
        )
        self.known_zero.add(-k)
        self.log.append(f"reality: α{-k} forced zero (conjugate of α{k})")


def _apply(state: PropagationState, constraint: BilinearConstraint) -> bool:
    monomials = constraint.monomials
    live = [m for m in monomials if not state.is_dead(m)]
    if len(live) != 1:
        return False
    monomial = live[0]
    a, b = monomial.factors
    if a in state.known_nonzero and b not in state.known_nonzero:
        target, other = b, a
    elif b in state.known_nonzero and a not in state.known_nonzero:
        target, other = a, b
    elif a in state.known_nonzero and b in state.known_nonzero:
        raise PropagationConflict(
            f"constraint {constraint.id}: {monomial.product_text()} must vanish"
            " but both factors are nonzero"
        )
    else:
        return False

    if len(monomials) > 1:
        dead = next(m for m in monomials if m is not monomial and state.is_dead(m))
        zero = next(k for k in dead.factors if k in state.known_zero)
        state.log.append(
            f"constraint {constraint.id}: reduces to {monomial.product_text()}"
            f" since α{zero} is zero"
        )
    state.force_zero(constraint, target, other)
    return True


def propagate(
    assume_nonzero: WaveVector | WaveVectorLike,
    constraints: Sequence[BilinearConstraint] | None = None,
) -> PropagationState:
    """
    Fixpoint of the rules from α(k₀) ≠ 0 with k₀ ∈ S₃. Every mode of S₁ ∪ S₂
    must end up zero.
    """
    index = mode_index()
    k0 = WaveVector.of(assume_nonzero)
    if k0 not in index.S3:
        raise ValueError(f"{k0} is not in S₃")
    if constraints is None:
        constraints = generate_constraints()
    ordered = sorted(constraints, key=lambda c: c.target.sort_key)

    state = PropagationState()
    state.assume_nonzero(k0)
    changed = True
    while changed:
        changed = False
        for constraint in ordered:
            changed |= _apply(state, constraint)
        state.check_invariants()

    remaining = state.undecided(index.S1 + index.S2)
    if remaining:
        raise PropagationStall(
            f"Fixpoint from α{k0} ≠ 0 leaves {', '.join(map(str, remaining))} undecided",
            state=state,
        )
    logger.debug("k0=%s: %d inferences", k0, len(state.log))
    return state
