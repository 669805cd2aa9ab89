import numpy as np

from ghostlab.core.field import SpectralField
from ghostlab.core.lattice import ModeSet, ball
from ghostlab.core.operators import random_field


def random_ball_field(seed: int, radius_sq: int = 25, norm: float = 1.0) -> SpectralField:
    rng = np.random.default_rng(seed)
    return random_field(ModeSet.of(ball(radius_sq)), rng, norm=norm)


def format_lines(lines) -> str:
    return "\n".join(lines)


def format_constraints(constraints) -> str:
    from ghostlab.constraints.compiler import ConstraintCompiler

    return ConstraintCompiler().format_system(constraints)
