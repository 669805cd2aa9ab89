"""
Randomized checks of the algebraic identities the package relies on.

Every check reports the largest relative residual over the samples. The
bilinear map under test is injectable so that broken implementations can be
shown to fail.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ghostlab.core.field import SpectralField
from ghostlab.core.lattice import ModeSet, ball
from ghostlab.core.operators import apply_stokes_power, bilinear, inner, norm_As, random_field
from ghostlab.dynamics.ghost_check import ghost_relation_residuals
from ghostlab.geometry.chained import synthetic_chained_state
from ghostlab.geometry.diagnostics import diagnostics
from ghostlab.geometry.frames import old_frame, old_frame_coordinates
from ghostlab.geometry.reference import check_tensor, nonlinear_tensor, stokes_matrix

logger = logging.getLogger(__name__)

BilinearMap = Callable[[SpectralField, SpectralField], SpectralField]

B_TOLERANCE = 1e-11
ORACLE_TOLERANCE = 1e-10
GEOMETRY_TOLERANCE = 1e-9


@dataclass
class IdentityResult:
    name: str
    tolerance: float
    residuals: list[float] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tolerance

    def add(self, value: float):
        self.residuals.append(abs(float(value)))


@dataclass
class IdentityReport:
    samples: int
    seed: int | None
    results: dict[str, IdentityResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failures(self) -> list[str]:
        return [name for name, r in self.results.items() if not r.passed]

    def rows(self) -> list[tuple[str, float, float, bool]]:
        return [(r.name, r.max_residual, r.tolerance, r.passed) for r in self.results.values()]


def physical_space_bilinear(u: SpectralField, v: SpectralField, grid: int | None = None) -> SpectralField:
    """
    Leray projection of (u·∇)v evaluated by collocation on a uniform grid,
    returned on every mode the exact convolution can reach.
    """
    reach = max(u.modes.max_norm_sq, v.modes.max_norm_sq)
    kmax = math.isqrt(reach)
    n = grid if grid is not None else max(32, 4 * kmax + 4)
    if n <= 4 * kmax:
        raise ValueError(f"Grid {n} aliases modes up to |k_i| = {2 * kmax}")

    def to_grid(values: np.ndarray, modes: ModeSet) -> np.ndarray:
        # values (m,) for one component; u(x) = Σ û(k) e^{ik·x}
        spectrum = np.zeros((n, n), dtype=np.complex128)
        spectrum[modes.vectors[:, 0] % n, modes.vectors[:, 1] % n] = values
        return np.fft.ifft2(spectrum).real * (n * n)

    uu = [to_grid(u.values[:, i], u.modes) for i in range(2)]
    kv = v.modes.vectors.astype(np.float64)
    product = []
    for i in range(2):
        grads = [to_grid(1j * kv[:, l] * v.values[:, i], v.modes) for l in range(2)]
        product.append(uu[0] * grads[0] + uu[1] * grads[1])

    out_modes = ModeSet.of(
        k for k in ball(4 * reach) if any((k - j) in u.modes for j in v.modes)
    )
    vectors = out_modes.vectors
    values = np.stack(
        [np.fft.fft2(p)[vectors[:, 0] % n, vectors[:, 1] % n] / (n * n) for p in product],
        axis=1,
    )
    k = vectors.astype(np.float64)
    along = np.einsum("ij,ij->i", values, k) / out_modes.norm_sq
    values = values - along[:, None] * k
    radius = max(out_modes.max_norm_sq, u.truncation_radius_sq, v.truncation_radius_sq)
    return SpectralField(out_modes, values, radius)


def _relative(value: float, scale: float) -> float:
    return abs(value) / max(scale, 1e-300)


def run_identity_suite(
    samples: int,
    rng: np.random.Generator,
    *,
    radius_sq: int = 25,
    oracle_samples: int = 100,
    bilinear_map: BilinearMap = bilinear,
    seed: int | None = None,
) -> IdentityReport:
    names = [
        ("orthogonality", B_TOLERANCE),  # (B(u,v),w) + (B(u,w),v) = 0
        ("vanishing_pairing", B_TOLERANCE),  # (B(u,v),v) = 0
        ("stokes_orthogonality", B_TOLERANCE),  # (B(u,u),Au) = 0
        ("enstrophy_invariance", B_TOLERANCE),  # (B(Av,v),u) = (B(u,v),Av)
        ("physical_space_oracle", ORACLE_TOLERANCE),
        ("ghost_relations", GEOMETRY_TOLERANCE),
        ("old_frame_coordinates", GEOMETRY_TOLERANCE),
        ("stokes_matrix", GEOMETRY_TOLERANCE),
        ("nonlinear_tensor", GEOMETRY_TOLERANCE),
    ]
    results = {name: IdentityResult(name, tol) for name, tol in names}
    modes = ModeSet.of(ball(radius_sq))

    for i in range(samples):
        u, v, w = (random_field(modes, rng, norm=1.0) for _ in range(3))
        b_uv = bilinear_map(u, v)
        b_uw = bilinear_map(u, w)
        scale = norm_As(u) * norm_As(v, 0.5) * norm_As(w, 0.5)
        results["orthogonality"].add(_relative(inner(b_uv, w) + inner(b_uw, v), scale))
        results["vanishing_pairing"].add(_relative(inner(b_uv, v), scale))

        au = apply_stokes_power(u, 1)
        b_uu = bilinear_map(u, u)
        results["stokes_orthogonality"].add(
            _relative(inner(b_uu, au), norm_As(u, 0.5) * norm_As(u, 1) ** 2)
        )

        av = apply_stokes_power(v, 1)
        lhs = inner(bilinear_map(av, v), u)
        rhs = inner(bilinear_map(u, v), av)
        results["enstrophy_invariance"].add(
            _relative(lhs - rhs, norm_As(u) * norm_As(v, 1) * norm_As(v, 1))
        )

        if i < oracle_samples:
            oracle = physical_space_bilinear(u, v)
            diff = norm_As(b_uv - oracle)
            results["physical_space_oracle"].add(_relative(diff, max(norm_As(oracle), 1e-300)))

    _geometry_checks(results, rng, max(1, min(samples, 64)), bilinear_map)

    report = IdentityReport(samples, seed, results)
    for name, result in results.items():
        logger.debug("%s: max residual %.3e (tolerance %.0e)", name, result.max_residual, result.tolerance)
    return report


def _geometry_checks(
    results: dict[str, IdentityResult],
    rng: np.random.Generator,
    samples: int,
    bilinear_map: BilinearMap,
):
    for _ in range(samples):
        eta = rng.uniform(0.05, 0.45)
        state = synthetic_chained_state(rng, eta=eta)
        udot = state.orthogonal_rate(rng, 10, norm=rng.uniform(0.1, 1.0))
        u, g = state.u, state.g

        b_uu = bilinear_map(u, u)
        rate = g - apply_stokes_power(u, 1) - b_uu
        relations = ghost_relation_residuals(u, rate, g, state.lambda_, nonlinear=b_uu)
        results["ghost_relations"].add(relations.instantaneous_max())

        d = diagnostics(u, udot, g, state.lambda_)
        frame = old_frame(u, udot, g)
        closed = old_frame_coordinates(d)
        b = g - apply_stokes_power(u, 1) - udot
        G = d.G
        measured = {
            "u": frame.coordinates(u),
            "Au": frame.coordinates(apply_stokes_power(u, 1)),
            "g": frame.coordinates(g),
            "udot": frame.coordinates(udot),
            "B": frame.coordinates(b),
        }
        worst = max(
            float(np.max(np.abs(measured[name] - getattr(closed, name)))) for name in measured
        )
        results["old_frame_coordinates"].add(worst / max(G, 1.0))

        stokes = stokes_matrix(d)
        results["stokes_matrix"].add(
            float(np.max(np.abs(stokes @ closed.u - closed.Au))) / max(d.P, 1e-300) ** 0.5
        )

        tensor = nonlinear_tensor(closed.u[0], closed.u[1], closed.B)
        check = check_tensor(tensor, closed.u, closed.B, stokes, rng)
        results["nonlinear_tensor"].add(
            max(check.reproduction, check.skew, check.symmetry) / max(G * G, 1e-300)
        )
