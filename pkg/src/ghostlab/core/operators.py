"""
Stokes powers, the scalar product and the bilinear map B on truncated fields.

The scalar product absorbs the (2π)² volume factor: (u, v) = Σ_k û(k)·conj v̂(k).
All identities used by the package are homogeneous in that constant.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from ghostlab._typing import WaveVectorLike
from ghostlab.core.field import ScalarAmplitudeField, SpectralField, from_scalar
from ghostlab.core.lattice import ModeSet, WaveVector, is_eigenvalue, shell
from ghostlab.errors import NotAnEigenvalue, ShellViolation


def apply_stokes_power(u: SpectralField, s: float) -> SpectralField:
    if s == 0 or not len(u.modes):
        return u
    factor = u.modes.norm_sq.astype(np.float64) ** s
    return SpectralField(u.modes, u.values * factor[:, None], u.truncation_radius_sq)


def inner(u: SpectralField, v: SpectralField) -> float:
    if u.modes == v.modes:
        a, b = u.values, v.values
    else:
        _, a, b, _ = u._align(v)
    return float(np.sum(a * np.conj(b)).real)


def norm_As(u: SpectralField, s: float = 0.0) -> float:
    """|A^s u|"""
    if not len(u.modes):
        return 0.0
    weight = u.modes.norm_sq.astype(np.float64) ** (2 * s)
    return float(np.sqrt(np.sum(weight * np.sum(np.abs(u.values) ** 2, axis=1))))


def eigenspace_project(u: SpectralField, mu: int) -> SpectralField:
    return project_shells(u, (mu,))


def project_shells(u: SpectralField, shells: Iterable[int]) -> SpectralField:
    shells = set(shells)
    keep = np.isin(u.modes.norm_sq, sorted(shells))
    modes = ModeSet.of(k for k, flag in zip(u.modes, keep) if flag)
    return SpectralField(modes, u.values[keep], u.truncation_radius_sq)


# Bilinear map


@dataclass(frozen=True)
class _TriadTable:
    out_modes: ModeSet
    out_index: np.ndarray
    left: np.ndarray
    right: np.ndarray
    j: np.ndarray
    k: np.ndarray
    k_sq: np.ndarray


@functools.lru_cache(maxsize=256)
def _triad_table(u_modes: ModeSet, v_modes: ModeSet, radius_sq: int | None) -> _TriadTable:
    # Every pair (k - j, j) with k - j from u, j from v and k != 0.
    ksum = u_modes.vectors[:, None, :] + v_modes.vectors[None, :, :]
    ksq = np.sum(ksum * ksum, axis=2)
    mask = ksq > 0
    if radius_sq is not None:
        mask &= ksq <= radius_sq
    left, right = np.nonzero(mask)
    kv = ksum[left, right]

    out_modes = ModeSet.of((int(a), int(b)) for a, b in kv)
    out_index = np.array(
        [out_modes.index((int(a), int(b))) for a, b in kv], dtype=np.int64
    )
    return _TriadTable(
        out_modes=out_modes,
        out_index=out_index,
        left=left,
        right=right,
        j=v_modes.vectors[right].astype(np.float64),
        k=kv.astype(np.float64),
        k_sq=ksq[left, right].astype(np.float64),
    )


def bilinear(
    u: SpectralField, v: SpectralField, radius_sq: int | None = None
) -> SpectralField:
    """
    B(u, v) as an exact convolution over the stored modes:

        B̂(k) = i Σ_j [(û(k-j)·j) v̂(j) - ((û(k-j)·j)(v̂(j)·k)/|k|²) k]

    Output modes beyond `radius_sq` are dropped. Without a radius every
    reachable mode is kept.
    """
    out_radius = radius_sq
    if out_radius is None:
        out_radius = max(u.truncation_radius_sq, v.truncation_radius_sq)
    if not len(u.modes) or not len(v.modes):
        return SpectralField.zeros(ModeSet.empty(), out_radius)

    table = _triad_table(u.modes, v.modes, radius_sq)
    if not len(table.out_modes):
        return SpectralField.zeros(ModeSet.empty(), out_radius)
    if radius_sq is None:
        out_radius = max(out_radius, table.out_modes.max_norm_sq)

    a = u.values[table.left]
    b = v.values[table.right]
    s = a[:, 0] * table.j[:, 0] + a[:, 1] * table.j[:, 1]
    bk = b[:, 0] * table.k[:, 0] + b[:, 1] * table.k[:, 1]
    contrib = 1j * s[:, None] * (b - (bk / table.k_sq)[:, None] * table.k)

    out = np.zeros((len(table.out_modes), 2), dtype=np.complex128)
    np.add.at(out, table.out_index, contrib)
    return SpectralField(table.out_modes, out, out_radius)


# Forcing


@dataclass(frozen=True)
class EigenforceSpec:
    lambda_: int
    magnitude: float
    # Scalar amplitudes on the shell |k|² = lambda_. None selects the uniform
    # pattern α(k) = 1 on the whole shell.
    pattern: Mapping[WaveVector | WaveVectorLike, complex] | ScalarAmplitudeField | None = None


def make_eigenforce(spec: EigenforceSpec) -> SpectralField:
    lam = spec.lambda_
    if not is_eigenvalue(lam):
        raise NotAnEigenvalue(f"{lam} is not a sum of two squares")
    if not spec.magnitude > 0:
        raise ValueError(f"Force magnitude must be positive, got {spec.magnitude}")

    pattern = spec.pattern
    if pattern is None:
        pattern = {k: 1.0 for k in shell(lam)}
    if not isinstance(pattern, ScalarAmplitudeField):
        radius = max([lam, *(WaveVector.of(k).norm_sq for k in pattern)])
        pattern = ScalarAmplitudeField.from_mapping(pattern, truncation_radius_sq=radius)
    pattern.check_invariants()

    off_shell = [
        str(k) for k, value in pattern.items() if k.norm_sq != lam and value != 0
    ]
    if off_shell:
        raise ShellViolation(f"Force pattern has modes off the shell {lam}: {off_shell}")

    g = from_scalar(pattern, truncation_radius_sq=lam)
    g = SpectralField(g.modes, g.values, lam)
    size = norm_As(g)
    if size == 0:
        raise ShellViolation("Force pattern vanishes on the shell")
    return g * (spec.magnitude / size)


def random_field(
    modes: ModeSet,
    rng: np.random.Generator,
    *,
    norm: float | None = None,
    truncation_radius_sq: int | None = None,
) -> SpectralField:
    """Gaussian scalar amplitudes on `modes`, reality enforced."""
    n = len(modes)
    radius = modes.max_norm_sq if truncation_radius_sq is None else truncation_radius_sq
    alpha = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    alpha = 0.5 * (alpha + np.conj(alpha[modes.conjugate]))
    u = from_scalar(ScalarAmplitudeField(modes, alpha, radius))
    if norm is not None:
        size = norm_As(u)
        if size == 0:
            raise ValueError("Random field collapsed to zero")
        u = u * (norm / size)
    return u
