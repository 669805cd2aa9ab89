"""
Exponential time differencing RK4 for the compiled Galerkin systems.

The linear part -|k|² is integrated exactly; the forcing and the nonlinear
term are treated explicitly. Update coefficients are evaluated by contour
integrals over roots of unity to avoid cancellation for small dt·|k|².
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from ghostlab.core.field import ScalarAmplitudeField, SpectralField, from_scalar, to_scalar
from ghostlab.core.lattice import ModeSet
from ghostlab.dynamics.galerkin import GalerkinSystem
from ghostlab.errors import NonFinite

logger = logging.getLogger(__name__)

BLOW_UP_FACTOR = 1e3


class ETDRK4Stepper:
    def __init__(self, system: GalerkinSystem, dt: float, num_roots_of_unity: int = 32):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.system = system
        self.dt = dt

        lin_op = system.linear
        self.exp_lin_full = np.exp(dt * lin_op)
        self.exp_lin_half = np.exp(0.5 * dt * lin_op)

        roots_of_unity = np.exp(
            1j * np.pi * (np.arange(num_roots_of_unity) + 0.5) / num_roots_of_unity
        )
        lr = dt * lin_op[:, None] + roots_of_unity[None, :]
        lr_squ = lr**2
        lr_cub = lr**3
        exp_lr = np.exp(lr)
        self.coeff_f0 = dt * (((np.exp(lr / 2.0) - 1) / lr).mean(1)).real
        self.coeff_f1 = dt * (
            ((-4 - lr + exp_lr * (4 - 3 * lr + lr_squ)) / lr_cub).mean(1)
        ).real
        self.coeff_f2 = dt * (((2 + lr + exp_lr * (lr - 2)) / lr_cub).mean(1)).real
        self.coeff_f3 = dt * (
            ((-4 - 3 * lr - lr_squ + exp_lr * (4 - lr)) / lr_cub).mean(1)
        ).real

    def step(self, alpha: np.ndarray) -> np.ndarray:
        explicit = self.system.explicit_part
        n_0 = explicit(alpha)
        alpha_1 = self.exp_lin_half * alpha + self.coeff_f0 * n_0
        n_1 = explicit(alpha_1)
        alpha_2 = self.exp_lin_half * alpha + self.coeff_f0 * n_1
        n_2 = explicit(alpha_2)
        alpha_3 = self.exp_lin_half * alpha_1 + self.coeff_f0 * (2 * n_2 - n_0)
        n_3 = explicit(alpha_3)
        out = (
            self.exp_lin_full * alpha
            + self.coeff_f1 * n_0
            + 2 * self.coeff_f2 * (n_1 + n_2)
            + self.coeff_f3 * n_3
        )
        # Reality, α(-k) = conj α(k), against rounding drift
        return 0.5 * (out + np.conj(out[..., self.system.modes.conjugate]))


@functools.lru_cache(maxsize=64)
def _stepper(system: GalerkinSystem, dt: float) -> ETDRK4Stepper:
    return ETDRK4Stepper(system, dt)


def step_etdrk4(state: SpectralField, system: GalerkinSystem, dt: float) -> SpectralField:
    alpha = _stepper(system, dt).step(system.amplitudes_of(state))
    return system.field_of(alpha)


@dataclass(frozen=True)
class Trajectory:
    """
    Sampled solution in scalar-amplitude coordinates.

    `amplitudes[i]` is α at `times[i]` and `rates[i]` is dα/dt there.
    """

    modes: ModeSet
    truncation_radius_sq: int
    times: np.ndarray
    amplitudes: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if self.amplitudes.shape != (n, len(self.modes)) or self.rates.shape != self.amplitudes.shape:
            raise ValueError("times, states and derivatives must have equal lengths")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be increasing")

    @classmethod
    def from_states(
        cls,
        times: Sequence[float],
        states: Sequence[SpectralField],
        derivatives: Sequence[SpectralField],
    ) -> Trajectory:
        modes = ModeSet.of(k for u in [*states, *derivatives] for k in u.modes)
        radius = max(u.truncation_radius_sq for u in [*states, *derivatives])
        amplitudes = np.array([to_scalar(u.reindex(modes, radius)).values for u in states])
        rates = np.array([to_scalar(u.reindex(modes, radius)).values for u in derivatives])
        return cls(
            modes,
            radius,
            np.asarray(times, dtype=np.float64),
            amplitudes.reshape(len(times), len(modes)),
            rates.reshape(len(times), len(modes)),
        )

    def __len__(self):
        return len(self.times)

    def _field(self, alpha: np.ndarray) -> SpectralField:
        return from_scalar(ScalarAmplitudeField(self.modes, alpha, self.truncation_radius_sq))

    @cached_property
    def states(self) -> tuple[SpectralField, ...]:
        return tuple(self._field(alpha) for alpha in self.amplitudes)

    @cached_property
    def derivatives(self) -> tuple[SpectralField, ...]:
        return tuple(self._field(rate) for rate in self.rates)

    @property
    def final_state(self) -> SpectralField:
        return self._field(self.amplitudes[-1])

    def check_invariants(self, system: GalerkinSystem | None = None, *, rtol=1e-12):
        conj = self.modes.conjugate
        scale = max(float(np.max(np.abs(self.amplitudes), initial=0.0)), 1e-300)
        if np.max(np.abs(self.amplitudes - np.conj(self.amplitudes[:, conj])), initial=0.0) > rtol * scale:
            raise ValueError("Trajectory states violate the reality condition")
        if system is not None:
            expected = np.array([system.rhs_amplitudes(a) for a in self.amplitudes])
            rate_scale = max(float(np.max(np.abs(expected), initial=0.0)), 1.0)
            if np.max(np.abs(expected - self.rates), initial=0.0) > rtol * rate_scale:
                raise ValueError("Trajectory derivatives disagree with the system rhs")
        return self


def _check_growth(alpha: np.ndarray, bound: np.ndarray, t: float, labels: Sequence | None):
    size_sq = np.sum(alpha.real**2 + alpha.imag**2, axis=-1)
    # nan and inf both fail the comparison
    failed = ~(size_sq <= bound**2)
    if not np.any(failed):
        return
    i = int(np.argmax(np.ravel(failed)))
    where = "" if labels is None else f" (ensemble member {labels[i]})"
    if not np.isfinite(np.ravel(size_sq)[i]):
        raise NonFinite(f"Non-finite coefficients at t={t:g}{where}")
    raise NonFinite(f"|u| exceeded {float(np.ravel(bound)[i]):g} at t={t:g}{where}")


def _advance(
    alpha: np.ndarray,
    system: GalerkinSystem,
    T: float,
    dt: float,
    sample_every: int,
    labels: Sequence | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample times and amplitudes, shape (samples, *alpha.shape)."""
    if not T > 0 or not dt > 0:
        raise ValueError(f"T and dt must be positive (T={T}, dt={dt})")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")

    stepper = _stepper(system, dt)
    n_steps = max(int(round(T / dt)), 1)
    start = np.sqrt(np.sum(np.abs(alpha) ** 2, axis=-1))
    bound = BLOW_UP_FACTOR * np.maximum(np.maximum(start, system.force_norm), 1e-12)

    logger.info(
        "Integrating %r%s: %d steps of dt=%g, sampling every %d",
        system,
        "" if alpha.ndim == 1 else f" x{len(alpha)}",
        n_steps,
        dt,
        sample_every,
    )

    n_samples = 1 + n_steps // sample_every + (1 if n_steps % sample_every else 0)
    times = np.empty(n_samples)
    samples = np.empty((n_samples, *alpha.shape), dtype=np.complex128)
    times[0], samples[0] = 0.0, alpha
    filled = 1
    for step in range(1, n_steps + 1):
        alpha = stepper.step(alpha)
        _check_growth(alpha, bound, step * dt, labels)
        if step % sample_every == 0 or step == n_steps:
            times[filled], samples[filled] = step * dt, alpha
            filled += 1
    return times, samples


def integrate(
    u0: SpectralField,
    system: GalerkinSystem,
    T: float,
    dt: float,
    sample_every: int = 10,
) -> Trajectory:
    times, amplitudes = _advance(system.amplitudes_of(u0), system, T, dt, sample_every)
    rates = system.rhs_amplitudes(amplitudes)
    return Trajectory(system.modes, system.truncation_radius_sq, times, amplitudes, rates)


def integrate_ensemble(
    u0s: Sequence[SpectralField],
    system: GalerkinSystem,
    T: float,
    dt: float,
    sample_every: int = 10,
    labels: Sequence | None = None,
) -> Iterator[Trajectory]:
    """
    Advance several initial states together as one (members, modes) array.

    Rows never mix, so each trajectory equals the one `integrate` returns for
    the same start. Trajectories are yielded one at a time to keep a single
    member's rates in memory.
    """
    if not u0s:
        return
    alpha = np.stack([system.amplitudes_of(u0) for u0 in u0s])
    times, samples = _advance(alpha, system, T, dt, sample_every, labels)
    for i in range(len(u0s)):
        amplitudes = np.ascontiguousarray(samples[:, i, :])
        yield Trajectory(
            system.modes,
            system.truncation_radius_sq,
            times,
            amplitudes,
            system.rhs_amplitudes(amplitudes),
        )
