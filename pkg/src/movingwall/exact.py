"""Exact mode expansion for the linearly moving wall l(t) = 1 + eps t.

Each mode

    u_n(x, t) = sqrt(2/l) sin(n pi x / l) exp(i (eps x^2 / (4 l) - n^2 pi^2 t / l))

solves i u_t + u_xx = 0 on [0, l(t)] with Dirichlet walls, so finite
combinations give exact reference trajectories and boundary traces.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from .curves import BoundaryCurve
from .errors import DomainError, ResolutionError
from .spectral import SineSpectrum

PI = np.pi
_XTOL = 1e-12


@dataclass(frozen=True)
class ExactSolution:
    """Finite series with coefficients from ``spectrum`` on the wall l(t) = 1 + eps t."""

    spectrum: SineSpectrum
    epsilon: float | None = None

    def __post_init__(self):
        eps = self.spectrum.epsilon if self.epsilon is None else float(self.epsilon)
        if eps != self.spectrum.epsilon:
            raise DomainError(f"spectrum chirp {self.spectrum.epsilon} differs from wall rate {eps}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def coefficients(self) -> np.ndarray:
        return self.spectrum.coefficients

    @property
    def N(self) -> int:
        return self.spectrum.N

    def length(self, t):
        return 1.0 + self.epsilon * np.asarray(t, dtype=float)

    def curve(self, tau: float) -> BoundaryCurve:
        return BoundaryCurve.linear(self.epsilon, tau)


def _check_time(t: np.ndarray, eps: float) -> None:
    if np.any(t < 0):
        raise DomainError("exact series is evaluated for t >= 0 only")
    if eps < 0 and np.any(1.0 + eps * t <= 0):
        raise DomainError("wall has collapsed: l(t) <= 0")


def eval_u(sol: ExactSolution, x, t):
    """Partial sum of the series at points ``x`` (0 <= x <= l(t)) and times ``t`` (broadcast)."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    _check_time(t, sol.epsilon)
    ell = sol.length(t)
    if np.any(x < -_XTOL * ell) or np.any(x > ell * (1 + _XTOL)):
        raise DomainError("x must lie in [0, l(t)]")
    x = np.clip(x, 0.0, ell)
    out = np.zeros(x.shape, dtype=complex)
    amp = np.sqrt(2.0 / ell)
    chirp = sol.epsilon * x**2 / (4.0 * ell)
    for n, a in enumerate(sol.coefficients, start=1):
        if a == 0:
            continue
        out += a * np.sin(n * PI * x / ell) * np.exp(1j * (chirp - n**2 * PI**2 * t / ell))
    out *= amp
    return out[()] if out.ndim == 0 else out


def eval_ux(sol: ExactSolution, x, t):
    """Spatial derivative u_x of the partial sum."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    _check_time(t, sol.epsilon)
    ell = sol.length(t)
    if np.any(x < -_XTOL * ell) or np.any(x > ell * (1 + _XTOL)):
        raise DomainError("x must lie in [0, l(t)]")
    x = np.clip(x, 0.0, ell)
    out = np.zeros(x.shape, dtype=complex)
    chirp = sol.epsilon * x**2 / (4.0 * ell)
    drift = 0.5j * sol.epsilon * x / ell
    for n, a in enumerate(sol.coefficients, start=1):
        if a == 0:
            continue
        arg = n * PI * x / ell
        phase = np.exp(1j * (chirp - n**2 * PI**2 * t / ell))
        out += a * phase * ((n * PI / ell) * np.cos(arg) + drift * np.sin(arg))
    out *= np.sqrt(2.0 / ell)
    return out[()] if out.ndim == 0 else out


def trace_waveforms(epsilon: float, t, N: int, which: str, a: float | None = None) -> np.ndarray:
    """Observed signal of each unit mode, shape ``(len(t), N)``.

    ``which`` is ``left`` (u_x(0, t)), ``right`` (u_x(l(t), t)) or ``point``
    (u(a, t)).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_time(t, epsilon)
    ell = 1.0 + epsilon * t
    n = np.arange(1, N + 1)
    base = np.sqrt(2.0 / ell)[:, None] * np.exp(-1j * PI**2 * np.outer(t / ell, n**2))
    if which == "left":
        return base * (n * PI)[None, :] / ell[:, None]
    if which == "right":
        sign = np.where(n % 2 == 0, 1.0, -1.0)
        return base * (sign * n * PI)[None, :] / ell[:, None] * np.exp(0.25j * epsilon * ell)[:, None]
    if which == "point":
        if a is None or not 0.0 < a < 1.0:
            raise DomainError(f"observation point must lie in (0, 1), got {a}")
        return base * np.sin(PI * a * np.outer(1.0 / ell, n)) * np.exp(0.25j * epsilon * a**2 / ell)[:, None]
    raise DomainError(f"unknown trace kind {which!r}")


def _unwrap(v, t):
    v = np.asarray(v)
    return v[0] if np.ndim(t) == 0 else v


def neumann_trace_left(sol: ExactSolution, t):
    """u_x(0, t)."""
    return _unwrap(trace_waveforms(sol.epsilon, t, sol.N, "left") @ sol.coefficients, t)


def neumann_trace_right(sol: ExactSolution, t):
    """u_x(l(t), t), including the (-1)^n signs and the chirp exp(i eps l / 4)."""
    return _unwrap(trace_waveforms(sol.epsilon, t, sol.N, "right") @ sol.coefficients, t)


def point_observation(sol: ExactSolution, a: float, t):
    """u(a, t) for a fixed interior point 0 < a < 1 (interior for all t since l >= 1)."""
    if not 0.0 < a < 1.0:
        raise DomainError(f"observation point must lie in (0, 1), got {a}")
    return eval_u(sol, a, t)


# -- orthonormal exponentials ----------------------------------------------


def bn_horizon(epsilon: float) -> float:
    """tau = 2 / (pi - 2 eps), where tau / l(tau) = 2 / pi."""
    return 2.0 / (PI - 2.0 * epsilon)


def bn_functions(epsilon: float, t, N: int) -> np.ndarray:
    """b_n(t) = sqrt(pi) / (sqrt(2) l(t)) exp(-i pi^2 n^2 t / l(t)), shape (len(t), N)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ell = 1.0 + epsilon * t
    n = np.arange(1, N + 1)
    return (np.sqrt(PI / 2.0) / ell)[:, None] * np.exp(-1j * PI**2 * np.outer(t / ell, n**2))


def _bn_grid(epsilon: float, N: int, quadrature_points: int | None):
    if not 0.0 < epsilon < PI / 2:
        raise DomainError(f"epsilon must lie in (0, pi/2), got {epsilon}")
    if quadrature_points is None:
        quadrature_points = 200 * N * N
    if quadrature_points < 200 * N * N:
        raise ResolutionError(f"quadrature_points={quadrature_points} < 200 N^2={200 * N * N}")
    intervals = quadrature_points + (quadrature_points % 2)
    return np.linspace(0.0, bn_horizon(epsilon), intervals + 1)


def bn_gram(epsilon: float, N: int, quadrature_points: int | None = None) -> np.ndarray:
    """G[m, n] = int_0^tau b_m conj(b_n) dt by composite Simpson; close to the identity."""
    t = _bn_grid(epsilon, N, quadrature_points)
    B = bn_functions(epsilon, t, N)
    prod = B[:, :, None] * np.conj(B[:, None, :])
    return simpson(prod, x=t, axis=0)


def bn_inner_products(f, epsilon: float, N: int, quadrature_points: int | None = None) -> np.ndarray:
    """<f, b_n> = int_0^tau f conj(b_n) dt for n = 1..N."""
    t = _bn_grid(epsilon, N, quadrature_points)
    ft = np.asarray(f(t), dtype=complex)
    return simpson(ft[:, None] * np.conj(bn_functions(epsilon, t, N)), x=t, axis=0)


# -- sampling ----------------------------------------------------------------


def sample_trajectory(sol: ExactSolution, tau: float, M: int = 256, steps: int = 256):
    """Fixed-domain trajectory w(y, t) = u(l(t) y, t) sampled from the series.

    Gradients w_y = l u_x(l y, t) and boundary slopes are exact.
    """
    from .pde import Trajectory, grid

    if steps < 1 or M < 2:
        raise DomainError("need steps >= 1 and M >= 2")
    times = np.linspace(0.0, tau, steps + 1)
    y = grid(M)
    ell = sol.length(times)[:, None]
    X = ell * y[None, :]
    T = np.broadcast_to(times[:, None], X.shape)
    states = np.asarray(eval_u(sol, X, T))
    states[:, 0] = states[:, -1] = 0.0
    grads = ell * np.asarray(eval_ux(sol, X, T))
    L = sol.length(times)
    left = L * neumann_trace_left(sol, times)
    right = L * neumann_trace_right(sol, times)
    return Trajectory(times, states, left, right, sol.curve(tau), gradients=grads, source="exact")


def write_trace_csv(path, t, left, right) -> None:
    """Columns t, re_left, im_left, re_right, im_right, abs2_left, abs2_right."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re_left", "im_left", "re_right", "im_right", "abs2_left", "abs2_right"])
        for tk, lk, rk in zip(t, left, right):
            w.writerow([f"{v:.17g}" for v in (tk, lk.real, lk.imag, rk.real, rk.imag, abs(lk) ** 2, abs(rk) ** 2)])
