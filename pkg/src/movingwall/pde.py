"""Crank-Nicolson solver for the fixed-domain form of the moving-wall problem.

With y = x / l(t) and w(y, t) = u(x, t) the moving-wall Schrödinger equation
becomes the non-autonomous problem

    w_t = A(t) w,   A(t) w = (i / l^2) w_yy + (l'/l) y w_y,   w(0) = w(1) = 0

on the unit interval. Boundary traces map back through
w_y(0, t) = l(t) u_x(0, t) and w_y(1, t) = l(t) u_x(l(t), t).
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .curves import BoundaryCurve
from .errors import DomainError, SolverError
from .spectral import SineSpectrum

log = logging.getLogger(__name__)

DEFAULT_M = 256
COERCIVITY_MARGIN = 1e-9


def grid(M: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, M + 1)


def inner(u, v, h: float) -> complex:
    """Discrete L2 inner product h * sum u conj(v) (trapezoid with Dirichlet ends)."""
    return complex(h * np.vdot(v, u))


@dataclass(frozen=True)
class FixedState:
    """Grid values of w(., t) on y_j = j/M, including the Dirichlet endpoints."""

    values: np.ndarray
    t: float

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 1 or v.size < 3:
            raise DomainError("state needs at least three grid values")
        v[0] = v[-1] = 0.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def M(self) -> int:
        return self.values.size - 1


@dataclass(frozen=True)
class OperatorStamp:
    """Tridiagonal realisation of A(t) on interior nodes j = 1..M-1.

    ``lower[k]``, ``diag[k]`` and ``upper[k]`` multiply w_{j-1}, w_j, w_{j+1}
    in row j = k+1. Boundary rows are identically zero, which keeps
    Dirichlet values fixed under the time step.
    """

    t: float
    M: int
    ell: float
    ell_dot: float
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / self.M

    def apply(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        out = np.zeros(self.M + 1, dtype=complex)
        out[1:-1] = self.lower * w[:-2] + self.diag * w[1:-1] + self.upper * w[2:]
        return out

    def dense(self) -> np.ndarray:
        """Interior (M-1) x (M-1) matrix."""
        return np.diag(self.diag) + np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)

    def shifted(self, scale: complex, shift: complex) -> "OperatorStamp":
        """Stamp of ``scale * A + shift * I``."""
        return OperatorStamp(self.t, self.M, self.ell, self.ell_dot, scale * self.lower,
                             scale * self.diag + shift, scale * self.upper)


def assemble_operator(curve: BoundaryCurve, t: float, M: int) -> OperatorStamp:
    """Second difference for w_yy and centred difference for y w_y at time ``t``."""
    if M < 8:
        raise DomainError(f"grid needs M >= 8, got {M}")
    ell, ell_dot, _ = curve.eval(t)
    h = 1.0 / M
    y = np.arange(1, M) * h
    diff = 1j / (ell**2 * h**2)
    drift = ell_dot * y / (2.0 * ell * h)
    n = M - 1
    return OperatorStamp(
        t=float(t), M=M, ell=ell, ell_dot=ell_dot,
        lower=np.full(n, diff) - drift,
        diag=np.full(n, -2.0 * diff, dtype=complex),
        upper=np.full(n, diff) + drift,
    )


def _cn_interior(w_in: np.ndarray, stamp: OperatorStamp, dt: float) -> np.ndarray:
    half = 0.5 * dt
    rhs = w_in + half * (stamp.diag * w_in)
    rhs[1:] += half * stamp.lower[1:] * w_in[:-1]
    rhs[:-1] += half * stamp.upper[:-1] * w_in[1:]
    ab = np.empty((3, w_in.size), dtype=complex)
    ab[0, 1:] = -half * stamp.upper[:-1]
    ab[0, 0] = 0.0
    ab[1] = 1.0 - half * stamp.diag
    ab[2, :-1] = -half * stamp.lower[1:]
    ab[2, -1] = 0.0
    try:
        out = solve_banded((1, 1), ab, rhs, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"tridiagonal solve failed at t={stamp.t}, M={stamp.M}: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise SolverError(f"non-finite state after step at t={stamp.t}, M={stamp.M}")
    return out


def step(state: FixedState, curve: BoundaryCurve, dt: float, M: int | None = None) -> FixedState:
    """Advance one Crank-Nicolson step with A evaluated at the midpoint t + dt/2."""
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    M = state.M if M is None else M
    if M != state.M:
        raise DomainError(f"state has M={state.M}, step asked for M={M}")
    stamp = assemble_operator(curve, state.t + 0.5 * dt, M)
    out = np.zeros(M + 1, dtype=complex)
    try:
        out[1:-1] = _cn_interior(state.values[1:-1].copy(), stamp, dt)
    except SolverError as exc:
        raise SolverError(f"{exc} (dt={dt})") from exc
    return FixedState(out, state.t + dt)


def boundary_slopes(values: np.ndarray, h: float):
    """Second-order one-sided estimates of w_y at y = 0 and y = 1 (last axis)."""
    left = (-3.0 * values[..., 0] + 4.0 * values[..., 1] - values[..., 2]) / (2.0 * h)
    right = (3.0 * values[..., -1] - 4.0 * values[..., -2] + values[..., -3]) / (2.0 * h)
    return left, right


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed fixed-domain states with boundary slopes w_y(0, t), w_y(1, t).

    ``gradients`` holds w_y on the grid when it is known exactly (series
    samples); solver trajectories leave it ``None`` and consumers fall back
    to finite differences.
    """

    times: np.ndarray
    states: np.ndarray
    traces_left: np.ndarray
    traces_right: np.ndarray
    curve: BoundaryCurve
    gradients: np.ndarray | None = None
    source: str = "pde"

    def __post_init__(self):
        if self.states.shape[0] != self.times.size or self.traces_left.size != self.times.size \
                or self.traces_right.size != self.times.size:
            raise DomainError("trajectory arrays are not aligned with its time stamps")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise DomainError("trajectory time stamps must increase strictly")
        for arr in (self.times, self.states, self.traces_left, self.traces_right, self.gradients):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def M(self) -> int:
        return self.states.shape[1] - 1

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def y(self) -> np.ndarray:
        return grid(self.M)

    @property
    def tau(self) -> float:
        return float(self.times[-1])

    def lengths(self) -> np.ndarray:
        return self.curve.eval(self.times)[0]

    def state(self, k: int) -> FixedState:
        return FixedState(self.states[k], float(self.times[k]))

    def ux_traces(self):
        """Moving-domain Neumann traces u_x(0, t), u_x(l(t), t)."""
        ell = self.lengths()
        return self.traces_left / ell, self.traces_right / ell

    def slopes(self) -> np.ndarray:
        """w_y on the grid: exact if available, else centred differences."""
        if self.gradients is not None:
            return self.gradients
        return np.gradient(self.states, self.h, axis=1, edge_order=2)


def solve(spec: SineSpectrum, curve: BoundaryCurve, tau: float, M: int = DEFAULT_M, steps: int | None = None) -> Trajectory:
    """Integrate from the sampled initial data up to ``tau``.

    ``steps`` defaults to ceil(tau * M), i.e. dt close to the grid spacing.
    """
    if M < 8:
        raise DomainError(f"grid needs M >= 8, got {M}")
    if steps is None:
        steps = max(1, math.ceil(tau * M))
    if steps < 1:
        raise DomainError("steps must be at least 1")
    if tau > curve.tau * (1 + 1e-12):
        curve = curve.with_tau(tau)
    y = grid(M)
    h = 1.0 / M
    dt = tau / steps
    states = np.zeros((steps + 1, M + 1), dtype=complex)
    states[0] = spec.reconstruct(y)
    states[0, 0] = states[0, -1] = 0.0
    w = states[0, 1:-1].copy()
    for k in range(steps):
        stamp = assemble_operator(curve, (k + 0.5) * dt, M)
        try:
            w = _cn_interior(w, stamp, dt)
        except SolverError as exc:
            raise SolverError(f"{exc} (dt={dt})") from exc
        states[k + 1, 1:-1] = w
    times = np.linspace(0.0, tau, steps + 1)
    left, right = boundary_slopes(states, h)
    log.debug("solved M=%d steps=%d tau=%g", M, steps, tau)
    return Trajectory(times, states, left, right, curve, source="pde")


def coercivity_shift(curve: BoundaryCurve, tau: float | None = None) -> float:
    """Smallest shift omega with Re<(A(t) + omega) w, w> > 0 on [0, tau], plus a margin."""
    tau = curve.tau if tau is None else tau
    if tau > curve.tau * (1 + 1e-12):
        curve = curve.with_tau(tau)
    return 0.5 * curve.log_derivative_sup(tau) + COERCIVITY_MARGIN


# -- binary dump ----------------------------------------------------------

_HEADER = struct.Struct("<qqd")


def write_dump(traj: Trajectory, path) -> None:
    """Header (int64 M, int64 steps, float64 tau) then row-major complex64 states."""
    steps = traj.times.size - 1
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(traj.M, steps, traj.tau))
        fh.write(np.ascontiguousarray(traj.states, dtype="<c8").tobytes())


def read_dump(path):
    """Return ``(M, steps, tau, states)`` from a file written by :func:`write_dump`."""
    raw = Path(path).read_bytes()
    M, steps, tau = _HEADER.unpack_from(raw)
    states = np.frombuffer(raw, dtype="<c8", offset=_HEADER.size)
    if states.size != (steps + 1) * (M + 1):
        raise DomainError(f"{path}: payload size does not match header M={M}, steps={steps}")
    return M, steps, tau, states.reshape(steps + 1, M + 1)
