"""First and second energies of fixed-domain trajectories.

E(t) = 1/2 int |w|^2 dy and F(t) = 1/2 int |w_y|^2 dy obey

    l(t) E(t) = E(0),
    F(t) = l(t) F(0) - l(t) int_0^t l'/(2 l^2) |w_y(1, s)|^2 ds,

and for a non-shrinking wall pi^2 E(0) / l(t) <= F(t) <= l(t) F(0).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dst
from scipy.integrate import cumulative_trapezoid, trapezoid

from .curves import BoundaryCurve
from .pde import Trajectory

PI2 = np.pi**2


@dataclass(frozen=True)
class EnergyTrace:
    times: np.ndarray
    E: np.ndarray
    F: np.ndarray
    right_trace_accum: np.ndarray
    right_trace: np.ndarray

    def __post_init__(self):
        n = self.times.size
        if not (self.E.size == self.F.size == self.right_trace_accum.size == n):
            raise ValueError("energy sequences must align with times")


@dataclass(frozen=True)
class BoundsReport:
    lower_ok: bool
    upper_ok: bool
    lower_margin: float
    upper_margin: float
    theory_applies: bool


def sine_dirichlet_energy(states: np.ndarray) -> np.ndarray:
    """1/2 int |w_y|^2 of the discrete sine interpolant of grid values (last axis).

    Exact for sine polynomials of degree < M, and conserved by Crank-Nicolson
    on a fixed wall since discrete sines diagonalise the stencil.
    """
    M = states.shape[-1] - 1
    c = dst(states[..., 1:-1], type=1, axis=-1) / M
    k = np.arange(1, M)
    return 0.25 * np.sum(np.abs(c) ** 2 * (k * np.pi) ** 2, axis=-1)


def energies(traj: Trajectory, method: str = "spectral") -> EnergyTrace:
    """E by trapezoid on |w|^2 and F = 1/2 int |w_y|^2.

    Exact gradients are used when the trajectory carries them. Otherwise
    ``method`` selects ``spectral`` (discrete sine interpolant, the default)
    or ``centered`` (trapezoid on second-order differences).
    """
    h = traj.h
    E = 0.5 * trapezoid(np.abs(traj.states) ** 2, dx=h, axis=1)
    if traj.gradients is not None or method == "centered":
        F = 0.5 * trapezoid(np.abs(traj.slopes()) ** 2, dx=h, axis=1)
    elif method == "spectral":
        F = sine_dirichlet_energy(traj.states)
    else:
        raise ValueError(f"unknown F method {method!r}")
    ell, ell_dot, _ = traj.curve.eval(traj.times)
    weight = np.atleast_1d(ell_dot / (2.0 * ell**2)) * np.abs(traj.traces_right) ** 2
    if traj.times.size > 1:
        accum = cumulative_trapezoid(weight, traj.times, initial=0.0)
    else:
        accum = np.zeros(1)
    return EnergyTrace(traj.times.copy(), E, F, accum, np.abs(traj.traces_right) ** 2)


def _ell(trace: EnergyTrace, curve: BoundaryCurve):
    ell, ell_dot, _ = curve.eval(trace.times)
    return np.atleast_1d(ell), np.atleast_1d(ell_dot)


def first_identity_errors(trace: EnergyTrace, curve: BoundaryCurve) -> np.ndarray:
    """(l E - E(0)) / E(0) per sample, zeros when E(0) = 0."""
    E0 = trace.E[0]
    if E0 == 0.0:
        return np.zeros_like(trace.E)
    ell, _ = _ell(trace, curve)
    return (ell * trace.E - E0) / E0


def check_first_identity(trace: EnergyTrace, curve: BoundaryCurve) -> float:
    """max_k |l(t_k) E(t_k) - E(0)| / E(0)."""
    return float(np.max(np.abs(first_identity_errors(trace, curve))))


def check_second_bounds(trace: EnergyTrace, curve: BoundaryCurve, rtol: float = 1e-6) -> BoundsReport:
    """Check pi^2 E(0)/l <= F <= l F(0) at every sample.

    Margins are the smallest slack of each inequality relative to F(0).
    ``theory_applies`` is false when the wall shrinks somewhere on the
    horizon; the bounds are still evaluated.
    """
    ell, ell_dot = _ell(trace, curve)
    E0, F0 = trace.E[0], trace.F[0]
    scale = F0 if F0 > 0 else 1.0
    lower = (trace.F - PI2 * E0 / ell) / scale
    upper = (ell * F0 - trace.F) / scale
    return BoundsReport(
        lower_ok=bool(np.all(lower >= -rtol)),
        upper_ok=bool(np.all(upper >= -rtol)),
        lower_margin=float(lower.min()),
        upper_margin=float(upper.min()),
        theory_applies=bool(np.all(ell_dot >= 0)),
    )


def f_variation_errors(trace: EnergyTrace, curve: BoundaryCurve) -> np.ndarray:
    F0 = trace.F[0]
    if F0 == 0.0:
        return np.zeros_like(trace.F)
    ell, _ = _ell(trace, curve)
    return (trace.F - ell * F0 + ell * trace.right_trace_accum) / F0


def f_variation_residual(trace: EnergyTrace, curve: BoundaryCurve) -> float:
    """max_k |F - l F(0) + l * accum| / F(0)."""
    return float(np.max(np.abs(f_variation_errors(trace, curve))))


def poincare_margin(trace: EnergyTrace) -> np.ndarray:
    """F - pi^2 E, non-negative for Dirichlet data."""
    return trace.F - PI2 * trace.E


def write_energy_csv(trace: EnergyTrace, curve: BoundaryCurve, path) -> None:
    """Columns t, E, F, lE_residual, F_var_residual, poincare_margin."""
    lE = first_identity_errors(trace, curve)
    fv = f_variation_errors(trace, curve)
    pm = poincare_margin(trace)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "E", "F", "lE_residual", "F_var_residual", "poincare_margin"])
        for row in zip(trace.times, trace.E, trace.F, lE, fv, pm):
            w.writerow([f"{v:.17g}" for v in row])
