"""Duality between observation and control for the linearly moving wall.

The adjoint generator is A(t)* = -A(t) - l'/l. Its homogeneous solutions
are l(t) times forward solutions, so in the moving eigenbasis the retrograde
problem z' = -A* z - C* C w, z(tau) = 0 reduces to

    b'(t) = -Phi(t)^H Phi(t) a,   b(tau) = 0,

with ``a`` the (constant) forward coefficients and Phi the observed mode
waveforms. Then z(0) has coefficients b(0) = G a, which is the Gramian
acting as a steering map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import eigh

from .curves import BoundaryCurve
from .errors import DomainError, NonObservableError
from .exact import trace_waveforms
from .observability import GramianMatrix, observability_constant_estimate, observation_gramian
from .pde import OperatorStamp, assemble_operator
from .spectral import SineSpectrum

SINGULAR_RTOL = 1e-12
DEFAULT_STEPS = 4096


@dataclass(frozen=True)
class AdjointStamp:
    """Tridiagonal stamp of A(t)* = -A(t) - (l'/l) I next to the forward stamp."""

    t: float
    forward: OperatorStamp
    adjoint: OperatorStamp

    @property
    def rate(self) -> float:
        return self.forward.ell_dot / self.forward.ell

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.adjoint.apply(v)

    def defect(self) -> float:
        """max row-wise |stamp(A*) + stamp(A) + (l'/l) I|; zero by construction."""
        f, s = self.forward, self.adjoint
        return float(max(np.max(np.abs(s.lower + f.lower)), np.max(np.abs(s.upper + f.upper)),
                         np.max(np.abs(s.diag + f.diag + self.rate))))


def adjoint_stamp(curve: BoundaryCurve, t: float, M: int) -> AdjointStamp:
    fwd = assemble_operator(curve, t, M)
    return AdjointStamp(float(t), fwd, fwd.shifted(-1.0, -fwd.ell_dot / fwd.ell))


def adjoint_defect(curve: BoundaryCurve, t: float, w: np.ndarray, v: np.ndarray) -> float:
    """|<A w, v> - <w, A* v>| = |<A w, v> + <w, (A + l'/l) v>| on the grid (h-weighted)."""
    st = adjoint_stamp(curve, t, w.size - 1)
    h = 1.0 / (w.size - 1)
    ip = lambda f, g: h * np.vdot(g, f)  # noqa: E731
    return float(abs(ip(st.forward.apply(w), v) - ip(w, st.apply(v))))


# -- spectral-coordinate duality ----------------------------------------------


def _waveforms(kind: str, epsilon: float, t: np.ndarray, N: int, a: float | None) -> list:
    if kind == "boundary_both":
        return [trace_waveforms(epsilon, t, N, "left"), trace_waveforms(epsilon, t, N, "right")]
    if kind in ("boundary_left", "boundary_right"):
        return [trace_waveforms(epsilon, t, N, kind.split("_")[1])]
    if kind == "point":
        return [trace_waveforms(epsilon, t, N, "point", a)]
    raise DomainError(f"unknown observation kind {kind!r}")


def retrograde(coeffs: np.ndarray, kind: str, epsilon: float, tau: float, steps: int = DEFAULT_STEPS,
               a: float | None = None):
    """Integrate b' = -Phi^H Phi coeffs backwards from b(tau) = 0 by Crank-Nicolson.

    Returns ``(times, b)`` with ``b[k]`` the spectral coefficients of z(t_k)
    divided by l(t_k).
    """
    if steps < 1:
        raise DomainError("steps must be at least 1")
    coeffs = np.asarray(coeffs, dtype=complex)
    N = coeffs.size
    t = np.linspace(0.0, tau, steps + 1)
    src = sum(np.conj(P) * (P @ coeffs)[:, None] for P in _waveforms(kind, epsilon, t, N, a))
    b = np.zeros((steps + 1, N), dtype=complex)
    dt = tau / steps
    for k in range(steps - 1, -1, -1):
        b[k] = b[k + 1] + 0.5 * dt * (src[k] + src[k + 1])
    return t, b


def _linear_epsilon(curve: BoundaryCurve) -> float:
    if curve.kind != "linear":
        raise DomainError("duality in spectral coordinates needs the exact series (linear wall)")
    return float(curve.epsilon)


def duality_residual(spec: SineSpectrum, curve: BoundaryCurve, tau: float, kind: str = "boundary_both",
                     a: float | None = None, steps: int = DEFAULT_STEPS) -> float:
    """|<w0, z(0)> - int ||C w||^2| / int ||C w||^2, with the output energy from the Gramian."""
    eps = _linear_epsilon(curve)
    if spec.epsilon != eps:
        spec = SineSpectrum(spec.coefficients, eps)
    coeffs = spec.coefficients
    if not np.any(coeffs):
        return 0.0
    _, b = retrograde(coeffs, kind, eps, tau, steps, a)
    pairing = np.vdot(b[0], coeffs)
    g = observation_gramian(kind, eps, tau, spec.N, a)
    energy = float(np.real(np.vdot(coeffs, g.G @ coeffs)))
    if energy == 0.0:
        return 0.0 if abs(pairing) == 0 else float("inf")
    return float(abs(pairing - energy) / energy)


@dataclass(frozen=True)
class ControlSolution:
    w0: SineSpectrum
    times: np.ndarray
    z_coefficients: np.ndarray
    target: np.ndarray
    achieved: np.ndarray
    residual: float
    cond: float


def steer(g: GramianMatrix, target, steps: int = DEFAULT_STEPS) -> ControlSolution:
    """Choose w0 with G w0 = target and re-simulate the retrograde problem to get z(0)."""
    target = np.asarray(target, dtype=complex).ravel()
    if target.size != g.N:
        raise DomainError(f"target has {target.size} coefficients, Gramian has N={g.N}")
    vals, vecs = eigh(g.G)
    trace = float(np.real(np.trace(g.G)))
    if trace <= 0 or vals[0] < SINGULAR_RTOL * trace:
        k = vecs[:, 0]
        k = k * np.exp(-1j * np.angle(k[np.argmax(np.abs(k))]))
        raise NonObservableError(
            f"Gramian is numerically singular (min eigenvalue {vals[0]:.3e}, trace {trace:.3e}); kernel {np.round(k, 12)}",
            k, float(vals[0]))
    c, C = observability_constant_estimate(g)
    w0 = np.linalg.solve(g.G, target)
    times, b = retrograde(w0, g.kind, g.epsilon, g.tau, steps, g.a)
    achieved = b[0]
    tn = np.linalg.norm(target)
    residual = float(np.linalg.norm(achieved - target) / tn) if tn > 0 else float(np.linalg.norm(achieved))
    return ControlSolution(SineSpectrum(w0, g.epsilon), times, b, target, achieved, residual, C / c)


def control_report(g: GramianMatrix, sol: ControlSolution) -> dict:
    return {"kind": g.kind, "N": g.N, "epsilon": g.epsilon, "tau": g.tau, "cond_G": sol.cond,
            "residual": sol.residual, "target_norm": float(np.linalg.norm(sol.target)),
            "w0_norm": float(np.linalg.norm(sol.w0.coefficients))}


def write_control_json(g: GramianMatrix, sol: ControlSolution, path) -> None:
    rep = control_report(g, sol)
    Path(path).write_text(json.dumps({k: (float(f"{v:.17g}") if isinstance(v, float) else v) for k, v in rep.items()},
                                     indent=2) + "\n")


def dual_problem_descriptor(kind: str) -> dict:
    """Moving-domain boundary control problem dual to observation at ``kind``."""
    ends = {"left": ["x=0"], "right": ["x=l(t)"], "both": ["x=0", "x=l(t)"]}
    if kind not in ends:
        raise DomainError(f"kind must be left, right or both, got {kind!r}")
    data = {"x=0": "h(0,t) = -i l(t)^3 u_x(0,t)", "x=l(t)": "h(l(t),t) = -i l(t)^3 u_x(l(t),t)"}
    free = [e for e in ("x=0", "x=l(t)") if e not in ends[kind]]
    return {
        "kind": kind,
        "equation": "i h_t + h_xx - i (l'/l) h = 0 on 0 < x < l(t), 0 < t < tau",
        "controlled_endpoints": ends[kind],
        "boundary_data": {e: data[e] for e in ends[kind]} | {e: "h = 0" for e in free},
        "terminal_condition": "h(x, tau) = 0",
        "initial_state": "h(x, 0) = h0 (any target in the state space)",
    }
