"""Admissibility and observability estimates for the moving-wall problem.

Covers the explicit admissibility constant C1(tau), the multiplier identity
residual on fixed-domain trajectories, observation Gramians on truncated
spectral spaces with their generalized eigenvalue bounds, and L_p point
observation.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad, simpson, trapezoid
from scipy.linalg import eigh, solve_triangular

from .curves import BoundaryCurve
from .errors import DomainError, ValidationError
from .exact import ExactSolution, point_observation, trace_waveforms
from .pde import Trajectory
from .spectral import h1_seminorms

log = logging.getLogger(__name__)

PI = np.pi
KINDS = ("boundary_left", "boundary_right", "boundary_both", "point")


# -- multipliers -------------------------------------------------------------


@dataclass(frozen=True)
class MultiplierFunction:
    """Real weight q(y) with derivatives, used in the multiplier identity.

    Sup-norms are exact for the presets and sampled on 10001 points otherwise.
    """

    q: Callable
    q_y: Callable
    q_yy: Callable
    preset: str = "custom"
    sup_norms: tuple = field(default=None, compare=False)

    def __post_init__(self):
        if self.sup_norms is None:
            y = np.linspace(0.0, 1.0, 10001)
            norms = tuple(float(np.max(np.abs(np.broadcast_to(f(y), y.shape)))) for f in (self.q, self.q_y, self.q_yy))
            object.__setattr__(self, "sup_norms", norms)

    @classmethod
    def left(cls) -> "MultiplierFunction":
        """q(y) = 1 - y: q(0) = 1, q(1) = 0."""
        return cls(lambda y: 1.0 - np.asarray(y, dtype=float), lambda y: -np.ones_like(np.asarray(y, dtype=float)),
                   lambda y: np.zeros_like(np.asarray(y, dtype=float)), "left", (1.0, 1.0, 0.0))

    @classmethod
    def right(cls) -> "MultiplierFunction":
        """q(y) = y: q(0) = 0, q(1) = 1."""
        return cls(lambda y: np.asarray(y, dtype=float), lambda y: np.ones_like(np.asarray(y, dtype=float)),
                   lambda y: np.zeros_like(np.asarray(y, dtype=float)), "right", (1.0, 1.0, 0.0))

    @classmethod
    def constant(cls, c: float = 1.0) -> "MultiplierFunction":
        return cls(lambda y: np.full(np.shape(y), c, dtype=float), lambda y: np.zeros(np.shape(y)),
                   lambda y: np.zeros(np.shape(y)), "constant", (abs(c), 0.0, 0.0))

    def scaled(self, c: float) -> "MultiplierFunction":
        q, qy, qyy = self.q, self.q_y, self.q_yy
        norms = tuple(abs(c) * s for s in self.sup_norms)
        return MultiplierFunction(lambda y: c * q(y), lambda y: c * qy(y), lambda y: c * qyy(y), self.preset, norms)


def admissibility_constant(curve: BoundaryCurve, tau: float, q: MultiplierFunction) -> float:
    """C1(tau) from the sup-norms of q, q_y, q_yy and integrals of 1/l."""
    if tau > curve.tau * (1 + 1e-12):
        curve = curve.with_tau(tau)
    ell_tau = curve.eval(tau)[0]
    if curve.kind == "linear" and curve.epsilon != 0.0:
        inv_int = np.log(ell_tau) / curve.epsilon
    elif curve.kind == "linear":
        inv_int = tau
    else:
        inv_int = quad(lambda t: 1.0 / curve.eval(t)[0], 0.0, tau, limit=200)[0]
    q_inf, qy_inf, qyy_inf = q.sup_norms
    first = (5.0 * ell_tau**2 + (PI**2 - 3.0) * ell_tau + PI**2) / (4.0 * ell_tau)
    second = PI * (ell_tau - 1.0) / 2.0 + inv_int
    third = 0.5 * PI * inv_int
    return float(first * q_inf + second * qy_inf + third * qyy_inf)


def _time_grid(tau: float, N: int, points: int | None = None) -> np.ndarray:
    # >= 20 samples per period of the fastest mode phase pi^2 N^2 t
    if points is None:
        points = int(max(2000, 20 * PI * N * N * tau)) * 2
    points += points % 2
    return np.linspace(0.0, tau, points + 1)


def admissibility_ratio(obj, tau: float | None = None, quadrature_points: int | None = None) -> float:
    """int_0^tau (|u_x(0,t)|^2 + |u_x(l(t),t)|^2) dt / ||u0'||^2.

    ``obj`` is an :class:`ExactSolution` (traces by Simpson quadrature) or a
    :class:`Trajectory` (recorded traces, trapezoid in time).
    """
    if isinstance(obj, ExactSolution):
        if tau is None:
            raise DomainError("tau is required for an exact solution")
        denom = h1_seminorms(obj.spectrum).exact ** 2
        if denom == 0.0:
            raise DomainError("ratio undefined for zero initial data")
        t = _time_grid(tau, obj.N, quadrature_points)
        a = obj.coefficients
        left = trace_waveforms(obj.epsilon, t, obj.N, "left") @ a
        right = trace_waveforms(obj.epsilon, t, obj.N, "right") @ a
        num = simpson(np.abs(left) ** 2 + np.abs(right) ** 2, x=t)
        return float(num / denom)
    if isinstance(obj, Trajectory):
        g0 = obj.slopes()[0]
        denom = trapezoid(np.abs(g0) ** 2, dx=obj.h)
        if denom == 0.0:
            raise DomainError("ratio undefined for zero initial data")
        mask = np.ones(obj.times.size, dtype=bool) if tau is None else obj.times <= tau * (1 + 1e-12)
        left, right = obj.ux_traces()
        num = trapezoid(np.abs(left[mask]) ** 2 + np.abs(right[mask]) ** 2, obj.times[mask])
        return float(num / denom)
    raise TypeError(f"expected ExactSolution or Trajectory, got {type(obj).__name__}")


# -- multiplier identity -----------------------------------------------------


class MultiplierTerms(NamedTuple):
    bracket: float
    q_t: float
    boundary: float
    q_y: float
    q_yy: float
    drift_q: float
    drift_q_y: float


def multiplier_terms(traj: Trajectory, q: MultiplierFunction) -> MultiplierTerms:
    """The seven terms of the multiplier identity, each a real number; they sum to zero."""
    y = traj.y
    h = traj.h
    w = traj.states
    wy = traj.slopes()
    t = traj.times
    ell, ell_dot, _ = traj.curve.eval(t)
    ell = np.atleast_1d(ell)[:, None]
    rate = np.atleast_1d(ell_dot)[:, None] / ell
    qv, qy, qyy = (np.broadcast_to(f(y), y.shape) for f in (q.q, q.q_y, q.q_yy))

    def space(f):
        return trapezoid(f, dx=h, axis=-1)

    def spacetime(f):
        return float(np.real(trapezoid(space(f), t)))

    cross = wy * np.conj(w)
    bracket_t = 0.5j * space(qv * np.conj(wy) * w)
    bracket = float(np.real(bracket_t[-1] - bracket_t[0]))
    q1, q0 = float(qv[-1]), float(qv[0])
    edge = (q1 * np.abs(traj.traces_right) ** 2 - q0 * np.abs(traj.traces_left) ** 2) / (2.0 * ell[:, 0] ** 2)
    boundary = float(trapezoid(edge, t))
    vol_qy = -spacetime(np.abs(wy) ** 2 * qy / ell**2)
    vol_qyy = -spacetime(cross * qyy / (2.0 * ell**2))
    drift_q = -spacetime(1j * y * rate * qv * np.abs(wy) ** 2)
    drift_qy = -spacetime(0.5j * y * rate * cross * qy)
    return MultiplierTerms(bracket, 0.0, boundary, vol_qy, vol_qyy, drift_q, drift_qy)


def multiplier_residual(traj: Trajectory, q: MultiplierFunction) -> float:
    """|sum of terms| / scale, 0 when every term vanishes.

    The scale is the largest term or sup|q| int int |w_y|^2 / l^2, whichever is
    bigger, so identities whose terms all vanish are not judged on round-off.
    """
    terms = np.array(multiplier_terms(traj, q))
    ell = np.atleast_1d(traj.curve.eval(traj.times)[0])
    dirichlet = trapezoid(trapezoid(np.abs(traj.slopes()) ** 2, dx=traj.h, axis=-1) / ell**2, traj.times)
    scale = max(np.max(np.abs(terms)), float(np.max(np.abs(q.q(traj.y)))) * float(dirichlet))
    if scale == 0.0:
        return 0.0
    return float(abs(terms.sum()) / scale)


# -- Gramians ----------------------------------------------------------------


@dataclass(frozen=True)
class GramianMatrix:
    """Observation Gramian G with norm matrix W on span{mode 1..N}.

    Convention: G[m, n] = int conj(phi_m) phi_n dt, so a^H G a equals the
    output energy int |sum_n a_n phi_n|^2 dt of coefficients ``a``.
    """

    G: np.ndarray
    W: np.ndarray
    tau: float
    epsilon: float
    kind: str
    a: float | None = None

    @property
    def N(self) -> int:
        return self.G.shape[0]

    @property
    def T_param(self) -> float:
        """1/l(0) - 1/l(tau) for the linear wall."""
        return self.epsilon * self.tau / (1.0 + self.epsilon * self.tau)

    def scaled(self, c: float) -> "GramianMatrix":
        return GramianMatrix(c * self.G, self.W, self.tau, self.epsilon, self.kind, self.a)


def _left_gram_closed(eps: float, tau: float, N: int) -> np.ndarray:
    n = np.arange(1, N + 1, dtype=float)
    m_, n_ = np.meshgrid(n, n, indexing="ij")
    pref = 2.0 * PI**2 * m_ * n_
    dsq = m_**2 - n_**2
    # xi = -1/l(t): dt / l^3 = (-xi / eps) d xi and t / l = (1 + xi) / eps. After
    # integrating by parts the 1/eps factors cancel, which keeps small eps (and eps = 0) exact.
    ell_tau = 1.0 + eps * tau
    xi1 = -1.0 / ell_tau
    dd = PI**2 * dsq
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = np.exp(1j * dd * tau / ell_tau)
        off = -((xi1 * e1 + 1.0) / (1j * dd) + eps * (e1 - 1.0) / dd**2)
    diag = tau * (2.0 + eps * tau) / (2.0 * ell_tau**2)
    return pref * np.where(dsq == 0, diag, off)


def boundary_gramian(epsilon: float, tau: float, N: int, which: str = "both") -> GramianMatrix:
    """Neumann-trace Gramian in closed form, W = diag(pi^2 n^2)."""
    if epsilon < 0:
        raise DomainError("boundary Gramian is defined for a non-shrinking wall (eps >= 0)")
    if N < 1 or not tau > 0:
        raise DomainError("need N >= 1 and tau > 0")
    G = _left_gram_closed(float(epsilon), float(tau), N)
    n = np.arange(1, N + 1)
    sign = (-1.0) ** np.add.outer(n, n)
    if which == "left":
        pass
    elif which == "right":
        G = sign * G
    elif which == "both":
        G = (1.0 + sign) * G
    else:
        raise DomainError(f"unknown boundary kind {which!r}")
    G = 0.5 * (G + G.conj().T)
    return GramianMatrix(G, np.diag(PI**2 * n**2.0), float(tau), float(epsilon), f"boundary_{which}")


def quadrature_gramian(epsilon: float, tau: float, N: int, which: str, a: float | None = None,
                       points: int | None = None) -> np.ndarray:
    """Gramian by Simpson quadrature of the waveforms; an independent check on closed forms."""
    t = _time_grid(tau, N, points)
    if which == "both":
        parts = [trace_waveforms(epsilon, t, N, "left"), trace_waveforms(epsilon, t, N, "right")]
    else:
        parts = [trace_waveforms(epsilon, t, N, which, a)]
    G = sum(simpson(np.conj(P)[:, :, None] * P[:, None, :], x=t, axis=0) for P in parts)
    return 0.5 * (G + G.conj().T)


def point_gramian(epsilon: float, a: float, tau: float, N: int, points: int | None = None) -> GramianMatrix:
    """Gramian of u(a, t) by quadrature, W = identity."""
    if not 0.0 < a < 1.0:
        raise DomainError(f"observation point must lie in (0, 1), got {a}")
    G = quadrature_gramian(epsilon, tau, N, "point", a, points)
    return GramianMatrix(G, np.eye(N), float(tau), float(epsilon), "point", float(a))


def observation_gramian(kind: str, epsilon: float, tau: float, N: int, a: float | None = None) -> GramianMatrix:
    if kind == "point":
        return point_gramian(epsilon, a, tau, N)
    if kind.startswith("boundary_"):
        return boundary_gramian(epsilon, tau, N, kind.split("_", 1)[1])
    raise DomainError(f"unknown observation kind {kind!r}")


class ObservabilityConstants(NamedTuple):
    c_est: float
    C_est: float

    @property
    def cond(self) -> float:
        return self.C_est / self.c_est if self.c_est > 0 else float("inf")


def _check_gramian(g: GramianMatrix, tol: float = 1e-10) -> None:
    G = g.G
    scale = max(1.0, float(np.max(np.abs(G))))
    if np.max(np.abs(G - G.conj().T)) > tol * scale:
        raise ValidationError("Gramian is not Hermitian within tolerance")
    if np.max(np.abs(g.W - g.W.conj().T)) > tol * max(1.0, float(np.max(np.abs(g.W)))):
        raise ValidationError("norm matrix W is not Hermitian")
    if np.linalg.eigvalsh(g.W).min() <= 0:
        raise ValidationError("norm matrix W is not positive definite")


def generalized_eigh(g: GramianMatrix):
    """Eigenpairs of G v = lambda W v, ascending."""
    _check_gramian(g)
    return eigh(g.G, g.W)


def observability_constant_estimate(g: GramianMatrix) -> ObservabilityConstants:
    """Extremal generalized eigenvalues: sharp c and C on the truncated space."""
    vals = generalized_eigh(g)[0]
    return ObservabilityConstants(float(vals[0]), float(vals[-1]))


def random_search_min(g: GramianMatrix, samples: int = 100_000, seed: int = 0, batch: int = 20_000) -> float:
    """Smallest Rayleigh quotient a^H G a / a^H W a over spectra uniform on the W-unit sphere.

    With W = L L^H, a = L^{-H} b for isotropic complex Gaussian b.
    """
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky(g.W)
    H = solve_triangular(L, solve_triangular(L, g.G, lower=True).conj().T, lower=True).conj().T
    best = np.inf
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        B = rng.standard_normal((k, g.N)) + 1j * rng.standard_normal((k, g.N))
        num = np.real(np.einsum("ki,ij,kj->k", B.conj(), H, B))
        best = min(best, float(np.min(num / np.sum(np.abs(B) ** 2, axis=1))))
        done += k
    return best


# -- L_p point observation ---------------------------------------------------


def _point_samples(sol: ExactSolution, a: float, tau: float, points: int | None):
    t = _time_grid(tau, sol.N, points)
    return t, np.abs(point_observation(sol, a, t))


def lp_observation(sol: ExactSolution, a: float, tau: float, p: float, quadrature_points: int | None = None) -> float:
    """(int_0^tau |u(a, t)|^p dt)^(1/p) by Simpson quadrature."""
    if not 0.0 < p < 2.0:
        raise DomainError(f"p must lie in (0, 2), got {p}")
    t, mod = _point_samples(sol, a, tau, quadrature_points)
    return float(simpson(mod**p, x=t) ** (1.0 / p))


@dataclass(frozen=True)
class LpReport:
    """Integrals of |u(a, .)|^q for q in {p, 2, 4} and the inequalities they satisfy.

    ``four_two_ok`` uses int |u|^4 <= 2 (sum |a_n|)^2 int |u|^2, which follows
    from |u(a, t)| <= sqrt(2 / l) sum |a_n|. ``four_two_unscaled_ok`` drops
    the factor 2 and is reported for comparison only.
    """

    p: float
    Ip: float
    I2: float
    I4: float
    l1: float
    holder_ok: bool
    four_two_ok: bool
    four_two_unscaled_ok: bool
    lower_chain_ok: bool


def holder_chain(sol: ExactSolution, a: float, tau: float, p: float, quadrature_points: int | None = None,
                 rtol: float = 1e-9) -> LpReport:
    if not 0.0 < p < 2.0:
        raise DomainError(f"p must lie in (0, 2), got {p}")
    t, mod = _point_samples(sol, a, tau, quadrature_points)
    Ip, I2, I4 = (float(simpson(mod**e, x=t)) for e in (p, 2.0, 4.0))
    S = float(np.sum(np.abs(sol.coefficients)))
    theta = 2.0 / (4.0 - p)
    holder_rhs = Ip**theta * I4 ** (1.0 - theta)
    lower = I2 * (2.0 * S * S) ** ((p - 2.0) / 2.0) if S > 0 else 0.0
    return LpReport(
        p=p, Ip=Ip, I2=I2, I4=I4, l1=S,
        holder_ok=bool(I2 <= holder_rhs * (1 + rtol)),
        four_two_ok=bool(I4 <= 2.0 * S * S * I2 * (1 + rtol)),
        four_two_unscaled_ok=bool(I4 <= S * S * I2 * (1 + rtol)),
        lower_chain_ok=bool(Ip >= lower * (1 - rtol)),
    )


class LpConstants(NamedTuple):
    k_p: float
    K_p: float


def lp_constants(epsilon: float, a: float, tau: float, N: int, p: float) -> LpConstants:
    """Explicit two-sided constants on span{mode 1..N}.

    With R = (int |u|^p)^(1/p) / (||u0||^(2/p) H^(1-2/p)), H = pi ||n a_n||,
    we have k_p <= R <= K_p, where

        k_p = c^(1/p) 3^(1/p - 1/2),   K_p = tau^(1/p - 1/2) sqrt(C) (pi N)^(2/p - 1)

    and c, C are the extremal eigenvalues of the point Gramian. K_p grows
    with N; no N-independent upper constant exists.
    """
    c, C = observability_constant_estimate(point_gramian(epsilon, a, tau, N))
    k = max(c, 0.0) ** (1.0 / p) * 3.0 ** (1.0 / p - 0.5)
    K = tau ** (1.0 / p - 0.5) * np.sqrt(C) * (PI * N) ** (2.0 / p - 1.0)
    return LpConstants(float(k), float(K))


def lp_ratio(sol: ExactSolution, a: float, tau: float, p: float, quadrature_points: int | None = None) -> float:
    a_n = sol.coefficients
    l2 = np.linalg.norm(a_n)
    H = PI * np.linalg.norm(np.arange(1, sol.N + 1) * a_n)
    if l2 == 0:
        raise DomainError("ratio undefined for zero initial data")
    return lp_observation(sol, a, tau, p, quadrature_points) / (l2 ** (2.0 / p) * H ** (1.0 - 2.0 / p))


# -- sweep output ------------------------------------------------------------

SWEEP_COLUMNS = ["epsilon", "tau", "N", "kind", "c_est", "C_est", "cond", "T_param"]


def sweep_row(kind: str, epsilon: float, tau: float, N: int, a: float | None = None) -> dict:
    g = observation_gramian(kind, epsilon, tau, N, a)
    c, C = observability_constant_estimate(g)
    return {"epsilon": epsilon, "tau": tau, "N": N, "kind": kind, "c_est": c, "C_est": C,
            "cond": C / c if c > 1e-12 * np.trace(g.G).real / N else float("inf"), "T_param": g.T_param}


def write_sweep_csv(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r[k] if isinstance(r[k], (str, int)) else f"{r[k]:.17g}" for k in SWEEP_COLUMNS])
