"""Wall trajectories l(t) on [0, tau] and the growth window required for observability.

Three kinds are supported:

* ``linear``    l(t) = 1 + eps*t
* ``periodic``  l(t) = 1 + eps*sin(omega*t)
* ``tabulated`` samples (t, l) interpolated by a monotone cubic (PCHIP)

All curves are normalised so that l(0) = 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, InterpolationError

KINDS = ("linear", "periodic", "tabulated")

_T_TOL = 1e-12
_STRICT_TOL = 1e-12
_L0_TOL = 1e-9


@dataclass(frozen=True)
class BoundaryCurve:
    """Immutable wall trajectory with its first two derivatives.

    Use the constructors :meth:`linear`, :meth:`periodic`, :meth:`tabulated`
    or :meth:`from_csv` rather than instantiating directly.
    """

    kind: str
    tau: float
    epsilon: float = 0.0
    omega: float = 0.0
    samples: tuple | None = field(default=None, compare=False)
    source: str | None = None
    _interp: PchipInterpolator | None = field(default=None, repr=False, compare=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def linear(cls, epsilon: float, tau: float = 1.0) -> "BoundaryCurve":
        epsilon = float(epsilon)
        tau = _check_tau(tau)
        if 1.0 + epsilon * tau <= 0.0:
            raise DomainError(f"l(t) = 1 + {epsilon}*t vanishes before tau={tau}")
        return cls("linear", tau, epsilon=epsilon)

    @classmethod
    def periodic(cls, epsilon: float, omega: float, tau: float = 1.0) -> "BoundaryCurve":
        epsilon, omega = float(epsilon), float(omega)
        tau = _check_tau(tau)
        if not abs(epsilon) < 1.0:
            raise DomainError(f"periodic amplitude must satisfy |eps| < 1, got {epsilon}")
        return cls("periodic", tau, epsilon=epsilon, omega=omega)

    @classmethod
    def tabulated(cls, t, l, tau: float | None = None, source: str | None = None) -> "BoundaryCurve":
        t = np.asarray(t, dtype=float)
        l = np.asarray(l, dtype=float)
        if t.ndim != 1 or t.shape != l.shape or t.size < 2:
            raise DomainError("tabulated curve needs matching 1-D arrays with at least 2 samples")
        if not np.all(np.diff(t) > 0):
            raise DomainError("tabulated sample times must be strictly increasing")
        if abs(t[0]) > _T_TOL:
            raise DomainError(f"tabulated curve must start at t=0, starts at {t[0]}")
        if abs(l[0] - 1.0) > _L0_TOL:
            raise DomainError(f"tabulated curve must satisfy l(0)=1 (tol {_L0_TOL}), got {l[0]}")
        if np.any(l <= 0):
            raise DomainError("tabulated curve must stay strictly positive")
        tau = float(t[-1]) if tau is None else _check_tau(tau)
        if tau > t[-1] + _T_TOL:
            raise InterpolationError(f"horizon tau={tau} exceeds last sample t={t[-1]}")
        t.setflags(write=False)
        l.setflags(write=False)
        return cls("tabulated", tau, samples=(t, l), source=source, _interp=PchipInterpolator(t, l))

    @classmethod
    def from_csv(cls, path, tau: float | None = None) -> "BoundaryCurve":
        """Load a curve from a CSV file with header ``t,l,lp,lpp``.

        Only ``t`` and ``l`` feed the interpolant; the derivative columns
        must be present and finite but are not trusted.
        """
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["t", "l", "lp", "lpp"]:
                raise DomainError(f"{path}: expected header t,l,lp,lpp, got {reader.fieldnames}")
            rows = [(float(r["t"]), float(r["l"]), float(r["lp"]), float(r["lpp"])) for r in reader]
        data = np.array(rows, dtype=float)
        if data.size == 0 or not np.all(np.isfinite(data)):
            raise DomainError(f"{path}: empty or non-finite curve samples")
        return cls.tabulated(data[:, 0], data[:, 1], tau=tau, source=str(path))

    def with_tau(self, tau: float) -> "BoundaryCurve":
        """Same wall motion on a different horizon."""
        if self.kind == "linear":
            return BoundaryCurve.linear(self.epsilon, tau)
        if self.kind == "periodic":
            return BoundaryCurve.periodic(self.epsilon, self.omega, tau)
        t, l = self.samples
        return BoundaryCurve.tabulated(t, l, tau=tau, source=self.source)

    # -- evaluation -------------------------------------------------------

    def eval(self, t):
        """Return ``(l, l', l'')`` at time(s) ``t`` in ``[0, tau]``."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < -_T_TOL) or np.any(t_arr > self.tau * (1 + _T_TOL) + _T_TOL):
            raise DomainError(f"t outside [0, {self.tau}]")
        t_arr = np.clip(t_arr, 0.0, self.tau)
        if self.kind == "linear":
            l = 1.0 + self.epsilon * t_arr
            lp = np.full_like(t_arr, self.epsilon)
            lpp = np.zeros_like(t_arr)
        elif self.kind == "periodic":
            s = self.omega * t_arr
            l = 1.0 + self.epsilon * np.sin(s)
            lp = self.epsilon * self.omega * np.cos(s)
            lpp = -self.epsilon * self.omega**2 * np.sin(s)
        else:
            lo, hi = self.samples[0][0], self.samples[0][-1]
            if np.any(t_arr < lo) or np.any(t_arr > hi):
                raise InterpolationError(f"t outside tabulated range [{lo}, {hi}]")
            l = self._interp(t_arr)
            lp = self._interp(t_arr, 1)
            lpp = self._interp(t_arr, 2)
        if np.ndim(t) == 0:
            return float(l), float(lp), float(lpp)
        return l, lp, lpp

    def length(self, t):
        return self.eval(t)[0]

    def log_derivative_sup(self, tau: float | None = None, samples: int = 4097) -> float:
        """sup over [0, tau] of |l'/l|."""
        tau = self.tau if tau is None else tau
        if self.kind == "linear":
            eps = self.epsilon
            return abs(eps) if eps >= 0 else abs(eps) / (1.0 + eps * tau)
        t = np.linspace(0.0, tau, samples)
        if self.kind == "tabulated":
            t = np.union1d(t, self.samples[0][self.samples[0] <= tau])
        l, lp, _ = self.eval(t)
        return float(np.max(np.abs(lp / l)))

    def to_config(self) -> dict:
        if self.kind == "linear":
            return {"kind": "linear", "epsilon": self.epsilon}
        if self.kind == "periodic":
            return {"kind": "periodic", "epsilon": self.epsilon, "omega": self.omega}
        return {"kind": "tabulated", "path": self.source}


def _check_tau(tau) -> float:
    tau = float(tau)
    if not (tau > 0 and math.isfinite(tau)):
        raise DomainError(f"horizon must be positive and finite, got {tau}")
    return tau


# -- observability window -------------------------------------------------


@dataclass(frozen=True)
class WindowReport:
    """Outcome of the growth-condition check on a curve.

    ``admissible`` is the conjunction of ``positive_derivative`` and
    ``product_bound_ok``. ``pointwise_product_ok`` is the literal test of
    l' l < 1/pi on the sampled grid; ``consequence_consistent`` is False when
    the curve is declared admissible yet the integrated consequence
    ``2 tau + pi (1 - l(tau)^2)`` is not positive.
    """

    positive_derivative: bool
    product_bound_ok: bool
    integrated_consequence: float
    admissible: bool
    pointwise_product_ok: bool
    consequence_consistent: bool
    product_sup: float

    def violations(self) -> list[str]:
        out = []
        if not self.positive_derivative:
            out.append("l'(t) > 0 on (0, tau)")
        if not self.product_bound_ok:
            out.append("l'(t) l(t) < 1/pi on (0, tau)")
        return out


def linear_tau_max(epsilon: float) -> float:
    """Largest horizon of the growth window for l(t) = 1 + eps*t.

    Returns (1/eps)(2/(eps*pi) - 1); requires 0 < eps < 2/pi.
    """
    epsilon = float(epsilon)
    if not (0.0 < epsilon < 2.0 / math.pi):
        raise DomainError(f"linear window needs eps in (0, 2/pi), got {epsilon}")
    return (2.0 / (epsilon * math.pi) - 1.0) / epsilon


def _periodic_product_sup(eps: float, omega: float, tau: float) -> float:
    # g(s) = eps*omega*cos(s)*(1 + eps*sin(s)) on s in [0, omega*tau]; stationary point
    # solves 2 eps sin^2 s + sin s - eps = 0.
    s_end = omega * tau
    cands = [0.0, s_end]
    if eps != 0.0:
        r = (-1.0 + math.sqrt(1.0 + 8.0 * eps * eps)) / (4.0 * eps)
        if -1.0 <= r <= 1.0:
            base = math.asin(r)
            for s in (base, math.pi - base, base + 2 * math.pi, math.pi - base + 2 * math.pi):
                if 0.0 < s < s_end:
                    cands.append(s)
    if s_end > 2 * math.pi:
        cands.extend(np.linspace(0.0, s_end, 8193))
    s = np.asarray(cands)
    return float(np.max(eps * omega * np.cos(s) * (1.0 + eps * np.sin(s))))


def check_observability_window(curve: BoundaryCurve, tau: float | None = None, grid_points: int = 1001) -> WindowReport:
    """Evaluate the growth condition l' > 0, l(0) = 1, l' l < 1/pi on (0, tau).

    Closed-form worst-case bounds are used for analytic kinds; the sampled
    grid is always evaluated and reported as ``pointwise_product_ok``.
    """
    if grid_points < 2:
        raise DomainError("grid_points must be at least 2")
    tau = curve.tau if tau is None else _check_tau(tau)
    if tau > curve.tau * (1 + _T_TOL):
        curve = curve.with_tau(tau)
    bound = 1.0 / math.pi - _STRICT_TOL

    # open interval (0, tau): drop the endpoints from the sample
    t = np.linspace(0.0, tau, grid_points + 2)[1:-1]
    if curve.kind == "tabulated":
        knots = curve.samples[0]
        t = np.union1d(t, knots[(knots > 0) & (knots < tau)])
    l, lp, _ = curve.eval(t)
    sampled_positive = bool(np.all(lp > _STRICT_TOL))
    prod = lp * l
    product_sup = float(np.max(prod))
    pointwise_ok = bool(product_sup < bound)

    if curve.kind == "linear":
        eps = curve.epsilon
        positive = eps > 0.0
        # closed-form window for the linear wall
        product_ok = bool(0.0 < eps < 2.0 / math.pi and tau < linear_tau_max(eps))
        product_sup = eps * (1.0 + eps * tau)
    elif curve.kind == "periodic":
        eps, om = curve.epsilon, curve.omega
        positive = bool(eps > 0.0 and om > 0.0 and om * tau < math.pi / 2)
        closed = eps * om * (1.0 + eps)
        product_sup = _periodic_product_sup(eps, om, tau)
        product_ok = bool(closed < bound or product_sup < bound)
    else:
        positive = sampled_positive
        product_ok = pointwise_ok

    l_tau = curve.eval(tau)[0]
    consequence = 2.0 * tau + math.pi * (1.0 - l_tau**2)
    admissible = bool(positive and product_ok)
    return WindowReport(
        positive_derivative=bool(positive),
        product_bound_ok=bool(product_ok),
        integrated_consequence=float(consequence),
        admissible=admissible,
        pointwise_product_ok=pointwise_ok,
        consequence_consistent=bool((not admissible) or consequence > 0.0),
        product_sup=float(product_sup),
    )


def parse_curve_spec(text: str, tau: float = 1.0) -> BoundaryCurve:
    """Parse a command-line curve spec: ``linear:EPS``, ``periodic:EPS:OMEGA`` or ``tabulated:PATH``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "linear":
            return BoundaryCurve.linear(float(rest), tau)
        if kind == "periodic":
            eps, omega = rest.split(":")
            return BoundaryCurve.periodic(float(eps), float(omega), tau)
        if kind == "tabulated":
            return BoundaryCurve.from_csv(rest, tau)
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"cannot parse curve spec {text!r}: {exc}") from exc
    raise DomainError(f"unknown curve kind {kind!r}; expected one of {KINDS}")


def curve_from_config(obj: dict, tau: float, base_dir: Path | None = None) -> BoundaryCurve:
    kind = obj.get("kind")
    if kind == "linear":
        return BoundaryCurve.linear(obj["epsilon"], tau)
    if kind == "periodic":
        return BoundaryCurve.periodic(obj["epsilon"], obj["omega"], tau)
    if kind == "tabulated":
        path = Path(obj["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return BoundaryCurve.from_csv(path, tau)
    raise DomainError(f"unknown curve kind {kind!r}")
