"""Finite chirped sine spectra of initial data on [0, 1].

Initial states are written as

    u0(x) = sqrt(2) * sum_n a_n exp(i eps x^2 / 4) sin(n pi x),

which is the t = 0 trace of the exact series for the linearly moving wall.
For every eps the chirped sines are orthonormal in L2(0, 1), so the L2 norm
of u0 is the Euclidean norm of the coefficients.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import simpson

from .errors import DomainError, ResolutionError

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class SineSpectrum:
    """Coefficients ``a_1..a_N`` in the chirped sine basis with chirp rate ``epsilon``.

    ``residual`` carries the L2 reconstruction error when the spectrum came
    from :func:`project_initial`; it is ``None`` otherwise.
    """

    coefficients: np.ndarray
    epsilon: float = 0.0
    residual: float | None = field(default=None, compare=False)

    def __post_init__(self):
        a = np.array(self.coefficients, dtype=complex).ravel()
        if a.size < 1:
            raise DomainError("a spectrum needs at least one coefficient")
        a.setflags(write=False)
        object.__setattr__(self, "coefficients", a)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    def __eq__(self, other):
        if not isinstance(other, SineSpectrum):
            return NotImplemented
        return self.epsilon == other.epsilon and np.array_equal(self.coefficients, other.coefficients)

    __hash__ = None

    @property
    def N(self) -> int:
        return self.coefficients.size

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def trimmed(self) -> "SineSpectrum":
        """Canonical form: trailing zero coefficients removed (at least one kept)."""
        nz = np.flatnonzero(self.coefficients)
        keep = int(nz[-1]) + 1 if nz.size else 1
        return SineSpectrum(self.coefficients[:keep], self.epsilon)

    def padded(self, N: int) -> "SineSpectrum":
        if N < self.N:
            raise DomainError(f"cannot pad {self.N} modes down to {N}")
        a = np.zeros(N, dtype=complex)
        a[: self.N] = self.coefficients
        return SineSpectrum(a, self.epsilon)

    def scaled(self, c: complex) -> "SineSpectrum":
        return SineSpectrum(c * self.coefficients, self.epsilon)

    def reconstruct(self, x) -> np.ndarray:
        """Evaluate u0 at points ``x`` in [0, 1]."""
        x = np.asarray(x, dtype=float)
        s = np.sin(np.pi * np.multiply.outer(x, self.modes))
        return SQRT2 * np.exp(0.25j * self.epsilon * x**2) * (s @ self.coefficients)

    def derivative(self, x) -> np.ndarray:
        """Evaluate d/dx u0 at points ``x``, chirp included."""
        x = np.asarray(x, dtype=float)
        n = self.modes
        arg = np.pi * np.multiply.outer(x, n)
        inner = (0.5j * self.epsilon * x)[..., None] * np.sin(arg) + np.pi * n * np.cos(arg)
        return SQRT2 * np.exp(0.25j * self.epsilon * x**2) * (inner @ self.coefficients)


def _simpson_grid(points: int) -> np.ndarray:
    intervals = points + (points % 2)
    return np.linspace(0.0, 1.0, intervals + 1)


def _basis(x: np.ndarray, N: int, eps: float) -> np.ndarray:
    n = np.arange(1, N + 1)
    return SQRT2 * np.exp(0.25j * eps * x**2)[None, :] * np.sin(np.pi * np.outer(n, x))


def project_initial(u0: Callable, N: int, epsilon: float = 0.0, quadrature_points: int | None = None) -> SineSpectrum:
    """Project ``u0`` onto the first ``N`` chirped sines by composite Simpson quadrature."""
    if N < 1:
        raise DomainError("N must be at least 1")
    if quadrature_points is None:
        quadrature_points = 64 * N
    if quadrature_points < 4 * N:
        raise ResolutionError(f"quadrature_points={quadrature_points} < 4N={4 * N}")
    x = _simpson_grid(quadrature_points)
    f = np.asarray(u0(x), dtype=complex) * np.ones_like(x)
    B = _basis(x, N, epsilon)
    a = simpson(f[None, :] * np.conj(B), x=x, axis=1)
    spec = SineSpectrum(a, epsilon)
    err = np.sqrt(max(simpson(np.abs(f - spec.reconstruct(x)) ** 2, x=x), 0.0))
    return SineSpectrum(a, epsilon, residual=float(err))


def l2_norm(spec: SineSpectrum) -> float:
    return float(np.sqrt(np.sum(np.abs(spec.coefficients) ** 2)))


class H1Seminorms(NamedTuple):
    spectral: float
    exact: float


def h1_seminorms(spec: SineSpectrum, quadrature_points: int | None = None) -> H1Seminorms:
    """Spectral weight sqrt(sum n^2 |a_n|^2) and the quadrature seminorm ||u0'||_{L2}."""
    spectral = float(np.sqrt(np.sum(spec.modes**2 * np.abs(spec.coefficients) ** 2)))
    if quadrature_points is None:
        quadrature_points = max(64 * spec.N, 2048)
    x = _simpson_grid(quadrature_points)
    exact = float(np.sqrt(max(simpson(np.abs(spec.derivative(x)) ** 2, x=x), 0.0)))
    return H1Seminorms(spectral, exact)


def h1_bracket(spec: SineSpectrum, seminorms: H1Seminorms | None = None, rtol: float = 1e-9):
    """Check pi^2 S^2 <= E^2 <= (pi^2 + eps^2/2) S^2 for spectral S and exact E.

    Returns ``(lower_ok, upper_ok, ratio)`` where ``ratio = E^2 / S^2``. The
    bracket holds when all coefficients share one phase; general complex
    spectra pick up a cross term and may fall outside it.
    """
    s = seminorms or h1_seminorms(spec)
    if s.spectral == 0.0:
        return True, True, float("nan")
    ratio = s.exact**2 / s.spectral**2
    lo = np.pi**2
    hi = np.pi**2 + 0.5 * spec.epsilon**2
    return bool(ratio >= lo * (1 - rtol)), bool(ratio <= hi * (1 + rtol)), float(ratio)


def w_norm(spec: SineSpectrum) -> float:
    """H1_0-equivalent norm sqrt(sum pi^2 n^2 |a_n|^2) used by the Gramian weights."""
    return float(np.pi * np.sqrt(np.sum(spec.modes**2 * np.abs(spec.coefficients) ** 2)))


# -- presets and files ----------------------------------------------------


def mode(k: int, N: int | None = None, epsilon: float = 0.0) -> SineSpectrum:
    if k < 1:
        raise DomainError("mode index starts at 1")
    N = max(k, N or k)
    a = np.zeros(N, dtype=complex)
    a[k - 1] = 1.0
    return SineSpectrum(a, epsilon)


def random_spectrum(N: int, seed: int, epsilon: float = 0.0, decay: float = 1.0) -> SineSpectrum:
    """Complex Gaussian coefficients damped by n**-decay, scaled to unit L2 norm."""
    rng = np.random.default_rng(seed)
    n = np.arange(1, N + 1)
    a = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) / n**decay
    return SineSpectrum(a / np.linalg.norm(a), epsilon)


def preset(name: str, N: int = 8, epsilon: float = 0.0, quadrature_points: int | None = None) -> SineSpectrum:
    """Named initial data: ``mode:k``, ``hat``, ``parabola`` or ``random:seed``."""
    kind, _, arg = name.partition(":")
    if kind == "mode":
        return mode(int(arg), N, epsilon)
    if kind == "random":
        return random_spectrum(N, int(arg or 0), epsilon)
    if kind == "hat":
        return project_initial(lambda x: 1.0 - np.abs(2.0 * x - 1.0), N, epsilon, quadrature_points)
    if kind == "parabola":
        return project_initial(lambda x: x * (1.0 - x), N, epsilon, quadrature_points)
    raise DomainError(f"unknown spectrum preset {name!r}")


def write_csv(spec: SineSpectrum, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "re", "im"])
        for n, a in zip(spec.modes, spec.coefficients):
            w.writerow([int(n), f"{a.real:.17g}", f"{a.imag:.17g}"])


def read_csv(path, epsilon: float = 0.0) -> SineSpectrum:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["n", "re", "im"]:
            raise DomainError(f"{path}: expected header n,re,im")
        rows = [(int(r["n"]), float(r["re"]), float(r["im"])) for r in reader]
    if not rows:
        raise DomainError(f"{path}: no coefficients")
    N = max(r[0] for r in rows)
    if min(r[0] for r in rows) < 1:
        raise DomainError(f"{path}: mode indices start at 1")
    a = np.zeros(N, dtype=complex)
    for n, re, im in rows:
        a[n - 1] = complex(re, im)
    return SineSpectrum(a, epsilon)
