import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from movingwall.errors import DomainError, ResolutionError
from movingwall.spectral import (
    SineSpectrum,
    h1_bracket,
    h1_seminorms,
    l2_norm,
    mode,
    preset,
    project_initial,
    random_spectrum,
    read_csv,
    w_norm,
    write_csv,
)

SQ2 = np.sqrt(2.0)


def test_project_chirped_first_mode():
    eps = 0.5
    spec = project_initial(lambda x: SQ2 * np.exp(0.25j * eps * x**2) * np.sin(np.pi * x), 4, eps)
    assert np.max(np.abs(spec.coefficients - [1, 0, 0, 0])) < 1e-10


def test_project_plain_second_mode():
    spec = project_initial(lambda x: SQ2 * np.sin(2 * np.pi * x), 4, 0.0)
    assert np.max(np.abs(spec.coefficients - [0, 1, 0, 0])) < 1e-10


def test_project_parabola_against_dense_trapezoid():
    eps, N = 0.3, 16
    spec = project_initial(lambda x: x * (1 - x), N, eps)
    # oracle: 10^5-point trapezoid of the same inner products
    x = np.linspace(0, 1, 100001)
    ref = [trapezoid(x * (1 - x) * SQ2 * np.exp(-0.25j * eps * x**2) * np.sin(n * np.pi * x), x) for n in range(1, N + 1)]
    assert np.max(np.abs(spec.coefficients - ref)) < 1e-8


def test_project_needs_enough_points():
    with pytest.raises(ResolutionError):
        project_initial(lambda x: x, 8, 0.0, quadrature_points=31)


@pytest.mark.parametrize("a, norm", [((1, 0), 1.0), ((0.6, 0.8), 1.0), ((1, 1, 1), np.sqrt(3))])
def test_l2_norm(a, norm):
    assert l2_norm(SineSpectrum(a)) == pytest.approx(norm, rel=1e-15)


def test_h1_single_modes():
    assert h1_seminorms(SineSpectrum([1.0])) == pytest.approx((1.0, np.pi), rel=1e-10)
    s = h1_seminorms(SineSpectrum([0.0, 1.0]))
    assert s.exact == pytest.approx(2 * np.pi, rel=1e-10)


def test_h1_bracket_two_mode_example():
    spec = SineSpectrum(np.array([1, 1]) / SQ2, 0.5)
    s = h1_seminorms(spec)
    # oracle: dense trapezoid of |u0'|^2 from a finite-difference derivative
    x = np.linspace(0, 1, 200001)
    du = np.gradient(spec.reconstruct(x), x)
    ref = np.sqrt(trapezoid(np.abs(du) ** 2, x))
    assert s.exact == pytest.approx(ref, rel=1e-6)
    assert np.pi * s.spectral <= s.exact <= np.sqrt(np.pi**2 + 0.125) * s.spectral


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), N=st.integers(1, 10), eps=st.floats(0.0, 1.5),
       phase=st.floats(0.0, 2 * np.pi))
def test_h1_bracket_common_phase(seed, N, eps, phase):
    rng = np.random.default_rng(seed)
    spec = SineSpectrum(np.exp(1j * phase) * rng.standard_normal(N), eps)
    lo, hi, _ = h1_bracket(spec)
    assert lo and hi


def test_h1_bracket_can_fail_for_complex_spectra():
    # for mixed phases the chirp cross term has either sign and leaves the bracket on both sides
    lo, hi, ratio = h1_bracket(SineSpectrum([1.0, 0.3j], 0.5))
    assert not lo and hi and ratio < np.pi**2
    lo, hi, ratio = h1_bracket(SineSpectrum([1.0, -0.3j], 0.5))
    assert lo and not hi and ratio > np.pi**2 + 0.125


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), N=st.integers(1, 12), eps=st.floats(0.0, 1.2))
def test_project_reconstruct_roundtrip(seed, N, eps):
    spec = random_spectrum(N, seed, eps)
    again = project_initial(spec.reconstruct, N, eps)
    assert np.max(np.abs(again.coefficients - spec.coefficients)) < 1e-9
    assert again.residual < 1e-9


def test_projection_norm_bessel():
    x = np.linspace(0, 1, 100001)
    f = lambda y: np.exp(y) * y * (1 - y)  # noqa: E731
    spec = project_initial(f, 6, 0.4)
    assert l2_norm(spec) <= np.sqrt(trapezoid(np.abs(f(x)) ** 2, x))


def test_norm_equality_in_span():
    spec = random_spectrum(5, 3, 0.7)
    x = np.linspace(0, 1, 100001)
    assert l2_norm(spec) == pytest.approx(np.sqrt(trapezoid(np.abs(spec.reconstruct(x)) ** 2, x)), abs=1e-8)


def test_spectrum_helpers():
    s = SineSpectrum([1, 2, 0, 0], 0.3)
    assert s.trimmed().N == 2 and s.trimmed().epsilon == 0.3
    assert s.padded(6).N == 6
    assert w_norm(SineSpectrum([0, 1])) == pytest.approx(2 * np.pi)
    with pytest.raises(DomainError):
        s.padded(2)
    with pytest.raises(DomainError):
        SineSpectrum([])


def test_presets():
    assert mode(3, 5) == SineSpectrum([0, 0, 1, 0, 0])
    assert preset("random:4", 6) == random_spectrum(6, 4)
    hat = preset("hat", 8)
    assert abs(hat.coefficients[1]) < 1e-12  # symmetric about 1/2: even modes vanish
    assert abs(preset("parabola", 4).coefficients[0] - 4 * SQ2 / np.pi**3) < 1e-10
    with pytest.raises(DomainError):
        preset("gauss", 4)


def test_csv_roundtrip(tmp_path):
    spec = random_spectrum(7, 11, 0.25)
    write_csv(spec, tmp_path / "s.csv")
    assert read_csv(tmp_path / "s.csv", 0.25) == spec
