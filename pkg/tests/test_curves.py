import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from movingwall.curves import (
    BoundaryCurve,
    check_observability_window,
    curve_from_config,
    linear_tau_max,
    parse_curve_spec,
)
from movingwall.errors import DomainError, InterpolationError


def test_linear_eval_values():
    assert BoundaryCurve.linear(0.1, 1.0).eval(0.5) == pytest.approx((1.05, 0.1, 0.0), abs=1e-15)


def test_fixed_wall_eval():
    c = BoundaryCurve.linear(0.0, 3.0)
    for t in (0.0, 1.3, 3.0):
        assert c.eval(t) == (1.0, 0.0, 0.0)


def test_periodic_eval_at_zero():
    l, lp, lpp = BoundaryCurve.periodic(0.5, 0.2, 1.0).eval(0.0)
    assert (l, lp, lpp) == pytest.approx((1.0, 0.1, 0.0), abs=1e-15)


def test_eval_outside_horizon_raises():
    c = BoundaryCurve.linear(0.5, 1.0)
    with pytest.raises(DomainError):
        c.eval(1.5)
    with pytest.raises(DomainError):
        c.eval(-0.1)


@pytest.mark.parametrize("curve", [BoundaryCurve.linear(0.37, 2.0), BoundaryCurve.periodic(0.5, 0.4, 2.0),
                                   BoundaryCurve.periodic(0.3, 1.7, 2.0)])
def test_derivatives_match_central_differences(curve):
    h = 1e-6
    for t in np.linspace(0.1, 1.9, 7):
        lp_fd = (curve.eval(t + h)[0] - curve.eval(t - h)[0]) / (2 * h)
        lpp_fd = (curve.eval(t + h)[1] - curve.eval(t - h)[1]) / (2 * h)
        assert abs(lp_fd - curve.eval(t)[1]) < 10 * h
        assert abs(lpp_fd - curve.eval(t)[2]) < 10 * h


def test_linear_tau_max_values():
    # oracle: direct evaluation of (1/eps)(2/(eps*pi) - 1)
    assert linear_tau_max(0.2) == pytest.approx(5 * (10 / math.pi - 1), rel=1e-14)
    assert linear_tau_max(0.2) == pytest.approx(10.915, abs=1e-3)
    assert linear_tau_max(0.5) == pytest.approx(2 * (4 / math.pi - 1), rel=1e-14)


@pytest.mark.parametrize("eps", [0.0, 2 / math.pi, 1.0, -0.1])
def test_linear_tau_max_rejects(eps):
    with pytest.raises(DomainError):
        linear_tau_max(eps)


def test_window_linear_half_short_horizon():
    assert check_observability_window(BoundaryCurve.linear(0.5, 0.5)).admissible


def test_window_linear_rate_too_large():
    for tau in (0.01, 0.5, 3.0):
        rep = check_observability_window(BoundaryCurve.linear(1.0, tau))
        assert not rep.admissible
        assert "l'(t) l(t) < 1/pi on (0, tau)" in rep.violations()


def test_window_periodic_example():
    rep = check_observability_window(BoundaryCurve.periodic(0.5, 0.4, 1.0))
    assert rep.admissible and rep.positive_derivative and rep.product_bound_ok
    assert 0.4 < 1 / (math.pi * 0.5 * 1.5) and 1.0 < math.pi / 0.8


@pytest.mark.parametrize("eps", [0.05, 0.2, 0.5, 0.6])
def test_window_linear_edges(eps):
    tmax = linear_tau_max(eps)
    below = check_observability_window(BoundaryCurve.linear(eps, tmax * (1 - 1e-6)))
    above = check_observability_window(BoundaryCurve.linear(eps, tmax * (1 + 1e-6)))
    assert below.admissible
    assert not above.product_bound_ok


def test_window_grid_points_validated():
    with pytest.raises(DomainError):
        check_observability_window(BoundaryCurve.linear(0.2, 1.0), grid_points=1)


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(0.01, 0.95), omega=st.floats(0.01, 3.0), tau=st.floats(0.01, 5.0))
def test_periodic_admissible_implies_positive_consequence(eps, omega, tau):
    rep = check_observability_window(BoundaryCurve.periodic(eps, omega, tau))
    if rep.admissible:
        assert rep.integrated_consequence > 0
        assert rep.consequence_consistent


def test_linear_consequence_inconsistency_is_flagged():
    # the closed-form linear window admits horizons where the displayed consequence is negative
    rep = check_observability_window(BoundaryCurve.linear(0.5, 0.5))
    assert rep.admissible
    assert rep.integrated_consequence == pytest.approx(1.0 + math.pi * (1 - 1.25**2), rel=1e-14)
    assert rep.integrated_consequence < 0 and not rep.consequence_consistent


def _write_curve(path, t, l):
    lp = np.gradient(l, t)
    with open(path, "w") as fh:
        fh.write("t,l,lp,lpp\n")
        for row in zip(t, l, lp, np.zeros_like(t)):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def test_tabulated_reproduces_smooth_curve(tmp_path):
    t = np.linspace(0.0, 2.0, 401)
    p = tmp_path / "curve.csv"
    _write_curve(p, t, 1 + 0.3 * np.sin(0.7 * t))
    c = BoundaryCurve.from_csv(p)
    ref = BoundaryCurve.periodic(0.3, 0.7, 2.0)
    ts = np.linspace(0, 2, 57)
    assert np.max(np.abs(c.eval(ts)[0] - ref.eval(ts)[0])) < 1e-8
    assert np.max(np.abs(c.eval(ts)[1] - ref.eval(ts)[1])) < 1e-4
    assert c.tau == 2.0


def test_tabulated_requires_unit_start(tmp_path):
    p = tmp_path / "bad.csv"
    _write_curve(p, np.array([0.0, 1.0]), np.array([1.1, 1.2]))
    with pytest.raises(DomainError):
        BoundaryCurve.from_csv(p)


def test_tabulated_horizon_beyond_samples(tmp_path):
    p = tmp_path / "c.csv"
    _write_curve(p, np.linspace(0, 1, 11), 1 + 0.1 * np.linspace(0, 1, 11))
    with pytest.raises(InterpolationError):
        BoundaryCurve.from_csv(p, tau=2.0)


def test_tabulated_header_checked(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("t,l\n0,1\n1,1.1\n")
    with pytest.raises(DomainError):
        BoundaryCurve.from_csv(p)


def test_log_derivative_sup():
    assert BoundaryCurve.linear(0.5, 1.0).log_derivative_sup() == pytest.approx(0.5)
    per = BoundaryCurve.periodic(0.5, 0.4, 1.0)
    t = np.linspace(0, 1, 200001)
    l, lp, _ = per.eval(t)
    assert per.log_derivative_sup() == pytest.approx(np.max(np.abs(lp / l)), rel=1e-8)


def test_parse_and_config_roundtrip(tmp_path):
    for text in ("linear:0.25", "periodic:0.5:0.4"):
        c = parse_curve_spec(text, 1.5)
        assert curve_from_config(c.to_config(), 1.5) == c
    with pytest.raises(DomainError):
        parse_curve_spec("cubic:1")
    with pytest.raises(DomainError):
        parse_curve_spec("linear:abc")


def test_shrinking_wall_must_stay_positive():
    with pytest.raises(DomainError):
        BoundaryCurve.linear(-0.5, 2.0)
