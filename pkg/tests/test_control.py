import numpy as np
import pytest

from movingwall.control import (
    adjoint_defect,
    adjoint_stamp,
    control_report,
    dual_problem_descriptor,
    duality_residual,
    retrograde,
    steer,
    write_control_json,
)
from movingwall.curves import BoundaryCurve
from movingwall.errors import DomainError, NonObservableError
from movingwall.observability import boundary_gramian, observability_constant_estimate, point_gramian
from movingwall.pde import grid
from movingwall.spectral import SineSpectrum, random_spectrum


def smooth(M, seed):
    y = grid(M)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    return np.sin(np.pi * np.outer(y, np.arange(1, 5))) @ a


def test_adjoint_stamp_structure():
    st = adjoint_stamp(BoundaryCurve.linear(0.5, 1.0), 0.4, 32)
    assert st.defect() == 0.0
    assert st.rate == pytest.approx(0.5 / 1.2)


def test_adjoint_stamp_fixed_wall_is_negated_forward():
    st = adjoint_stamp(BoundaryCurve.linear(0.0, 1.0), 0.0, 16)
    v = smooth(16, 1)
    assert np.allclose(st.apply(v), -st.forward.apply(v), rtol=1e-15)


def test_adjoint_defect_fixed_wall_is_roundoff():
    curve = BoundaryCurve.linear(0.0, 1.0)
    w, v = smooth(64, 2), smooth(64, 3)
    assert adjoint_defect(curve, 0.0, w, v) < 1e-9


def test_adjoint_defect_second_order():
    curve = BoundaryCurve.linear(0.5, 1.0)
    d = [adjoint_defect(curve, 0.3, smooth(M, 2), smooth(M, 3)) for M in (64, 128, 256)]
    rates = np.log2(np.array(d[:-1]) / d[1:])
    assert np.all(rates > 1.8)


def test_retrograde_terminal_condition():
    t, b = retrograde(np.array([1.0, 0.5j]), "boundary_left", 0.5, 1.0, 64)
    assert np.all(b[-1] == 0) and t[0] == 0 and t[-1] == 1.0
    with pytest.raises(DomainError):
        retrograde(np.array([1.0]), "boundary_left", 0.5, 1.0, 0)


def test_retrograde_endpoint_is_gramian_action():
    a = random_spectrum(4, 8, 0.5).coefficients
    g = boundary_gramian(0.5, 1.0, 4, "both")
    _, b = retrograde(a, "boundary_both", 0.5, 1.0, 4096)
    assert np.linalg.norm(b[0] - g.G @ a) < 1e-5 * np.linalg.norm(g.G @ a)


def test_duality_zero_data():
    assert duality_residual(SineSpectrum([0.0, 0.0], 0.5), BoundaryCurve.linear(0.5, 1.0), 1.0) == 0.0


def test_duality_fixed_wall_point_single_mode():
    r = duality_residual(SineSpectrum([1.0]), BoundaryCurve.linear(0.0, 1.0), 1.0, "point", a=1 / 3)
    assert r < 1e-6


@pytest.mark.parametrize("kind", ["boundary_left", "boundary_right", "boundary_both"])
def test_duality_random_linear(kind):
    spec = random_spectrum(4, 21, 0.5)
    assert duality_residual(spec, BoundaryCurve.linear(0.5, 1.0), 1.0, kind) < 1e-3


def test_duality_second_order_in_steps():
    spec = random_spectrum(4, 21, 0.5)
    curve = BoundaryCurve.linear(0.5, 1.0)
    r = [duality_residual(spec, curve, 1.0, "boundary_both", steps=n) for n in (128, 256, 512)]
    rates = np.log2(np.array(r[:-1]) / r[1:])
    assert np.all(np.abs(rates - 2) < 0.2)


def test_duality_needs_linear_wall():
    with pytest.raises(DomainError):
        duality_residual(SineSpectrum([1.0]), BoundaryCurve.periodic(0.5, 0.4, 1.0), 1.0)


def test_steer_zero_target():
    sol = steer(boundary_gramian(0.5, 1.0, 4, "both"), np.zeros(4))
    assert np.all(sol.w0.coefficients == 0) and sol.residual == 0.0


def test_steer_random_target():
    g = boundary_gramian(0.5, 1.0, 6, "both")
    target = random_spectrum(6, 5).coefficients
    sol = steer(g, target)
    assert sol.residual < 1e-3
    c, C = observability_constant_estimate(g)
    assert sol.cond == pytest.approx(C / c)


def test_steer_singular_point_gramian():
    g = point_gramian(0.0, 0.5, 1.0, 2)
    with pytest.raises(NonObservableError) as err:
        steer(g, [1.0, 0.0])
    assert np.allclose(np.abs(err.value.kernel), [0, 1], atol=1e-12)
    assert abs(err.value.min_eigenvalue) < 1e-12


def test_steer_target_size():
    with pytest.raises(DomainError):
        steer(boundary_gramian(0.5, 1.0, 3, "both"), [1.0, 2.0])


def test_control_json(tmp_path):
    import json

    g = boundary_gramian(0.5, 1.0, 3, "both")
    sol = steer(g, [1.0, 0.0, 0.0])
    write_control_json(g, sol, tmp_path / "c.json")
    rep = json.loads((tmp_path / "c.json").read_text())
    ref = control_report(g, sol)
    assert rep.keys() == ref.keys()
    assert all(rep[k] == ref[k] for k in ref)
    assert rep["kind"] == "boundary_both" and rep["N"] == 3


def test_dual_descriptor():
    both = dual_problem_descriptor("both")
    assert both["controlled_endpoints"] == ["x=0", "x=l(t)"]
    left = dual_problem_descriptor("left")
    assert left["boundary_data"]["x=l(t)"] == "h = 0"
    assert "x=0" in left["boundary_data"] and left["terminal_condition"] == "h(x, tau) = 0"
    with pytest.raises(DomainError):
        dual_problem_descriptor("middle")


def test_condition_grows_as_tau_shrinks():
    target = np.ones(6)
    conds = [steer(boundary_gramian(0.5, t, 6, "both"), target, steps=256).cond for t in (2.0, 1.0, 0.5)]
    assert conds[0] < conds[1] < conds[2]
