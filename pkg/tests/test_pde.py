import numpy as np
import pytest

from movingwall.curves import BoundaryCurve
from movingwall.errors import DomainError
from movingwall.exact import ExactSolution, eval_u, sample_trajectory
from movingwall.pde import (
    FixedState,
    assemble_operator,
    boundary_slopes,
    coercivity_shift,
    grid,
    inner,
    read_dump,
    solve,
    step,
    write_dump,
)
from movingwall.spectral import SineSpectrum, random_spectrum

SQ2 = np.sqrt(2.0)


def smooth_state(M, seed, N=4):
    y = grid(M)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return np.sin(np.pi * np.outer(y, np.arange(1, N + 1))) @ a


def exact_w(spec, t, M):
    return eval_u(ExactSolution(spec), (1 + spec.epsilon * t) * grid(M), t)


def test_fixed_wall_stamp_is_laplacian():
    M = 16
    st = assemble_operator(BoundaryCurve.linear(0.0, 1.0), 0.3, M)
    lap = (np.diag(-2 * np.ones(M - 1)) + np.diag(np.ones(M - 2), 1) + np.diag(np.ones(M - 2), -1)) * M**2
    assert np.allclose(st.dense(), 1j * lap, rtol=1e-15)


def test_linear_stamp_at_zero():
    M = 32
    st = assemble_operator(BoundaryCurve.linear(0.5, 1.0), 0.0, M)
    y = grid(M)[1:-1]
    h = 1 / M
    assert np.allclose(st.upper - st.lower, 2 * 0.5 * y / (2 * h))
    assert np.allclose(0.5 * (st.upper + st.lower), 1j / h**2)


def test_stamp_on_constants():
    # interior rows annihilate constants; only the rows next to the walls see the Dirichlet zeros
    M = 32
    st = assemble_operator(BoundaryCurve.linear(0.5, 1.0), 0.2, M)
    ones = np.ones(M + 1)
    out = st.apply(ones)
    assert np.max(np.abs(out[2:-2])) < 1e-9
    v = ones.copy()
    v[0] = v[-1] = 0
    edge = st.apply(v)
    assert edge[1] == pytest.approx(-st.lower[0], rel=1e-14)
    assert edge[-2] == pytest.approx(-st.upper[-1], rel=1e-14)


def test_stamp_requires_resolution():
    with pytest.raises(DomainError):
        assemble_operator(BoundaryCurve.linear(0.5, 1.0), 0.0, 4)


def test_step_zero_and_bad_dt():
    c = BoundaryCurve.linear(0.5, 1.0)
    s = FixedState(np.zeros(33), 0.0)
    assert np.all(step(s, c, 0.01).values == 0)
    with pytest.raises(DomainError):
        step(s, c, 0.0)


def test_step_unitary_on_fixed_wall():
    c = BoundaryCurve.linear(0.0, 1.0)
    s = FixedState(smooth_state(128, 1, 6), 0.0)
    n0 = np.linalg.norm(s.values)
    for _ in range(50):
        s = step(s, c, 0.01)
    assert abs(np.linalg.norm(s.values) - n0) < 1e-12 * n0


def test_one_step_local_error_third_order():
    spec = SineSpectrum([1.0], 0.5)
    c = BoundaryCurve.linear(0.5, 1.0)
    M, t0 = 4096, 0.3
    errs = []
    for dt in (0.004, 0.002, 0.001):
        s = step(FixedState(exact_w(spec, t0, M), t0), c, dt)
        errs.append(np.sqrt(np.sum(np.abs(s.values - exact_w(spec, t0 + dt, M)) ** 2) / M))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 2.7)


def test_solve_autonomous_single_mode():
    tr = solve(SineSpectrum([1.0]), BoundaryCurve.linear(0.0, 0.1), 0.1, M=200, steps=400)
    y = grid(200)
    ref = np.exp(-1j * np.pi**2 * 0.1) * SQ2 * np.sin(np.pi * y)
    assert np.sqrt(np.sum(np.abs(tr.states[-1] - ref) ** 2) / 200) < 1e-4


def test_solve_second_order_against_series():
    spec = SineSpectrum(np.array([1, 1j]) / SQ2, 0.5)
    curve = BoundaryCurve.linear(0.5, 1.0)
    errs = []
    for M in (64, 128, 256):
        tr = solve(spec, curve, 1.0, M, 2 * M)
        errs.append(np.sqrt(np.sum(np.abs(tr.states[-1] - exact_w(spec, 1.0, M)) ** 2) / M))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all((rates > 1.8) & (rates < 2.2))


def test_traces_match_series():
    spec = SineSpectrum(np.array([1, 0.5j]), 0.5)
    sol = ExactSolution(spec)
    curve = BoundaryCurve.linear(0.5, 1.0)
    errs = []
    for M in (64, 128, 256):
        tr = solve(spec, curve, 1.0, M, 2 * M)
        ref = sample_trajectory(sol, 1.0, M, 2 * M)
        errs.append(max(np.max(np.abs(tr.traces_left - ref.traces_left)), np.max(np.abs(tr.traces_right - ref.traces_right))))
    assert errs[-1] < errs[0] / 10


def test_zero_spectrum_zero_trajectory():
    tr = solve(SineSpectrum([0, 0, 0]), BoundaryCurve.periodic(0.5, 0.4, 1.0), 1.0, 32, 16)
    assert not np.any(tr.states) and not np.any(tr.traces_right)


def test_trace_mapping_both_ways():
    tr = solve(random_spectrum(3, 1, 0.3), BoundaryCurve.linear(0.3, 1.0), 1.0, 64)
    ux0, uxl = tr.ux_traces()
    assert np.allclose(ux0 * tr.lengths(), tr.traces_left)
    assert np.allclose(uxl * tr.lengths(), tr.traces_right)
    assert tr.times.size == tr.traces_left.size == tr.states.shape[0]


def test_boundary_slopes_second_order():
    errs = []
    for M in (32, 64, 128):
        y = grid(M)
        l, r = boundary_slopes(np.sin(np.pi * y) * np.exp(y), 1 / M)
        errs.append(abs(l - np.pi) + abs(r + np.pi * np.e))
    assert np.log2(errs[0] / errs[1]) > 1.8 and np.log2(errs[1] / errs[2]) > 1.8


def test_coercivity_shift_values():
    assert coercivity_shift(BoundaryCurve.linear(0.5, 1.0)) == pytest.approx(0.25 + 1e-9, abs=1e-15)
    assert coercivity_shift(BoundaryCurve.linear(0.0, 1.0)) == pytest.approx(1e-9, abs=1e-15)
    t = np.linspace(0, 1, 100001)
    ref = np.max(np.abs(0.2 * np.cos(0.4 * t) / (2 * (1 + 0.5 * np.sin(0.4 * t)))))
    assert coercivity_shift(BoundaryCurve.periodic(0.5, 0.4, 1.0)) == pytest.approx(ref + 1e-9, rel=1e-9)


@pytest.mark.parametrize("curve, t", [(BoundaryCurve.linear(0.5, 1.0), 0.4), (BoundaryCurve.periodic(0.5, 0.4, 2.0), 1.1)])
def test_real_part_identity(curve, t):
    omega = coercivity_shift(curve)
    ell, lp, _ = curve.eval(t)
    errs = []
    for M in (64, 128, 256):
        w = smooth_state(M, 5)
        st = assemble_operator(curve, t, M).shifted(1.0, omega)
        lhs = inner(st.apply(w), w, 1 / M).real
        norm2 = inner(w, w, 1 / M).real
        errs.append(abs(lhs - (omega - lp / (2 * ell)) * norm2) / norm2)
    assert errs[-1] < 1e-4
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_dump_roundtrip(tmp_path):
    tr = solve(random_spectrum(3, 2, 0.5), BoundaryCurve.linear(0.5, 1.0), 0.5, 16, 5)
    write_dump(tr, tmp_path / "s.bin")
    M, steps, tau, states = read_dump(tmp_path / "s.bin")
    assert (M, steps, tau) == (16, 5, 0.5)
    assert np.allclose(states, tr.states, atol=1e-6)
    raw = (tmp_path / "s.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(raw[:-8])
    with pytest.raises(DomainError):
        read_dump(tmp_path / "t.bin")


def test_solve_is_deterministic():
    args = (random_spectrum(5, 3, 0.5), BoundaryCurve.linear(0.5, 1.0), 1.0, 64)
    assert np.array_equal(solve(*args).states, solve(*args).states)


def test_periodic_self_convergence_with_compatible_chirp():
    # data chirped with l'(0) satisfies the corner compatibility A(0) w0 = 0 at the walls
    curve = BoundaryCurve.periodic(0.5, 0.4, 1.0)
    spec = SineSpectrum(np.array([1, 1j]) / SQ2, curve.eval(0.0)[1])
    sols = [solve(spec, curve, 1.0, m, 2 * m).states[-1] for m in (64, 128, 256, 512)]
    diffs = [np.sqrt(np.sum(np.abs(sols[k][:: 2**k] - sols[k + 1][:: 2 ** (k + 1)]) ** 2) / 64) for k in range(3)]
    rates = np.log2(np.array(diffs[:-1]) / diffs[1:])
    assert np.all((rates > 1.8) & (rates < 2.2))
