"""Discrete operators, the RK4 stepper, and the two evolution modes."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcflab.dynamics import (
    Grid1D,
    PerturbationState,
    build_initial_data,
    d1,
    evolve,
    lap,
    null_derivatives,
    q0,
    rhs_full,
    rhs_perturbation,
    step,
    to_perturbation,
    zero_perturbation,
)
from pcflab.dynamics import FullState
from pcflab.errors import (
    BlowupDetected,
    BoundaryContamination,
    CoefficientSingularity,
    DomainError,
    SupportError,
)
from pcflab.solitons import BumpSpec, SolitonParams, asymptotic_levels

QC = "quartic-cosine"


def unit_soliton(epsilon=0.01):
    unit = BumpSpec(family=QC, center=0.0, half_width=1.0, amplitude=1.0)
    return SolitonParams(mu=0.5, lam=1.0, epsilon=epsilon, theta=unit, sigma=unit)


def overlap_data(grid, delta=0.01, epsilon=0.01):
    params = unit_soliton(epsilon)
    z0 = BumpSpec(family=QC, center=0.0, half_width=1.5, amplitude=1.0)
    w0 = BumpSpec(family=QC, center=0.3, half_width=1.0, amplitude=0.5)
    s0 = BumpSpec(family=QC, center=-0.3, half_width=1.2, amplitude=0.8)
    m0 = BumpSpec(family=QC, center=0.2, half_width=0.8, amplitude=0.4)
    return build_initial_data(params, grid, z0, w0, s0, m0, delta)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid1D(x_min=0.0, dx=-0.1, n=64)
    with pytest.raises(DomainError):
        Grid1D(x_min=0.0, dx=0.1, n=8)
    with pytest.raises(DomainError):
        Grid1D(x_min=0.0, dx=0.1, n=64, cfl=0.0)
    with pytest.raises(DomainError):
        Grid1D(x_min=0.0, dx=0.1, n=64, cfl=1.2)
    with pytest.raises(DomainError):
        Grid1D(x_min=0.0, dx=0.1, n=64, guard_width=2)
    g = Grid1D(x_min=-2.0, dx=0.125, n=33)
    assert g.x_max == pytest.approx(2.0)
    assert g.xs()[0] == -2.0 and g.xs()[-1] == pytest.approx(2.0)
    assert g.dt == pytest.approx(0.45 * 0.125)


def test_first_derivative_exact_on_quadratic():
    g = Grid1D(x_min=-1.0, dx=0.05, n=41)
    xs = g.xs()
    f = 3.0 * xs**2 - 2.0 * xs + 1.0
    want = 6.0 * xs - 2.0
    assert np.max(np.abs(d1(f, g.dx) - want)) < 1e-12


def test_laplacian_exact_on_cubic_interior():
    # The composed stencil is exact through cubics away from the one-sided
    # edge rows.
    g = Grid1D(x_min=-1.0, dx=0.05, n=41)
    xs = g.xs()
    f = xs**3
    got = lap(f, g.dx)
    assert np.max(np.abs(got[4:-4] - 6.0 * xs[4:-4])) < 1e-11


def test_null_derivatives():
    ft = np.array([1.0, 2.0])
    fx = np.array([0.5, -1.0])
    nd = null_derivatives(ft, fx)
    assert np.all(nd.Lf == ft + fx)
    assert np.all(nd.Lbar_f == ft - fx)


@settings(max_examples=50, deadline=None)
@given(st.tuples(*[st.floats(-50.0, 50.0) for _ in range(4)]))
def test_null_form_factorization(vals):
    """q0(a, b) = -(La Lbar_b + Lbar_a Lb) / 2, the algebraic heart of the
    interaction estimates."""
    at, ax, bt, bx = vals
    lhs = q0(at, ax, bt, bx)
    la, lba = at + ax, at - ax
    lb, lbb = bt + bx, bt - bx
    rhs = -0.5 * (la * lbb + lba * lb)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)


def test_zero_perturbation_is_fixed_point():
    """The all-zero perturbation reproduces itself bit for bit: both
    right-hand-side groupings cancel identical terms."""
    grid = Grid1D(x_min=-8.0, dx=1.0 / 16, n=257)
    st_ = zero_perturbation(unit_soliton(), grid)
    for _ in range(50):
        st_ = step(st_, grid)
    for name in "zwsm":
        assert np.all(getattr(st_, name) == 0.0), name


def test_rhs_forms_agree():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 32, n=513)
    _, pert = overlap_data(grid)
    a_q0 = rhs_perturbation(pert, grid, form="q0")
    a_ex = rhs_perturbation(pert, grid, form="expanded")
    scale = max(np.max(np.abs(a_q0[0])), np.max(np.abs(a_q0[1])))
    gap = max(np.max(np.abs(a_q0[0] - a_ex[0])), np.max(np.abs(a_q0[1] - a_ex[1])))
    assert gap < 1e-13 * scale
    with pytest.raises(DomainError):
        rhs_perturbation(pert, grid, form="compact")


def test_step_deterministic():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 16, n=257)
    _, pert = overlap_data(grid)
    a = step(pert, grid)
    b = step(pert, grid)
    for name in "zwsm":
        assert np.array_equal(getattr(a, name), getattr(b, name)), name


def test_evolve_exact_binary_time_lattice():
    # cfl 0.5 on dx=1/32 gives dt=1/64; every step time is exact in binary
    # and the end time needs no snapping.
    grid = Grid1D(x_min=-8.0, dx=1.0 / 32, n=513, cfl=0.5)
    st_ = zero_perturbation(unit_soliton(), grid)
    times = []
    st_ = evolve(st_, grid, 1.0, on_step=lambda s: times.append(s.time))
    assert st_.time == 1.0
    assert len(times) == 64
    assert all(t == (k + 1) / 64.0 for k, t in enumerate(times))


def test_evolve_cadence_and_final_emission():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 32, n=513)
    st_ = zero_perturbation(unit_soliton(), grid)
    t_end = 10.5 * grid.dt
    seen = []
    evolve(st_, grid, t_end, cadence=3, sink=lambda s: seen.append(s.time))
    # initial, three cadence hits, and the shortened final step
    assert seen[0] == 0.0
    assert len(seen) == 5
    assert seen[-1] == pytest.approx(t_end, rel=1e-15)


def test_evolve_argument_validation():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 32, n=513)
    st_ = zero_perturbation(unit_soliton(), grid)
    st_.time = 2.0
    with pytest.raises(DomainError):
        evolve(st_, grid, 1.0)
    with pytest.raises(DomainError):
        evolve(st_, grid, 3.0, cadence=0)


def test_initial_data_far_field_and_scaling():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 16, n=257)
    full, pert = overlap_data(grid, delta=0.0)
    lb, ld = asymptotic_levels(unit_soliton())
    assert full.lambda_far == pytest.approx(lb, rel=1e-15)
    assert full.phi_far == pytest.approx(ld, rel=1e-15)
    for name in "zwsm":
        assert np.all(getattr(pert, name) == 0.0)
    # linearity of the bump scaling
    _, p1 = overlap_data(grid, delta=0.004)
    _, p2 = overlap_data(grid, delta=0.008)
    assert np.allclose(2.0 * p1.z, p2.z, rtol=0, atol=1e-18)


def test_initial_data_rejects_guard_intrusion():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 16, n=257)
    params = unit_soliton()
    wide = BumpSpec(family=QC, center=-7.0, half_width=1.5, amplitude=1.0)
    ok = BumpSpec(family=QC, center=0.0, half_width=1.0, amplitude=1.0)
    with pytest.raises(SupportError, match="z0"):
        build_initial_data(params, grid, wide, ok, ok, ok, 0.01)


def test_to_perturbation_round_trip():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 16, n=257)
    full, pert = overlap_data(grid)
    back = to_perturbation(full, pert.params, grid)
    for name in "zwsm":
        assert np.allclose(getattr(back, name), getattr(pert, name),
                           rtol=0, atol=1e-14), name


def test_blowup_detection():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 16, n=257)
    _, pert = overlap_data(grid)
    pert.w[130] = np.nan
    with pytest.raises(BlowupDetected):
        step(pert, grid)


def test_boundary_contamination_detection():
    """A left-moving packet started near the edge reaches the guard band
    within a few steps and must be refused, not absorbed."""
    grid = Grid1D(x_min=-8.0, dx=1.0 / 16, n=257)
    params = unit_soliton(epsilon=0.0)
    z0 = BumpSpec(family=QC, center=-7.0, half_width=0.7, amplitude=1.0)
    w0 = BumpSpec(family="quartic-cosine-slope", center=-7.0, half_width=0.7,
                  amplitude=1.0)
    quiet = BumpSpec(family=QC, center=0.0, half_width=0.5, amplitude=0.0)
    _, pert = build_initial_data(params, grid, z0, w0, quiet, quiet, 0.01)
    with pytest.raises(BoundaryContamination):
        for _ in range(40):
            pert = step(pert, grid)


def test_coefficient_floor_full():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 16, n=257)
    n = grid.n
    state = FullState(Lambda=np.full(n, 5e-4), Pi=np.zeros(n),
                      phi=np.zeros(n), Psi=np.zeros(n),
                      time=0.0, lambda_far=5e-4, phi_far=0.0)
    with pytest.raises(CoefficientSingularity):
        rhs_full(state, grid)


def test_coefficient_floor_perturbation():
    grid = Grid1D(x_min=-8.0, dx=1.0 / 16, n=257)
    params = unit_soliton()
    pert = zero_perturbation(params, grid)
    pert.z = np.full(grid.n, -0.3203)
    with pytest.raises(CoefficientSingularity):
        rhs_perturbation(pert, grid)
