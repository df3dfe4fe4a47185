"""Spatial stencils, right-hand sides, and the explicit time integrator for
the principal chiral field system in full-field and perturbation form.

The spatial derivative is the 3-point centered difference (one-sided at the
two edge cells); the discrete second derivative is that operator applied
twice.  Composing the first-derivative operator keeps the evolution operator
and every derivative appearing in the diagnostics spectrally identical, which
makes the semi-discrete quadratic invariants exact and leaves only the
integrator's own dissipation in the conservation budget.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import solitons
from .errors import (
    BlowupDetected,
    BoundaryContamination,
    CoefficientSingularity,
    DomainError,
    PcflabError,
    SupportError,
)
from .solitons import BumpSpec, SolitonParams, SolitonSample, bump_eval, eval_soliton

# Fields whose hyperbolic-coefficient argument drops below this floor have
# left the regular regime; the step refuses to continue silently.
DEFAULT_LAMBDA_FLOOR = 1e-3

# Allowed deviation from the far-field constants inside the guard band.
DEFAULT_BOUNDARY_TOL = 1e-10

# Cells pinned to the far-field constants at each end of the grid.
PINNED_CELLS = 2


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid with its time-step contract.

    dt is tied to dx through the cfl number; guard_width cells at each end
    are monitored for boundary contamination.
    """

    x_min: float
    dx: float
    n: int
    cfl: float = 0.45
    t: float = 0.0
    guard_width: int = 4

    def __post_init__(self) -> None:
        if not self.dx > 0:
            raise DomainError(f"dx must be positive, got {self.dx}")
        if self.n < 16:
            raise DomainError(f"n must be at least 16, got {self.n}")
        if not (0.0 < self.cfl <= 0.9):
            raise DomainError(f"cfl must lie in (0, 0.9], got {self.cfl}")
        if self.t < 0:
            raise DomainError(f"t must be nonnegative, got {self.t}")
        if self.guard_width < 4:
            raise DomainError(f"guard_width must be at least 4, got {self.guard_width}")

    @property
    def dt(self) -> float:
        return self.cfl * self.dx

    @property
    def x_max(self) -> float:
        return self.x_min + (self.n - 1) * self.dx

    def xs(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)


@dataclass
class FullState:
    """Grid samples of the full pair and their time derivatives.

    lambda_far / phi_far are the constants the fields approach outside every
    compact support; boundary cells are pinned to them.
    """

    Lambda: np.ndarray
    Pi: np.ndarray
    phi: np.ndarray
    Psi: np.ndarray
    time: float
    lambda_far: float
    phi_far: float


@dataclass
class PerturbationState:
    """Grid samples of the perturbation (z, w, s, m) riding on the soliton
    defined by params."""

    z: np.ndarray
    w: np.ndarray
    s: np.ndarray
    m: np.ndarray
    params: SolitonParams
    time: float


@dataclass
class NullDerivatives:
    """Derivatives along the two null directions: Lf = f_t + f_x, Lbar_f = f_t - f_x."""

    Lf: np.ndarray
    Lbar_f: np.ndarray


def null_derivatives(f_t: np.ndarray, f_x: np.ndarray) -> NullDerivatives:
    return NullDerivatives(Lf=f_t + f_x, Lbar_f=f_t - f_x)


def d1(f: np.ndarray, dx: float) -> np.ndarray:
    """Centered first derivative, second-order one-sided at the edges."""
    return np.gradient(f, dx, edge_order=2)


def lap(f: np.ndarray, dx: float) -> np.ndarray:
    """Discrete second derivative: the first-derivative stencil applied twice."""
    return d1(d1(f, dx), dx)


def q0(at, ax, bt, bx):
    """Fundamental null form contraction of two gradients: ax*bx - at*bt."""
    return ax * bx - at * bt


def _coth(a: np.ndarray) -> np.ndarray:
    # sinh(2a)/sinh^2(a) reduced; shared by both right-hand-side forms so
    # their difference is pure roundoff.
    return 2.0 / np.tanh(a)


def rhs_full(state: FullState, grid: Grid1D,
             lambda_floor: float = DEFAULT_LAMBDA_FLOOR):
    """Accelerations of the full pair."""
    lam = state.Lambda
    if np.min(lam) < lambda_floor:
        raise CoefficientSingularity(
            f"min field value {np.min(lam):.3e} under the floor {lambda_floor:.3e}"
        )
    lam_x = d1(lam, grid.dx)
    phi_x = d1(state.phi, grid.dx)
    lam_tt = lap(lam, grid.dx) - 2.0 * np.sinh(2.0 * lam) * (phi_x**2 - state.Psi**2)
    phi_tt = lap(state.phi, grid.dx) - _coth(lam) * (state.Psi * state.Pi - phi_x * lam_x)
    return lam_tt, phi_tt


def rhs_perturbation(pstate: PerturbationState, grid: Grid1D,
                     form: str = "q0",
                     sample: SolitonSample | None = None,
                     lambda_floor: float = DEFAULT_LAMBDA_FLOOR):
    """Accelerations of the perturbation pair around the exact soliton.

    form="q0" evaluates the null-form right-hand side; form="expanded" the
    algebraically equivalent hyperbolic-expansion form (kept for the
    equivalence check, identical up to roundoff).
    """
    if form not in ("q0", "expanded"):
        raise DomainError(f"unknown rhs form {form!r}")
    if sample is None:
        sample = eval_soliton(pstate.params, pstate.time, grid.xs())
    z, w, s, m = pstate.z, pstate.w, pstate.s, pstate.m
    total = sample.B + z
    if np.min(total) < lambda_floor:
        raise CoefficientSingularity(
            f"min perturbed field value {np.min(total):.3e} under the floor {lambda_floor:.3e}"
        )
    z_x = d1(z, grid.dx)
    s_x = d1(s, grid.dx)
    dt_, dx_ = sample.D_t, sample.D_x
    bt_, bx_ = sample.B_t, sample.B_x
    if form == "q0":
        q_dd = q0(dt_, dx_, dt_, dx_)
        q_ds = q0(dt_, dx_, m, s_x)
        q_ss = q0(m, s_x, m, s_x)
        q_db = q0(dt_, dx_, bt_, bx_)
        q_dz = q0(dt_, dx_, w, z_x)
        q_bs = q0(bt_, bx_, m, s_x)
        q_zs = q0(w, z_x, m, s_x)
        z_tt = (lap(z, grid.dx)
                + 2.0 * np.sinh(2.0 * sample.B) * q_dd
                - 2.0 * np.sinh(2.0 * total) * (q_dd + 2.0 * q_ds + q_ss))
        s_tt = (lap(s, grid.dx)
                - _coth(sample.B) * q_db
                + _coth(total) * (q_db + q_dz + q_bs + q_zs))
    else:
        z_tt = (lap(z, grid.dx)
                - 2.0 * np.sinh(2.0 * total) * (2.0 * dx_ * s_x - 2.0 * dt_ * m
                                                + s_x**2 - m**2)
                - 2.0 * (2.0 * np.sinh(2.0 * sample.B) * np.sinh(z)**2
                         + np.sinh(2.0 * z) * np.cosh(2.0 * sample.B)) * (dx_**2 - dt_**2))
        s_tt = (lap(s, grid.dx)
                - _coth(total) * (dt_ * w - dx_ * z_x + bt_ * m - bx_ * s_x
                                  + m * w - s_x * z_x)
                + (_coth(sample.B) - _coth(total)) * (dt_ * bt_ - dx_ * bx_))
    return z_tt, s_tt


def _pin_full(state: FullState) -> None:
    for arr, far in ((state.Lambda, state.lambda_far), (state.Pi, 0.0),
                     (state.phi, state.phi_far), (state.Psi, 0.0)):
        arr[:PINNED_CELLS] = far
        arr[-PINNED_CELLS:] = far


def _pin_perturbation(state: PerturbationState) -> None:
    for arr in (state.z, state.w, state.s, state.m):
        arr[:PINNED_CELLS] = 0.0
        arr[-PINNED_CELLS:] = 0.0


def _check_band(arrs_and_far, guard: int, tol: float, time: float) -> None:
    for arr, far in arrs_and_far:
        band = np.concatenate((arr[:guard], arr[-guard:]))
        dev = float(np.max(np.abs(band - far)))
        if dev > tol:
            raise BoundaryContamination(
                f"guard-band deviation {dev:.3e} exceeds {tol:.3e} at t={time:.6g}"
            )


def _check_finite(state, time: float) -> None:
    arrs = ((state.Lambda, state.Pi, state.phi, state.Psi)
            if isinstance(state, FullState) else
            (state.z, state.w, state.s, state.m))
    for arr in arrs:
        if not np.all(np.isfinite(arr)):
            raise BlowupDetected(f"non-finite field entries at t={time:.6g}")


def step(state, grid: Grid1D, dt: float | None = None,
         lambda_floor: float = DEFAULT_LAMBDA_FLOOR,
         boundary_tol: float = DEFAULT_BOUNDARY_TOL):
    """One classical four-stage Runge-Kutta step of the first-order system.

    Accepts either state flavor; dt defaults to the grid's cfl time step and
    may be shortened to land on a requested end time.  Deterministic: the
    same inputs give bit-identical output.
    """
    h = grid.dt if dt is None else dt
    t0 = state.time
    if isinstance(state, FullState):
        f0 = (state.Lambda, state.phi)
        v0 = (state.Pi, state.Psi)

        def accel(fields, vels, t):
            tmp = FullState(Lambda=fields[0], Pi=vels[0], phi=fields[1], Psi=vels[1],
                            time=t, lambda_far=state.lambda_far, phi_far=state.phi_far)
            return rhs_full(tmp, grid, lambda_floor=lambda_floor)
    else:
        f0 = (state.z, state.s)
        v0 = (state.w, state.m)
        # The soliton coefficients depend only on the stage time; the two
        # half-step stages share one evaluation.
        stage_samples = {
            t0: eval_soliton(state.params, t0, grid.xs()),
            t0 + 0.5 * h: eval_soliton(state.params, t0 + 0.5 * h, grid.xs()),
            t0 + h: eval_soliton(state.params, t0 + h, grid.xs()),
        }

        def accel(fields, vels, t):
            tmp = PerturbationState(z=fields[0], w=vels[0], s=fields[1], m=vels[1],
                                    params=state.params, time=t)
            return rhs_perturbation(tmp, grid, sample=stage_samples[t],
                                    lambda_floor=lambda_floor)

    k1f = v0
    k1v = accel(f0, v0, t0)
    f1 = tuple(f + 0.5 * h * k for f, k in zip(f0, k1f))
    v1 = tuple(v + 0.5 * h * k for v, k in zip(v0, k1v))
    k2f = v1
    k2v = accel(f1, v1, t0 + 0.5 * h)
    f2 = tuple(f + 0.5 * h * k for f, k in zip(f0, k2f))
    v2 = tuple(v + 0.5 * h * k for v, k in zip(v0, k2v))
    k3f = v2
    k3v = accel(f2, v2, t0 + 0.5 * h)
    f3 = tuple(f + h * k for f, k in zip(f0, k3f))
    v3 = tuple(v + h * k for v, k in zip(v0, k3v))
    k4f = v3
    k4v = accel(f3, v3, t0 + h)

    sixth = h / 6.0
    new_f = tuple(f + sixth * (a + 2.0 * b + 2.0 * c + d)
                  for f, a, b, c, d in zip(f0, k1f, k2f, k3f, k4f))
    new_v = tuple(v + sixth * (a + 2.0 * b + 2.0 * c + d)
                  for v, a, b, c, d in zip(v0, k1v, k2v, k3v, k4v))
    t1 = t0 + h

    if isinstance(state, FullState):
        out = FullState(Lambda=new_f[0], Pi=new_v[0], phi=new_f[1], Psi=new_v[1],
                        time=t1, lambda_far=state.lambda_far, phi_far=state.phi_far)
        _pin_full(out)
        _check_finite(out, t1)
        _check_band(((out.Lambda, out.lambda_far), (out.Pi, 0.0),
                     (out.phi, out.phi_far), (out.Psi, 0.0)),
                    grid.guard_width, boundary_tol, t1)
    else:
        out = PerturbationState(z=new_f[0], w=new_v[0], s=new_f[1], m=new_v[1],
                                params=state.params, time=t1)
        _pin_perturbation(out)
        _check_finite(out, t1)
        _check_band(((out.z, 0.0), (out.w, 0.0), (out.s, 0.0), (out.m, 0.0)),
                    grid.guard_width, boundary_tol, t1)
    return out


def evolve(state, grid: Grid1D, t_end: float, cadence: int = 1,
           sink=None, on_step=None,
           lambda_floor: float = DEFAULT_LAMBDA_FLOOR,
           boundary_tol: float = DEFAULT_BOUNDARY_TOL):
    """Advance a state to t_end, emitting snapshots to sink every cadence steps.

    The initial state is always emitted; the final partial step is shortened
    to land exactly on t_end.  Step failures are re-raised with the failing
    time attached.
    """
    if t_end < state.time:
        raise DomainError(f"t_end={t_end} precedes state time {state.time}")
    if cadence < 1:
        raise DomainError(f"cadence must be >= 1, got {cadence}")
    if sink is not None:
        sink(state)
    nsteps = 0
    emitted_last = True
    while state.time < t_end:
        remaining = t_end - state.time
        h = grid.dt if remaining > grid.dt else remaining
        try:
            state = step(state, grid, dt=h,
                         lambda_floor=lambda_floor, boundary_tol=boundary_tol)
        except PcflabError as exc:
            raise type(exc)(f"at t={state.time + h:.6g}: {exc}") from exc
        if state.time > t_end or (t_end - state.time) < 1e-12 * max(1.0, t_end):
            state.time = t_end
        nsteps += 1
        if on_step is not None:
            on_step(state)
        emitted_last = False
        if nsteps % cadence == 0:
            if sink is not None:
                sink(state)
            emitted_last = True
    if not emitted_last and sink is not None:
        sink(state)
    return state


def to_perturbation(state: FullState, params: SolitonParams, grid: Grid1D) -> PerturbationState:
    """Subtract the exact soliton from a full state, leaving the perturbation."""
    sample = eval_soliton(params, state.time, grid.xs())
    return PerturbationState(z=state.Lambda - sample.B, w=state.Pi - sample.B_t,
                             s=state.phi - sample.D, m=state.Psi - sample.D_t,
                             params=params, time=state.time)


def _support_ok(spec: BumpSpec, grid: Grid1D) -> bool:
    lo = grid.x_min + grid.guard_width * grid.dx
    hi = grid.x_max - grid.guard_width * grid.dx
    return spec.center - spec.half_width >= lo and spec.center + spec.half_width <= hi


def build_initial_data(params: SolitonParams, grid: Grid1D,
                       z0: BumpSpec, w0: BumpSpec, s0: BumpSpec, m0: BumpSpec,
                       delta_scale: float):
    """Sample the perturbed soliton at t=0.

    Returns (FullState, PerturbationState): the full fields carry soliton
    plus delta_scale-weighted bumps; the perturbation state carries the bumps
    alone.  Raises SupportError if any bump support reaches the guard band.
    """
    if delta_scale < 0:
        raise DomainError(f"delta_scale must be nonnegative, got {delta_scale}")
    for name, spec in (("theta", params.theta), ("sigma", params.sigma),
                       ("z0", z0), ("w0", w0), ("s0", s0), ("m0", m0)):
        if not _support_ok(spec, grid):
            raise SupportError(f"bump {name} support intrudes on the guard band")
    xs = grid.xs()
    sample = eval_soliton(params, 0.0, xs)
    z = delta_scale * bump_eval(z0, xs)[0]
    w = delta_scale * bump_eval(w0, xs)[0]
    s = delta_scale * bump_eval(s0, xs)[0]
    m = delta_scale * bump_eval(m0, xs)[0]
    level_b, level_d = solitons.asymptotic_levels(params)
    full = FullState(Lambda=sample.B + z, Pi=sample.B_t + w,
                     phi=sample.D + s, Psi=sample.D_t + m,
                     time=0.0, lambda_far=level_b, phi_far=level_d)
    pert = PerturbationState(z=z, w=w, s=s, m=m, params=params, time=0.0)
    return full, pert


def zero_perturbation(params: SolitonParams, grid: Grid1D) -> PerturbationState:
    """The exact-soliton fixed point of the perturbation flow."""
    n = grid.n
    return PerturbationState(z=np.zeros(n), w=np.zeros(n), s=np.zeros(n),
                             m=np.zeros(n), params=params, time=0.0)
