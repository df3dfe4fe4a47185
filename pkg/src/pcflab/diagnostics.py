"""Densities, integrals, weighted norms, and monitor quantities for the
stability experiments.

Every operation is a pure function of a state (plus grid and knobs); nothing
here advances time.  The flux accumulator is the one stateful object: it is
owned by a single evolution and fed once per accepted step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import FullState, Grid1D, PerturbationState, d1
from .errors import DomainError, InsufficientHistory, WindowUndefined
from .solitons import eval_soliton

# The shrinking-window diagnostic t/log^2 t is only meaningful once the
# window is wide and slow; below this time it is reported as undefined.
WINDOW_T_MIN = 8.0

_trapz = getattr(np, "trapezoid", None) or np.trapz


@dataclass
class DensityFields:
    """Pointwise density arrays; groups not applicable to the state that
    produced them are left as None."""

    e: np.ndarray | None = None
    p: np.ndarray | None = None
    ehat: np.ndarray | None = None
    phat: np.ndarray | None = None
    Fe: np.ndarray | None = None
    Fp: np.ndarray | None = None


def densities_full(state: FullState, grid: Grid1D) -> DensityFields:
    """Energy and momentum densities of the full pair."""
    lam_x = d1(state.Lambda, grid.dx)
    phi_x = d1(state.phi, grid.dx)
    s2 = np.sinh(state.Lambda) ** 2
    e = 0.5 * (lam_x**2 + state.Pi**2) + 2.0 * s2 * (phi_x**2 + state.Psi**2)
    p = lam_x * state.Pi + 4.0 * s2 * phi_x * state.Psi
    return DensityFields(e=e, p=p)


def densities_perturbation(pstate: PerturbationState, grid: Grid1D,
                           variant: str = "corrected") -> DensityFields:
    """Quadratic perturbation densities and the virial source terms.

    variant="corrected" uses the source terms that close the local balance
    laws exactly (certified by on-shell substitution); variant="printed"
    reproduces a transcription that omits one cubic term in the energy
    source and carries a sign slip plus a spurious term in the momentum
    source.  The printed variant exists only so tests can demonstrate its
    residual does not converge; simulations always use the corrected one.
    """
    if variant not in ("corrected", "printed"):
        raise DomainError(f"unknown virial-source variant {variant!r}")
    sample = eval_soliton(pstate.params, pstate.time, grid.xs())
    z, w, s, m = pstate.z, pstate.w, pstate.s, pstate.m
    z_x = d1(z, grid.dx)
    s_x = d1(s, grid.dx)
    bt, bx = sample.B_t, sample.B_x
    dt_, dx_ = sample.D_t, sample.D_x
    total = sample.B + z
    s2 = np.sinh(total) ** 2
    c2 = np.sinh(2.0 * total)

    ehat = 0.5 * (w**2 + z_x**2) + 2.0 * s2 * (s_x**2 + m**2)
    phat = z_x * w + 4.0 * s2 * s_x * m

    box_b, box_d = sample.boxB, sample.boxD
    if variant == "corrected":
        brack_e = (m * (2.0 * bx * dx_ - 2.0 * bt * dt_ + 2.0 * z_x * dx_)
                   + w * (dt_**2 - dx_**2 - 2.0 * s_x * dx_)
                   + bt * (s_x**2 - m**2))
        fe = w * (-box_b) + 4.0 * s2 * m * (-box_d) + 2.0 * c2 * brack_e
        brack_p = (z_x * (dt_**2 - dx_**2 + 2.0 * m * dt_)
                   + 2.0 * s_x * (bx * dx_ - bt * dt_ - w * dt_)
                   + bx * (s_x**2 - m**2))
        fp = z_x * (-box_b) + 4.0 * s2 * s_x * (-box_d) + 2.0 * c2 * brack_p
    else:
        brack_e = (m * (2.0 * bx * dx_ - 2.0 * bt * dt_ + 2.0 * z_x * dx_)
                   + w * (dt_**2 - dx_**2 - 2.0 * s_x * dx_))
        fe = w * (-box_b) + 4.0 * s2 * m * (-box_d) + 2.0 * c2 * brack_e
        brack_p = (z_x * (dt_**2 - dx_**2 + 2.0 * m * dt_)
                   + 2.0 * s_x * (bx * dx_ - bt * dx_ - bt * dt_ - w * dt_)
                   + bx * (s_x**2 - m**2))
        fp = z_x * box_b + 4.0 * s2 * s_x * (-box_d) + 2.0 * c2 * brack_p
    return DensityFields(ehat=ehat, phat=phat, Fe=fe, Fp=fp)


def totals(state, grid: Grid1D):
    """Trapezoid totals: (energy, momentum, crossed integral).

    The crossed integral is the transported left-moving deficit, evaluated
    in its manifestly nonnegative pointwise form.
    """
    xs = grid.xs()
    if isinstance(state, FullState):
        dens = densities_full(state, grid)
        lam_x = d1(state.Lambda, grid.dx)
        phi_x = d1(state.phi, grid.dx)
        s2 = np.sinh(state.Lambda) ** 2
        crossed_density = (0.5 * (lam_x - state.Pi) ** 2
                           + 2.0 * s2 * (phi_x - state.Psi) ** 2)
        return (float(_trapz(dens.e, xs)), float(_trapz(dens.p, xs)),
                float(_trapz(crossed_density, xs)))
    sample = eval_soliton(state.params, state.time, grid.xs())
    z_x = d1(state.z, grid.dx)
    s_x = d1(state.s, grid.dx)
    s2 = np.sinh(sample.B + state.z) ** 2
    ehat = 0.5 * (state.w**2 + z_x**2) + 2.0 * s2 * (s_x**2 + state.m**2)
    phat = z_x * state.w + 4.0 * s2 * s_x * state.m
    crossed_density = 0.5 * (z_x - state.w) ** 2 + 2.0 * s2 * (s_x - state.m) ** 2
    return (float(_trapz(ehat, xs)), float(_trapz(phat, xs)),
            float(_trapz(crossed_density, xs)))


def _integrate_interval(xs: np.ndarray, f: np.ndarray, lo: float, hi: float) -> float:
    """Trapezoid of f over [lo, hi] with linearly interpolated endpoints.

    Returns 0 when the clipped interval is empty."""
    lo = max(lo, float(xs[0]))
    hi = min(hi, float(xs[-1]))
    if hi <= lo:
        return 0.0
    inside = xs[(xs > lo) & (xs < hi)]
    nodes = np.concatenate(([lo], inside, [hi]))
    vals = np.interp(nodes, xs, f)
    return float(_trapz(vals, nodes))


def exterior_energy(pstate: PerturbationState, grid: Grid1D, R: float,
                    region: str = "causal") -> float:
    """Perturbation energy outside radius R.

    region="causal" integrates over the shrinking double tail |x| >= R + t,
    whose boundary moves outward at wave speed, so no signal from |x| < R at
    t=0 can enter it; this is the region for which monotone non-increase
    holds.  region="comoving" integrates over |x + t| >= R, a single
    left-translating tail pair kept for comparison (right-moving content
    enters it, so no monotonicity is expected).  Both coincide with
    |x| >= R at t=0.  Returns 0 when the region misses the grid.
    """
    if R <= 0:
        raise DomainError(f"R must be positive, got {R}")
    if region not in ("causal", "comoving"):
        raise DomainError(f"unknown exterior region {region!r}")
    dens = densities_perturbation(pstate, grid)
    xs = grid.xs()
    t = pstate.time
    if region == "causal":
        left_hi, right_lo = -(R + t), R + t
    else:
        left_hi, right_lo = -R - t, R - t
    return (_integrate_interval(xs, dens.ehat, float(xs[0]), left_hi)
            + _integrate_interval(xs, dens.ehat, right_lo, float(xs[-1])))


def window_width(t: float) -> float:
    """Shrinking-in-proportion window half-width t / log^2 t."""
    if t < WINDOW_T_MIN:
        raise WindowUndefined(
            f"window diagnostic defined for t >= {WINDOW_T_MIN}, got t={t:.6g}")
    return t / math.log(t) ** 2


def window_energy(pstate: PerturbationState, grid: Grid1D, v: float) -> float:
    """Perturbation energy in the moving window [vt - w(t), vt + w(t)]."""
    if not abs(v) < 1.0:
        raise DomainError(f"window speed must satisfy |v| < 1, got {v}")
    t = pstate.time
    omega = window_width(t)
    sample = eval_soliton(pstate.params, t, grid.xs())
    z_x = d1(pstate.z, grid.dx)
    s_x = d1(pstate.s, grid.dx)
    integrand = (pstate.w**2 + z_x**2
                 + np.sinh(sample.B + pstate.z) ** 2 * (pstate.m**2 + s_x**2))
    return _integrate_interval(grid.xs(), integrand, v * t - omega, v * t + omega)


def phi_weight(y, eta: float):
    """Polynomial null-coordinate weight (1 + |y|^2)^(1+eta)."""
    return (1.0 + np.asarray(y) ** 2) ** (1.0 + eta)


def _check_eta(eta: float) -> None:
    if not 0.0 < eta < 1.0 / 3.0:
        raise DomainError(f"eta must lie in (0, 1/3), got {eta}")


@dataclass(frozen=True)
class WeightedNorms:
    """Weighted energy functionals of one perturbation snapshot: E* are
    spatial surface integrals, F* characteristic-flux sups (zero unless an
    accumulator tracked the evolution)."""

    E0: float
    E1: float
    Ebar0: float
    Ebar1: float
    F0: float
    F1: float
    Fbar0: float
    Fbar1: float
    eta: float


class FluxAccumulator:
    """Running line integrals of weighted null fluxes along a lattice of
    characteristics anchored at every stride-th grid point of t=0.

    Left-moving lines carry the incoming-derivative fluxes, right-moving
    lines the outgoing ones; the weight argument varies along each line.
    Line integrals are parametrized by coordinate time (trapezoid in t).
    Feed update() with every accepted state, starting at the initial one.
    """

    def __init__(self, grid: Grid1D, eta: float, stride: int = 4):
        _check_eta(eta)
        if stride < 1:
            raise DomainError(f"stride must be >= 1, got {stride}")
        anchors = grid.xs()[::stride]
        self._eta = eta
        # Left-movers x = x0 - t have fixed ubar = x0/2 and u = t - ubar;
        # right-movers x = x0 + t have fixed u = -x0/2 and ubar = t - u.
        self._ubar = anchors / 2.0
        self._u = -anchors / 2.0
        self._sums = {key: np.zeros(anchors.size)
                      for key in ("z0L", "z1L", "s0L", "s1L",
                                  "z0R", "z1R", "s0R", "s1R")}
        self._prev_t: float | None = None
        self._prev_vals: dict[str, np.ndarray] | None = None

    def _integrands(self, pstate: PerturbationState, grid: Grid1D):
        xs = grid.xs()
        t = pstate.time
        z_x = d1(pstate.z, grid.dx)
        s_x = d1(pstate.s, grid.dx)
        lz, lbz = pstate.w + z_x, pstate.w - z_x
        ls, lbs = pstate.m + s_x, pstate.m - s_x
        fields = {
            "z0": (lz, lbz),
            "z1": (d1(lz, grid.dx), d1(lbz, grid.dx)),
            "s0": (ls, lbs),
            "s1": (d1(ls, grid.dx), d1(lbs, grid.dx)),
        }
        x_left = 2.0 * self._ubar - t
        x_right = t - 2.0 * self._u
        w_left = phi_weight(t - self._ubar, self._eta)   # phi(u) on left-movers
        w_right = phi_weight(t - self._u, self._eta)     # phi(ubar) on right-movers
        out = {}
        for name, (fwd, bwd) in fields.items():
            out[name + "L"] = w_left * np.interp(x_left, xs, bwd**2)
            out[name + "R"] = w_right * np.interp(x_right, xs, fwd**2)
        return out

    def update(self, pstate: PerturbationState, grid: Grid1D) -> None:
        vals = self._integrands(pstate, grid)
        t = pstate.time
        if self._prev_t is not None:
            h = t - self._prev_t
            if h < 0:
                raise DomainError("flux accumulator fed states out of order")
            for key, arr in vals.items():
                self._sums[key] += 0.5 * h * (self._prev_vals[key] + arr)
        self._prev_t = t
        self._prev_vals = vals

    def norms(self) -> tuple[float, float, float, float]:
        """(F0, F1, Fbar0, Fbar1): per-family sup over lines, incoming plus
        outgoing."""
        s = self._sums
        return (float(np.max(s["z0L"]) + np.max(s["z0R"])),
                float(np.max(s["z1L"]) + np.max(s["z1R"])),
                float(np.max(s["s0L"]) + np.max(s["s0R"])),
                float(np.max(s["s1L"]) + np.max(s["s1R"])))


def weighted_norms(pstate: PerturbationState, grid: Grid1D, eta: float,
                   flux: FluxAccumulator | None = None) -> WeightedNorms:
    """Surface-weighted energies of the snapshot, plus flux sups if an
    accumulator has been tracking the run (zeros otherwise)."""
    _check_eta(eta)
    xs = grid.xs()
    t = pstate.time
    u = (t - xs) / 2.0
    ubar = (t + xs) / 2.0
    wu = phi_weight(u, eta)
    wubar = phi_weight(ubar, eta)
    z_x = d1(pstate.z, grid.dx)
    s_x = d1(pstate.s, grid.dx)
    lz, lbz = pstate.w + z_x, pstate.w - z_x
    ls, lbs = pstate.m + s_x, pstate.m - s_x

    def surface(fwd, bwd):
        return float(_trapz(wu * bwd**2 + wubar * fwd**2, xs))

    e0 = surface(lz, lbz)
    e1 = surface(d1(lz, grid.dx), d1(lbz, grid.dx))
    ebar0 = surface(ls, lbs)
    ebar1 = surface(d1(ls, grid.dx), d1(lbs, grid.dx))
    f0 = f1 = fbar0 = fbar1 = 0.0
    if flux is not None:
        f0, f1, fbar0, fbar1 = flux.norms()
    return WeightedNorms(E0=e0, E1=e1, Ebar0=ebar0, Ebar1=ebar1,
                         F0=f0, F1=f1, Fbar0=fbar0, Fbar1=fbar1, eta=eta)


def weighted_initial_norm(pstate: PerturbationState, grid: Grid1D, eta: float) -> float:
    """Squared admissibility norm of initial data: x-weighted spatial
    derivatives of all four components through one extra order."""
    _check_eta(eta)
    if pstate.time != 0.0:
        raise DomainError(
            f"initial-data norm requires t=0, state is at t={pstate.time:.6g}")
    xs = grid.xs()
    weight = (1.0 + xs**2) ** (1.0 + eta)
    total = 0.0
    for kfield in (pstate.w, pstate.m):
        a0 = kfield
        a1 = d1(kfield, grid.dx)
        total += float(_trapz(weight * (a0**2 + a1**2), xs))
    for kfield in (pstate.z, pstate.s):
        a1 = d1(kfield, grid.dx)
        a2 = d1(a1, grid.dx)
        total += float(_trapz(weight * (a1**2 + a2**2), xs))
    return total


def smoothstep(y):
    """C^2 monotone ramp: 0 for y <= -1, 1 for y >= 1, with derivative
    (4/3) cos^4(pi y / 2) on the transition."""
    y = np.asarray(y, dtype=float)
    a = 0.5 * np.pi * np.clip(y, -1.0, 1.0)
    val = 0.5 + (8.0 / (3.0 * np.pi)) * (3.0 * a / 8.0
                                         + np.sin(2.0 * a) / 4.0
                                         + np.sin(4.0 * a) / 32.0)
    return np.clip(val, 0.0, 1.0)


def smoothstep_d(y):
    """Derivative of smoothstep; exactly zero outside the transition."""
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) < 1.0
    out = np.zeros_like(y)
    out[inside] = (4.0 / 3.0) * np.cos(0.5 * np.pi * y[inside]) ** 4
    return out


@dataclass(frozen=True)
class CutoffSpec:
    """Monotone cutoff: smoothstep ramp of the given transition width around
    center, rising (0 to 1) or falling (1 to 0)."""

    center: float
    width: float = 1.0
    orientation: str = "rising"

    def __post_init__(self) -> None:
        if self.width <= 0:
            raise DomainError(f"cutoff width must be positive, got {self.width}")
        if self.orientation not in ("rising", "falling"):
            raise DomainError(f"unknown cutoff orientation {self.orientation!r}")

    def eval(self, svals):
        y = (np.asarray(svals, dtype=float) - self.center) / (0.5 * self.width)
        scale = 2.0 / self.width
        if self.orientation == "rising":
            return smoothstep(y), scale * smoothstep_d(y)
        return smoothstep(-y), -scale * smoothstep_d(-y)


@dataclass(frozen=True)
class VirialCutoffs:
    """Moving-cutoff pair for the integrated balance identity: chi1 falls
    (argument x + rt), chi2 rises (argument x - rt), both at speed r."""

    chi1: CutoffSpec
    chi2: CutoffSpec
    r: float

    def __post_init__(self) -> None:
        if self.chi1.orientation != "falling":
            raise DomainError("chi1 must be falling (derivative <= 0)")
        if self.chi2.orientation != "rising":
            raise DomainError("chi2 must be rising (derivative >= 0)")
        if not abs(self.r) < 1.0:
            raise DomainError(f"cutoff speed must satisfy |r| < 1, got {self.r}")


UNIT_CUTOFFS = VirialCutoffs(
    chi1=CutoffSpec(center=1e9, width=1.0, orientation="falling"),
    chi2=CutoffSpec(center=-1e9, width=1.0, orientation="rising"),
    r=0.0,
)
"""Cutoffs identically 1 on any physical grid: transitions pushed to +-1e9."""


@dataclass(frozen=True)
class VirialReport:
    """Norms of the discrete local-balance residuals over a trajectory
    window, plus the integrated moving-cutoff identity residuals."""

    e_max: float
    e_l2: float
    p_max: float
    p_l2: float
    integrated_e: float
    integrated_p: float

    @property
    def max_residual(self) -> float:
        return max(self.e_max, self.p_max)

    @property
    def l2_residual(self) -> float:
        return max(self.e_l2, self.p_l2)


def virial_report(states: Sequence[PerturbationState], grid: Grid1D,
                  cutoffs: VirialCutoffs = UNIT_CUTOFFS,
                  variant: str = "corrected") -> VirialReport:
    """Check the local balance laws and their integrated cutoff version on
    consecutive stored time levels.

    Needs at least three uniformly spaced levels for centered time
    differences; residuals are evaluated at every interior level and the
    norms aggregated by max.
    """
    if len(states) < 3:
        raise InsufficientHistory(
            f"need >= 3 consecutive time levels, got {len(states)}")
    times = np.array([st.time for st in states])
    dts = np.diff(times)
    if np.any(dts <= 0) or (np.max(dts) - np.min(dts)) > 1e-9 * np.max(dts):
        raise DomainError("trajectory window must be uniformly spaced in time")
    dt = float(dts[0])
    xs = grid.xs()
    dens = [densities_perturbation(st, grid, variant=variant) for st in states]

    def cutoff_fields(t):
        c1, d1c = cutoffs.chi1.eval(xs + cutoffs.r * t)
        c2, d2c = cutoffs.chi2.eval(xs - cutoffs.r * t)
        return c1, d1c, c2, d2c

    def weighted_int(f, c1, c2):
        return float(_trapz(f * c1 * c2, xs))

    e_max = e_l2 = p_max = p_l2 = 0.0
    int_e = int_p = 0.0
    for i in range(1, len(states) - 1):
        de_dt = (dens[i + 1].ehat - dens[i - 1].ehat) / (2.0 * dt)
        dp_dt = (dens[i + 1].phat - dens[i - 1].phat) / (2.0 * dt)
        res_e = de_dt - d1(dens[i].phat, grid.dx) - dens[i].Fe
        res_p = dp_dt - d1(dens[i].ehat, grid.dx) - dens[i].Fp
        e_max = max(e_max, float(np.max(np.abs(res_e))))
        p_max = max(p_max, float(np.max(np.abs(res_p))))
        e_l2 = max(e_l2, float(np.sqrt(_trapz(res_e**2, xs))))
        p_l2 = max(p_l2, float(np.sqrt(_trapz(res_p**2, xs))))

        c1m, d1m, c2m, d2m = cutoff_fields(times[i])
        adv = d1m * c2m - c1m * d2m
        parts = d1m * c2m + c1m * d2m
        ie_prev = weighted_int(dens[i - 1].ehat, *cutoff_fields(times[i - 1])[::2])
        ie_next = weighted_int(dens[i + 1].ehat, *cutoff_fields(times[i + 1])[::2])
        lhs_e = (ie_next - ie_prev) / (2.0 * dt)
        rhs_e = (cutoffs.r * float(_trapz(dens[i].ehat * adv, xs))
                 - float(_trapz(dens[i].phat * parts, xs))
                 + weighted_int(dens[i].Fe, c1m, c2m))
        ip_prev = weighted_int(dens[i - 1].phat, *cutoff_fields(times[i - 1])[::2])
        ip_next = weighted_int(dens[i + 1].phat, *cutoff_fields(times[i + 1])[::2])
        lhs_p = (ip_next - ip_prev) / (2.0 * dt)
        rhs_p = (cutoffs.r * float(_trapz(dens[i].phat * adv, xs))
                 - float(_trapz(dens[i].ehat * parts, xs))
                 + weighted_int(dens[i].Fp, c1m, c2m))
        int_e = max(int_e, abs(lhs_e - rhs_e))
        int_p = max(int_p, abs(lhs_p - rhs_p))
    return VirialReport(e_max=e_max, e_l2=e_l2, p_max=p_max, p_l2=p_l2,
                        integrated_e=int_e, integrated_p=int_p)


def pointwise_decay_monitor(pstate: PerturbationState, grid: Grid1D,
                            eta: float, delta: float) -> float:
    """Largest weighted null-derivative amplitude relative to the data size.

    Outgoing derivatives are weighted by the outgoing null coordinate and
    vice versa; reported, never asserted.
    """
    _check_eta(eta)
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    xs = grid.xs()
    t = pstate.time
    u = (t - xs) / 2.0
    ubar = (t + xs) / 2.0
    half = 0.5 * (1.0 + eta)
    wu = (1.0 + u**2) ** half
    wubar = (1.0 + ubar**2) ** half
    z_x = d1(pstate.z, grid.dx)
    s_x = d1(pstate.s, grid.dx)
    ratios = (np.abs(pstate.w + z_x) * wubar,
              np.abs(pstate.w - z_x) * wu,
              np.abs(pstate.m + s_x) * wubar,
              np.abs(pstate.m - s_x) * wu)
    return float(max(np.max(r) for r in ratios)) / delta


def sinh_bounds_monitor(pstate: PerturbationState, grid: Grid1D):
    """Grid extrema (min sinh, max sinh, min cosh, max cosh) of the total
    field underlying the hyperbolic coefficients."""
    sample = eval_soliton(pstate.params, pstate.time, grid.xs())
    total = sample.B + pstate.z
    sh, ch = np.sinh(total), np.cosh(total)
    return (float(np.min(sh)), float(np.max(sh)),
            float(np.min(ch)), float(np.max(ch)))


@dataclass
class DiagnosticsRecord:
    """One row of the simulation time series; entries whose diagnostic is
    undefined at this time are NaN."""

    t: float
    E_total: float
    P_total: float
    crossed: float
    exterior_R: float
    window_v: float
    norms: WeightedNorms
    virial_max: float
    virial_l2: float
    decay_ratio: float
    sinh_min: float
    sinh_max: float
    cosh_min: float
    cosh_max: float
