"""Command-line front end: configuration files, scenario presets, and the
orchestration that turns one config into time-series and report files.

Simulations run the full-field and perturbation modes in lockstep on the
same grid so every diagnostic record carries both views of the same instant.
All outputs are deterministic: fixed column order, 17-significant-digit
decimals, no timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from itertools import product
from pathlib import Path

import yaml

from .diagnostics import (
    DiagnosticsRecord,
    FluxAccumulator,
    exterior_energy,
    pointwise_decay_monitor,
    sinh_bounds_monitor,
    totals,
    virial_report,
    weighted_initial_norm,
    weighted_norms,
    window_energy,
)
from .dynamics import FullState, Grid1D, PerturbationState, build_initial_data, step
from .errors import ConfigError, PcflabError, WindowUndefined
from .solitons import BumpSpec, SolitonParams
from .verify import verify_all

CSV_COLUMNS = (
    "t", "E_total", "P_total", "crossed", "exterior_R", "window_v",
    "E0", "E1", "Ebar0", "Ebar1", "F0", "F1", "Fbar0", "Fbar1",
    "virial_max", "virial_l2", "decay_ratio",
    "sinh_min", "sinh_max", "cosh_min", "cosh_max",
)

MIN_FIT_ORDER = 1.8

_BUMP_KEYS = {"family", "center", "half_width", "amplitude"}


def _expect_mapping(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(obj).__name__}")
    return obj


def _check_keys(d: dict, allowed: set, required: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def _bump_from_cfg(obj, where: str) -> BumpSpec:
    d = _expect_mapping(obj, where)
    _check_keys(d, _BUMP_KEYS, _BUMP_KEYS, where)
    try:
        return BumpSpec(family=str(d["family"]), center=float(d["center"]),
                        half_width=float(d["half_width"]),
                        amplitude=float(d["amplitude"]))
    except PcflabError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _bump_to_cfg(spec: BumpSpec) -> dict:
    return {"family": spec.family, "center": spec.center,
            "half_width": spec.half_width, "amplitude": spec.amplitude}


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description; every knob of one scenario."""

    scenario: str
    mu: float
    lam: float
    epsilon: float
    theta: BumpSpec
    sigma: BumpSpec
    delta_scale: float
    z0: BumpSpec
    w0: BumpSpec
    s0: BumpSpec
    m0: BumpSpec
    x_min: float
    dx: float
    n: int
    cfl: float
    t_end: float
    cadence: int
    snapshot_every: int = 0
    guard_width: int = 4
    eta: float = 0.25
    R_exterior: float = 10.0
    v_window: float = 0.0
    flux_stride: int = 4
    conservation_tol: float = 1e-6
    exterior_tol_factor: float = 1e-8
    out_dir: str | None = None
    sweep_epsilon: tuple = ()
    sweep_delta_scale: tuple = ()

    def params(self) -> SolitonParams:
        return SolitonParams(mu=self.mu, lam=self.lam, epsilon=self.epsilon,
                             theta=self.theta, sigma=self.sigma)

    def grid(self) -> Grid1D:
        return Grid1D(x_min=self.x_min, dx=self.dx, n=self.n, cfl=self.cfl,
                      guard_width=self.guard_width)

    def validate(self) -> None:
        if not 0.0 < self.mu < 1.0:
            raise ConfigError(f"mu must lie in (0, 1), got {self.mu}")
        if self.lam <= 0:
            raise ConfigError(f"lam must be positive, got {self.lam}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.delta_scale < 0:
            raise ConfigError(f"delta_scale must be nonnegative, got {self.delta_scale}")
        if not 0.0 < self.eta < 1.0 / 3.0:
            raise ConfigError(
                f"weight exponent eta must lie in (0, 1/3), got {self.eta}")
        if not abs(self.v_window) < 1.0:
            raise ConfigError(f"v_window must satisfy |v| < 1, got {self.v_window}")
        if self.R_exterior <= 0:
            raise ConfigError(f"R_exterior must be positive, got {self.R_exterior}")
        if self.t_end < 0:
            raise ConfigError(f"t_end must be nonnegative, got {self.t_end}")
        if self.cadence < 1:
            raise ConfigError(f"cadence must be >= 1, got {self.cadence}")
        if self.snapshot_every < 0:
            raise ConfigError(f"snapshot_every must be >= 0, got {self.snapshot_every}")
        if self.conservation_tol <= 0 or self.exterior_tol_factor <= 0:
            raise ConfigError("tolerances must be positive")
        try:
            grid = self.grid()
        except PcflabError as exc:
            raise ConfigError(f"grid: {exc}") from exc
        lo_ok = grid.x_min + grid.guard_width * grid.dx
        hi_ok = grid.x_max - grid.guard_width * grid.dx
        for name, spec in (("theta", self.theta), ("sigma", self.sigma),
                           ("z0", self.z0), ("w0", self.w0),
                           ("s0", self.s0), ("m0", self.m0)):
            lo = spec.center - spec.half_width - self.t_end
            hi = spec.center + spec.half_width + self.t_end
            if lo < lo_ok or hi > hi_ok:
                raise ConfigError(
                    f"bump {name} plus light cone through t_end={self.t_end} "
                    f"leaves the non-guard interior [{lo_ok:g}, {hi_ok:g}]")

    def to_dict(self) -> dict:
        d = {
            "scenario": self.scenario,
            "soliton": {"mu": self.mu, "lam": self.lam, "epsilon": self.epsilon,
                        "theta": _bump_to_cfg(self.theta),
                        "sigma": _bump_to_cfg(self.sigma)},
            "perturbation": {"delta_scale": self.delta_scale,
                             "z0": _bump_to_cfg(self.z0),
                             "w0": _bump_to_cfg(self.w0),
                             "s0": _bump_to_cfg(self.s0),
                             "m0": _bump_to_cfg(self.m0)},
            "grid": {"x_min": self.x_min, "dx": self.dx, "n": self.n,
                     "cfl": self.cfl, "guard_width": self.guard_width},
            "run": {"t_end": self.t_end, "cadence": self.cadence,
                    "snapshot_every": self.snapshot_every},
            "diagnostics": {"eta": self.eta, "R_exterior": self.R_exterior,
                            "v_window": self.v_window,
                            "flux_stride": self.flux_stride},
            "tolerances": {"conservation_tol": self.conservation_tol,
                           "exterior_tol_factor": self.exterior_tol_factor},
        }
        if self.out_dir is not None:
            d["out_dir"] = self.out_dir
        if self.sweep_epsilon or self.sweep_delta_scale:
            sweep = {}
            if self.sweep_epsilon:
                sweep["epsilon"] = list(self.sweep_epsilon)
            if self.sweep_delta_scale:
                sweep["delta_scale"] = list(self.sweep_delta_scale)
            d["sweep"] = sweep
        return d

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        d = _expect_mapping(data, "config")
        _check_keys(d, {"scenario", "soliton", "perturbation", "grid", "run",
                        "diagnostics", "tolerances", "out_dir", "sweep"},
                    {"scenario", "soliton", "perturbation", "grid", "run"},
                    "config")
        sol = _expect_mapping(d["soliton"], "soliton")
        _check_keys(sol, {"mu", "lam", "epsilon", "theta", "sigma"},
                    {"mu", "lam", "epsilon", "theta", "sigma"}, "soliton")
        pert = _expect_mapping(d["perturbation"], "perturbation")
        _check_keys(pert, {"delta_scale", "z0", "w0", "s0", "m0"},
                    {"delta_scale", "z0", "w0", "s0", "m0"}, "perturbation")
        grid = _expect_mapping(d["grid"], "grid")
        _check_keys(grid, {"x_min", "dx", "n", "cfl", "guard_width"},
                    {"x_min", "dx", "n", "cfl"}, "grid")
        run = _expect_mapping(d["run"], "run")
        _check_keys(run, {"t_end", "cadence", "snapshot_every"},
                    {"t_end", "cadence"}, "run")
        diag = _expect_mapping(d.get("diagnostics", {}), "diagnostics")
        _check_keys(diag, {"eta", "R_exterior", "v_window", "flux_stride"},
                    set(), "diagnostics")
        tol = _expect_mapping(d.get("tolerances", {}), "tolerances")
        _check_keys(tol, {"conservation_tol", "exterior_tol_factor"},
                    set(), "tolerances")
        sweep = _expect_mapping(d.get("sweep", {}), "sweep")
        _check_keys(sweep, {"epsilon", "delta_scale"}, set(), "sweep")

        def fl(section, key, default=None):
            if key not in section:
                return default
            try:
                return float(section[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key} must be a number") from exc

        cfg = cls(
            scenario=str(d["scenario"]),
            mu=fl(sol, "mu"), lam=fl(sol, "lam"), epsilon=fl(sol, "epsilon"),
            theta=_bump_from_cfg(sol["theta"], "soliton.theta"),
            sigma=_bump_from_cfg(sol["sigma"], "soliton.sigma"),
            delta_scale=fl(pert, "delta_scale"),
            z0=_bump_from_cfg(pert["z0"], "perturbation.z0"),
            w0=_bump_from_cfg(pert["w0"], "perturbation.w0"),
            s0=_bump_from_cfg(pert["s0"], "perturbation.s0"),
            m0=_bump_from_cfg(pert["m0"], "perturbation.m0"),
            x_min=fl(grid, "x_min"), dx=fl(grid, "dx"),
            n=int(grid["n"]), cfl=fl(grid, "cfl"),
            guard_width=int(grid.get("guard_width", 4)),
            t_end=fl(run, "t_end"), cadence=int(run["cadence"]),
            snapshot_every=int(run.get("snapshot_every", 0)),
            eta=fl(diag, "eta", 0.25),
            R_exterior=fl(diag, "R_exterior", 10.0),
            v_window=fl(diag, "v_window", 0.0),
            flux_stride=int(diag.get("flux_stride", 4)),
            conservation_tol=fl(tol, "conservation_tol", 1e-6),
            exterior_tol_factor=fl(tol, "exterior_tol_factor", 1e-8),
            out_dir=None if d.get("out_dir") is None else str(d["out_dir"]),
            sweep_epsilon=tuple(float(v) for v in sweep.get("epsilon", ())),
            sweep_delta_scale=tuple(float(v) for v in sweep.get("delta_scale", ())),
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        return cls.from_dict(data)

    def serialize(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)


def resolve_config_path(arg: str) -> Path:
    """Accept a filesystem path or the name of a packaged preset."""
    p = Path(arg)
    if p.exists():
        return p
    name = arg if arg.endswith(".yaml") else arg + ".yaml"
    candidate = resources.files("pcflab").joinpath("presets", name)
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"config not found: {arg} (no such file or preset)")


@dataclass
class SimResult:
    """Everything one simulation produced, before any file is written."""

    config: RunConfig
    records: list
    extras: list
    snapshots: list
    initial_ehat_total: float
    initial_weighted_norm: float


def _make_record(full: FullState, pert: PerturbationState, grid: Grid1D,
                 cfg: RunConfig, acc: FluxAccumulator, buf) -> tuple:
    e_full, p_full, crossed_full = totals(full, grid)
    ehat, phat, crossed = totals(pert, grid)
    ext = exterior_energy(pert, grid, cfg.R_exterior)
    try:
        win = window_energy(pert, grid, cfg.v_window)
    except WindowUndefined:
        win = math.nan
    norms = weighted_norms(pert, grid, cfg.eta, flux=acc)
    vmax = vl2 = math.nan
    if len(buf) == 3:
        ts = [st.time for st in buf]
        gaps = (ts[1] - ts[0], ts[2] - ts[1])
        if min(gaps) > 0 and abs(gaps[0] - gaps[1]) <= 1e-9 * max(gaps):
            rep = virial_report(list(buf), grid)
            vmax, vl2 = rep.max_residual, rep.l2_residual
    delta = cfg.delta_scale if cfg.delta_scale > 0 else 1.0
    decay = pointwise_decay_monitor(pert, grid, cfg.eta, delta)
    sh_min, sh_max, ch_min, ch_max = sinh_bounds_monitor(pert, grid)
    rec = DiagnosticsRecord(
        t=full.time, E_total=e_full, P_total=p_full, crossed=crossed,
        exterior_R=ext, window_v=win, norms=norms,
        virial_max=vmax, virial_l2=vl2, decay_ratio=decay,
        sinh_min=sh_min, sinh_max=sh_max, cosh_min=ch_min, cosh_max=ch_max)
    extra = {"crossed_full": crossed_full, "ehat_total": ehat,
             "phat_total": phat}
    return rec, extra


def record_row(rec: DiagnosticsRecord) -> list:
    n = rec.norms
    return [rec.t, rec.E_total, rec.P_total, rec.crossed, rec.exterior_R,
            rec.window_v, n.E0, n.E1, n.Ebar0, n.Ebar1,
            n.F0, n.F1, n.Fbar0, n.Fbar1,
            rec.virial_max, rec.virial_l2, rec.decay_ratio,
            rec.sinh_min, rec.sinh_max, rec.cosh_min, rec.cosh_max]


def run_simulation(cfg: RunConfig, collect_snapshots: bool = False,
                   row_sink=None) -> SimResult:
    """Advance both modes to t_end, building one diagnostics record every
    cadence steps (plus the initial and final instants)."""
    params = cfg.params()
    grid = cfg.grid()
    full, pert = build_initial_data(params, grid, cfg.z0, cfg.w0, cfg.s0,
                                    cfg.m0, cfg.delta_scale)
    acc = FluxAccumulator(grid, cfg.eta, cfg.flux_stride)
    acc.update(pert, grid)
    buf = deque(maxlen=3)
    buf.append(pert)
    initial_ehat = totals(pert, grid)[0]
    initial_norm = weighted_initial_norm(pert, grid, cfg.eta)

    records = []
    extras = []
    snapshots = []

    def emit(full_state, pert_state):
        rec, extra = _make_record(full_state, pert_state, grid, cfg, acc, buf)
        records.append(rec)
        extras.append(extra)
        if row_sink is not None:
            row_sink(record_row(rec))
        if collect_snapshots:
            snapshots.append((full_state.time, full_state, pert_state))

    emit(full, pert)
    nsteps = 0
    emitted = True
    while full.time < cfg.t_end:
        remaining = cfg.t_end - full.time
        h = grid.dt if remaining > grid.dt else remaining
        try:
            full = step(full, grid, dt=h)
            pert = step(pert, grid, dt=h)
        except PcflabError as exc:
            raise type(exc)(f"at t={full.time + h:.6g}: {exc}") from exc
        if (full.time > cfg.t_end
                or (cfg.t_end - full.time) < 1e-12 * max(1.0, cfg.t_end)):
            full.time = cfg.t_end
            pert.time = cfg.t_end
        acc.update(pert, grid)
        buf.append(pert)
        nsteps += 1
        emitted = False
        if nsteps % cfg.cadence == 0:
            emit(full, pert)
            emitted = True
    if not emitted:
        emit(full, pert)
    return SimResult(config=cfg, records=records, extras=extras,
                     snapshots=snapshots, initial_ehat_total=initial_ehat,
                     initial_weighted_norm=initial_norm)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _jsonsafe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def weighted_sum(rec: DiagnosticsRecord) -> float:
    n = rec.norms
    return n.E0 + n.E1 + n.Ebar0 + n.Ebar1


def build_report(result: SimResult) -> dict:
    recs = result.records
    extras = result.extras
    e0 = recs[0].E_total
    e_drift = max(abs(r.E_total - e0) for r in recs)
    p0 = recs[0].P_total
    p_drift = max(abs(r.P_total - p0) for r in recs)
    c0 = recs[0].crossed
    c_drift = max(abs(r.crossed - c0) for r in recs)
    cf0 = extras[0]["crossed_full"]
    cf_drift = max(abs(x["crossed_full"] - cf0) for x in extras)
    ehat0 = result.initial_ehat_total
    crossed_scale = ehat0 if ehat0 > 0 else 1.0
    cons_tol = result.config.conservation_tol
    ext0 = recs[0].exterior_R
    ext_excess = max(r.exterior_R - ext0 for r in recs)
    ext_tol = result.config.exterior_tol_factor * e0
    w0 = weighted_sum(recs[0])
    w_sup = max(weighted_sum(r) for r in recs)
    windows = [(r.t, r.window_v) for r in recs if math.isfinite(r.window_v)]
    decay0 = recs[0].decay_ratio
    decay_sup = max(r.decay_ratio for r in recs)
    report = {
        "scenario": result.config.scenario,
        "t_end": result.config.t_end,
        "n_records": len(recs),
        "E_total": {"initial": e0, "max_abs_drift": e_drift,
                    "max_rel_drift": e_drift / e0 if e0 > 0 else 0.0},
        "P_total": {"initial": p0, "max_abs_drift": p_drift,
                    "max_drift_over_E0": p_drift / e0 if e0 > 0 else 0.0},
        "crossed": {"initial": c0, "max_abs_drift": c_drift,
                    "rel_to_initial_ehat": c_drift / crossed_scale,
                    "conserved": bool(c_drift <= cons_tol * crossed_scale)},
        "crossed_conserved": bool(c_drift <= cons_tol * crossed_scale),
        "crossed_full": {"initial": cf0, "max_abs_drift": cf_drift},
        "ehat_total_initial": ehat0,
        "initial_weighted_norm": result.initial_weighted_norm,
        "exterior": {"initial": ext0, "max_excess": ext_excess,
                     "tol": ext_tol, "within": bool(ext_excess <= ext_tol)},
        "weighted": {"initial": w0, "sup": w_sup,
                     "ratio": w_sup / w0 if w0 > 0 else 1.0},
        "window": {"first": _jsonsafe(windows[0][1]) if windows else None,
                   "first_t": windows[0][0] if windows else None,
                   "final": _jsonsafe(windows[-1][1]) if windows else None,
                   "final_t": windows[-1][0] if windows else None},
        "decay_ratio": {"initial": decay0, "sup": decay_sup,
                        "ratio": decay_sup / decay0 if decay0 > 0 else 1.0},
        "sinh_bounds": {"min": min(r.sinh_min for r in recs),
                        "max": max(r.sinh_max for r in recs)},
    }
    return report


def _write_snapshot(path: Path, header: tuple, columns) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_snapshots(result: SimResult, out: Path) -> list:
    grid = result.config.grid()
    xs = grid.xs()
    written = []
    for t, full, pert in result.snapshots:
        stamp = f"{t:.4f}"
        fpath = out / f"fields_t{stamp}.csv"
        _write_snapshot(fpath, ("x", "Lambda", "Pi", "phi", "Psi"),
                        (xs, full.Lambda, full.Pi, full.phi, full.Psi))
        written.append(fpath.name)
        ppath = out / f"pert_fields_t{stamp}.csv"
        _write_snapshot(ppath, ("x", "z", "w", "s", "m"),
                        (xs, pert.z, pert.w, pert.s, pert.m))
        written.append(ppath.name)
    return written


def _select_snapshots(result: SimResult) -> None:
    every = result.config.snapshot_every
    if every <= 0:
        result.snapshots = []
        return
    picked = result.snapshots[::every]
    last = result.snapshots[-1]
    if picked and picked[-1][0] != last[0]:
        picked.append(last)
    result.snapshots = picked


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    reports = verify_all(cfg.mu, cfg.lam, cfg.epsilon)
    payload = {"orders": {}, "errors": {}, "failures": []}
    for name, rep in reports.items():
        if hasattr(rep, "order"):
            payload["orders"][name] = _jsonsafe(rep.order)
            payload["errors"][name] = list(rep.errors)
            if rep.extras:
                payload["errors"][name + "_extras"] = {
                    k: (list(v) if isinstance(v, tuple) else _jsonsafe(v))
                    for k, v in rep.extras.items()}
            if not (math.isinf(rep.order) or rep.order >= MIN_FIT_ORDER):
                payload["failures"].append(
                    f"{name}: fitted order {rep.order:.3f} below {MIN_FIT_ORDER}")
        else:
            payload["errors"][name] = rep
    if reports["epsilon_zero_max_residual"] != 0.0:
        payload["failures"].append(
            "epsilon_zero_max_residual: seedless closed form must satisfy the "
            "discrete equations exactly")
    payload["pass"] = not payload["failures"]
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify_report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0 if payload["pass"] else 1


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    ts_path = out / "timeseries.csv"
    try:
        with open(ts_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            fh.flush()

            def row_sink(row):
                fh.write(",".join(_fmt(v) for v in row) + "\n")
                fh.flush()

            result = run_simulation(cfg, collect_snapshots=True,
                                    row_sink=row_sink)
    except PcflabError as exc:
        print(f"simulation failed: {exc}")
        return 1
    _select_snapshots(result)
    snapshot_names = write_snapshots(result, out)
    report = build_report(result)
    report["snapshots"] = snapshot_names
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _sweep_worker(cfg_dict: dict) -> dict:
    cfg = RunConfig.from_dict(cfg_dict)
    row = {"epsilon": cfg.epsilon, "delta_scale": cfg.delta_scale}
    try:
        result = run_simulation(cfg)
    except PcflabError as exc:
        row.update(status=f"failed: {type(exc).__name__}", initial_weighted=math.nan,
                   sup_weighted=math.nan, sup_ratio=math.nan)
        return row
    w0 = weighted_sum(result.records[0])
    w_sup = max(weighted_sum(r) for r in result.records)
    row.update(status="ok", initial_weighted=w0, sup_weighted=w_sup,
               sup_ratio=w_sup / w0 if w0 > 0 else 1.0)
    return row


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    eps_values = cfg.sweep_epsilon or (cfg.epsilon,)
    delta_values = cfg.sweep_delta_scale or (cfg.delta_scale,)
    jobs = []
    for eps, delta in product(eps_values, delta_values):
        sub = dataclasses.replace(cfg, epsilon=eps, delta_scale=delta,
                                  sweep_epsilon=(), sweep_delta_scale=())
        sub.validate()
        jobs.append(sub.to_dict())
    workers = max(1, min(len(jobs), os.cpu_count() or 1, 4))
    if workers == 1:
        rows = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", encoding="utf-8") as fh:
        fh.write("run_id,epsilon,delta_scale,status,initial_weighted,"
                 "sup_weighted,sup_ratio\n")
        for i, row in enumerate(rows):
            fh.write(",".join([
                str(i), _fmt(row["epsilon"]), _fmt(row["delta_scale"]),
                row["status"], _fmt(row["initial_weighted"]),
                _fmt(row["sup_weighted"]), _fmt(row["sup_ratio"]),
            ]) + "\n")
            fh.flush()
    completed = sum(1 for r in rows if r["status"] == "ok")
    return 0 if completed > 0 else 1


def cmd_diagnose(cfg: RunConfig, out: Path) -> int:
    """Health check of the configured initial data, no evolution."""
    params = cfg.params()
    grid = cfg.grid()
    full, pert = build_initial_data(params, grid, cfg.z0, cfg.w0, cfg.s0,
                                    cfg.m0, cfg.delta_scale)
    e_full, p_full, crossed_full = totals(full, grid)
    ehat, phat, crossed = totals(pert, grid)
    sh_min, sh_max, ch_min, ch_max = sinh_bounds_monitor(pert, grid)
    norms = weighted_norms(pert, grid, cfg.eta)
    payload = {
        "scenario": cfg.scenario,
        "grid": {"dx": grid.dx, "n": grid.n, "dt": grid.dt,
                 "x_min": grid.x_min, "x_max": grid.x_max},
        "full_totals": {"E": e_full, "P": p_full, "crossed": crossed_full},
        "perturbation_totals": {"ehat": ehat, "phat": phat, "crossed": crossed},
        "initial_weighted_norm": weighted_initial_norm(pert, grid, cfg.eta),
        "surface_norms": {"E0": norms.E0, "E1": norms.E1,
                          "Ebar0": norms.Ebar0, "Ebar1": norms.Ebar1},
        "sinh_bounds": {"sinh_min": sh_min, "sinh_max": sh_max,
                        "cosh_min": ch_min, "cosh_max": ch_max},
        "lambda_floor_margin": sh_min,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "diagnose.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def resolve_out_dir(cli_out, cfg: RunConfig) -> Path:
    env = os.environ.get("PCF_OUT")
    if env:
        return Path(env)
    if cli_out:
        return Path(cli_out)
    if cfg.out_dir:
        return Path(cfg.out_dir)
    return Path.cwd() / f"{cfg.scenario}-out"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pcf",
        description="Soliton stability laboratory for a 1+1D chiral field model")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("verify", "simulate", "sweep", "diagnose"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="config file path or packaged preset name")
        p.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        path = resolve_config_path(args.config)
        cfg = RunConfig.load(path)
    except ConfigError as exc:
        print(f"config error: {exc}")
        return 2
    out = resolve_out_dir(args.out, cfg)
    handler = {"verify": cmd_verify, "simulate": cmd_simulate,
               "sweep": cmd_sweep, "diagnose": cmd_diagnose}[args.command]
    try:
        return handler(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}")
        return 2
    except PcflabError as exc:
        print(f"runtime failure: {exc}")
        return 1
