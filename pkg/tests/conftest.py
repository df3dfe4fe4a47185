"""Shared fixtures: the canonical seeded-soliton parameter set and the two
expensive reference runs reused across the acceptance tests."""

import time

import pytest

from pcflab.runner import RunConfig, build_report, resolve_config_path, run_simulation
from pcflab.solitons import BumpSpec, SolitonParams

QC = "quartic-cosine"


@pytest.fixture(scope="session")
def unit_params():
    """mu=0.5, lam=1 soliton seeded by unit bumps at the origin."""
    unit = BumpSpec(family=QC, center=0.0, half_width=1.0, amplitude=1.0)
    return SolitonParams(mu=0.5, lam=1.0, epsilon=0.01, theta=unit, sigma=unit)


def conservation_config(dx: float, n: int) -> RunConfig:
    """Frozen geometry of the conservation run: wide seed strips flanking a
    small standing perturbation, domain [-60, 60], t_end 20.

    The strip half-width (4.0) keeps the background discretization drift
    well under the energy budget; the perturbation amplitudes (0.05 scale)
    keep the cubic interaction defect inside the crossed-integral budget.
    """
    return RunConfig(
        scenario="conservation-check", mu=0.5, lam=1.0, epsilon=0.01,
        theta=BumpSpec(family=QC, center=-7.0, half_width=4.0, amplitude=1.0),
        sigma=BumpSpec(family=QC, center=7.0, half_width=4.0, amplitude=1.0),
        delta_scale=0.005,
        z0=BumpSpec(family=QC, center=0.0, half_width=3.0, amplitude=0.05),
        w0=BumpSpec(family=QC, center=0.5, half_width=2.0, amplitude=0.03),
        s0=BumpSpec(family=QC, center=-0.5, half_width=2.5, amplitude=0.04),
        m0=BumpSpec(family=QC, center=1.0, half_width=1.5, amplitude=0.02),
        x_min=-60.0, dx=dx, n=n, cfl=0.45, t_end=20.0, cadence=64,
        eta=0.25, R_exterior=10.0, v_window=0.0)


@pytest.fixture(scope="session")
def conservation_runs():
    """Coarse (dx=1/32) and refined (dx=1/64) conservation runs with their
    reports and the coarse wall time."""
    t0 = time.monotonic()
    coarse = run_simulation(conservation_config(1.0 / 32, 3841))
    wall = time.monotonic() - t0
    fine = run_simulation(conservation_config(1.0 / 64, 7681))
    return {
        "coarse": coarse,
        "coarse_report": build_report(coarse),
        "coarse_wall": wall,
        "fine_report": build_report(fine),
    }


@pytest.fixture(scope="session")
def preset_run():
    """The packaged perturbed-soliton scenario evolved to t=50."""
    cfg = RunConfig.load(resolve_config_path("perturbed-soliton"))
    result = run_simulation(cfg)
    return {"config": cfg, "result": result, "report": build_report(result)}
