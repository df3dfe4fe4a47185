"""Simulation and verification laboratory for soliton stability in a 1+1D
principal chiral field model: closed-form backgrounds, finite-difference
evolution of full and perturbed fields, and the numerical probes behind the
stability diagnostics."""

from .diagnostics import (
    CutoffSpec,
    DensityFields,
    DiagnosticsRecord,
    FluxAccumulator,
    VirialCutoffs,
    VirialReport,
    WeightedNorms,
    densities_full,
    densities_perturbation,
    exterior_energy,
    phi_weight,
    pointwise_decay_monitor,
    sinh_bounds_monitor,
    smoothstep,
    totals,
    virial_report,
    weighted_initial_norm,
    weighted_norms,
    window_energy,
    window_width,
)
from .dynamics import (
    FullState,
    Grid1D,
    NullDerivatives,
    PerturbationState,
    build_initial_data,
    evolve,
    null_derivatives,
    q0,
    rhs_full,
    rhs_perturbation,
    step,
    to_perturbation,
    zero_perturbation,
)
from .errors import (
    BlowupDetected,
    BoundaryContamination,
    CoefficientSingularity,
    ConfigError,
    DomainError,
    InsufficientHistory,
    NumericalDomainError,
    PcflabError,
    SingularDenominator,
    SupportError,
    WindowUndefined,
)
from .runner import RunConfig, main, run_simulation
from .solitons import (
    BumpSpec,
    DerivedConstants,
    SolitonParams,
    SolitonSample,
    asymptotic_levels,
    bump_eval,
    derive_constants,
    eval_background,
    eval_soliton,
)
from .verify import (
    ConvergenceReport,
    derivative_formula_check,
    fit_order,
    free_wave_oracle,
    mode_consistency,
    soliton_pde_residual,
    verify_all,
)

__version__ = "0.1.0"
