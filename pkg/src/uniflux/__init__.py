"""uniflux: particle-based 1-D diffusion with flux-calibrated boundary sources."""

from .core import ForceField, ParticleState, SimParams, validate_params
from .dynamics import DynamicsKind, Event, StepOutcome, process_boundaries, step_brownian, step_langevin
from .flux import (
    DensityProbe,
    FluxEstimate,
    analytic_uf_brownian,
    analytic_uf_langevin,
    count_crossings,
    matching_identity_check,
    periodic_equilibrium_flux,
    propagator_step_check,
)
from .harness import (
    CalibrationResult,
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    build_config,
    calibrate_sources,
    emit_csv,
    parse_config_file,
    run_experiment,
    run_preset,
)
from .observables import (
    AbsorptionLedger,
    ConcentrationProfile,
    accumulate_occupancy,
    fit_linear,
    measured_net_flux,
    merge_profiles,
    normalize_profile,
)
from .sampling import EntryDistribution, RngStream, gaussian_increment, residual_cdf, residual_pdf, sample_entry
from .sources import InjectionScheduler, SourceSpec, inject_particle, schedule_injections, source_strength

__version__ = "0.1.0"
