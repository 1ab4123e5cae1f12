"""Sequential data assimilation for SIRS epidemic models.

Six weekly prediction-update filters (PF, MIF, pMCMC, EnKF, EAKF, RHF)
over a seasonally forced SIRS model, each composable with the space
re-probing (SR) step: random replacement of chosen state dimensions in
a small fraction of members after every update, which keeps the filter
probing state space through regime shifts.
"""

__version__ = "0.1.0"

from .ensembles import (
    Ensemble,
    PriorRanges,
    effective_sample_size,
    inflate,
    initialize,
    regularize,
    systematic_resample,
    weighted_mean_trajectory,
)
from .filters import (
    AssimilationRecord,
    FilterConfig,
    MifResult,
    PmcmcResult,
    eakf_update,
    enkf_update,
    mif_run,
    obs_error_variance,
    pf_assimilate,
    pmcmc_run,
    rhf_update,
    run_filter_season,
)
from .harness import (
    ForecastResult,
    compare_paired,
    peak_accuracy,
    rms_error,
    run_forecast,
    run_forecast_schedule,
    sweep,
)
from .model import ModelConfig, ModelState, observe, r0_at, simulate_week, step
from .reprobe import ReprobeConfig, ReprobeTarget, apply_reprobe, default_targets
from .truth import (
    ObservationSeries,
    TruthScenario,
    generate_observations,
    generate_truth,
)

__all__ = [
    "AssimilationRecord",
    "Ensemble",
    "FilterConfig",
    "ForecastResult",
    "MifResult",
    "ModelConfig",
    "ModelState",
    "ObservationSeries",
    "PmcmcResult",
    "PriorRanges",
    "ReprobeConfig",
    "ReprobeTarget",
    "TruthScenario",
    "apply_reprobe",
    "compare_paired",
    "default_targets",
    "eakf_update",
    "effective_sample_size",
    "enkf_update",
    "generate_observations",
    "generate_truth",
    "inflate",
    "initialize",
    "mif_run",
    "obs_error_variance",
    "observe",
    "peak_accuracy",
    "pf_assimilate",
    "pmcmc_run",
    "r0_at",
    "regularize",
    "rhf_update",
    "rms_error",
    "run_filter_season",
    "run_forecast",
    "run_forecast_schedule",
    "simulate_week",
    "step",
    "sweep",
    "systematic_resample",
    "weighted_mean_trajectory",
]
