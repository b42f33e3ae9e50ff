"""measchain: SCADA and PMU measurement-chain simulation.

Synthesizes realistic measurement streams by propagating ground-truth
phasor trajectories through explicit per-component error models:
instrument transformers, control cables and burdens, IEDs, communication
networks, and the PMU phasor-estimation signal chain.
"""

__version__ = "0.1.0"

from .comm_network import (
    CnErrorConfig,
    DelaySchedule,
    HistorySeries,
    apply_cn,
    build_delay_schedule,
    schedule_from_latencies,
    scheme1_errors,
    scheme2_errors,
)
from .distributions import (
    FitBudgetExhausted,
    FitTarget,
    GmmParams,
    LmmParams,
    fit_gmm_random_search,
    gmm_total_moments,
    kld_gmm_vs_gaussian,
    sample_exponential,
    sample_gmm,
    sample_lmm,
)
from .pmu_chain import (
    FilterSpec,
    PmuFrame,
    TimingErrorModel,
    estimate_phasor,
    estimate_phasor_series,
    generate_gps_events,
    gps_loss_phase_error,
    make_filter,
    off_nominal_error_frequency,
    run_pmu_chain,
    sampling_time_phase_error,
    synth_waveform,
)
from .pipeline_io import RunConfig, load_config, load_series, run_pmu, run_scada
from .scada_chain import (
    AccuracyRegion,
    GaussianSpec,
    StageNoiseConfig,
    SystematicError,
    TruthRecord,
    apply_cable_burden,
    apply_transformer,
    default_accuracy_region,
    ied_compute,
    sample_systematic_error,
    sample_systematic_points,
)

__all__ = [
    "AccuracyRegion",
    "CnErrorConfig",
    "DelaySchedule",
    "FilterSpec",
    "FitBudgetExhausted",
    "FitTarget",
    "GaussianSpec",
    "GmmParams",
    "HistorySeries",
    "LmmParams",
    "PmuFrame",
    "RunConfig",
    "StageNoiseConfig",
    "SystematicError",
    "TimingErrorModel",
    "TruthRecord",
    "apply_cable_burden",
    "apply_cn",
    "apply_transformer",
    "build_delay_schedule",
    "default_accuracy_region",
    "estimate_phasor",
    "estimate_phasor_series",
    "fit_gmm_random_search",
    "generate_gps_events",
    "gmm_total_moments",
    "gps_loss_phase_error",
    "ied_compute",
    "kld_gmm_vs_gaussian",
    "load_config",
    "load_series",
    "make_filter",
    "off_nominal_error_frequency",
    "run_pmu",
    "run_pmu_chain",
    "run_scada",
    "sample_exponential",
    "sample_gmm",
    "sample_lmm",
    "sample_systematic_error",
    "sample_systematic_points",
    "sampling_time_phase_error",
    "schedule_from_latencies",
    "scheme1_errors",
    "scheme2_errors",
    "synth_waveform",
]
