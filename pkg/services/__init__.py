# Services module for heterodet
# Contains the signal model, detectors, the constrained GLRT, the Monte Carlo engine and result files

from .signal_model import (
    ModelError,
    build_subspaces,
    fourier_steering,
    generate_dataset,
    heterogeneous_test_cov,
    sample_complex_gaussian,
    theta_for_snr,
)
from .detectors import DetectorError, amf_known, amf_statistic, asd_statistic
from .hetero_glrt import (
    AdmmDivergenceError,
    EstimationError,
    HeteroGlrtResult,
    admm_estimate_R,
    estimate_rs_alternating,
    hetero_glrt_log_statistic,
    hetero_glrt_statistic,
)
from .experiments import (
    ExperimentError,
    MonteCarloEngine,
    auc_pair_test,
    desk_scale,
    empirical_roc,
    histogram,
    preset,
    run_paired_trials,
    run_trials,
)
from .results import ResultsError, ResultsWriter, read_roc_csv, write_outputs

__all__ = [
    "ModelError",
    "build_subspaces",
    "fourier_steering",
    "generate_dataset",
    "heterogeneous_test_cov",
    "sample_complex_gaussian",
    "theta_for_snr",
    "DetectorError",
    "amf_known",
    "amf_statistic",
    "asd_statistic",
    "AdmmDivergenceError",
    "EstimationError",
    "HeteroGlrtResult",
    "admm_estimate_R",
    "estimate_rs_alternating",
    "hetero_glrt_log_statistic",
    "hetero_glrt_statistic",
    "ExperimentError",
    "MonteCarloEngine",
    "auc_pair_test",
    "desk_scale",
    "empirical_roc",
    "histogram",
    "preset",
    "run_paired_trials",
    "run_trials",
    "ResultsError",
    "ResultsWriter",
    "read_roc_csv",
    "write_outputs",
]
