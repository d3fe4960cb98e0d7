"""quantfit: parameter estimation for periodic signals seen through a quantizer.

The package provides a quantile-based estimator that works directly on
code-crossing probabilities (robust to quantizer nonlinearity, and able to
estimate the noise scale and noise CDF), classical least-squares sine fits
for comparison, simulated ADC front ends, and a Monte Carlo harness with a
command-line interface.
"""

from .baseline import SineFitResult, dft_frequency_guess, sinefit3, sinefit4
from .config import (
    CalibrateSpec,
    CdfSpec,
    EstimatorSpec,
    MotivateSpec,
    QuantizerSpec,
    ScenarioConfig,
    SignalSpec,
    derive_seed,
    load_config,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    GenerationError,
    InsufficientDataError,
    InvalidEstimateError,
    NoPeakError,
    QuantfitError,
    SearchRangeError,
    SingularSystemError,
)
from .estimator import (
    DesignSystem,
    FitResult,
    ProbabilityTable,
    apply_guard,
    assemble_known_sigma,
    assemble_unknown_sigma,
    estimate_noise_cdf,
    estimate_noise_pdf,
    estimate_probabilities,
    exact_probability_table,
    gauss_cdf,
    inv_gauss_cdf,
    qbe_fit,
    recover_params,
    solve_ls,
)
from .partition import (
    AveragedBasis,
    IndexPartition,
    async_partition,
    average_basis,
    sync_partition,
)
from .quantizer import (
    InlTable,
    QuantizerModel,
    compute_inl,
    make_resistor_ladder,
    make_uniform,
    perturb_levels,
    quantize,
    read_levels,
    reconstruction_value,
    servo_loop_measure,
    write_levels,
)
from .experiments import (
    TrialOutcome,
    build_quantizer,
    calibrate_model,
    corrupt_levels,
    rmse,
    run_cdf_experiment,
    run_motivating_example,
    run_scenario,
    run_trials,
)
from .search import SearchTrace, golden_section, mse_exp, qbe_fit_unknown_freq
from .signals import (
    AcquisitionRecord,
    BasisSet,
    ParamVector,
    acquire,
    eval_sample_vector,
    example_basis,
    frac,
    get_basis,
    phase_fraction,
    read_record,
    sine_basis,
    synth,
    write_record,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionRecord",
    "AveragedBasis",
    "BasisSet",
    "CalibrateSpec",
    "CdfSpec",
    "ConfigError",
    "ConvergenceError",
    "DesignSystem",
    "EstimatorSpec",
    "FitResult",
    "GenerationError",
    "IndexPartition",
    "InlTable",
    "InsufficientDataError",
    "InvalidEstimateError",
    "MotivateSpec",
    "NoPeakError",
    "ParamVector",
    "ProbabilityTable",
    "QuantfitError",
    "QuantizerModel",
    "QuantizerSpec",
    "ScenarioConfig",
    "SearchRangeError",
    "SearchTrace",
    "SignalSpec",
    "SineFitResult",
    "SingularSystemError",
    "TrialOutcome",
    "acquire",
    "apply_guard",
    "assemble_known_sigma",
    "assemble_unknown_sigma",
    "async_partition",
    "average_basis",
    "build_quantizer",
    "calibrate_model",
    "compute_inl",
    "corrupt_levels",
    "derive_seed",
    "dft_frequency_guess",
    "estimate_noise_cdf",
    "estimate_noise_pdf",
    "estimate_probabilities",
    "eval_sample_vector",
    "exact_probability_table",
    "example_basis",
    "frac",
    "gauss_cdf",
    "get_basis",
    "golden_section",
    "inv_gauss_cdf",
    "load_config",
    "make_resistor_ladder",
    "make_uniform",
    "mse_exp",
    "perturb_levels",
    "phase_fraction",
    "qbe_fit",
    "qbe_fit_unknown_freq",
    "quantize",
    "read_levels",
    "read_record",
    "reconstruction_value",
    "recover_params",
    "rmse",
    "run_cdf_experiment",
    "run_motivating_example",
    "run_scenario",
    "run_trials",
    "sine_basis",
    "sinefit3",
    "sinefit4",
    "solve_ls",
    "servo_loop_measure",
    "sync_partition",
    "synth",
    "write_levels",
    "write_record",
]
