"""Least-squares kernel classifiers with memory-influence terms.

Three models share one bordered linear system: the classical LSSVM, a
weighted-impact memory model (every training point influences every
decision through a pairwise influence matrix), and a maximum-impact memory
model (only the nearest training point, referenced to its class centroid,
contributes). Four influence functions (gaussian, hinge, ball, inverse)
control how memory decays with distance. The bench module reproduces the
full experiment protocol: grid search, repeated stratified trials,
label-noise sweeps, learning curves, parameter sensitivity, and timing,
with byte-reproducible reports; the cli module exposes everything as the
``gmlsq`` command.
"""

from .bench import (
    DEFAULT_CURVE_FRACTIONS,
    DEFAULT_NOISE_FRACTIONS,
    DEFAULT_POWER_GRID,
    DEFAULT_SENSITIVITY_VALUES,
    CellResult,
    ExperimentReport,
    GridSpec,
    Protocol,
    TrialResult,
    bench_suite,
    format_table,
    grid_search,
    learning_curve,
    noise_sweep,
    param_sensitivity,
    read_report,
    run_trials,
    strip_timings,
    write_report,
)
from .data import (
    Dataset,
    SplitMix64,
    SplitSpec,
    derive_seed,
    inject_label_noise,
    load_csv,
    load_from_manifest,
    load_manifest,
    round_half_up,
    stratified_split,
    subsample,
)
from .errors import (
    DimensionMismatch,
    GmlsqError,
    InsufficientClassSamples,
    IoError,
    LabelCardinalityError,
    MissingClass,
    ParseError,
    SingularMatrix,
)
from .kernels import (
    GAUSSIAN_NORM,
    CentroidPair,
    InfluenceSpec,
    KernelSpec,
    class_centroids,
    gram_matrix,
    influence_between,
    influence_eval,
    influence_matrix,
    kernel_eval,
    mimm_delta_vector,
)
from .linalg import (
    PIVOT_RTOL,
    SolveReport,
    assemble_bordered,
    residual_inf_norm,
    solve_dense,
    symmetric_square,
)
from .models import (
    FittedModel,
    ModelParams,
    Standardizer,
    decision_mimm,
    decision_scores,
    decision_wimm,
    fit_lssvm,
    fit_mimm,
    fit_wimm,
    load_model,
    predict,
    save_model,
    training_residuals,
)

__version__ = "0.1.0"

__all__ = [
    "CellResult",
    "CentroidPair",
    "Dataset",
    "DimensionMismatch",
    "ExperimentReport",
    "FittedModel",
    "GmlsqError",
    "GridSpec",
    "InfluenceSpec",
    "InsufficientClassSamples",
    "IoError",
    "KernelSpec",
    "LabelCardinalityError",
    "MissingClass",
    "ModelParams",
    "ParseError",
    "Protocol",
    "SingularMatrix",
    "SolveReport",
    "SplitMix64",
    "SplitSpec",
    "Standardizer",
    "TrialResult",
    "assemble_bordered",
    "bench_suite",
    "class_centroids",
    "decision_mimm",
    "decision_scores",
    "decision_wimm",
    "derive_seed",
    "fit_lssvm",
    "fit_mimm",
    "fit_wimm",
    "format_table",
    "gram_matrix",
    "grid_search",
    "influence_between",
    "influence_eval",
    "influence_matrix",
    "inject_label_noise",
    "kernel_eval",
    "learning_curve",
    "load_csv",
    "load_from_manifest",
    "load_manifest",
    "load_model",
    "mimm_delta_vector",
    "noise_sweep",
    "param_sensitivity",
    "predict",
    "read_report",
    "residual_inf_norm",
    "round_half_up",
    "run_trials",
    "save_model",
    "solve_dense",
    "stratified_split",
    "strip_timings",
    "subsample",
    "symmetric_square",
    "training_residuals",
    "write_report",
]
