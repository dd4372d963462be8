"""Asymptotic error predictions for fine-tuning overparametrized linear models
from a pretrained start, with seeded Monte Carlo verification."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateError,
    DomainError,
    EvaluationError,
    RankDeficiencyError,
    TransferLinError,
)
from .spectral import (
    JointSpectralDensity,
    SpectralDensity,
    integrate,
    parse_density,
    parse_joint_density,
    q_tail,
    q_tail_inverse,
    stieltjes,
)
from .regression import (
    RegressionEnsemble,
    RegressionPrediction,
    TransferDecision,
    compute_t,
    predict_ep,
    regression_lower_bound,
    solve_theta_regression,
    transfer_benefit,
)
from .classification import (
    ClassificationEnsemble,
    ClassificationPrediction,
    compute_alpha,
    compute_gamma,
    compute_tau2,
    invert_w0_error,
    oracle_class_error,
    predict_class_error,
    predict_class_error_scalar,
    regime,
    solve_theta_classification,
    w0_class_error,
)
from .solvers import (
    hyperbolic_mirror,
    min_norm_interpolate,
    quadratic_mirror,
    renormalize_alpha,
    ridge_offset_solve,
    sgd_run,
    smd_run,
)
from .datagen import (
    ClassificationInstanceSpec,
    EntryDistribution,
    ProblemInstance,
    RegressionInstanceSpec,
    derive_trial_seed,
    sample_classification_instance,
    sample_regression_instance,
)
from .experiments import (
    SweepTable,
    TrialReport,
    class_error_metric,
    e_gen_metric,
    run_classification_trial,
    run_regression_trial,
    run_sweep,
    universality_report,
)
from ._kernels import BACKEND as KERNEL_BACKEND
