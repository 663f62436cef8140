"""Weighted trigonometric (cosinor) regression for unevenly sampled
24-hour data.

Samples collected at overrepresented times are down-weighted using
normalized reciprocals of a circular kernel density estimate of the
collection-time distribution; the kernel concentration is chosen to
maximize the determinant of the weighted information matrix under
cross-validation.  Wald and F tests then screen responses for
rhythmicity.
"""

from .basis import (
    AmplitudePhase,
    amplitude_phase_to_theta,
    basis_matrix,
    eval_basis,
    theta_to_amplitude_phase,
)
from .design import (
    KappaSearchResult,
    compute_weights,
    compute_weights_cv,
    d_criterion_for_kappa,
    d_optimal_bound,
    information_matrix,
    phi_p_criterion,
    select_kappa,
    validate_weights,
)
from .errors import (
    DegenerateDesignError,
    IngestionError,
    InsufficientDataError,
    InvalidArgumentError,
    SearchFailureError,
    SingularCriterionError,
    UndefinedSlopeError,
    UndefinedStatisticError,
    WcosinorError,
)
from .inference import (
    FTestResult,
    TestReport,
    WaldResult,
    bessel_variance_oracle,
    f_test,
    screen_panel,
    wald_test,
)
from .kde import CircularKde, loo_folds, make_folds, vm_kernel
from .panel import TimeSeriesPanel, ingest_csv, read_time_csv, write_panel
from .regression import TrigFit, fit, fit_panel, fit_variance
from .simulate import (
    RunConfig,
    SimSetting,
    SweepSummary,
    TruncatedNormal,
    coefficient_of_variation,
    equispaced_times,
    generate_trial,
    make_setting,
    run_sweep,
    sample_truncated_normal,
    sample_von_mises,
)
from .special import bessel_i, chi2_sf, f_sf

__version__ = "0.1.0"

__all__ = [
    "AmplitudePhase",
    "CircularKde",
    "DegenerateDesignError",
    "FTestResult",
    "IngestionError",
    "InsufficientDataError",
    "InvalidArgumentError",
    "KappaSearchResult",
    "RunConfig",
    "SearchFailureError",
    "SimSetting",
    "SingularCriterionError",
    "SweepSummary",
    "TestReport",
    "TimeSeriesPanel",
    "TrigFit",
    "TruncatedNormal",
    "UndefinedSlopeError",
    "UndefinedStatisticError",
    "WaldResult",
    "WcosinorError",
    "amplitude_phase_to_theta",
    "basis_matrix",
    "bessel_i",
    "bessel_variance_oracle",
    "chi2_sf",
    "coefficient_of_variation",
    "compute_weights",
    "compute_weights_cv",
    "d_criterion_for_kappa",
    "d_optimal_bound",
    "equispaced_times",
    "eval_basis",
    "f_sf",
    "f_test",
    "fit",
    "fit_panel",
    "fit_variance",
    "generate_trial",
    "information_matrix",
    "ingest_csv",
    "loo_folds",
    "make_folds",
    "make_setting",
    "phi_p_criterion",
    "read_time_csv",
    "run_sweep",
    "sample_truncated_normal",
    "sample_von_mises",
    "screen_panel",
    "select_kappa",
    "theta_to_amplitude_phase",
    "validate_weights",
    "vm_kernel",
    "wald_test",
    "write_panel",
]
