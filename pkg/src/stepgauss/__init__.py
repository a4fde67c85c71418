"""Model-free stepwise covariate selection against Gaussian-noise benchmarks.

A covariate is included only if it reduces the residual sum more than the
best of the remaining count of independent Gaussian noise columns
plausibly would; for least squares that probability is exact (a powered
beta CDF), and robust, nonlinear, and Kullback-Leibler variants use a
chi-squared approximation.  A simulation harness reproduces the headline
power/FWER, false-discovery, coverage, and graph-recovery numbers at desk
scale.
"""

from .engine import (
    Dataset,
    ExhaustedError,
    RankDeficiencyError,
    SweepState,
    make_dataset,
    standardize,
    svd_precondition,
)
from .glm import (
    IDENTITY,
    LOGISTIC,
    KLFit,
    LinkSpec,
    NLFit,
    kl_fit,
    kl_select,
    kl_step_p_value,
    kl_value,
    nl_fit,
    nl_select,
    nl_step_p_value,
)
from .graph import GraphResult, build_graph
from .io import TableSource, load, load_report, load_trace, save_report, save_trace
from .lsq import (
    ConfidenceIntervals,
    Precondition,
    Rule,
    SelectionTrace,
    SelectorConfig,
    Step,
    StopReason,
    confidence_intervals,
    relevance_scan,
    run_selector,
    select,
    select_pre1,
    select_pre2,
    step_p_value,
    stop_threshold_asymptotic,
    stop_threshold_exact,
)
from .rng import gaussian, rng_for, uniform_open
from .robust import (
    HuberParams,
    MFit,
    PerfectFitSignal,
    RobustScale,
    fisher_consistency,
    huber_psi,
    huber_psi_prime,
    huber_rho,
    initial_scale,
    m_fit,
    robust_select,
    robust_step_p_value,
    scale_update,
)
from .simulate import (
    AR1,
    BernoulliLogit,
    EquiCorr,
    FixedCoef,
    Gauss,
    Independent,
    LogitSum,
    MetricsReport,
    ScenarioSpec,
    UniformCoef,
    builtin_scenario,
    classify,
    consistency_check,
    cv_boost,
    fdr_bound_check,
    generate,
    outlier_flags,
    run_study,
    run_study_sweep,
)
from .special import (
    ConvergenceError,
    beta_cdf,
    beta_isf,
    beta_quantile,
    beta_sf,
    chisq1_cdf,
    chisq1_sf,
    normal_cdf,
    normal_quantile,
)

__version__ = "0.1.0"
