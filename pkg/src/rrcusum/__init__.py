"""Round-robin CUSUM policies for change detection under a sampling budget."""

from .model import (
    ChangePointModel,
    LocalDistribution,
    MixtureLikelihood,
    PostChangeHypothesis,
    Unit,
    affected_units,
    mixture_llr,
    unit,
    validate_model,
)
from .gaussian import (
    CorrelationMatrix,
    GaussianLocal,
    ModelInfeasibleError,
    build_correlation_matrix,
    equicorrelation_det,
    gaussian_info_number,
    gaussian_kl,
    gaussian_llr,
    mean_change_info_number,
    sample_local,
)
from .policy import (
    Decision,
    PolicyConfig,
    PolicyState,
    RunResult,
    StepDecision,
    init_policy,
    required_observation,
    run_to_alarm,
    step,
)
from .bounds import (
    BoundsReport,
    DegenerateBoundError,
    Estimate,
    NonAsymptoticBound,
    OptimalityClass,
    UnitStatistics,
    are_upper_bound,
    bounds_report,
    classify_optimality,
    compute_unit_statistics,
    drift_post,
    drift_pre,
    info_number,
    ladder_prob_no_ascend,
    ladder_prob_no_descend,
    llr_second_moment,
    lower_bound_first_order,
    nonasymptotic_upper_bound,
    upper_bound_first_order,
)
from .montecarlo import (
    DelayEstimate,
    Ordering,
    StudyConfig,
    StudyRow,
    estimate_arl,
    estimate_delay,
    run_custom_study,
    run_study,
    worst_case_permutation,
)
from .scenarios import (
    PRESETS,
    build_preset,
    correlated_block_hypothesis,
    correlated_blocks_model,
    mean_change_hypothesis,
    mean_change_model,
    position_patterns,
    signed_pair_hypothesis,
    signed_pair_model,
)
from . import scenarios

__version__ = "0.1.0"
