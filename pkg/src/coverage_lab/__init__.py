"""Distribution-free prediction intervals with marginal, approximate-conditional,
and restricted-conditional coverage guarantees, plus oracle length bounds and a
Monte Carlo certification harness."""

from .core import (
    CoverageSpec,
    Dataset,
    PredictionInterval,
    SplitConfig,
    interval_length,
    split_dataset,
    symmetric_difference_length,
)
from .marginal import (
    ResidualSet,
    ThinningRule,
    calib_residuals,
    marginal_quantile,
    naive_approx_cc_level,
    predict_marginal,
    thinned_predict,
)
from .oracle import (
    FeatureLaw,
    LocationFamily,
    MeanFunction,
    NoiseModel,
    hardness_lower_bound,
    optimal_length,
    oracle_interval,
    oracle_noise_quantile,
    oracle_restricted_interval,
    oracle_restricted_quantile,
    sample_location_family,
    sandwich_levels,
)
from .regressors import estimate_consistency, fit_regressor, predict_mean
from .restricted import (
    EligibilityThreshold,
    LocalWidthTable,
    eligibility_threshold,
    local_width,
    predict_restricted,
    subset_count,
    subset_quantile,
)
from .set_classes import (
    Ball,
    FullSpace,
    GridPartition,
    HalfSpace,
    Interval1D,
    NearestAnchorPartition,
    PartitionCell,
    SetClass,
    contains,
    induced_subsets,
    shatters,
    vc_estimate,
)

__version__ = "0.1.0"
