"""Monte Carlo lab for strong laws of weighted sums of pairwise positively quadrant dependent sequences."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .core_types import Marginal, MomentOrder, SamplePath, StreamId, WeightScheme, cesaro_profile, weights
from .dependence_metrics import (
    ConditionReport,
    GFunctional,
    eval_condition_2_2,
    eval_condition_2_8,
    eval_condition_2_9,
    eval_condition_2_16,
    eval_condition_2_17_weak,
    eval_condition_3_4,
    g_functional,
)
from .exceptions import (
    ConfigError,
    DegenerateDesignError,
    DegenerateModelError,
    DomainError,
    InsufficientDataError,
    PQDLabError,
    PreconditionError,
    SingularMatrixError,
)
from .pqd_generators import RhoProfile, SequenceModel, sample_pairs, sample_path, sample_paths
from .regression_estimators import (
    DesignRule,
    EIVRegressor,
    EstimatorTrace,
    LeastSquaresRegressor,
    RegressionSpec,
    RidgeShrinkageRegressor,
    consistency_experiment,
    ridge_estimate,
    shrinkage_estimate,
)
from .slln_lab import ConvergenceReport, NormalizerKind, WeightedSumTransformer, convergence_diagnostic, counterexample_probe

__all__ = [
    "ConditionReport",
    "ConfigError",
    "ConvergenceReport",
    "DegenerateDesignError",
    "DegenerateModelError",
    "DesignRule",
    "DomainError",
    "EIVRegressor",
    "EstimatorTrace",
    "GFunctional",
    "InsufficientDataError",
    "LeastSquaresRegressor",
    "Marginal",
    "MomentOrder",
    "NormalizerKind",
    "PQDLabError",
    "PreconditionError",
    "RegressionSpec",
    "RhoProfile",
    "RidgeShrinkageRegressor",
    "SamplePath",
    "SequenceModel",
    "SingularMatrixError",
    "StreamId",
    "WeightScheme",
    "WeightedSumTransformer",
    "cesaro_profile",
    "consistency_experiment",
    "convergence_diagnostic",
    "counterexample_probe",
    "eval_condition_2_2",
    "eval_condition_2_8",
    "eval_condition_2_9",
    "eval_condition_2_16",
    "eval_condition_2_17_weak",
    "eval_condition_3_4",
    "g_functional",
    "ridge_estimate",
    "sample_pairs",
    "sample_path",
    "sample_paths",
    "shrinkage_estimate",
    "weights",
]
