"""Local hidden variable analysis of finite correlation experiments."""

from .feasibility import LinearFeasibilityProblem, solve_feasibility
from .lhv import (
    BellCertificate,
    JointMeasure,
    LhvModel,
    ResourceError,
    evaluate_model,
    joint_measure_feasibility,
    lhv_feasibility,
    single_multisetting_model,
)
from .locality import ExperimentCollection, check_epr_local, check_nonsignaling, make_pr_box
from .quantum import (
    DensityOperator,
    MeasurementSetup,
    Povm,
    born_behavior,
    source_operator,
    visibility_threshold,
)
from .scenario import (
    Behavior,
    CorrelationSet,
    Scenario,
    behavior_to_correlations,
    correlations_to_behavior,
    validate_behavior,
)

__version__ = "0.1.0"

__all__ = [
    "Behavior", "BellCertificate", "CorrelationSet", "DensityOperator", "ExperimentCollection",
    "JointMeasure", "LhvModel", "LinearFeasibilityProblem", "MeasurementSetup", "Povm", "ResourceError",
    "Scenario", "behavior_to_correlations", "born_behavior", "check_epr_local", "check_nonsignaling",
    "correlations_to_behavior", "evaluate_model", "joint_measure_feasibility", "lhv_feasibility",
    "make_pr_box", "single_multisetting_model", "solve_feasibility", "source_operator",
    "validate_behavior", "visibility_threshold",
]
