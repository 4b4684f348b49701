"""Adaptive online optimizers and the regret laboratory around them."""

from .canonical import canonical_compare, canonical_quadratic, canonical_softmax
from .config import (
    RunConfig,
    build_problem,
    build_region,
    load_config,
    parse_config,
    sweep_cells,
)
from .errors import CheckFailure, ConfigError, NumericFailure
from .optim import (
    OPTIMIZER_KINDS,
    FeasibleRegion,
    HyperParams,
    OptimizerState,
    alpha_at,
    box_region,
    init_state,
    project_weighted,
    step,
    stepsize_probe,
    validate_hyperparams,
)
from .problems import (
    Dataset,
    QuadraticProblem,
    SoftmaxL2Problem,
    finite_diff_grad,
    load_csv,
    quadratic_grad,
    quadratic_loss,
    sample_batch,
    softmax_l2_grad,
    softmax_l2_loss,
    synth_classification,
)
from .regret import (
    BoundConstants,
    Condition3Result,
    Condition4Result,
    ConditionReport,
    GrowthFit,
    RegretReport,
    TrajectoryTrace,
    best_in_hindsight,
    check_condition3,
    check_condition4,
    check_gamma_psd,
    checkpoint_grid,
    compute_regret,
    condition_report,
    fit_growth,
    measure_constants,
    region_scenarios,
    region_stepsize_table,
    run_online,
    theoretical_bound,
)
from .svgchart import write_compare_svg
from .traceio import read_trace, write_compare_csv, write_trace

__version__ = "0.1.0"

__all__ = [
    "BoundConstants",
    "CheckFailure",
    "Condition3Result",
    "Condition4Result",
    "ConditionReport",
    "ConfigError",
    "Dataset",
    "FeasibleRegion",
    "GrowthFit",
    "HyperParams",
    "NumericFailure",
    "OPTIMIZER_KINDS",
    "OptimizerState",
    "QuadraticProblem",
    "RegretReport",
    "RunConfig",
    "SoftmaxL2Problem",
    "TrajectoryTrace",
    "alpha_at",
    "best_in_hindsight",
    "box_region",
    "build_problem",
    "build_region",
    "canonical_compare",
    "canonical_quadratic",
    "canonical_softmax",
    "check_condition3",
    "check_condition4",
    "check_gamma_psd",
    "checkpoint_grid",
    "compute_regret",
    "condition_report",
    "finite_diff_grad",
    "fit_growth",
    "init_state",
    "load_config",
    "load_csv",
    "measure_constants",
    "parse_config",
    "project_weighted",
    "quadratic_grad",
    "quadratic_loss",
    "read_trace",
    "region_scenarios",
    "region_stepsize_table",
    "run_online",
    "sample_batch",
    "softmax_l2_grad",
    "softmax_l2_loss",
    "step",
    "stepsize_probe",
    "sweep_cells",
    "synth_classification",
    "theoretical_bound",
    "validate_hyperparams",
    "write_compare_csv",
    "write_compare_svg",
    "write_trace",
]
