"""Federated multi-task support vector machines over a simulated network.

The package trains a shared model plus per-task corrections by
coordinate updates on the dual problem, and replays the training loop
inside a deterministic discrete-event simulation of a coordinator and
its participants: heterogeneous compute delays, response deadlines,
stragglers, and multiplicative update masking.
"""

__version__ = "0.1.0"

from .backend import backend_name, compiled_available, set_backend
from .core import (
    PROBLEM_CLASSIFICATION,
    PROBLEM_REGRESSION,
    PROBLEMS,
    Hyperparams,
    ModelState,
    RegressionDual,
    TaskData,
    decision_values,
    dual_objective_classification,
    dual_objective_regression,
    initial_state,
)
from .classification import alpha_update, local_sweep
from .data import (
    SyntheticSpec,
    generate_synthetic_classification,
    generate_synthetic_regression,
    load_ucihar,
    split_train_test,
    truncate_per_task,
)
from .errors import (
    BenchmarkError,
    ConfigError,
    ConvergenceError,
    DataError,
    FedsvmError,
    InvalidInputError,
    UndefinedMetricError,
)
from .federation import (
    MODE_GLOBAL,
    MODE_LOCAL,
    MODE_MTL,
    DelayModel,
    EpochRecord,
    SimConfig,
    SimTrace,
    calibrate_t_wait,
    run_global_baseline,
    run_local_baseline,
    run_simulation,
)
from .masking import MaskSpec, generate_mask, masked_update
from .metrics import balanced_accuracy, confusion, predict_labels, r_squared
from .regression import delta_alpha_update, local_sweep_regression
from .seeding import spawn_rng

__all__ = [
    "__version__",
    "BenchmarkError",
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "DelayModel",
    "EpochRecord",
    "FedsvmError",
    "Hyperparams",
    "InvalidInputError",
    "MaskSpec",
    "ModelState",
    "MODE_GLOBAL",
    "MODE_LOCAL",
    "MODE_MTL",
    "PROBLEM_CLASSIFICATION",
    "PROBLEM_REGRESSION",
    "PROBLEMS",
    "RegressionDual",
    "SimConfig",
    "SimTrace",
    "SyntheticSpec",
    "TaskData",
    "UndefinedMetricError",
    "alpha_update",
    "backend_name",
    "balanced_accuracy",
    "calibrate_t_wait",
    "compiled_available",
    "confusion",
    "decision_values",
    "delta_alpha_update",
    "dual_objective_classification",
    "dual_objective_regression",
    "generate_mask",
    "generate_synthetic_classification",
    "generate_synthetic_regression",
    "initial_state",
    "load_ucihar",
    "local_sweep",
    "local_sweep_regression",
    "masked_update",
    "predict_labels",
    "r_squared",
    "run_global_baseline",
    "run_local_baseline",
    "run_simulation",
    "set_backend",
    "spawn_rng",
    "split_train_test",
    "truncate_per_task",
]
