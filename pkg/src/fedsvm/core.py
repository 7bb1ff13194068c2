"""Model state and objective functions for coupled multi-task SVMs.

The model pairs one shared hyperplane ``w`` with a personalization vector
``v_k`` per task; task ``k`` scores a sample ``x`` as ``(w + v_k) @ x``.
All hyperplanes are homogeneous: there is no intercept term anywhere.

Training operates on the dual problem. ``C1`` caps each dual variable,
``C2`` controls how strongly tasks are coupled (larger means more
personalization; ``C2 = inf`` pins every ``v_k`` at zero and recovers a
single shared model, which is how the pooled baseline is run).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InvalidInputError

PROBLEM_CLASSIFICATION = "classification"
PROBLEM_REGRESSION = "regression"
PROBLEMS = (PROBLEM_CLASSIFICATION, PROBLEM_REGRESSION)


@dataclass(frozen=True, eq=False)
class TaskData:
    """One participant's dataset.

    ``features`` has shape (dim, n_samples) with one column per sample.
    ``samples`` and ``sq_norms`` are derived once at construction:
    row-contiguous samples for the sweep kernels and cached squared
    sample norms.
    """

    task_id: int
    features: np.ndarray
    labels: np.ndarray
    samples: np.ndarray = field(init=False, repr=False)
    sq_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        if features.ndim != 2:
            raise InvalidInputError(
                f"task {self.task_id}: features must be 2-D (dim, n_samples), "
                f"got shape {features.shape}"
            )
        if labels.ndim != 1 or labels.shape[0] != features.shape[1]:
            raise InvalidInputError(
                f"task {self.task_id}: expected {features.shape[1]} labels, "
                f"got shape {labels.shape}"
            )
        if features.size and not np.isfinite(features).all():
            raise InvalidInputError(f"task {self.task_id}: non-finite feature values")
        if labels.size and not np.isfinite(labels).all():
            raise InvalidInputError(f"task {self.task_id}: non-finite label values")
        samples = np.ascontiguousarray(features.T)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sq_norms", np.einsum("ij,ij->i", samples, samples))

    @property
    def n_samples(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[0]

    def has_binary_labels(self) -> bool:
        return bool(np.isin(self.labels, (-1.0, 1.0)).all())


@dataclass(frozen=True)
class Hyperparams:
    """Regularization constants. ``c2 = inf`` disables personalization."""

    c1: float = 1.0
    c2: float = 1.0
    epsilon: float = 0.1

    def __post_init__(self):
        if not (self.c1 > 0 and math.isfinite(self.c1)):
            raise InvalidInputError(f"c1 must be positive and finite, got {self.c1}")
        if not self.c2 > 0:
            raise InvalidInputError(f"c2 must be positive, got {self.c2}")
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise InvalidInputError(f"epsilon must be non-negative, got {self.epsilon}")

    @property
    def inv_c2(self) -> float:
        return 0.0 if math.isinf(self.c2) else 1.0 / self.c2


@dataclass
class RegressionDual:
    """Dual state for one regression task.

    ``dalpha = alpha_minus - alpha_plus`` is maintained exactly, and at
    least one of the pair is zero per sample after every update.
    """

    alpha_minus: np.ndarray
    alpha_plus: np.ndarray
    dalpha: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "RegressionDual":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))


DualState = Union[np.ndarray, RegressionDual]


@dataclass
class ModelState:
    """Mutable training state: shared ``w`` plus per-task ``v`` and duals.

    A participant holds a state covering only its own task; the
    sequential reference and the objective evaluators use one covering
    all tasks. Dict keys are task ids.
    """

    w: np.ndarray
    v: dict[int, np.ndarray]
    alpha: dict[int, DualState]
    epoch: int = 0

    @property
    def dim(self) -> int:
        return self.w.shape[0]


def initial_state(tasks: Sequence[TaskData], problem: str) -> ModelState:
    """Zero-initialized state covering ``tasks``."""
    if problem not in PROBLEMS:
        raise InvalidInputError(f"unknown problem {problem!r}")
    if not tasks:
        raise InvalidInputError("at least one task is required")
    dim = tasks[0].dim
    ids = [t.task_id for t in tasks]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("task ids must be unique")
    for t in tasks:
        if t.dim != dim:
            raise InvalidInputError(
                f"task {t.task_id} has dim {t.dim}, expected {dim}"
            )
    v = {t.task_id: np.zeros(dim) for t in tasks}
    if problem == PROBLEM_CLASSIFICATION:
        alpha: dict[int, DualState] = {t.task_id: np.zeros(t.n_samples) for t in tasks}
    else:
        alpha = {t.task_id: RegressionDual.zeros(t.n_samples) for t in tasks}
    return ModelState(w=np.zeros(dim), v=v, alpha=alpha)


def apply_global(state: ModelState, w_global: np.ndarray) -> None:
    """Replace the shared component with a broadcast ``w``.

    Personalization vectors and dual variables are kept as they are; any
    partially swept work is simply whatever the caller already committed
    into the state.
    """
    w_global = np.asarray(w_global, dtype=np.float64)
    if w_global.shape != state.w.shape:
        raise InvalidInputError(
            f"broadcast w has shape {w_global.shape}, state has {state.w.shape}"
        )
    state.w = w_global.copy()


def decision_value(w: np.ndarray, v_k: np.ndarray, x: np.ndarray) -> float:
    """Score one sample: ``(w + v_k) @ x``."""
    w = np.asarray(w, dtype=np.float64)
    v_k = np.asarray(v_k, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if not (w.shape == v_k.shape == x.shape) or w.ndim != 1:
        raise InvalidInputError(
            f"shape mismatch: w {w.shape}, v {v_k.shape}, x {x.shape}"
        )
    return float(w @ x + v_k @ x)


def decision_values(w: np.ndarray, v_k: np.ndarray, task: TaskData) -> np.ndarray:
    """Scores for every sample of ``task``."""
    if task.dim != w.shape[0] or task.dim != v_k.shape[0]:
        raise InvalidInputError(
            f"task {task.task_id} has dim {task.dim}, model has {w.shape[0]}"
        )
    return task.samples @ (w + v_k)


def epsilon_insensitive(z, epsilon: float):
    """Tube loss max(0, |z| - epsilon); elementwise on arrays."""
    if epsilon < 0:
        raise InvalidInputError(f"epsilon must be non-negative, got {epsilon}")
    out = np.maximum(0.0, np.abs(z) - epsilon)
    return float(out) if np.isscalar(z) else out


def _task_states(state: ModelState, tasks: Sequence[TaskData]):
    for task in tasks:
        if task.task_id not in state.alpha:
            raise InvalidInputError(f"state has no dual variables for task {task.task_id}")
        yield task, state.alpha[task.task_id]


def dual_objective_classification(
    state: ModelState, tasks: Sequence[TaskData], params: Hyperparams
) -> float:
    """Dual objective, evaluated from the dual variables alone.

    0.5 ||sum_k u_k||^2 + (1 / 2 C2) sum_k ||u_k||^2 - sum alpha, where
    u_k = sum_i alpha_ik y_ik x_ik. Independent of the incrementally
    maintained ``w`` and ``v``, which makes it usable as a drift check.
    """
    dim = state.dim
    shared = np.zeros(dim)
    per_task = 0.0
    alpha_sum = 0.0
    for task, alpha in _task_states(state, tasks):
        u = task.features @ (np.asarray(alpha) * task.labels)
        shared += u
        per_task += float(u @ u)
        alpha_sum += float(np.sum(alpha))
    return float(0.5 * (shared @ shared) + 0.5 * params.inv_c2 * per_task - alpha_sum)


def dual_objective_regression(
    state: ModelState, tasks: Sequence[TaskData], params: Hyperparams
) -> float:
    """Regression dual objective in the split variables.

    0.5 ||sum_k u_k||^2 + (1 / 2 C2) sum_k ||u_k||^2 - sum dalpha * y
    + epsilon * sum (alpha_minus + alpha_plus), with u_k = X_k dalpha_k.
    """
    dim = state.dim
    shared = np.zeros(dim)
    per_task = 0.0
    linear = 0.0
    tube = 0.0
    for task, dual in _task_states(state, tasks):
        if not isinstance(dual, RegressionDual):
            raise InvalidInputError(
                f"task {task.task_id} does not carry regression dual state"
            )
        u = task.features @ dual.dalpha
        shared += u
        per_task += float(u @ u)
        linear += float(dual.dalpha @ task.labels)
        tube += float(np.sum(dual.alpha_minus) + np.sum(dual.alpha_plus))
    return float(
        0.5 * (shared @ shared)
        + 0.5 * params.inv_c2 * per_task
        - linear
        + params.epsilon * tube
    )


def _personalization_penalty(state: ModelState, tasks: Sequence[TaskData], c2: float) -> float:
    vsq = 0.0
    for task in tasks:
        v = state.v.get(task.task_id)
        if v is None:
            raise InvalidInputError(f"state has no v for task {task.task_id}")
        vsq += float(v @ v)
    if math.isinf(c2):
        return 0.0 if vsq == 0.0 else math.inf
    return 0.5 * c2 * vsq


def primal_objective_classification(
    state: ModelState, tasks: Sequence[TaskData], params: Hyperparams
) -> float:
    """Hinge-loss primal at the state's (w, v)."""
    total = 0.5 * float(state.w @ state.w)
    total += _personalization_penalty(state, tasks, params.c2)
    hinge = 0.0
    for task in tasks:
        scores = decision_values(state.w, state.v[task.task_id], task)
        hinge += float(np.sum(np.maximum(0.0, 1.0 - task.labels * scores)))
    return total + params.c1 * hinge


def primal_objective_regression(
    state: ModelState, tasks: Sequence[TaskData], params: Hyperparams
) -> float:
    """Tube-loss primal at the state's (w, v)."""
    total = 0.5 * float(state.w @ state.w)
    total += _personalization_penalty(state, tasks, params.c2)
    loss = 0.0
    for task in tasks:
        scores = decision_values(state.w, state.v[task.task_id], task)
        loss += float(np.sum(epsilon_insensitive(scores - task.labels, params.epsilon)))
    return total + params.c1 * loss
