"""Dual coordinate descent for the hinge-loss multi-task problem.

Each sweep visits a task's samples in a seeded random order and applies
the closed-form box-clamped update to one dual variable at a time.
Updates are Gauss-Seidel: every step sees the model exactly as the
previous step left it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .core import Hyperparams, ModelState, TaskData
from .errors import InvalidInputError


@dataclass
class SweepResult:
    """Outcome of one local sweep.

    ``delta_w`` is the sweep's total change to the shared part.
    ``per_sample_deltas`` lists the dual changes in update order as
    (sample index, delta); replaying them in order against the task data
    reproduces ``delta_w`` bit for bit. Regression sweeps record two
    entries per visited sample.
    """

    delta_w: np.ndarray
    per_sample_deltas: list[tuple[int, float]]


def alpha_update(
    alpha_prev: float,
    x: np.ndarray,
    y: float,
    w: np.ndarray,
    v: np.ndarray,
    params: Hyperparams,
) -> tuple[float, float]:
    """One closed-form dual step for a single sample.

    Returns (new alpha, delta). The unconstrained minimizer
    alpha_prev + (1 - y x'w - y x'v) / (||x||^2 (1 + 1/C2)) is clamped
    to [0, C1].
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if y not in (-1.0, 1.0):
        raise InvalidInputError(f"label must be -1 or +1, got {y}")
    if not 0.0 <= alpha_prev <= params.c1:
        raise InvalidInputError(f"alpha_prev {alpha_prev} outside [0, {params.c1}]")
    sq = float(x @ x)
    if sq == 0.0:
        raise InvalidInputError("zero-norm sample has no defined update")
    raw = alpha_prev + (1.0 - y * float(x @ w) - y * float(x @ v)) / (
        sq * (1.0 + params.inv_c2)
    )
    new = min(max(raw, 0.0), params.c1)
    return new, new - alpha_prev


def _check_sweep_args(state: ModelState, task: TaskData, max_samples: int | None) -> int:
    if task.task_id not in state.v or task.task_id not in state.alpha:
        raise InvalidInputError(f"state does not cover task {task.task_id}")
    if state.dim != task.dim:
        raise InvalidInputError(
            f"task {task.task_id} has dim {task.dim}, state has {state.dim}"
        )
    if task.n_samples and float(task.sq_norms.min()) == 0.0:
        idx = int(np.argmin(task.sq_norms))
        raise InvalidInputError(f"task {task.task_id}: sample {idx} has zero norm")
    if max_samples is None:
        return task.n_samples
    if max_samples < 0:
        raise InvalidInputError(f"max_samples must be non-negative, got {max_samples}")
    return min(max_samples, task.n_samples)


def local_sweep(
    state: ModelState,
    task: TaskData,
    params: Hyperparams,
    order_rng: np.random.Generator,
    max_samples: int | None = None,
) -> SweepResult:
    """Sweep ``task`` once, updating ``state`` in place.

    ``order_rng`` draws this sweep's sample permutation. ``max_samples``
    commits only a prefix of the permutation, which is how interrupted
    participants are modeled: the committed updates stay in the state,
    the rest of the pass never happens.
    """
    limit = _check_sweep_args(state, task, max_samples)
    if not task.has_binary_labels():
        raise InvalidInputError(f"task {task.task_id}: labels must be -1 or +1")
    alpha = state.alpha[task.task_id]
    if not isinstance(alpha, np.ndarray) or alpha.shape != (task.n_samples,):
        raise InvalidInputError(f"task {task.task_id}: malformed dual state")
    order = order_rng.permutation(task.n_samples)[:limit].astype(np.intp)
    deltas = np.zeros(limit)
    delta_w = np.zeros(task.dim)
    w_start = state.w.copy()
    backend.kernels().sweep_classification(
        task.samples, task.labels, task.sq_norms, alpha, w_start, state.w,
        state.v[task.task_id], float(params.c1), float(params.inv_c2),
        order, deltas, delta_w,
    )
    return SweepResult(delta_w, list(zip(order.tolist(), deltas.tolist())))
