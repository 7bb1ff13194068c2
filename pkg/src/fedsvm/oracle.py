"""Reference dual solver: projected gradient on the explicit quadratic.

This path shares no code with the coordinate-descent solvers. It builds
the full Gram matrix, takes fixed steps of 1/L with L the largest
Hessian eigenvalue, and projects onto the box. Tests treat its converged
objective as ground truth. Only suitable for small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import Hyperparams, ModelState, RegressionDual, TaskData
from .errors import ConvergenceError, InvalidInputError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_STEPS = 1_000_000


@dataclass
class OracleResult:
    """Converged dual variables keyed by task id, plus diagnostics.

    ``alpha`` values are arrays for classification and RegressionDual
    instances for regression, matching ModelState.alpha.
    """

    alpha: dict[int, np.ndarray | RegressionDual]
    objective: float
    steps: int


def _stack(tasks: Sequence[TaskData]):
    """Concatenate samples across tasks; returns (X, y, slices, same_task)."""
    if not tasks:
        raise InvalidInputError("at least one task is required")
    dim = tasks[0].dim
    for t in tasks:
        if t.dim != dim:
            raise InvalidInputError(f"task {t.task_id} has dim {t.dim}, expected {dim}")
    xs = np.concatenate([t.samples for t in tasks], axis=0) if tasks else np.empty((0, dim))
    y = np.concatenate([t.labels for t in tasks])
    slices = {}
    marks = np.empty(xs.shape[0], dtype=np.int64)
    start = 0
    for pos, t in enumerate(tasks):
        stop = start + t.n_samples
        slices[t.task_id] = slice(start, stop)
        marks[start:stop] = pos
        start = stop
    same_task = (marks[:, None] == marks[None, :]).astype(np.float64)
    return xs, y, slices, same_task


def _project_box(z: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return np.clip(z, lo, hi)


def _solve_box_qp(
    hess_mv, quad, linear: np.ndarray, lo: float, hi: float,
    step_size: float | None, tol: float, max_steps: int,
):
    """Minimize 0.5 z'Hz + q'z over [lo, hi]^n by projected gradient.

    ``hess_mv`` applies H, ``quad`` is the dense matrix used only for the
    step size when none is given. Convergence is declared when the
    gradient-mapping norm drops to ``tol``.
    """
    n = linear.shape[0]
    if n == 0:
        return np.empty(0), 0
    if step_size is None:
        lam = float(np.linalg.eigvalsh(quad)[-1])
        if lam <= 0:
            raise InvalidInputError("degenerate quadratic: no positive curvature")
        step_size = 1.0 / lam
    z = np.zeros(n)
    for step in range(1, max_steps + 1):
        grad = hess_mv(z) + linear
        z_next = _project_box(z - step_size * grad, lo, hi)
        gap = float(np.linalg.norm(z - z_next)) / step_size
        z = z_next
        if gap <= tol:
            return z, step
    raise ConvergenceError(
        f"projected gradient did not reach tol={tol} in {max_steps} steps"
    )


def solve_dual_classification(
    tasks: Sequence[TaskData],
    params: Hyperparams,
    *,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
    step_size: float | None = None,
) -> OracleResult:
    """Solve the hinge-loss dual to optimality on a small instance."""
    xs, y, slices, same_task = _stack(tasks)
    n = xs.shape[0]
    if n == 0:
        return OracleResult({t.task_id: np.zeros(0) for t in tasks}, 0.0, 0)
    gram = xs @ xs.T
    quad = np.outer(y, y) * gram * (1.0 + params.inv_c2 * same_task)
    linear = -np.ones(n)
    z, steps = _solve_box_qp(
        lambda a: quad @ a, quad, linear, 0.0, params.c1, step_size, tol, max_steps
    )
    objective = float(0.5 * z @ (quad @ z) + linear @ z)
    alpha = {tid: z[sl].copy() for tid, sl in slices.items()}
    return OracleResult(alpha, objective, steps)


def solve_dual_regression(
    tasks: Sequence[TaskData],
    params: Hyperparams,
    *,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
    step_size: float | None = None,
) -> OracleResult:
    """Solve the tube-loss dual in the split variables (minus, plus)."""
    xs, y, slices, same_task = _stack(tasks)
    n = xs.shape[0]
    if n == 0:
        empty = {t.task_id: RegressionDual.zeros(0) for t in tasks}
        return OracleResult(empty, 0.0, 0)
    gram = xs @ xs.T
    quad = gram * (1.0 + params.inv_c2 * same_task)
    # Variables z = (alpha_minus, alpha_plus); Hessian [[Q, -Q], [-Q, Q]].
    linear = np.concatenate([-y + params.epsilon, y + params.epsilon])

    def hess_mv(z):
        d = quad @ (z[:n] - z[n:])
        return np.concatenate([d, -d])

    full = np.block([[quad, -quad], [-quad, quad]])
    z, steps = _solve_box_qp(hess_mv, full, linear, 0.0, params.c1, step_size, tol, max_steps)
    dalpha = z[:n] - z[n:]
    objective = float(0.5 * dalpha @ (quad @ dalpha) - y @ dalpha + params.epsilon * np.sum(z))
    alpha: dict[int, np.ndarray | RegressionDual] = {}
    for tid, sl in slices.items():
        alpha[tid] = RegressionDual(
            alpha_minus=z[:n][sl].copy(),
            alpha_plus=z[n:][sl].copy(),
            dalpha=dalpha[sl].copy(),
        )
    return OracleResult(alpha, objective, steps)


def reconstruct_weights(
    alpha_state: Mapping[int, np.ndarray | RegressionDual] | ModelState,
    tasks: Sequence[TaskData],
    params: Hyperparams,
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Rebuild (w, v) from dual variables alone, from scratch.

    w = sum_k X_k c_k and v_k = (1/C2) X_k c_k, with c_k the signed dual
    coefficients (alpha * y for classification, dalpha for regression).
    Used to check that incrementally maintained models have not drifted.
    """
    duals = alpha_state.alpha if isinstance(alpha_state, ModelState) else alpha_state
    if not tasks:
        raise InvalidInputError("at least one task is required")
    w = np.zeros(tasks[0].dim)
    v: dict[int, np.ndarray] = {}
    for task in tasks:
        if task.task_id not in duals:
            raise InvalidInputError(f"no dual variables for task {task.task_id}")
        dual = duals[task.task_id]
        if isinstance(dual, RegressionDual):
            coef = dual.dalpha
        else:
            coef = np.asarray(dual) * task.labels
        u = task.features @ coef
        w += u
        v[task.task_id] = params.inv_c2 * u
    return w, v
