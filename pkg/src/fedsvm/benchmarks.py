"""Timing of sweep kernels and fitting of the compute-cost model.

Per-epoch cost is modeled as c_nd*n*d + c_n*n + c_d*d + c_0, the same
shape the delay model uses. `calibrate_delay_model` fits it from real
timings (or an injected timer, for tests) so simulated delays can match
the machine they were calibrated on.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import backend
from .classification import local_sweep
from .core import (
    PROBLEM_CLASSIFICATION,
    PROBLEMS,
    Hyperparams,
    TaskData,
    initial_state,
)
from .errors import BenchmarkError, InvalidInputError
from .federation import DelayModel
from .regression import local_sweep_regression

DEFAULT_NS = (200, 400, 800, 1600)
DEFAULT_DS = (8, 16, 32, 64)

# Acceptance thresholds for `fedsvm bench`.
MIN_FIT_R2 = 0.95
RATIO_BOUNDS = (1.5, 2.5)


@dataclass(frozen=True)
class BenchSample:
    n: int
    d: int
    seconds: float


@dataclass(frozen=True)
class CostFit:
    c_nd: float
    c_n: float
    c_d: float
    c_0: float
    r_squared: float

    def mean(self, n: int, d: int) -> float:
        return self.c_nd * n * d + self.c_n * n + self.c_d * d + self.c_0

    def delay_model(self, sigma_ratio: float) -> DelayModel:
        return DelayModel(self.c_nd, self.c_n, self.c_d, self.c_0, sigma_ratio)


def _timing_task(problem: str, n: int, d: int, seed: int) -> TaskData:
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((d, n))
    if problem == PROBLEM_CLASSIFICATION:
        labels = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    else:
        labels = rng.standard_normal(n)
    return TaskData(task_id=0, features=features, labels=labels)


def time_epoch(problem: str, n: int, d: int, *, reps: int = 5, seed: int = 0) -> float:
    """Seconds for one full sweep at size (n, d); min over ``reps``.

    Sweep cost is data independent (every sample runs the same
    operations), so timing a fixed state is representative.
    """
    if problem not in PROBLEMS:
        raise InvalidInputError(f"unknown problem {problem!r}")
    if reps < 1:
        raise InvalidInputError(f"reps must be positive, got {reps}")
    task = _timing_task(problem, n, d, seed)
    state = initial_state([task], problem)
    params = Hyperparams(c1=1.0, c2=1.0, epsilon=0.1)
    sweep = local_sweep if problem == PROBLEM_CLASSIFICATION else local_sweep_regression
    rng = np.random.default_rng(seed + 1)
    sweep(state, task, params, rng)  # warmup
    best = math.inf
    for _ in range(reps):
        start = time.perf_counter()
        sweep(state, task, params, rng)
        best = min(best, time.perf_counter() - start)
    return best


def measure_grid(
    problem: str,
    ns: Sequence[int] = DEFAULT_NS,
    ds: Sequence[int] = DEFAULT_DS,
    *,
    reps: int = 5,
    seed: int = 0,
    timer: Callable[[int, int], float] | None = None,
) -> list[BenchSample]:
    """Measure per-epoch time over the (n, d) grid."""
    if timer is None:
        timer = lambda n, d: time_epoch(problem, n, d, reps=reps, seed=seed)
    return [BenchSample(n, d, float(timer(n, d))) for n in ns for d in ds]


def _nnls(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Least squares with coefficients clipped to be non-negative.

    Drops the most negative coefficient and refits until feasible;
    adequate for this well-conditioned 4-term model.
    """
    cols = list(range(design.shape[1]))
    coef = np.zeros(design.shape[1])
    while cols:
        sol, *_ = np.linalg.lstsq(design[:, cols], target, rcond=None)
        if (sol >= 0).all():
            coef[list(cols)] = sol
            return coef
        del cols[int(np.argmin(sol))]
    return coef


def fit_cost_model(samples: Sequence[BenchSample]) -> CostFit:
    """Fit the 4-term cost model to measured times."""
    if len(samples) < 4:
        raise InvalidInputError("need at least 4 samples to fit the cost model")
    design = np.array([[s.n * s.d, s.n, s.d, 1.0] for s in samples])
    target = np.array([s.seconds for s in samples])
    coef = _nnls(design, target)
    fitted = design @ coef
    ss_res = float(np.sum((target - fitted) ** 2))
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return CostFit(float(coef[0]), float(coef[1]), float(coef[2]), float(coef[3]), r2)


def calibrate_delay_model(
    problem: str,
    ns: Sequence[int] = DEFAULT_NS,
    ds: Sequence[int] = DEFAULT_DS,
    *,
    reps: int = 5,
    seed: int = 0,
    timer: Callable[[int, int], float] | None = None,
) -> tuple[DelayModel, CostFit]:
    """Fit a DelayModel from timings; sigma_ratio from relative residuals."""
    samples = measure_grid(problem, ns, ds, reps=reps, seed=seed, timer=timer)
    fit = fit_cost_model(samples)
    rel = []
    for s in samples:
        mu = fit.mean(s.n, s.d)
        if mu > 0:
            rel.append((s.seconds - mu) / mu)
    sigma_ratio = float(np.sqrt(np.mean(np.square(rel)))) if rel else 0.0
    return fit.delay_model(sigma_ratio), fit


def epoch_time_ratio(
    ns: Sequence[int] = DEFAULT_NS,
    ds: Sequence[int] = DEFAULT_DS,
    *,
    reps: int = 5,
    seed: int = 0,
) -> float:
    """Median over the grid of regression / classification epoch time."""
    ratios = []
    for n in ns:
        for d in ds:
            cls = time_epoch(PROBLEM_CLASSIFICATION, n, d, reps=reps, seed=seed)
            reg = time_epoch("regression", n, d, reps=reps, seed=seed)
            if cls <= 0:
                raise BenchmarkError(f"degenerate timing at n={n}, d={d}")
            ratios.append(reg / cls)
    return float(np.median(ratios))


def compare_backends(
    problem: str, n: int = 800, d: int = 32, *, reps: int = 5, seed: int = 0
) -> dict[str, float]:
    """Per-epoch seconds for each available kernel backend."""
    names = ["python"] + (["compiled"] if backend.compiled_available() else [])
    previous = backend.backend_name()
    out = {}
    try:
        for name in names:
            backend.set_backend(name)
            out[name] = time_epoch(problem, n, d, reps=reps, seed=seed)
    finally:
        backend.set_backend(previous)
    return out
