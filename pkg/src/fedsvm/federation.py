"""Discrete-event simulation of coordinator/participant training.

Virtual time, not wall clock: every epoch the coordinator broadcasts the
shared ``w``, participants sweep their local data, and whoever finishes
within the wait window gets its masked update summed into the next
``w``. Slower participants are interrupted by the next broadcast; the
per-sample updates they already committed stay in their local state,
the rest of the pass never happens, and their update is not delivered.

Compute delays are sampled from a fitted linear cost model and never
depend on model values, so runs are reproducible and the responder set
can only grow when the wait window grows.

Modes: ``mtl`` is the federated protocol; ``local`` trains each task
alone with the same machinery; ``global`` pools all data on one machine
with personalization disabled (C2 = inf) and capacity equal to the sum
of the participants'.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import classification, regression
from .core import (
    PROBLEM_CLASSIFICATION,
    PROBLEMS,
    Hyperparams,
    ModelState,
    TaskData,
    apply_global,
    decision_values,
    dual_objective_classification,
    dual_objective_regression,
    initial_state,
)
from .errors import InvalidInputError
from .masking import MaskSpec, generate_mask, masked_update
from .metrics import balanced_accuracy, predict_labels, r_squared
from .seeding import DOMAIN_DELAY, DOMAIN_MASK, DOMAIN_ORDER, DOMAIN_TWAIT, spawn_rng

MODE_MTL = "mtl"
MODE_LOCAL = "local"
MODE_GLOBAL = "global"
MODES = (MODE_MTL, MODE_LOCAL, MODE_GLOBAL)

POOLED_TASK_ID = 0

# Consecutive epochs with a small aggregate update needed to stop early.
STOP_PATIENCE = 3

# Floor applied to Gaussian delay draws, as a fraction of the mean.
DELAY_FLOOR_RATIO = 1e-3


@dataclass(frozen=True)
class DelayModel:
    """Linear per-epoch compute cost: c_nd*n*d + c_n*n + c_d*d + c_0.

    The mean is in virtual seconds for a unit-capacity machine;
    ``sigma_ratio`` is the relative standard deviation of the Gaussian
    jitter around it. Defaults come from `fedsvm calibrate-delays` run
    against the compiled kernels on the development machine.
    """

    c_nd: float
    c_n: float
    c_d: float
    c_0: float
    sigma_ratio: float = 0.0

    def __post_init__(self):
        for name in ("c_nd", "c_n", "c_d", "c_0", "sigma_ratio"):
            value = getattr(self, name)
            if value < 0 or not math.isfinite(value):
                raise InvalidInputError(f"{name} must be finite and non-negative, got {value}")

    def mean(self, n: int, d: int) -> float:
        """Expected sweep time for n samples of dimension d."""
        if n < 0 or d < 1:
            raise InvalidInputError(f"bad problem size n={n}, d={d}")
        mu = self.c_nd * n * d + self.c_n * n + self.c_d * d + self.c_0
        if mu <= 0:
            raise InvalidInputError(f"delay model mean is not positive at n={n}, d={d}")
        return mu


# Means fitted with `fedsvm calibrate-delays` against the compiled
# kernels (fit R^2 0.987); the wall clock on that box carried almost no
# jitter, so sigma_ratio stays at 0.2 as a deliberately pessimistic
# spread for simulated fleets. Refit on new hardware via the CLI.
DEFAULT_DELAY_MODEL = DelayModel(c_nd=1.45e-9, c_n=6.3e-8, c_d=0.0, c_0=1.2e-5, sigma_ratio=0.2)


def sample_compute_delay(
    model: DelayModel, n: int, d: int, hw_factor: float, rng: np.random.Generator
) -> float:
    """One delay draw: truncated Gaussian around the model mean, then
    divided by the machine's capacity factor.

    Truncation (at mean / 1000) happens before the capacity division, so
    doubling hw_factor exactly halves every draw.
    """
    if not (hw_factor > 0 and math.isfinite(hw_factor)):
        raise InvalidInputError(f"hw_factor must be positive and finite, got {hw_factor}")
    mu = model.mean(n, d)
    draw = float(rng.normal(mu, model.sigma_ratio * mu))
    if draw < mu * DELAY_FLOOR_RATIO:
        draw = mu * DELAY_FLOOR_RATIO
    return draw / hw_factor


@dataclass(frozen=True)
class SimConfig:
    """Everything a simulated run needs besides the data.

    ``t_wait`` may be ``math.inf``, meaning the coordinator waits for
    every participant and the epoch closes at the last arrival.
    ``hw_factors`` maps task id to capacity; missing ids default to 1.
    """

    problem: str
    params: Hyperparams
    delay_model: DelayModel = DEFAULT_DELAY_MODEL
    hw_factors: Mapping[int, float] | None = None
    t_wait: float = math.inf
    sum_time: float = 0.0
    max_epochs: int = 100
    stop_tolerance: float = 0.0
    mask: MaskSpec = field(default_factory=MaskSpec)
    master_seed: int = 0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise InvalidInputError(f"unknown problem {self.problem!r}")
        if not self.t_wait > 0:
            raise InvalidInputError(f"t_wait must be positive, got {self.t_wait}")
        if not (self.sum_time >= 0 and math.isfinite(self.sum_time)):
            raise InvalidInputError(f"sum_time must be finite and non-negative, got {self.sum_time}")
        if self.max_epochs < 1:
            raise InvalidInputError(f"max_epochs must be at least 1, got {self.max_epochs}")
        if self.stop_tolerance < 0:
            raise InvalidInputError(f"stop_tolerance must be non-negative, got {self.stop_tolerance}")

    def hw_factor(self, task_id: int) -> float:
        if self.hw_factors is None:
            return 1.0
        return float(self.hw_factors.get(task_id, 1.0))


@dataclass(frozen=True)
class EpochRecord:
    """One epoch of a trace."""

    epoch: int
    time: float
    responders: tuple[int, ...]
    num_participants: int
    update_norm: float
    dual_objective: float
    task_metrics: dict[int, float]
    w_digest: str

    @property
    def responder_fraction(self) -> float:
        return len(self.responders) / self.num_participants

    def metric_mean(self) -> float | None:
        if not self.task_metrics:
            return None
        return float(np.mean(list(self.task_metrics.values())))


@dataclass
class SimTrace:
    """Full record of one simulated run."""

    problem: str
    mode: str
    metric_name: str
    num_participants: int
    records: list[EpochRecord]
    final_w: np.ndarray
    final_v: dict[int, np.ndarray]
    stopped_early: bool
    # local mode only: each task's full standalone model
    local_states: dict[int, ModelState] | None = None

    @property
    def final_record(self) -> EpochRecord:
        return self.records[-1]

    def metric_means(self) -> np.ndarray:
        return np.array([r.metric_mean() for r in self.records], dtype=np.float64)

    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records])


def sum_updates(updates: Sequence[np.ndarray], dim: int) -> np.ndarray:
    """Sum delivered updates in participant order."""
    acc = np.zeros(dim)
    for u in updates:
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (dim,):
            raise InvalidInputError(f"update has shape {u.shape}, expected ({dim},)")
        acc += u
    return acc


def aggregate(w: np.ndarray, updates: Sequence[np.ndarray]) -> np.ndarray:
    """Next shared model: w plus the sum of delivered updates."""
    w = np.asarray(w, dtype=np.float64)
    return w + sum_updates(updates, w.shape[0])


def pool_tasks(tasks: Sequence[TaskData], task_id: int = POOLED_TASK_ID) -> TaskData:
    """Concatenate all tasks into one, in task order."""
    if not tasks:
        raise InvalidInputError("at least one task is required")
    features = np.concatenate([t.features for t in tasks], axis=1)
    labels = np.concatenate([t.labels for t in tasks])
    return TaskData(task_id=task_id, features=features, labels=labels)


def calibrate_t_wait(
    delay_model: DelayModel,
    tasks: Sequence[TaskData],
    hw_factors: Mapping[int, float] | None,
    target_fraction: float,
    master_seed: int,
    num_samples: int = 10_000,
) -> float:
    """Empirical delay quantile hit by ``target_fraction`` of draws.

    Draws cycle through the participants so each contributes equally,
    using a calibration-only stream off the master seed.
    """
    if not 0.0 < target_fraction <= 1.0:
        raise InvalidInputError(f"target_fraction must be in (0, 1], got {target_fraction}")
    if not tasks:
        raise InvalidInputError("at least one task is required")
    if num_samples < 1:
        raise InvalidInputError(f"num_samples must be positive, got {num_samples}")
    hw = dict(hw_factors or {})
    rng = spawn_rng(master_seed, DOMAIN_TWAIT)
    draws = np.empty(num_samples)
    for s in range(num_samples):
        task = tasks[s % len(tasks)]
        factor = float(hw.get(task.task_id, 1.0))
        draws[s] = sample_compute_delay(delay_model, task.n_samples, task.dim, factor, rng)
    return float(np.quantile(draws, target_fraction))


def _metric_name(problem: str) -> str:
    return "balanced_accuracy" if problem == PROBLEM_CLASSIFICATION else "r_squared"


def _evaluate(problem: str, w: np.ndarray, v_k: np.ndarray, test_task: TaskData) -> float:
    scores = decision_values(w, v_k, test_task)
    if problem == PROBLEM_CLASSIFICATION:
        return balanced_accuracy(test_task.labels, predict_labels(scores))
    return r_squared(test_task.labels, scores)


def _dual_objective(problem: str, state: ModelState, tasks: Sequence[TaskData], params: Hyperparams) -> float:
    if problem == PROBLEM_CLASSIFICATION:
        return dual_objective_classification(state, tasks, params)
    return dual_objective_regression(state, tasks, params)


def _sweep_fn(problem: str):
    if problem == PROBLEM_CLASSIFICATION:
        return classification.local_sweep
    return regression.local_sweep_regression


def _digest(w: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(w).tobytes()).hexdigest()[:16]


def _check_tasks(
    train_tasks: Sequence[TaskData], test_tasks: Sequence[TaskData] | None
) -> dict[int, TaskData]:
    if not train_tasks:
        raise InvalidInputError("at least one training task is required")
    ids = [t.task_id for t in train_tasks]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("task ids must be unique")
    for t in train_tasks:
        if t.task_id < 0:
            raise InvalidInputError(f"task ids must be non-negative, got {t.task_id}")
        if t.n_samples == 0:
            raise InvalidInputError(f"task {t.task_id} has no samples")
    test_map: dict[int, TaskData] = {}
    if test_tasks:
        for t in test_tasks:
            if t.task_id not in set(ids):
                raise InvalidInputError(f"test task {t.task_id} has no training task")
            if t.task_id in test_map:
                raise InvalidInputError(f"duplicate test task {t.task_id}")
            test_map[t.task_id] = t
    return test_map


def run_simulation(
    train_tasks: Sequence[TaskData],
    config: SimConfig,
    test_tasks: Sequence[TaskData] | None = None,
) -> SimTrace:
    """Run the federated protocol and return its trace.

    Per epoch and participant, streams are spawned as
    (domain, epoch, task_id) off the master seed: sweep order, mask, and
    delay are all independent draws, and a straggler that restarts next
    epoch gets fresh ones.
    """
    test_map = _check_tasks(train_tasks, test_tasks)
    problem = config.problem
    sweep = _sweep_fn(problem)
    dim = train_tasks[0].dim
    parts = {t.task_id: initial_state([t], problem) for t in train_tasks}
    w_coord = np.zeros(dim)
    clock = 0.0
    records: list[EpochRecord] = []
    small_epochs = 0
    stopped_early = False
    infinite_wait = math.isinf(config.t_wait)
    for epoch in range(config.max_epochs):
        responders: list[int] = []
        updates: list[np.ndarray] = []
        last_arrival = 0.0
        window = config.t_wait + config.sum_time
        for task in train_tasks:
            tid = task.task_id
            part = parts[tid]
            apply_global(part, w_coord)
            delay = sample_compute_delay(
                config.delay_model, task.n_samples, dim, config.hw_factor(tid),
                spawn_rng(config.master_seed, DOMAIN_DELAY, epoch, tid),
            )
            if infinite_wait or delay <= window:
                commit = task.n_samples
            else:
                commit = int(math.floor(task.n_samples * window / delay))
            result = sweep(
                part, task, config.params,
                spawn_rng(config.master_seed, DOMAIN_ORDER, epoch, tid),
                max_samples=commit,
            )
            mask = generate_mask(
                config.mask, task.n_samples,
                spawn_rng(config.master_seed, DOMAIN_MASK, epoch, tid),
            )
            if delay <= config.t_wait:
                responders.append(tid)
                updates.append(masked_update(result.per_sample_deltas, task, mask, problem))
            if delay > last_arrival:
                last_arrival = delay
        acc = sum_updates(updates, dim)
        w_coord = w_coord + acc
        clock += (last_arrival if infinite_wait else config.t_wait) + config.sum_time
        update_norm = float(np.linalg.norm(acc))
        view = ModelState(
            w=w_coord,
            v={t.task_id: parts[t.task_id].v[t.task_id] for t in train_tasks},
            alpha={t.task_id: parts[t.task_id].alpha[t.task_id] for t in train_tasks},
        )
        task_metrics = {
            tid: _evaluate(problem, w_coord, parts[tid].v[tid], test)
            for tid, test in test_map.items()
        }
        records.append(
            EpochRecord(
                epoch=epoch,
                time=clock,
                responders=tuple(responders),
                num_participants=len(train_tasks),
                update_norm=update_norm,
                dual_objective=_dual_objective(problem, view, train_tasks, config.params),
                task_metrics=task_metrics,
                w_digest=_digest(w_coord),
            )
        )
        small_epochs = small_epochs + 1 if update_norm <= config.stop_tolerance else 0
        if small_epochs >= STOP_PATIENCE:
            stopped_early = True
            break
    final_v = {t.task_id: parts[t.task_id].v[t.task_id].copy() for t in train_tasks}
    return SimTrace(
        problem=problem,
        mode=MODE_MTL,
        metric_name=_metric_name(problem),
        num_participants=len(train_tasks),
        records=records,
        final_w=w_coord.copy(),
        final_v=final_v,
        stopped_early=stopped_early,
    )


def run_local_baseline(
    train_tasks: Sequence[TaskData],
    config: SimConfig,
    test_tasks: Sequence[TaskData] | None = None,
) -> SimTrace:
    """Each task trains alone: same solver, no sharing, no masking.

    Equivalent to the federated run restricted to one participant with
    an unbounded wait window, which is what pins its semantics. Machines
    run in parallel, so the trace clock is the slowest cumulative one.
    """
    test_map = _check_tasks(train_tasks, test_tasks)
    problem = config.problem
    sweep = _sweep_fn(problem)
    dim = train_tasks[0].dim
    parts = {t.task_id: initial_state([t], problem) for t in train_tasks}
    clocks = {t.task_id: 0.0 for t in train_tasks}
    records: list[EpochRecord] = []
    small_epochs = 0
    stopped_early = False
    for epoch in range(config.max_epochs):
        sq_norm_sum = 0.0
        for task in train_tasks:
            tid = task.task_id
            delay = sample_compute_delay(
                config.delay_model, task.n_samples, dim, config.hw_factor(tid),
                spawn_rng(config.master_seed, DOMAIN_DELAY, epoch, tid),
            )
            result = sweep(
                parts[tid], task, config.params,
                spawn_rng(config.master_seed, DOMAIN_ORDER, epoch, tid),
            )
            clocks[tid] += delay
            sq_norm_sum += float(result.delta_w @ result.delta_w)
        update_norm = math.sqrt(sq_norm_sum)
        dual = sum(
            _dual_objective(problem, parts[t.task_id], [t], config.params)
            for t in train_tasks
        )
        task_metrics = {
            tid: _evaluate(problem, parts[tid].w, parts[tid].v[tid], test)
            for tid, test in test_map.items()
        }
        stacked = np.concatenate([parts[t.task_id].w for t in train_tasks])
        records.append(
            EpochRecord(
                epoch=epoch,
                time=max(clocks.values()),
                responders=tuple(t.task_id for t in train_tasks),
                num_participants=len(train_tasks),
                update_norm=update_norm,
                dual_objective=dual,
                task_metrics=task_metrics,
                w_digest=_digest(stacked),
            )
        )
        small_epochs = small_epochs + 1 if update_norm <= config.stop_tolerance else 0
        if small_epochs >= STOP_PATIENCE:
            stopped_early = True
            break
    # No shared w exists; expose the mean of the per-task ones for reporting.
    final_w = np.mean([parts[t.task_id].w for t in train_tasks], axis=0)
    final_v = {t.task_id: parts[t.task_id].v[t.task_id].copy() for t in train_tasks}
    return SimTrace(
        problem=problem,
        mode=MODE_LOCAL,
        metric_name=_metric_name(problem),
        num_participants=len(train_tasks),
        records=records,
        final_w=final_w,
        final_v=final_v,
        stopped_early=stopped_early,
        local_states=parts,
    )


def run_global_baseline(
    train_tasks: Sequence[TaskData],
    config: SimConfig,
    test_tasks: Sequence[TaskData] | None = None,
) -> SimTrace:
    """All data pooled on one machine with personalization disabled.

    C2 = inf freezes every v at zero, reducing the solver to a single
    shared hyperplane; the machine's capacity is the sum of the
    participants'. Per-task metrics still come from each task's own test
    set, all scored with the pooled model.
    """
    test_map = _check_tasks(train_tasks, test_tasks)
    problem = config.problem
    sweep = _sweep_fn(problem)
    pooled = pool_tasks(train_tasks)
    params = replace(config.params, c2=math.inf)
    sweep_state = initial_state([pooled], problem)
    hw_total = sum(config.hw_factor(t.task_id) for t in train_tasks)
    dim = pooled.dim
    clock = 0.0
    records: list[EpochRecord] = []
    small_epochs = 0
    stopped_early = False
    for epoch in range(config.max_epochs):
        delay = sample_compute_delay(
            config.delay_model, pooled.n_samples, dim, hw_total,
            spawn_rng(config.master_seed, DOMAIN_DELAY, epoch, pooled.task_id),
        )
        result = sweep(
            sweep_state, pooled, params,
            spawn_rng(config.master_seed, DOMAIN_ORDER, epoch, pooled.task_id),
        )
        clock += delay
        update_norm = float(np.linalg.norm(result.delta_w))
        task_metrics = {
            tid: _evaluate(problem, sweep_state.w, sweep_state.v[pooled.task_id], test)
            for tid, test in test_map.items()
        }
        records.append(
            EpochRecord(
                epoch=epoch,
                time=clock,
                responders=(pooled.task_id,),
                num_participants=1,
                update_norm=update_norm,
                dual_objective=_dual_objective(problem, sweep_state, [pooled], params),
                task_metrics=task_metrics,
                w_digest=_digest(sweep_state.w),
            )
        )
        small_epochs = small_epochs + 1 if update_norm <= config.stop_tolerance else 0
        if small_epochs >= STOP_PATIENCE:
            stopped_early = True
            break
    final_v = {t.task_id: np.zeros(dim) for t in train_tasks}
    return SimTrace(
        problem=problem,
        mode=MODE_GLOBAL,
        metric_name=_metric_name(problem),
        num_participants=1,
        records=records,
        final_w=sweep_state.w.copy(),
        final_v=final_v,
        stopped_early=stopped_early,
    )
