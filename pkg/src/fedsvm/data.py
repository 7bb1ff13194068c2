"""Dataset construction: synthetic generators, the HAR loader, splits.

Synthetic data follows a shared-plus-personal ground truth: one global
direction w* and a per-task offset v*_k whose size is set by
task_component_scale. Task feature distributions differ through
per-task mean and scale draws, which is what makes the pooled baseline
suffer on heterogeneous configurations.

Draw order is part of the determinism contract and is documented on
each generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PROBLEM_CLASSIFICATION, PROBLEM_REGRESSION, PROBLEMS, TaskData
from .errors import DataError, InvalidInputError

UCIHAR_DIM = 561


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape and heterogeneity of a synthetic multi-task dataset.

    ``separation`` (class-center distance along the task direction) only
    applies to classification; ``snr_db`` only to regression.
    """

    problem: str
    num_tasks: int
    n_per_task: int
    dim: int
    task_component_scale: float = 1.0
    feature_mean_range: tuple[float, float] = (-0.5, 0.5)
    feature_std_range: tuple[float, float] = (0.8, 1.2)
    separation: float = 2.0
    snr_db: float = 20.0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise InvalidInputError(f"unknown problem {self.problem!r}")
        if self.num_tasks < 1 or self.dim < 1:
            raise InvalidInputError("num_tasks and dim must be at least 1")
        if self.n_per_task < 2:
            raise InvalidInputError("n_per_task must be at least 2")
        if self.task_component_scale < 0:
            raise InvalidInputError("task_component_scale must be non-negative")
        lo, hi = self.feature_mean_range
        if not lo <= hi:
            raise InvalidInputError(f"bad feature_mean_range ({lo}, {hi})")
        lo, hi = self.feature_std_range
        if not 0 < lo <= hi:
            raise InvalidInputError(f"bad feature_std_range ({lo}, {hi})")
        if self.separation < 0:
            raise InvalidInputError("separation must be non-negative")


@dataclass(frozen=True)
class GroundTruth:
    """The generating parameters behind a synthetic dataset."""

    w_star: np.ndarray
    v_star: dict[int, np.ndarray]
    task_mean: dict[int, float]
    task_std: dict[int, float]
    noise_std: dict[int, float]


def _task_direction(spec: SyntheticSpec, rng: np.random.Generator, w_star: np.ndarray):
    v_star = spec.task_component_scale * rng.normal(0.0, 1.0, spec.dim) / math.sqrt(spec.dim)
    mean = float(rng.uniform(*spec.feature_mean_range))
    std = float(rng.uniform(*spec.feature_std_range))
    return v_star, mean, std


def generate_synthetic_regression(
    spec: SyntheticSpec, rng: np.random.Generator
) -> tuple[list[TaskData], GroundTruth]:
    """Linear signal plus Gaussian noise calibrated to ``snr_db``.

    Per task the empirical variance ratio var(signal) / var(noise) is
    exactly 10^(snr_db / 10); snr_db = inf means noiseless. Draw order:
    w*, then per task v*_k, mean, std, features, noise.
    """
    if spec.problem != PROBLEM_REGRESSION:
        raise InvalidInputError(f"spec is for {spec.problem}, not regression")
    w_star = rng.normal(0.0, 1.0, spec.dim) / math.sqrt(spec.dim)
    tasks: list[TaskData] = []
    v_stars: dict[int, np.ndarray] = {}
    means: dict[int, float] = {}
    stds: dict[int, float] = {}
    noise_stds: dict[int, float] = {}
    for k in range(spec.num_tasks):
        v_star, mean, std = _task_direction(spec, rng, w_star)
        features = rng.normal(mean, std, (spec.dim, spec.n_per_task))
        signal = (w_star + v_star) @ features
        sig_var = float(np.var(signal))
        if sig_var == 0.0:
            raise InvalidInputError(f"task {k}: degenerate signal with zero variance")
        noise = rng.normal(0.0, 1.0, spec.n_per_task)
        if math.isinf(spec.snr_db):
            noise = np.zeros(spec.n_per_task)
            noise_scale = 0.0
        else:
            target_var = sig_var / (10.0 ** (spec.snr_db / 10.0))
            noise_var = float(np.var(noise))
            if noise_var == 0.0:
                raise InvalidInputError(f"task {k}: degenerate noise draw")
            noise_scale = math.sqrt(target_var / noise_var)
            noise = noise * noise_scale
        tasks.append(TaskData(task_id=k, features=features, labels=signal + noise))
        v_stars[k] = v_star
        means[k] = mean
        stds[k] = std
        noise_stds[k] = noise_scale
    truth = GroundTruth(w_star, v_stars, means, stds, noise_stds)
    return tasks, truth


def generate_synthetic_classification(
    spec: SyntheticSpec, rng: np.random.Generator
) -> tuple[list[TaskData], GroundTruth]:
    """Two Gaussian clouds per task along the task's own direction.

    Class centers sit at mean +- (separation / 2) * unit(w* + v*_k), so
    tasks share structure through w* but disagree by v*_k. Labels are
    balanced exactly (n // 2 negatives). Draw order: w*, then per task
    v*_k, mean, std, label permutation, features.
    """
    if spec.problem != PROBLEM_CLASSIFICATION:
        raise InvalidInputError(f"spec is for {spec.problem}, not classification")
    w_star = rng.normal(0.0, 1.0, spec.dim) / math.sqrt(spec.dim)
    tasks: list[TaskData] = []
    v_stars: dict[int, np.ndarray] = {}
    means: dict[int, float] = {}
    stds: dict[int, float] = {}
    for k in range(spec.num_tasks):
        v_star, mean, std = _task_direction(spec, rng, w_star)
        direction = w_star + v_star
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            raise InvalidInputError(f"task {k}: degenerate zero task direction")
        unit = direction / norm
        n = spec.n_per_task
        labels = np.concatenate([np.ones(n - n // 2), -np.ones(n // 2)])
        labels = labels[rng.permutation(n)]
        centers = mean + (0.5 * spec.separation) * np.outer(unit, labels)
        features = centers + std * rng.standard_normal((spec.dim, n))
        tasks.append(TaskData(task_id=k, features=features, labels=labels))
        v_stars[k] = v_star
        means[k] = mean
        stds[k] = std
    truth = GroundTruth(w_star, v_stars, means, stds, {})
    return tasks, truth


def load_ucihar(
    features_path: str,
    labels_path: str,
    subjects_path: str,
    positive_class_id: int,
) -> list[TaskData]:
    """Load the HAR smartphone dataset as one task per subject.

    Expects the plain-text files from the original distribution
    (whitespace-separated features, one integer activity label and one
    integer subject id per row). Labels map to +1 for the chosen
    activity id and -1 otherwise. There is no canonical positive class,
    so the caller must pick one.
    """
    def read(path, what):
        try:
            return np.loadtxt(path)
        except OSError as exc:
            raise DataError(f"cannot read {what} file {path}: {exc}") from exc
        except ValueError as exc:
            raise DataError(f"malformed {what} file {path}: {exc}") from exc

    features = read(features_path, "feature")
    activities = read(labels_path, "label")
    subjects = read(subjects_path, "subject")
    if features.ndim == 1:
        features = features[None, :]
    if features.ndim != 2 or features.shape[1] != UCIHAR_DIM:
        raise DataError(
            f"expected {UCIHAR_DIM} feature columns, got shape {features.shape}"
        )
    activities = np.atleast_1d(activities)
    subjects = np.atleast_1d(subjects)
    if activities.shape[0] != features.shape[0] or subjects.shape[0] != features.shape[0]:
        raise DataError(
            f"row count mismatch: {features.shape[0]} feature rows, "
            f"{activities.shape[0]} labels, {subjects.shape[0]} subject ids"
        )
    if not np.isin(float(positive_class_id), activities):
        raise DataError(f"activity id {positive_class_id} absent from label file")
    labels = np.where(activities == float(positive_class_id), 1.0, -1.0)
    tasks = []
    for sid in np.unique(subjects):
        rows = subjects == sid
        tasks.append(
            TaskData(task_id=int(sid), features=features[rows].T, labels=labels[rows])
        )
    return tasks


def truncate_per_task(
    tasks: Sequence[TaskData], n: int, rng: np.random.Generator | None = None
) -> list[TaskData]:
    """Reduce every task to exactly ``n`` samples.

    With an rng, samples are a uniform subset (original order kept);
    without one, the first ``n`` samples are taken. Errors if any task
    is smaller than ``n``.
    """
    if n < 1:
        raise InvalidInputError(f"n must be at least 1, got {n}")
    out = []
    for task in tasks:
        if task.n_samples < n:
            raise InvalidInputError(
                f"task {task.task_id} has {task.n_samples} samples, cannot keep {n}"
            )
        if rng is None:
            idx = np.arange(n)
        else:
            idx = np.sort(rng.choice(task.n_samples, size=n, replace=False))
        out.append(
            TaskData(task_id=task.task_id, features=task.features[:, idx], labels=task.labels[idx])
        )
    return out


def _train_quota(fraction: float, n: int) -> int:
    # round-half-up keeps quotas stable across platforms
    return int(math.floor(fraction * n + 0.5))


def split_train_test(
    task: TaskData,
    fraction: float,
    rng: np.random.Generator,
    stratify: bool = False,
) -> tuple[TaskData, TaskData]:
    """Split one task into (train, test) with train share ``fraction``.

    Stratified splits allocate the train quota across the -1/+1 classes
    by largest remainder and guarantee each class at least one train
    sample whenever the quota allows it (a quota of 1 cannot hold both
    classes and is allowed through as-is).
    """
    if not 0.0 < fraction < 1.0:
        raise InvalidInputError(f"fraction must be in (0, 1), got {fraction}")
    n = task.n_samples
    if n < 2:
        raise InvalidInputError(f"task {task.task_id} too small to split")
    n_train = _train_quota(fraction, n)
    if n_train == 0 or n_train == n:
        raise InvalidInputError(
            f"fraction {fraction} leaves an empty side for task {task.task_id} (n={n})"
        )
    if not stratify:
        perm = rng.permutation(n)
        train_idx = np.sort(perm[:n_train])
        test_idx = np.sort(perm[n_train:])
    else:
        if not task.has_binary_labels():
            raise InvalidInputError("stratified split requires -1/+1 labels")
        classes = [c for c in (-1.0, 1.0) if np.any(task.labels == c)]
        counts = {c: int((task.labels == c).sum()) for c in classes}
        ideal = {c: fraction * counts[c] for c in classes}
        quota = {c: min(int(math.floor(ideal[c])), counts[c]) for c in classes}
        spare = n_train - sum(quota.values())
        by_remainder = sorted(
            classes, key=lambda c: (ideal[c] - math.floor(ideal[c]), c), reverse=True
        )
        pos = 0
        while spare > 0:
            c = by_remainder[pos % len(classes)]
            if quota[c] < counts[c]:
                quota[c] += 1
                spare -= 1
            pos += 1
        if len(classes) == 2 and n_train >= 2:
            for c in classes:
                other = classes[0] if c == classes[1] else classes[1]
                if quota[c] == 0 and quota[other] > 1:
                    quota[c] += 1
                    quota[other] -= 1
        train_parts = []
        test_parts = []
        for c in classes:
            members = np.flatnonzero(task.labels == c)
            perm = members[rng.permutation(members.shape[0])]
            train_parts.append(perm[: quota[c]])
            test_parts.append(perm[quota[c]:])
        train_idx = np.sort(np.concatenate(train_parts))
        test_idx = np.sort(np.concatenate(test_parts))
    train = TaskData(task.task_id, task.features[:, train_idx], task.labels[train_idx])
    test = TaskData(task.task_id, task.features[:, test_idx], task.labels[test_idx])
    return train, test


def kfold(
    task: TaskData, k: int, rng: np.random.Generator
) -> list[tuple[TaskData, TaskData]]:
    """Random k-fold partition; fold sizes differ by at most one.

    Returns (train, test) pairs whose test sides tile the task exactly.
    """
    n = task.n_samples
    if not 2 <= k <= n:
        raise InvalidInputError(f"k must be in [2, {n}], got {k}")
    perm = rng.permutation(n)
    folds = np.array_split(perm, k)
    pairs = []
    for j in range(k):
        test_idx = np.sort(folds[j])
        train_idx = np.sort(np.concatenate([folds[i] for i in range(k) if i != j]))
        pairs.append(
            (
                TaskData(task.task_id, task.features[:, train_idx], task.labels[train_idx]),
                TaskData(task.task_id, task.features[:, test_idx], task.labels[test_idx]),
            )
        )
    return pairs
