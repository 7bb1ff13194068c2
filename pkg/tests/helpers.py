"""Shared builders for the test suite.

Instances here are deliberately small; anything sized for end-to-end
behavior lives in test_acceptance.py with its scenario pinned.
"""

from __future__ import annotations

import numpy as np

from fedsvm.core import PROBLEM_CLASSIFICATION, TaskData
from fedsvm.data import (
    SyntheticSpec,
    generate_synthetic_classification,
    generate_synthetic_regression,
    split_train_test,
)
from fedsvm.seeding import DOMAIN_DATA, DOMAIN_SPLIT, spawn_rng


def random_tasks(problem: str, rng: np.random.Generator, num_tasks=2, n=6, dim=3) -> list[TaskData]:
    """Random tasks with nonzero samples and both classes present."""
    tasks = []
    for k in range(num_tasks):
        features = rng.normal(0.0, 1.0, (dim, n))
        if problem == PROBLEM_CLASSIFICATION:
            labels = np.ones(n)
            labels[: n // 2] = -1.0
            labels = labels[rng.permutation(n)]
        else:
            labels = rng.normal(0.0, 1.0, n)
        tasks.append(TaskData(task_id=k, features=features, labels=labels))
    return tasks


def synthetic_split(problem: str, seed: int, *, num_tasks, n_per_task, dim,
                    task_component_scale=1.0, separation=2.0, snr_db=20.0,
                    fraction=0.7, stratify=None,
                    feature_mean_range=(-0.5, 0.5), feature_std_range=(0.8, 1.2)):
    """Generate tasks and split each with the per-task split streams."""
    spec = SyntheticSpec(
        problem=problem, num_tasks=num_tasks, n_per_task=n_per_task, dim=dim,
        task_component_scale=task_component_scale, separation=separation,
        snr_db=snr_db, feature_mean_range=feature_mean_range,
        feature_std_range=feature_std_range,
    )
    generate = (
        generate_synthetic_classification
        if problem == PROBLEM_CLASSIFICATION
        else generate_synthetic_regression
    )
    tasks, truth = generate(spec, spawn_rng(seed, DOMAIN_DATA))
    if stratify is None:
        stratify = problem == PROBLEM_CLASSIFICATION
    train, test = [], []
    for task in tasks:
        tr, te = split_train_test(
            task, fraction, spawn_rng(seed, DOMAIN_SPLIT, 1, task.task_id), stratify
        )
        train.append(tr)
        test.append(te)
    return train, test, truth
