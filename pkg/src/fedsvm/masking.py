"""Per-sample masking of shared updates.

Before a participant's sweep contribution is sent to the coordinator,
each sample's rank-one term is scaled by a mask entry drawn fresh every
epoch. Only the shared part is masked; the participant's own w, v, and
dual variables keep the exact updates. Masks therefore make the
coordinator's view of a participant lossy without touching local
training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PROBLEM_CLASSIFICATION, PROBLEMS, TaskData
from .errors import InvalidInputError

MASK_FAMILIES = ("none", "bernoulli", "beta")


@dataclass(frozen=True)
class MaskSpec:
    """Mask distribution. ``unaffected_ratio`` forces ceil(ratio * n)
    uniformly chosen entries to exactly 1 after the family draw."""

    family: str = "none"
    keep_prob: float = 1.0
    shape_a: float = 2.0
    shape_b: float = 0.5
    unaffected_ratio: float = 0.0

    def __post_init__(self):
        if self.family not in MASK_FAMILIES:
            raise InvalidInputError(
                f"unknown mask family {self.family!r} (use one of {MASK_FAMILIES})"
            )
        if not 0.0 <= self.keep_prob <= 1.0:
            raise InvalidInputError(f"keep_prob must be in [0, 1], got {self.keep_prob}")
        if self.shape_a <= 0 or self.shape_b <= 0:
            raise InvalidInputError(
                f"beta shapes must be positive, got ({self.shape_a}, {self.shape_b})"
            )
        if not 0.0 <= self.unaffected_ratio <= 1.0:
            raise InvalidInputError(
                f"unaffected_ratio must be in [0, 1], got {self.unaffected_ratio}"
            )


def generate_mask(spec: MaskSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one mask of length ``n``.

    none: all ones. bernoulli: entries are 1 with keep_prob else 0.
    beta: entries ~ Beta(shape_a, shape_b). The unaffected quota is
    applied afterwards.
    """
    if n < 0:
        raise InvalidInputError(f"mask length must be non-negative, got {n}")
    if spec.family == "none":
        return np.ones(n)
    if spec.family == "bernoulli":
        mask = (rng.random(n) < spec.keep_prob).astype(np.float64)
    else:
        mask = rng.beta(spec.shape_a, spec.shape_b, size=n)
    quota = math.ceil(spec.unaffected_ratio * n)
    if quota > 0:
        mask[rng.choice(n, size=quota, replace=False)] = 1.0
    return mask


def masked_update(
    per_sample_deltas: Sequence[tuple[int, float]],
    task: TaskData,
    mask: np.ndarray,
    problem: str,
) -> np.ndarray:
    """Masked shared-part update: sum_i mask_i * delta_i * (y_i) * x_i.

    Replays the recorded deltas in their original order with the same
    arithmetic as the sweep kernels, so an all-ones mask reproduces the
    sweep's delta_w bit for bit. The label factor applies only to
    classification deltas.
    """
    if problem not in PROBLEMS:
        raise InvalidInputError(f"unknown problem {problem!r}")
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (task.n_samples,):
        raise InvalidInputError(
            f"mask has shape {mask.shape}, task {task.task_id} has "
            f"{task.n_samples} samples"
        )
    if mask.size and not np.isfinite(mask).all():
        raise InvalidInputError("mask entries must be finite")
    acc = np.zeros(task.dim)
    xs = task.samples
    ys = task.labels
    with_label = problem == PROBLEM_CLASSIFICATION
    for i, delta in per_sample_deltas:
        if not 0 <= i < task.n_samples:
            raise InvalidInputError(f"delta entry references sample {i} out of range")
        coeff = mask[i] * delta
        if with_label:
            coeff = coeff * ys[i]
        acc += coeff * xs[i]
    return acc
