"""Model state, decision functions, and objective evaluators."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedsvm.core import (
    Hyperparams,
    ModelState,
    RegressionDual,
    TaskData,
    apply_global,
    decision_value,
    decision_values,
    dual_objective_classification,
    dual_objective_regression,
    epsilon_insensitive,
    initial_state,
    primal_objective_classification,
    primal_objective_regression,
)
from fedsvm.errors import InvalidInputError

from .helpers import random_tasks


class TestTaskData:
    def test_derived_arrays(self):
        features = np.array([[1.0, 0.0], [2.0, 3.0]])
        task = TaskData(task_id=0, features=features, labels=np.array([1.0, -1.0]))
        assert task.n_samples == 2
        assert task.dim == 2
        np.testing.assert_array_equal(task.samples, features.T)
        np.testing.assert_allclose(task.sq_norms, [5.0, 9.0])
        assert task.samples.flags["C_CONTIGUOUS"]

    def test_rejects_bad_shapes(self):
        with pytest.raises(InvalidInputError, match="2-D"):
            TaskData(task_id=0, features=np.zeros(3), labels=np.zeros(3))
        with pytest.raises(InvalidInputError, match="labels"):
            TaskData(task_id=0, features=np.zeros((2, 3)), labels=np.zeros(2))

    def test_rejects_non_finite(self):
        bad = np.array([[1.0, np.nan]])
        with pytest.raises(InvalidInputError, match="non-finite"):
            TaskData(task_id=0, features=bad, labels=np.zeros(2))
        with pytest.raises(InvalidInputError, match="non-finite"):
            TaskData(task_id=0, features=np.ones((1, 2)), labels=np.array([1.0, np.inf]))

    def test_binary_label_check(self):
        task = TaskData(task_id=0, features=np.ones((1, 2)), labels=np.array([1.0, -1.0]))
        assert task.has_binary_labels()
        task = TaskData(task_id=0, features=np.ones((1, 2)), labels=np.array([1.0, 0.5]))
        assert not task.has_binary_labels()


class TestHyperparams:
    def test_validation(self):
        with pytest.raises(InvalidInputError):
            Hyperparams(c1=0.0)
        with pytest.raises(InvalidInputError):
            Hyperparams(c2=-1.0)
        with pytest.raises(InvalidInputError):
            Hyperparams(epsilon=-0.1)
        with pytest.raises(InvalidInputError):
            Hyperparams(c1=math.inf)

    def test_inv_c2(self):
        assert Hyperparams(c2=4.0).inv_c2 == 0.25
        assert Hyperparams(c2=math.inf).inv_c2 == 0.0


class TestInitialState:
    def test_shapes(self, rng):
        tasks = random_tasks("classification", rng, num_tasks=3, n=5, dim=4)
        state = initial_state(tasks, "classification")
        assert state.dim == 4
        assert set(state.v) == {0, 1, 2}
        for t in tasks:
            assert state.alpha[t.task_id].shape == (5,)
            assert not state.alpha[t.task_id].any()

    def test_regression_duals(self, rng):
        tasks = random_tasks("regression", rng, num_tasks=2, n=4, dim=3)
        state = initial_state(tasks, "regression")
        for t in tasks:
            dual = state.alpha[t.task_id]
            assert isinstance(dual, RegressionDual)
            assert dual.dalpha.shape == (4,)

    def test_rejects_duplicates_and_mismatch(self, rng):
        tasks = random_tasks("classification", rng, num_tasks=2)
        clash = TaskData(task_id=0, features=tasks[1].features, labels=tasks[1].labels)
        with pytest.raises(InvalidInputError, match="unique"):
            initial_state([tasks[0], clash], "classification")
        odd = TaskData(task_id=9, features=np.ones((5, 2)), labels=np.array([1.0, -1.0]))
        with pytest.raises(InvalidInputError, match="dim"):
            initial_state([tasks[0], odd], "classification")
        with pytest.raises(InvalidInputError):
            initial_state([], "classification")
        with pytest.raises(InvalidInputError, match="problem"):
            initial_state(tasks, "ranking")


class TestApplyGlobal:
    def test_replaces_w_with_copy(self, rng):
        tasks = random_tasks("classification", rng)
        state = initial_state(tasks, "classification")
        incoming = np.arange(3.0)
        apply_global(state, incoming)
        np.testing.assert_array_equal(state.w, incoming)
        incoming[0] = 99.0
        assert state.w[0] == 0.0

    def test_shape_mismatch(self, rng):
        state = initial_state(random_tasks("classification", rng), "classification")
        with pytest.raises(InvalidInputError, match="shape"):
            apply_global(state, np.zeros(5))


class TestDecisionFunctions:
    def test_decision_value(self):
        w = np.array([1.0, 0.0])
        v = np.array([0.0, 2.0])
        x = np.array([3.0, 4.0])
        assert decision_value(w, v, x) == pytest.approx(3.0 + 8.0)

    def test_decision_values_matches_manual(self, rng):
        task = random_tasks("classification", rng, num_tasks=1, n=5, dim=3)[0]
        w = rng.normal(size=3)
        v = rng.normal(size=3)
        expected = np.array([decision_value(w, v, task.samples[i]) for i in range(5)])
        np.testing.assert_allclose(decision_values(w, v, task), expected)

    def test_shape_errors(self):
        with pytest.raises(InvalidInputError):
            decision_value(np.zeros(2), np.zeros(3), np.zeros(2))

    def test_epsilon_insensitive(self):
        assert epsilon_insensitive(0.05, 0.1) == 0.0
        assert epsilon_insensitive(-0.3, 0.1) == pytest.approx(0.2)
        np.testing.assert_allclose(
            epsilon_insensitive(np.array([0.0, 0.5, -1.0]), 0.25), [0.0, 0.25, 0.75]
        )
        with pytest.raises(InvalidInputError):
            epsilon_insensitive(1.0, -0.1)


class TestObjectives:
    def test_classification_dual_hand_value(self):
        # Single task, two orthogonal unit samples, alpha = (0.5, 0.25),
        # C2 = 1. u = 0.5*e1 - 0.25*e2, so 0.5||u||^2 = 0.15625, the
        # per-task term doubles it, minus sum alpha 0.75.
        task = TaskData(task_id=0, features=np.eye(2), labels=np.array([1.0, -1.0]))
        state = initial_state([task], "classification")
        state.alpha[0] = np.array([0.5, 0.25])
        value = dual_objective_classification(state, [task], Hyperparams(c1=1.0, c2=1.0))
        assert value == pytest.approx(0.15625 + 0.15625 - 0.75)

    def test_classification_dual_ignores_w_v(self, rng):
        tasks = random_tasks("classification", rng)
        state = initial_state(tasks, "classification")
        for t in tasks:
            state.alpha[t.task_id] = rng.uniform(0.0, 1.0, t.n_samples)
        params = Hyperparams(c1=1.0, c2=2.0)
        before = dual_objective_classification(state, tasks, params)
        state.w = rng.normal(size=state.dim)
        state.v[0] = rng.normal(size=state.dim)
        assert dual_objective_classification(state, tasks, params) == before

    def test_regression_dual_hand_value(self):
        # One sample x = e1, y = 2, dalpha = 0.5 (minus side), eps = 0.1,
        # C2 = inf: 0.5*0.25 - 0.5*2 + 0.1*0.5 = -0.825.
        task = TaskData(task_id=0, features=np.array([[1.0]]), labels=np.array([2.0]))
        state = initial_state([task], "regression")
        state.alpha[0] = RegressionDual(
            alpha_minus=np.array([0.5]), alpha_plus=np.array([0.0]), dalpha=np.array([0.5])
        )
        value = dual_objective_regression(
            state, [task], Hyperparams(c1=1.0, c2=math.inf, epsilon=0.1)
        )
        assert value == pytest.approx(0.125 - 1.0 + 0.05)

    def test_regression_dual_needs_split_state(self, rng):
        tasks = random_tasks("regression", rng)
        state = initial_state(tasks, "classification")
        with pytest.raises(InvalidInputError, match="regression dual"):
            dual_objective_regression(state, tasks, Hyperparams())

    def test_primal_hand_values(self):
        task = TaskData(task_id=0, features=np.eye(2), labels=np.array([1.0, -1.0]))
        state = initial_state([task], "classification")
        state.w = np.array([1.0, 0.0])
        state.v[0] = np.array([0.0, -1.0])
        params = Hyperparams(c1=2.0, c2=4.0)
        # Scores are (1, -1): hinge = max(0, 1-1) + max(0, 1-1) = 0.
        # 0.5||w||^2 = 0.5, 0.5*C2*||v||^2 = 2.
        assert primal_objective_classification(state, [task], params) == pytest.approx(2.5)
        reg_state = initial_state([task], "regression")
        reg_state.w = np.array([1.0, 0.0])
        # Scores (1, 0) vs labels (1, -1): tube losses 0 and 0.9.
        value = primal_objective_regression(
            reg_state, [task], Hyperparams(c1=3.0, c2=1.0, epsilon=0.1)
        )
        assert value == pytest.approx(0.5 + 3.0 * 0.9)

    def test_infinite_c2_penalty(self, rng):
        tasks = random_tasks("classification", rng)
        state = initial_state(tasks, "classification")
        params = Hyperparams(c1=1.0, c2=math.inf)
        # At the zero state every sample pays hinge 1; v = 0 is free.
        total = sum(t.n_samples for t in tasks)
        assert primal_objective_classification(state, tasks, params) == pytest.approx(total)
        state.v[0] = np.ones(state.dim)
        assert primal_objective_classification(state, tasks, params) == math.inf


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), c2=st.sampled_from([0.5, 1.0, 4.0]))
def test_weak_duality_classification(seed, c2):
    """primal(w, v) + dual(alpha) >= 0 for any feasible pairing.

    The dual objective here is the minimization form, whose optimum is
    the negated primal optimum, so the sum is non-negative everywhere.
    """
    rng = np.random.default_rng(seed)
    tasks = random_tasks("classification", rng, num_tasks=2, n=4, dim=3)
    params = Hyperparams(c1=1.5, c2=c2)
    state = initial_state(tasks, "classification")
    for t in tasks:
        state.alpha[t.task_id] = rng.uniform(0.0, params.c1, t.n_samples)
    state.w = rng.normal(size=3)
    for t in tasks:
        state.v[t.task_id] = rng.normal(size=3)
    primal = primal_objective_classification(state, tasks, params)
    dual = dual_objective_classification(state, tasks, params)
    assert primal + dual >= -1e-9
