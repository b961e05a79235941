import numpy as np
import pytest

from corrsel.exceptions import (
    BudgetError,
    NotPositiveDefiniteError,
    SearchSpaceTooLarge,
)
from corrsel.model import MeasurementModel
from corrsel.oracle import (
    exhaustive_schedule,
    exhaustive_search,
    finite_difference_jacobian,
    subset_count,
    trace_inverse_by_eigenvalues,
)


def test_subset_count():
    assert subset_count(3, 3) == 8
    assert subset_count(5, 2) == 16
    assert subset_count(4, 9) == 16


def test_toy_optimum(toy_model):
    result = exhaustive_search(toy_model, 1)
    assert list(result.best_w.active) == [0]
    assert result.best_value == pytest.approx(1.5)
    assert result.evaluated_count == 3


def test_full_enumeration(small_model):
    result = exhaustive_search(small_model, 5, keep_values=True)
    assert result.evaluated_count == 32
    assert len(result.values) == 32
    assert result.best_value == pytest.approx(min(result.values.values()))
    assert result.best_w.count == 5


def test_budget_is_respected(small_model):
    result = exhaustive_search(small_model, 2, keep_values=True)
    assert result.evaluated_count == 16
    assert all(len(key) <= 2 for key in result.values)
    assert result.best_w.count <= 2


def test_quadratic_objective_is_maximised(small_model):
    result = exhaustive_search(small_model, 3, objective="quadratic_omega", keep_values=True)
    assert result.best_value == pytest.approx(max(result.values.values()))


def test_unknown_objective(small_model):
    with pytest.raises(ValueError):
        exhaustive_search(small_model, 2, objective="log_det")


def test_negative_budget(small_model):
    with pytest.raises(BudgetError):
        exhaustive_search(small_model, -1)


def test_search_space_guard():
    model = MeasurementModel(np.zeros(1), np.eye(1), np.ones((40, 1)), np.eye(40))
    with pytest.raises(SearchSpaceTooLarge):
        exhaustive_search(model, 20)


def test_schedule_optimum_measures_early(static_system):
    result = exhaustive_schedule(static_system, 2, 1, 1)
    assert result.evaluated_count == 5
    assert result.best_w.w_matrix.tolist() == [[1, 0], [0, 0]]
    assert result.best_value == pytest.approx(1.5)


def test_schedule_respects_individual_budgets(static_system):
    result = exhaustive_schedule(static_system, 2, 4, 1, keep_values=True)
    assert result.evaluated_count == 9
    assert np.all(result.best_w.w_matrix.sum(axis=0) <= 1)


def test_unlimited_budgets_switch_everything_on(static_system):
    result = exhaustive_schedule(static_system, 2, 4, 2)
    assert result.best_w.w_matrix.tolist() == [[1, 1], [1, 1]]
    assert result.best_value == pytest.approx((1.0 + 2.0 / 3.0) / 2)


def test_single_step_schedule_is_a_selection(linear_system):
    F = linear_system.transition
    model = MeasurementModel(
        prior_mean=F @ linear_system.initial_mean,
        prior_cov=F @ linear_system.initial_cov @ F.T + linear_system.process_cov,
        obs_matrix=linear_system.obs_matrix,
        noise_cov=linear_system.noise_cov,
    )
    schedule = exhaustive_schedule(linear_system, 1, 2, 1)
    selection = exhaustive_search(model, 2)
    assert schedule.best_value == pytest.approx(selection.best_value, rel=1e-10)
    assert schedule.best_w.w_matrix[0].tolist() == selection.best_w.w.tolist()


def test_finite_difference_jacobian():
    jacobian = finite_difference_jacobian(
        lambda x: np.array([x[0] * x[1], np.sin(x[1])]), np.array([2.0, 0.5])
    )
    assert np.allclose(jacobian, [[0.5, 2.0], [0.0, np.cos(0.5)]], atol=1e-8)


def test_trace_inverse_by_eigenvalues():
    assert trace_inverse_by_eigenvalues(np.diag([2.0, 4.0])) == pytest.approx(0.75)
    with pytest.raises(NotPositiveDefiniteError):
        trace_inverse_by_eigenvalues(np.diag([1.0, -1.0]))


def test_patterns_are_visited_by_size_then_lexicographically(small_model):
    result = exhaustive_search(small_model, 2, keep_values=True)
    keys = list(result.values)
    assert keys[:7] == [(), (0,), (1,), (2,), (3,), (4,), (0, 1)]
    assert keys == sorted(keys, key=lambda key: (len(key), key))


def test_first_optimum_wins_ties():
    model = MeasurementModel(np.zeros(2), np.eye(2), np.eye(2), np.eye(2))
    result = exhaustive_search(model, 1, objective="quadratic_omega")
    assert list(result.best_w.active) == [0]
    assert result.best_value == pytest.approx(1.0)
