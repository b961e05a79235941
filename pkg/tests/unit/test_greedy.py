import logging

import numpy as np
import pytest

from corrsel.exceptions import BudgetError, PreconditionError
from corrsel.greedy import (
    apply_update,
    evaluate_candidate,
    greedy_select,
    initial_state,
)
from corrsel.model import (
    MeasurementModel,
    SelectionVector,
    fisher_truncated,
    objective_trace_inverse,
)
from corrsel.oracle import exhaustive_search


def test_first_step_uses_the_sensor_row(small_model):
    state = initial_state(small_model)
    update = evaluate_candidate(state, small_model, 3)
    assert update.gain_scalar == pytest.approx(1 / small_model.noise_cov[3, 3])
    assert np.allclose(update.gain_vector, small_model.obs_matrix[3])


def test_rank_one_update_matches_truncated(medium_model):
    state = initial_state(medium_model)
    for j in (4, 1, 8):
        state = apply_update(state, evaluate_candidate(state, medium_model, j))
    expected = fisher_truncated(medium_model, SelectionVector.from_indices(10, [1, 4, 8]))
    assert np.allclose(state.fisher, expected.j, rtol=1e-9, atol=1e-9)
    assert np.allclose(state.fisher_inv, expected.inverse, rtol=1e-9, atol=1e-9)


def test_noise_inverse_is_grown_in_activation_order(medium_model):
    state = initial_state(medium_model)
    for j in (6, 2, 9):
        state = apply_update(state, evaluate_candidate(state, medium_model, j))
    idx = list(state.active)
    assert idx == [6, 2, 9]
    assert np.allclose(
        state.noise_cov_inv, np.linalg.inv(medium_model.noise_cov[np.ix_(idx, idx)])
    )


def test_delta_matches_direct_difference(medium_model):
    state = initial_state(medium_model)
    state = apply_update(state, evaluate_candidate(state, medium_model, 0))
    before = state.objective
    for j in state.inactive:
        update = evaluate_candidate(state, medium_model, j)
        after = objective_trace_inverse(
            fisher_truncated(medium_model, state.selection.add(j))
        )
        assert update.delta_trace == pytest.approx(before - after, rel=1e-8, abs=1e-12)


def test_candidate_must_be_inactive(small_model):
    state = initial_state(small_model)
    state = apply_update(state, evaluate_candidate(state, small_model, 2))
    with pytest.raises(PreconditionError):
        evaluate_candidate(state, small_model, 2)


def test_budget_bounds(small_model):
    with pytest.raises(BudgetError):
        greedy_select(small_model, -1)
    with pytest.raises(BudgetError):
        greedy_select(small_model, small_model.m + 1)


def test_zero_budget(small_model):
    result = greedy_select(small_model, 0)
    assert result.selection.count == 0
    assert result.objective == pytest.approx(np.trace(small_model.prior_cov))
    assert result.evaluations == 0


def test_full_budget(small_model):
    result = greedy_select(small_model, small_model.m)
    assert result.selection.count == small_model.m
    assert result.objective == pytest.approx(
        objective_trace_inverse(fisher_truncated(small_model, SelectionVector.ones(5))),
        rel=1e-9,
    )


def test_evaluation_count(medium_model):
    assert greedy_select(medium_model, 3).evaluations == 10 + 9 + 8


def test_trace_never_increases(medium_model):
    result = greedy_select(medium_model, 6)
    steps = np.array(result.trace_per_step)
    assert len(steps) == 7
    assert np.all(np.diff(steps) <= 1e-12)
    assert result.objective == pytest.approx(steps[-1], rel=1e-9)


def test_ties_go_to_the_lowest_index(toy_model):
    result = greedy_select(toy_model, 1)
    assert list(result.selection.active) == [0]
    assert result.objective == pytest.approx(1.5)


def test_greedy_is_no_better_than_the_optimum(medium_model):
    for s in (2, 4):
        greedy = greedy_select(medium_model, s)
        optimum = exhaustive_search(medium_model, s)
        assert greedy.objective >= optimum.best_value - 1e-10


def test_dependent_candidate_is_skipped(caplog):
    delta = 2e-13
    noise_cov = np.array(
        [[1.0, 1.0 - delta, 0.0], [1.0 - delta, 1.0, 0.0], [0.0, 0.0, 1.0]]
    )
    model = MeasurementModel(
        prior_mean=np.zeros(2),
        prior_cov=np.eye(2),
        obs_matrix=np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        noise_cov=noise_cov,
    )
    with caplog.at_level(logging.WARNING):
        result = greedy_select(model, 2)
    assert list(result.selection.active) == [0, 2]
    assert "Skipping candidate" in caplog.text
