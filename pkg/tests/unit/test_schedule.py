import numpy as np
import pytest

from corrsel.exceptions import (
    BudgetError,
    NotPositiveDefiniteError,
    SearchSpaceTooLarge,
    ValidationError,
)
from corrsel.model import decompose_covariance
from corrsel.oracle import exhaustive_schedule
from corrsel.schedule import (
    DynamicalSystem,
    Schedule,
    fim_recursion,
    greedy_schedule,
    individual_budgets,
    linearize,
    prediction_states,
    random_schedule,
    schedule_objective,
)


def test_empty_schedule_keeps_the_prior(static_system):
    fim = fim_recursion(static_system, Schedule.empty(3, 2))
    assert fim.horizon == 3
    for j in fim.j_sequence:
        assert np.allclose(j, np.eye(2))
    assert schedule_objective(fim) == pytest.approx(2.0)


def test_measurements_accumulate(static_system):
    schedule = Schedule(np.array([[1, 1], [0, 0]]))
    fim = fim_recursion(static_system, schedule)
    assert np.allclose(fim.j_sequence[1], 2 * np.eye(2))
    assert np.allclose(fim.j_sequence[2], 2 * np.eye(2))
    assert schedule_objective(fim) == pytest.approx(1.0)


def test_closed_form_recursion_agrees(linear_system):
    schedule = Schedule(np.array([[1, 0, 1, 0, 0], [0, 1, 1, 1, 0], [0, 0, 0, 0, 1]]))
    decomp = decompose_covariance(linear_system.noise_cov)
    truncated = fim_recursion(linear_system, schedule)
    closed = fim_recursion(linear_system, schedule, decomp=decomp)
    for a, b in zip(truncated.j_sequence, closed.j_sequence):
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9)


def test_recursion_rejects_foreign_schedule(linear_system):
    with pytest.raises(ValidationError):
        fim_recursion(linear_system, Schedule.empty(2, 3))


def test_prediction_states_follow_the_transition(linear_system):
    system = linear_system.with_initial(np.array([1.0, 2.0]), np.eye(2))
    states = prediction_states(system, 2)
    assert np.allclose(states[0], [1.2, 2.0])
    assert np.allclose(states[1], [1.4, 2.0])


def test_time_varying_transition():
    stack = np.stack([np.eye(2), 2 * np.eye(2)])
    system = DynamicalSystem(
        transition=stack,
        process_cov=np.zeros((2, 2)),
        noise_cov=np.eye(1),
        initial_mean=np.ones(2),
        initial_cov=np.eye(2),
        obs_matrix=np.array([[1.0, 0.0]]),
    )
    assert np.allclose(prediction_states(system, 2)[-1], [2.0, 2.0])
    with pytest.raises(ValidationError):
        prediction_states(system, 3)


def test_nonlinear_system_is_linearised_at_the_prediction():
    system = DynamicalSystem(
        transition=np.eye(2),
        process_cov=np.zeros((2, 2)),
        noise_cov=np.eye(1),
        initial_mean=np.array([3.0, 4.0]),
        initial_cov=np.eye(2),
        measurement_fn=lambda x: np.array([x @ x]),
        jacobian_fn=lambda x: 2 * x.reshape(1, -1),
    )
    (jacobian,) = linearize(system, 1)
    assert np.allclose(jacobian, [[6.0, 8.0]])


def test_system_validation():
    common = dict(
        transition=np.eye(2),
        noise_cov=np.eye(1),
        initial_mean=np.zeros(2),
        initial_cov=np.eye(2),
    )
    DynamicalSystem(process_cov=np.diag([1.0, 0.0]), obs_matrix=np.ones((1, 2)), **common)
    with pytest.raises(NotPositiveDefiniteError):
        DynamicalSystem(process_cov=-np.eye(2), obs_matrix=np.ones((1, 2)), **common)
    with pytest.raises(ValidationError):
        DynamicalSystem(process_cov=np.eye(2), **common)
    with pytest.raises(ValidationError):
        DynamicalSystem(
            process_cov=np.eye(2),
            obs_matrix=np.ones((1, 2)),
            measurement_fn=lambda x: x[:1],
            jacobian_fn=lambda x: np.ones((1, 2)),
            **common,
        )


def test_schedule_validation():
    with pytest.raises(ValidationError):
        Schedule(np.array([[0, 2]]))
    with pytest.raises(BudgetError):
        Schedule(np.ones((2, 2)), budget=3)
    with pytest.raises(BudgetError):
        Schedule(np.array([[1, 0], [1, 0]]), individual_budgets=1)
    with pytest.raises(BudgetError):
        Schedule.empty(2, 2, individual=1).activate(1, 0).activate(2, 0)


def test_schedule_indexing():
    schedule = Schedule.empty(3, 5).activate(2, 3)
    assert schedule.total == 1
    assert list(schedule.selection(2).active) == [3]
    assert schedule.flat_index(2, 3) == 8


def test_individual_budgets():
    assert individual_budgets(2, 3).tolist() == [2, 2, 2]
    assert individual_budgets([1, 0, 3], 3).tolist() == [1, 0, 3]
    with pytest.raises(BudgetError):
        individual_budgets(-1, 3)


def test_random_schedule_is_feasible():
    rng = np.random.default_rng(0)
    for _ in range(20):
        schedule = random_schedule(3, 5, 4, 1, rng)
        assert schedule.total == 4
        assert np.all(schedule.w_matrix.sum(axis=0) <= 1)


def test_random_schedule_is_capped_by_individual_budgets():
    schedule = random_schedule(2, 3, 10, 1, np.random.default_rng(1))
    assert schedule.total == 3


def test_greedy_schedule_ties(static_system):
    result = greedy_schedule(static_system, 1, 1, 1)
    assert result.activations == [(1, 0)]
    assert result.objective == pytest.approx(1.5)


def test_greedy_schedule_bookkeeping(linear_system):
    result = greedy_schedule(linear_system, 3, 6, 2)
    schedule = result.schedule
    assert schedule.total == len(result.activations) == 6
    assert np.all(schedule.w_matrix.sum(axis=0) <= 2)
    assert result.objective == pytest.approx(
        schedule_objective(fim_recursion(linear_system, schedule)), rel=1e-10
    )
    assert np.all(np.diff(result.history) <= 1e-12)
    assert result.history[-1] == pytest.approx(result.objective)


def test_greedy_schedule_stops_at_the_individual_budgets(linear_system):
    result = greedy_schedule(linear_system, 2, 20, 1)
    assert result.schedule.total == 5


def test_greedy_schedule_is_no_better_than_the_optimum(linear_system):
    greedy = greedy_schedule(linear_system, 2, 3, 1)
    optimum = exhaustive_schedule(linear_system, 2, 3, 1)
    assert greedy.objective >= optimum.best_value - 1e-10


def test_greedy_schedule_validation(linear_system):
    with pytest.raises(ValidationError):
        greedy_schedule(linear_system, 0, 1, 1)
    with pytest.raises(BudgetError):
        greedy_schedule(linear_system, 2, -1, 1)


def test_exhaustive_schedule_guard(linear_system):
    with pytest.raises(SearchSpaceTooLarge):
        exhaustive_schedule(linear_system, 5, 3, 1)


def test_single_additions_never_increase_the_objective(linear_system):
    rng = np.random.default_rng(3)
    for _ in range(5):
        base = random_schedule(3, 5, 4, 3, rng).w_matrix
        value = schedule_objective(fim_recursion(linear_system, Schedule(base)))
        for t, i in zip(*np.nonzero(base == 0)):
            extended = base.copy()
            extended[t, i] = 1
            added = schedule_objective(fim_recursion(linear_system, Schedule(extended)))
            assert added <= value + 1e-12
