"""Brute-force references for the selection and scheduling solvers, plus
finite-difference and eigenvalue cross-checks.

Every pattern is evaluated from scratch with the truncated Fisher information or
the plain recursion; nothing here reuses solver bookkeeping.
"""
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Callable, Dict, Literal, Optional, Tuple, Union

import numpy as np
import scipy.linalg
from prefect.utilities import logging

from .exceptions import BudgetError, NotPositiveDefiniteError, SearchSpaceTooLarge
from .model import MeasurementModel, SelectionVector, fisher_truncated
from .schedule import (
    Budgets,
    DynamicalSystem,
    Schedule,
    fim_recursion,
    individual_budgets,
    linearize,
    schedule_objective,
)

logger = logging.get_logger(__name__)

SUBSET_GUARD = 10**7
SCHEDULE_SLOT_LIMIT = 20

Objective = Literal["trace_inverse", "trace_fisher_weak", "quadratic_omega"]


@dataclass(frozen=True, eq=False)
class ExhaustiveResult:
    best_w: Union[SelectionVector, Schedule]
    best_value: float
    evaluated_count: int
    values: Optional[Dict[Tuple[int, ...], float]] = field(default=None, repr=False)


def subset_count(m: int, s: int) -> int:
    """Σ_{k=0}^{s} C(m, k)"""
    return sum(comb(m, k) for k in range(min(s, m) + 1))


def _weak_fisher(model: MeasurementModel, active: Tuple[int, ...]) -> np.ndarray:
    idx = list(active)
    H = model.obs_matrix[idx]
    return model.prior_info + H.T @ model.noise_info[np.ix_(idx, idx)] @ H


def _scorer(model: MeasurementModel, objective: Objective):
    if objective == "trace_inverse":

        def score(active):
            selection = SelectionVector.from_indices(model.m, active)
            return float(np.trace(np.linalg.inv(fisher_truncated(model, selection).j)))

        return score, False
    if objective == "trace_fisher_weak":
        return (
            lambda active: float(np.trace(np.linalg.inv(_weak_fisher(model, active)))),
            False,
        )
    if objective == "quadratic_omega":
        H = model.obs_matrix
        noise_info = model.noise_info

        def score(active):
            idx = list(active)
            return float(np.sum(noise_info[np.ix_(idx, idx)] * (H[idx] @ H[idx].T)))

        return score, True
    raise ValueError(f"unknown objective '{objective}'")


def exhaustive_search(
    model: MeasurementModel,
    s: int,
    objective: Objective = "trace_inverse",
    keep_values: bool = False,
) -> ExhaustiveResult:
    """Evaluate every selection with at most `s` active sensors.

    `trace_inverse` minimises tr(J_w⁻¹), `trace_fisher_weak` minimises tr(Ĵ_w⁻¹) and
    `quadratic_omega` maximises wᵀΩw. Patterns are visited by size, then
    lexicographically; the first optimum found wins ties.

    Args:
        model (MeasurementModel): The estimation model.
        s (int): The budget.
        objective (Objective, optional): What to optimise. Defaults to "trace_inverse".
        keep_values (bool, optional): Return the value of every pattern. Defaults to False.

    Raises:
        BudgetError: If `s` is negative.
        SearchSpaceTooLarge: If more than 10⁷ patterns would be evaluated.

    Returns:
        ExhaustiveResult: The optimum, its value and the number of evaluated patterns.
    """
    if s < 0:
        raise BudgetError("the budget must be non-negative")
    total = subset_count(model.m, s)
    if total > SUBSET_GUARD:
        raise SearchSpaceTooLarge(
            f"{total} patterns for m={model.m}, s={s} exceed the guard of {SUBSET_GUARD}"
        )

    score, maximize = _scorer(model, objective)
    values = {} if keep_values else None
    best_key, best_value = None, None
    count = 0
    for size in range(min(s, model.m) + 1):
        for active in combinations(range(model.m), size):
            value = score(active)
            count += 1
            if values is not None:
                values[active] = value
            if best_value is None or (
                value > best_value if maximize else value < best_value
            ):
                best_key, best_value = active, value

    logger.debug(f"Exhaustive search evaluated {count} patterns.")
    return ExhaustiveResult(
        best_w=SelectionVector.from_indices(model.m, best_key, budget=s),
        best_value=best_value,
        evaluated_count=count,
        values=values,
    )


def exhaustive_schedule(
    sys: DynamicalSystem, horizon: int, s: int, s_i: Budgets, keep_values: bool = False
) -> ExhaustiveResult:
    """Global optimum of the mean tr(J_t⁻¹) over all feasible schedules.

    Raises:
        SearchSpaceTooLarge: If τ·m exceeds 20 slots (about 10⁶ schedules).
    """
    m = sys.m
    slots = horizon * m
    if slots > SCHEDULE_SLOT_LIMIT:
        raise SearchSpaceTooLarge(
            f"2^{slots} schedules exceed the guard of 2^{SCHEDULE_SLOT_LIMIT}"
        )
    budgets = individual_budgets(s_i, m)
    jacobians = linearize(sys, horizon)

    values = {} if keep_values else None
    best, best_value = None, None
    count = 0
    for size in range(min(s, slots) + 1):
        for chosen in combinations(range(slots), size):
            w_matrix = np.zeros((horizon, m), dtype=np.int8)
            for j in chosen:
                row, i = divmod(j, m)
                w_matrix[row, i] = 1
            if np.any(w_matrix.sum(axis=0) > budgets):
                continue
            value = schedule_objective(fim_recursion(sys, Schedule(w_matrix), jacobians))
            count += 1
            if values is not None:
                values[chosen] = value
            if best_value is None or value < best_value:
                best, best_value = w_matrix, value

    return ExhaustiveResult(
        best_w=Schedule(best, s, budgets),
        best_value=best_value,
        evaluated_count=count,
        values=values,
    )


def finite_difference_jacobian(
    fn: Callable[[np.ndarray], np.ndarray], state: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Central-difference Jacobian of `fn` at `state`, one column per state entry."""
    state = np.asarray(state, dtype=float)
    columns = []
    for k in range(state.size):
        shift = np.zeros(state.size)
        shift[k] = step
        forward = np.atleast_1d(fn(state + shift))
        backward = np.atleast_1d(fn(state - shift))
        columns.append((forward - backward) / (2 * step))
    return np.column_stack(columns)


def trace_inverse_by_eigenvalues(J: np.ndarray) -> float:
    """Σ 1/λ_k(J), computed without forming J⁻¹."""
    eigenvalues = scipy.linalg.eigvalsh(np.asarray(J, dtype=float))
    if eigenvalues[0] <= 0:
        raise NotPositiveDefiniteError("the Fisher matrix is not positive definite")
    return float(np.sum(1.0 / eigenvalues))
