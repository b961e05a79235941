"""Recursive Fisher information and non-myopic sensor scheduling.

Time steps are numbered t = 1..τ; row ``t − 1`` of a schedule holds the
activations at step t, and slot (t, i) has the flat index ``i + (t − 1)·m``.
"""
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from prefect.utilities import logging

from .exceptions import BudgetError, NotPositiveDefiniteError, ValidationError
from .greedy import SCHUR_FLOOR, extend_inverse
from .model import (
    CovDecomposition,
    SelectionVector,
    measurement_information,
    measurement_information_closed_form,
)
from .utils import check_positive_definite, inv_spd, min_eigenvalue, symmetrize

logger = logging.get_logger(__name__)

Budgets = Union[int, Sequence[int]]


@dataclass(frozen=True, eq=False)
class DynamicalSystem:
    """State-space model x_{t+1} = F_t x_t + u_t, y_t = h_t(x_t) + v_t.

    `transition` is either one n×n matrix or a stack whose entry k is F_k.
    Measurements are linear through `obs_matrix` (one m×n matrix or a stack whose
    entry k is H_{k+1}) or nonlinear through `measurement_fn` with its analytic
    `jacobian_fn`. The process covariance may be singular, R and P̂₀ may not.
    """

    transition: np.ndarray
    process_cov: np.ndarray
    noise_cov: np.ndarray
    initial_mean: np.ndarray
    initial_cov: np.ndarray
    obs_matrix: Optional[np.ndarray] = None
    measurement_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jacobian_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        initial_mean = np.array(self.initial_mean, dtype=float).reshape(-1)
        n = initial_mean.size
        transition = np.array(self.transition, dtype=float)
        if transition.shape[-2:] != (n, n):
            raise ValidationError(f"transition must be {n}x{n}, got {transition.shape}")
        process_cov = np.array(self.process_cov, dtype=float)
        if process_cov.shape != (n, n):
            raise ValidationError(f"process_cov must be {n}x{n}, got {process_cov.shape}")
        if not np.allclose(process_cov, process_cov.T, rtol=0, atol=1e-12) or (
            min_eigenvalue(process_cov) < -1e-12
        ):
            raise NotPositiveDefiniteError("process_cov must be symmetric positive semidefinite")
        noise_cov = np.array(check_positive_definite(self.noise_cov, "noise_cov"))
        initial_cov = np.array(check_positive_definite(self.initial_cov, "initial_cov"))
        if initial_cov.shape != (n, n):
            raise ValidationError(f"initial_cov must be {n}x{n}, got {initial_cov.shape}")

        m = noise_cov.shape[0]
        if self.obs_matrix is not None:
            if self.measurement_fn is not None or self.jacobian_fn is not None:
                raise ValidationError("give either obs_matrix or a measurement function")
            obs_matrix = np.array(self.obs_matrix, dtype=float)
            if obs_matrix.shape[-2:] != (m, n):
                raise ValidationError(f"obs_matrix must be {m}x{n}, got {obs_matrix.shape}")
            object.__setattr__(self, "obs_matrix", obs_matrix)
        elif self.measurement_fn is None or self.jacobian_fn is None:
            raise ValidationError("nonlinear measurements need measurement_fn and jacobian_fn")

        object.__setattr__(self, "initial_mean", initial_mean)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "process_cov", process_cov)
        object.__setattr__(self, "noise_cov", noise_cov)
        object.__setattr__(self, "initial_cov", initial_cov)

    @property
    def n(self) -> int:
        return self.initial_mean.size

    @property
    def m(self) -> int:
        return self.noise_cov.shape[0]

    @cached_property
    def initial_info(self) -> np.ndarray:
        return inv_spd(self.initial_cov, "initial_cov")

    @staticmethod
    def _at(stack: np.ndarray, k: int, name: str) -> np.ndarray:
        if stack.ndim == 2:
            return stack
        if not 0 <= k < stack.shape[0]:
            raise ValidationError(f"{name} has no entry for step {k}")
        return stack[k]

    def F(self, k: int) -> np.ndarray:
        """Transition from step k to step k + 1."""
        return self._at(self.transition, k, "transition")

    def measure(self, t: int, state: np.ndarray) -> np.ndarray:
        if self.obs_matrix is not None:
            return self._at(self.obs_matrix, t - 1, "obs_matrix") @ state
        return np.asarray(self.measurement_fn(state), dtype=float)

    def jacobian(self, t: int, state: np.ndarray) -> np.ndarray:
        if self.obs_matrix is not None:
            return self._at(self.obs_matrix, t - 1, "obs_matrix")
        return np.asarray(self.jacobian_fn(state), dtype=float)

    def with_initial(self, mean: np.ndarray, cov: np.ndarray) -> "DynamicalSystem":
        return replace(self, initial_mean=mean, initial_cov=cov)


@dataclass(frozen=True, eq=False)
class Schedule:
    w_matrix: np.ndarray
    budget: Optional[int] = None
    individual_budgets: Optional[np.ndarray] = None

    def __post_init__(self):
        w_matrix = np.array(self.w_matrix)
        if w_matrix.ndim != 2 or w_matrix.shape[0] < 1:
            raise ValidationError(f"w_matrix must be a non-empty tau x m array, got {w_matrix.shape}")
        if not np.all((w_matrix == 0) | (w_matrix == 1)):
            raise ValidationError("schedule entries must be 0 or 1")
        w_matrix = w_matrix.astype(np.int8)
        w_matrix.setflags(write=False)
        object.__setattr__(self, "w_matrix", w_matrix)

        if self.budget is not None and self.total > self.budget:
            raise BudgetError(
                f"{self.total} activations exceed the cumulative budget of {self.budget}"
            )
        if self.individual_budgets is not None:
            budgets = individual_budgets(self.individual_budgets, self.m)
            over = np.flatnonzero(w_matrix.sum(axis=0) > budgets)
            if over.size:
                raise BudgetError(f"sensors {over.tolist()} exceed their individual budgets")
            object.__setattr__(self, "individual_budgets", budgets)

    @classmethod
    def empty(
        cls,
        horizon: int,
        m: int,
        budget: Optional[int] = None,
        individual: Optional[Budgets] = None,
    ) -> "Schedule":
        return cls(np.zeros((horizon, m), dtype=np.int8), budget, individual)

    @property
    def horizon(self) -> int:
        return self.w_matrix.shape[0]

    @property
    def m(self) -> int:
        return self.w_matrix.shape[1]

    @property
    def total(self) -> int:
        return int(self.w_matrix.sum())

    def selection(self, t: int) -> SelectionVector:
        """Activations at step t (1-based)."""
        return SelectionVector(self.w_matrix[t - 1])

    def activate(self, t: int, i: int) -> "Schedule":
        w_matrix = self.w_matrix.copy()
        w_matrix[t - 1, i] = 1
        return Schedule(w_matrix, self.budget, self.individual_budgets)

    def flat_index(self, t: int, i: int) -> int:
        return i + (t - 1) * self.m


def individual_budgets(s_i: Budgets, m: int) -> np.ndarray:
    budgets = np.broadcast_to(np.asarray(s_i, dtype=int), (m,)).copy()
    if np.any(budgets < 0):
        raise BudgetError("individual budgets must be non-negative")
    return budgets


@dataclass(frozen=True, eq=False)
class RecursiveFim:
    j_sequence: Tuple[np.ndarray, ...]

    @property
    def horizon(self) -> int:
        return len(self.j_sequence) - 1


def prediction_states(sys: DynamicalSystem, horizon: int) -> np.ndarray:
    """x̂_t = F_{t−1}···F₀ x̂₀ for t = 1..horizon, one row per step."""
    states = np.empty((horizon, sys.n))
    state = sys.initial_mean
    for k in range(horizon):
        state = sys.F(k) @ state
        states[k] = state
    return states


def linearize(sys: DynamicalSystem, horizon: int) -> List[np.ndarray]:
    """Observation matrices H_1..H_horizon, Jacobians taken at the prediction states."""
    states = prediction_states(sys, horizon)
    return [sys.jacobian(t, states[t - 1]) for t in range(1, horizon + 1)]


def _predicted_info(sys: DynamicalSystem, k: int, fisher: np.ndarray) -> np.ndarray:
    F = sys.F(k)
    covariance = sys.process_cov + F @ inv_spd(fisher, "Fisher matrix") @ F.T
    return inv_spd(covariance, "predicted covariance")


def fim_recursion(
    sys: DynamicalSystem,
    sched: Schedule,
    jacobians: Optional[Sequence[np.ndarray]] = None,
    decomp: Optional[CovDecomposition] = None,
) -> RecursiveFim:
    """J_t = (Q + F_{t−1} J_{t−1}⁻¹ F_{t−1}ᵀ)⁻¹ + G_t with J₀ = P̂₀⁻¹.

    Args:
        sys (DynamicalSystem): The state-space model.
        sched (Schedule): Activations per step.
        jacobians (Sequence[np.ndarray], optional): Precomputed H_1..H_τ.
            Defaults to `linearize(sys, τ)`.
        decomp (CovDecomposition, optional): When given, G_t uses the closed form
            in diag(w_t) instead of the truncated noise covariance.

    Raises:
        ValidationError: If the schedule does not match the system.
        IllConditionedError: If a truncated noise covariance is numerically singular.

    Returns:
        RecursiveFim: J₀..J_τ.
    """
    if sched.m != sys.m:
        raise ValidationError(f"schedule has {sched.m} sensors, the system has {sys.m}")
    horizon = sched.horizon
    if jacobians is None:
        jacobians = linearize(sys, horizon)

    fisher = sys.initial_info
    sequence = [fisher]
    for t in range(1, horizon + 1):
        selection = sched.selection(t)
        if decomp is None:
            gain = measurement_information(jacobians[t - 1], sys.noise_cov, selection)
        else:
            gain = measurement_information_closed_form(jacobians[t - 1], decomp, selection)
        fisher = symmetrize(_predicted_info(sys, t - 1, fisher) + gain)
        sequence.append(fisher)
    return RecursiveFim(tuple(sequence))


def schedule_objective(fim: RecursiveFim) -> float:
    """(1/τ) Σ_{t=1}^{τ} tr(J_t⁻¹)"""
    traces = [np.trace(inv_spd(j, "Fisher matrix")) for j in fim.j_sequence[1:]]
    return float(np.mean(traces))


def random_schedule(
    horizon: int, m: int, s: int, s_i: Budgets, rng: np.random.Generator
) -> Schedule:
    """A random feasible schedule with as many activations as the greedy scheduler makes."""
    budgets = individual_budgets(s_i, m)
    target = min(s, int(np.minimum(budgets, horizon).sum()))
    w_matrix = np.zeros((horizon, m), dtype=np.int8)
    counts = np.zeros(m, dtype=int)
    placed = 0
    for slot in rng.permutation(horizon * m):
        if placed == target:
            break
        row, i = divmod(int(slot), m)
        if counts[i] < budgets[i]:
            w_matrix[row, i] = 1
            counts[i] += 1
            placed += 1
    return Schedule(w_matrix, s, budgets)


@dataclass(frozen=True, eq=False)
class GreedyScheduleResult:
    schedule: Schedule
    objective: float
    history: List[float] = field(default_factory=list)
    activations: List[Tuple[int, int]] = field(default_factory=list)


def _rank_one_batch(
    R: np.ndarray,
    H: np.ndarray,
    active: List[int],
    noise_inv: np.ndarray,
    candidates: np.ndarray,
):
    if not active:
        c = 1.0 / R[candidates, candidates]
        return c, H[candidates].copy(), np.zeros((candidates.size, 0)), np.ones(candidates.size, bool)
    cross = R[np.ix_(active, candidates)]
    projection = noise_inv @ cross
    schur = R[candidates, candidates] - np.sum(cross * projection, axis=0)
    keep = schur > SCHUR_FLOOR
    c = np.where(keep, 1.0 / np.where(keep, schur, 1.0), 0.0)
    alpha = (H[active].T @ projection).T - H[candidates]
    return c, alpha, projection.T, keep


def _batch_tail(
    sys: DynamicalSystem, start: int, fisher: np.ndarray, gains: List[np.ndarray]
) -> np.ndarray:
    """Σ tr(J_t⁻¹) for t = start..τ over a stack of candidate J_start."""
    total = np.zeros(fisher.shape[0])
    horizon = len(gains)
    for t in range(start, horizon + 1):
        if t > start:
            F = sys.F(t - 1)
            predicted = sys.process_cov + F @ np.linalg.inv(fisher) @ F.T
            fisher = np.linalg.inv(predicted) + gains[t - 1]
        total += np.trace(np.linalg.inv(fisher), axis1=1, axis2=2)
    return total


def greedy_schedule(
    sys: DynamicalSystem, horizon: int, s: int, s_i: Budgets
) -> GreedyScheduleResult:
    """Activate one (step, sensor) slot at a time, each time the one minimising the mean tr(J_t⁻¹).

    Sensor i keeps the set I_i of steps at which it is still inactive; the set is
    emptied once τ − |I_i| ≥ s_i. The loop runs min(s, Σ s_i) times or until no
    candidate slot is left. Every candidate is scored with the full objective;
    the recursion prefix before the candidate's step is shared, and its
    measurement information comes from a rank-one update. Ties go to the smallest
    flat index.

    Args:
        sys (DynamicalSystem): The state-space model; Jacobians are taken once at
            the prediction states.
        horizon (int): τ.
        s (int): Cumulative budget.
        s_i (Union[int, Sequence[int]]): Individual budgets.

    Returns:
        GreedyScheduleResult: The schedule, its objective, the objective after every
        activation and the activated slots in order.
    """
    if horizon < 1:
        raise ValidationError("the horizon must be at least 1")
    if s < 0:
        raise BudgetError("the cumulative budget must be non-negative")
    m, n = sys.m, sys.n
    budgets = individual_budgets(s_i, m)
    jacobians = linearize(sys, horizon)
    R = sys.noise_cov

    schedule = Schedule.empty(horizon, m, s, budgets)
    inactive = [set(range(1, horizon + 1)) for _ in range(m)]
    active_rows: List[List[int]] = [[] for _ in range(horizon)]
    noise_inv = [np.zeros((0, 0)) for _ in range(horizon)]
    gains = [np.zeros((n, n)) for _ in range(horizon)]

    fim = fim_recursion(sys, schedule, jacobians)
    objective = schedule_objective(fim)
    history, activations = [], []

    for _ in range(min(s, int(budgets.sum()))):
        for i in range(m):
            if horizon - len(inactive[i]) >= budgets[i]:
                inactive[i] = set()

        traces = [np.trace(inv_spd(j)) for j in fim.j_sequence[1:]]
        best = None
        for t in range(1, horizon + 1):
            candidates = np.array([i for i in range(m) if t in inactive[i]], dtype=int)
            if candidates.size == 0:
                continue
            c, alpha, projection, keep = _rank_one_batch(
                R, jacobians[t - 1], active_rows[t - 1], noise_inv[t - 1], candidates
            )
            for i in candidates[~keep]:
                logger.warning(f"Skipping slot (t={t}, sensor={i}): near-singular noise block.")
            if not keep.any():
                continue
            candidates, c, alpha, projection = (
                candidates[keep],
                c[keep],
                alpha[keep],
                projection[keep],
            )
            predicted = _predicted_info(sys, t - 1, fim.j_sequence[t - 1])
            stack = predicted + gains[t - 1] + c[:, None, None] * (
                alpha[:, :, None] * alpha[:, None, :]
            )
            values = (sum(traces[: t - 1]) + _batch_tail(sys, t, stack, gains)) / horizon
            k = int(np.argmin(values))
            if best is None or values[k] < best[0]:
                best = (values[k], t, int(candidates[k]), c[k], alpha[k], projection[k])

        if best is None:
            logger.info("No schedulable slot left.")
            break
        _, t, i, c, alpha, projection = best
        schedule = schedule.activate(t, i)
        inactive[i].discard(t)
        active_rows[t - 1].append(i)
        noise_inv[t - 1] = extend_inverse(noise_inv[t - 1], projection, c)
        gains[t - 1] = symmetrize(gains[t - 1] + c * np.outer(alpha, alpha))
        activations.append((t, i))

        fim = fim_recursion(sys, schedule, jacobians)
        objective = schedule_objective(fim)
        history.append(objective)
        logger.debug(f"Activated sensor {i} at step {t}, objective {objective:.6g}")

    return GreedyScheduleResult(
        schedule=schedule, objective=objective, history=history, activations=activations
    )
