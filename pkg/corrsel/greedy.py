"""Greedy sensor selection driven by rank-one Fisher information updates.

Activating sensor j adds `c_j α_j α_jᵀ` to the current information matrix, so
the trace-of-inverse drop of every candidate is available in closed form. The
inverse noise covariance of the active set is grown by a block update instead
of re-inverting it.
"""
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from prefect.utilities import logging

from .exceptions import BudgetError, PreconditionError
from .model import MeasurementModel, SelectionVector, objective_trace_inverse
from .signals import SKIP
from .utils import symmetrize

logger = logging.get_logger(__name__)

SCHUR_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class GreedyUpdate:
    sensor_index: int
    gain_scalar: float
    gain_vector: np.ndarray
    delta_trace: float
    # R_w⁻¹ r_j, reused to extend R_w⁻¹ when the update is applied.
    projection: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass(frozen=True, eq=False)
class GreedyState:
    selection: SelectionVector
    fisher: np.ndarray
    fisher_inv: np.ndarray
    inactive: Tuple[int, ...]
    active: Tuple[int, ...] = ()
    noise_cov_inv: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def objective(self) -> float:
        return float(np.trace(self.fisher_inv))


def initial_state(model: MeasurementModel) -> GreedyState:
    """Nothing active: J = Σ⁻¹, J⁻¹ = Σ."""
    return GreedyState(
        selection=SelectionVector.zeros(model.m),
        fisher=np.array(model.prior_info),
        fisher_inv=np.array(model.prior_cov),
        inactive=tuple(range(model.m)),
    )


def evaluate_candidate(
    state: GreedyState, model: MeasurementModel, j: int
) -> GreedyUpdate:
    """Rank-one update that activating sensor `j` would apply.

    Args:
        state (GreedyState): The current greedy state.
        model (MeasurementModel): The estimation model.
        j (int): An inactive sensor.

    Raises:
        PreconditionError: If `j` is already active.
        SKIP: If the Schur complement of the augmented noise covariance is numerically zero.

    Returns:
        GreedyUpdate: Gain scalar, gain vector and the drop in tr(J⁻¹).
    """
    if j not in state.inactive:
        raise PreconditionError(f"sensor {j} is not inactive")

    R = model.noise_cov
    h_j = model.obs_matrix[j]
    if not state.active:
        c = 1.0 / R[j, j]
        alpha = h_j.copy()
        projection = np.zeros(0)
    else:
        active = list(state.active)
        r_j = R[active, j]
        projection = state.noise_cov_inv @ r_j
        schur = R[j, j] - r_j @ projection
        if schur <= SCHUR_FLOOR:
            raise SKIP(f"sensor {j} is almost a combination of the active sensors")
        c = 1.0 / schur
        alpha = model.obs_matrix[active].T @ projection - h_j

    direction = state.fisher_inv @ alpha
    delta = c * (direction @ direction) / (1.0 + c * (alpha @ direction))
    return GreedyUpdate(
        sensor_index=j,
        gain_scalar=float(c),
        gain_vector=alpha,
        delta_trace=float(delta),
        projection=projection,
    )


def apply_update(state: GreedyState, update: GreedyUpdate) -> GreedyState:
    """Activate `update.sensor_index` and refresh J, J⁻¹ and R_w⁻¹."""
    j = update.sensor_index
    if j not in state.inactive:
        raise PreconditionError(f"sensor {j} is not inactive")

    c = update.gain_scalar
    alpha = update.gain_vector
    direction = state.fisher_inv @ alpha
    fisher = symmetrize(state.fisher + c * np.outer(alpha, alpha))
    fisher_inv = symmetrize(
        state.fisher_inv
        - c * np.outer(direction, direction) / (1.0 + c * (alpha @ direction))
    )

    return GreedyState(
        selection=state.selection.add(j),
        fisher=fisher,
        fisher_inv=fisher_inv,
        inactive=tuple(i for i in state.inactive if i != j),
        active=state.active + (j,),
        noise_cov_inv=extend_inverse(state.noise_cov_inv, update.projection, c),
    )


def extend_inverse(inverse: np.ndarray, projection: np.ndarray, c: float) -> np.ndarray:
    """Inverse of [[R_w, r], [rᵀ, R_jj]] from R_w⁻¹, u = R_w⁻¹r and c = 1/(R_jj − rᵀu)."""
    k = inverse.shape[0]
    extended = np.empty((k + 1, k + 1))
    extended[:k, :k] = inverse + c * np.outer(projection, projection)
    extended[:k, k] = -c * projection
    extended[k, :k] = -c * projection
    extended[k, k] = c
    return extended


@dataclass(frozen=True, eq=False)
class GreedyResult:
    selection: SelectionVector
    objective: float
    trace_per_step: List[float]
    evaluations: int


def greedy_select(model: MeasurementModel, s: int) -> GreedyResult:
    """Activate `s` sensors one at a time, each time taking the largest drop in tr(J⁻¹).

    Ties go to the lowest sensor index. Candidates whose Schur complement is
    numerically zero are skipped with a warning.

    Args:
        model (MeasurementModel): The estimation model.
        s (int): The energy budget.

    Raises:
        BudgetError: If `s` is negative or larger than the number of sensors.

    Returns:
        GreedyResult: The selection, tr(J⁻¹) of the selection, the trace before and
        after every activation, and the number of candidate evaluations.
    """
    if not 0 <= s <= model.m:
        raise BudgetError(f"budget {s} is outside 0..{model.m}")

    state = initial_state(model)
    trace_per_step = [state.objective]
    evaluations = 0
    for _ in range(s):
        best = None
        for j in state.inactive:
            evaluations += 1
            try:
                update = evaluate_candidate(state, model, j)
            except SKIP as e:
                logger.warning(f"Skipping candidate: {e}")
                continue
            if best is None or update.delta_trace > best.delta_trace:
                best = update
        if best is None:
            logger.warning(
                f"No admissible candidate left after {len(state.active)} activations."
            )
            break
        state = apply_update(state, best)
        trace_per_step.append(state.objective)
        logger.debug(f"Activated sensor {best.sensor_index}, tr(J^-1) = {state.objective}")

    selection = SelectionVector(state.selection.w, budget=s)
    return GreedyResult(
        selection=selection,
        objective=objective_trace_inverse(state.fisher),
        trace_per_step=trace_per_step,
        evaluations=evaluations,
    )
