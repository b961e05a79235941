"""Weak-correlation approximation of the Fisher information and the trace-of-Fisher problem.

With R = Λ + εΥ (Λ diagonal, Υ hollow), the Fisher information of a selection is
approximated by Ĵ_w = Σ⁻¹ + Hᵀ(wwᵀ ∘ R⁻¹)H, which is exact up to O(ε²).
Maximising tr(Ĵ_w) is a convex quadratic maximisation wᵀΩw over the budget
polytope, solved here by bilinear programming.
"""
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg
from prefect.utilities import logging

from .exceptions import (
    BudgetError,
    NotPositiveDefiniteError,
    SolverError,
    ValidationError,
)
from .model import (
    FisherMatrix,
    MeasurementModel,
    SelectionLike,
    SelectionVector,
    as_selection,
    fisher_truncated,
    objective_trace_inverse,
)
from .utils import make_rng, min_eigenvalue, symmetrize

logger = logging.get_logger(__name__)

KRONECKER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeakDecomposition:
    lambda_diag: np.ndarray
    upsilon: np.ndarray
    epsilon: float

    def __post_init__(self):
        upsilon = np.array(self.upsilon, dtype=float)
        if not np.allclose(upsilon, upsilon.T, rtol=0, atol=1e-12):
            raise ValidationError("upsilon must be symmetric")
        if np.any(np.diag(upsilon) != 0):
            raise ValidationError("upsilon must have a zero diagonal")
        if self.epsilon < 0:
            raise ValidationError("epsilon must be non-negative")
        object.__setattr__(self, "lambda_diag", np.array(self.lambda_diag, dtype=float))
        object.__setattr__(self, "upsilon", upsilon)

    def noise_cov(self, epsilon: Optional[float] = None) -> np.ndarray:
        """Λ + εΥ, at the stored ε unless another one is given."""
        if epsilon is None:
            epsilon = self.epsilon
        return np.diag(self.lambda_diag) + epsilon * self.upsilon


def weak_decomposition(R: np.ndarray) -> WeakDecomposition:
    """Λ = diag(R), ε = largest off-diagonal magnitude, Υ = off-diagonal part / ε."""
    R = np.asarray(R, dtype=float)
    off_diagonal = R - np.diag(np.diag(R))
    epsilon = float(np.max(np.abs(off_diagonal), initial=0.0))
    upsilon = off_diagonal / epsilon if epsilon > 0 else np.zeros_like(R)
    return WeakDecomposition(np.diag(R).copy(), symmetrize(upsilon), epsilon)


def fisher_weak(model: MeasurementModel, w: SelectionLike) -> FisherMatrix:
    """Ĵ_w = Σ⁻¹ + Hᵀ(wwᵀ ∘ R⁻¹)H"""
    w = as_selection(w, model.m)
    weights = np.outer(w.w, w.w) * model.noise_info
    H = model.obs_matrix
    return FisherMatrix(model.prior_info + H.T @ weights @ H)


def weak_error_order(
    model: MeasurementModel,
    w: SelectionLike,
    epsilons: Sequence[float],
    decomposition: Optional[WeakDecomposition] = None,
) -> List[float]:
    """Frobenius gap ‖J_w − Ĵ_w‖ along the family R(ε) = Λ + εΥ.

    Args:
        model (MeasurementModel): Supplies the prior and H; its R defines Λ and Υ
            unless `decomposition` is given.
        w (SelectionLike): The selection to evaluate.
        epsilons (Sequence[float]): Correlation strengths to sweep.
        decomposition (WeakDecomposition, optional): An explicit Λ, Υ pair.

    Raises:
        NotPositiveDefiniteError: If Λ + εΥ is not positive definite for some ε.

    Returns:
        List[float]: One error per ε.
    """
    if decomposition is None:
        decomposition = weak_decomposition(model.noise_cov)
    errors = []
    for epsilon in epsilons:
        noise_cov = decomposition.noise_cov(epsilon)
        if min_eigenvalue(noise_cov) <= 0:
            raise NotPositiveDefiniteError(
                f"Λ + εΥ is not positive definite at ε = {epsilon}"
            )
        family_member = model.with_noise_cov(noise_cov)
        exact = fisher_truncated(family_member, w).j
        approximate = fisher_weak(family_member, w).j
        errors.append(float(np.linalg.norm(exact - approximate)))
    return errors


@dataclass(frozen=True, eq=False)
class TraceMaxProblem:
    omega: np.ndarray
    budget: int
    prior_trace: float = 0.0

    def value(self, w: SelectionLike) -> float:
        """wᵀΩw"""
        w = np.asarray(w.w if isinstance(w, SelectionVector) else w, dtype=float)
        return float(w @ self.omega @ w)

    def fisher_trace(self, w: SelectionLike) -> float:
        """tr(Σ⁻¹) + wᵀΩw = tr(Ĵ_w)"""
        return self.prior_trace + self.value(w)


def build_trace_max(model: MeasurementModel, s: int) -> TraceMaxProblem:
    """Ω_ij = (R⁻¹)_ij h_iᵀh_j, checked against A(R⁻¹ ⊗ Iₙ)Aᵀ.

    Raises:
        BudgetError: If `s` is outside 0..m.
        ValidationError: If the two constructions of Ω disagree.
    """
    if not 0 <= s <= model.m:
        raise BudgetError(f"budget {s} is outside 0..{model.m}")
    H = model.obs_matrix
    noise_info = model.noise_info
    omega = symmetrize(noise_info * (H @ H.T))

    stacked = scipy.linalg.block_diag(*H)
    kronecker = stacked @ np.kron(noise_info, np.eye(model.n)) @ stacked.T
    scale = max(1.0, float(np.max(np.abs(omega))))
    if np.max(np.abs(kronecker - omega)) > KRONECKER_TOL * scale:
        raise ValidationError("Ω disagrees with its Kronecker form")

    return TraceMaxProblem(
        omega=omega, budget=s, prior_trace=float(np.trace(model.prior_info))
    )


def _vertex_argmax(gradient: np.ndarray, s: int) -> np.ndarray:
    """Maximiser of gradientᵀu over {1ᵀu ≤ s, u ∈ [0,1]^m}: the s largest positive entries."""
    vertex = np.zeros(gradient.size)
    order = np.lexsort((np.arange(gradient.size), -gradient))[:s]
    vertex[order[gradient[order] > 0]] = 1.0
    return vertex


def _is_vertex(point: np.ndarray) -> bool:
    return bool(np.isin(point, (0.0, 1.0)).all())


class BilinearResult(NamedTuple):
    selection: SelectionVector
    value: float


def _alternate(
    omega: np.ndarray, s: int, start: np.ndarray, tol: float, max_iter: int
) -> np.ndarray:
    v = start
    previous = float(v @ omega @ v)
    u = _vertex_argmax(omega @ v, s)
    for _ in range(max_iter):
        u = _vertex_argmax(omega @ v, s)
        current = float(u @ omega @ v)
        if current - previous < tol:
            break
        previous = current
        u, v = v, u

    # only vertices are kept; u wins ties
    ends = [x for x in (u, v) if _is_vertex(x)]
    best = max(ends, key=lambda x: float(x @ omega @ x))

    for _ in range(max_iter):
        candidate = _vertex_argmax(omega @ best, s)
        if float(candidate @ omega @ candidate) <= float(best @ omega @ best) + tol:
            break
        best = candidate
    return best


def bilinear_solve(
    prob: TraceMaxProblem,
    starts: int = 10,
    seed: int = 0,
    tol: float = 1e-9,
    max_iter: int = 1000,
    init: Optional[SelectionLike] = None,
) -> BilinearResult:
    """Maximise wᵀΩw over the budget polytope by alternating linear programs.

    Each linear program has a closed-form vertex solution. The first start is the
    barycentre (s/m)·1, the others are random points of the polytope; `init`
    replaces all of them with a single given start.

    Args:
        prob (TraceMaxProblem): Ω and the budget.
        starts (int, optional): Number of initialisations. Defaults to 10.
        seed (int, optional): Seed for the random starts. Defaults to 0.
        tol (float, optional): Stop when an iteration gains less. Defaults to 1e-9.
        max_iter (int, optional): Iteration cap per phase. Defaults to 1000.
        init (SelectionLike, optional): Explicit starting point.

    Returns:
        BilinearResult: The best Boolean vertex and its value wᵀΩw.
    """
    omega = prob.omega
    m = omega.shape[0]
    s = prob.budget

    if init is not None:
        init = np.asarray(init.w if isinstance(init, SelectionVector) else init, float)
        initial_points = [init]
    else:
        rng = make_rng(seed)
        initial_points = [np.full(m, s / m if m else 0.0)]
        for _ in range(max(starts, 1) - 1):
            point = rng.uniform(size=m)
            total = point.sum()
            if total > s:
                point *= s / total
            initial_points.append(point)

    best, best_value = None, -np.inf
    for point in initial_points:
        vertex = _alternate(omega, s, point, tol, max_iter)
        value = float(vertex @ omega @ vertex)
        if value > best_value + tol or best is None:
            best, best_value = vertex, value

    if not _is_vertex(best):
        raise SolverError("the bilinear solver ended on a non-vertex point")
    selection = SelectionVector(best.astype(np.int8), budget=s)
    return BilinearResult(selection=selection, value=prob.value(selection))


def trace_bound(J: FisherMatrix) -> tuple:
    """(tr(J⁻¹), n²/tr(J)); the first never falls below the second."""
    if not isinstance(J, FisherMatrix):
        J = FisherMatrix(J)
    return objective_trace_inverse(J), J.n**2 / J.trace


def trace_bound_check(model: MeasurementModel, w: SelectionLike) -> tuple:
    return trace_bound(fisher_truncated(model, w))
