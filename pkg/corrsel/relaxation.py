"""Semidefinite relaxations of the selection problems and their rounding.

Three conic programs share one solve path:

* ``general``: minimise tr(Z) over the two Schur-complement LMIs of the exact
  Fisher information, with the Boolean pattern lifted to a moment matrix W.
* ``weak``: the same epigraph over the weak-correlation Fisher information
  Σ⁻¹ + Hᵀ(W ∘ R⁻¹)H.
* ``box``: the general LMIs with w relaxed to the box [0, 1]^m and 1ᵀw ≤ s.

The solution is mapped back to a Boolean pattern either by Gaussian
randomisation over the moments (w, W) or by keeping the s largest entries.
"""
from dataclasses import dataclass
from typing import Any, Dict, Literal, Optional, Tuple

import cvxpy as cp
import numpy as np
import scipy.linalg
from prefect.utilities import logging

from .config import sdp_backend
from .exceptions import BudgetError, PreconditionError, SolverError, ValidationError
from .model import (
    CovDecomposition,
    MeasurementModel,
    SelectionVector,
    decompose_covariance,
    fisher_closed_form,
    objective_trace_inverse,
)
from .utils import inv_spd, make_rng, solve_spd, symmetrize, top_s_indices
from .weakcorr import fisher_weak

logger = logging.get_logger(__name__)

ProblemKind = Literal["general", "weak", "box"]
RoundingObjective = Literal["exact", "weak"]

NEGATIVE_EIGENVALUE_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class SdpProblem:
    kind: ProblemKind
    model: MeasurementModel
    budget: int
    decomp: Optional[CovDecomposition] = None
    C: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None

    @property
    def block_shapes(self) -> Dict[str, Tuple[int, int]]:
        n, m = self.model.n, self.model.m
        shapes = {"fisher": (2 * n, 2 * n)}
        if self.kind in ("general", "box"):
            shapes["noise"] = (n + m, n + m)
        if self.kind in ("general", "weak"):
            shapes["moment"] = (m + 1, m + 1)
        return shapes

    def relaxed_fisher(self, w: np.ndarray, W: Optional[np.ndarray] = None) -> np.ndarray:
        """The information matrix the relaxation attributes to a (w, W) point."""
        if self.kind == "weak":
            H = self.model.obs_matrix
            return symmetrize(self.model.prior_info + H.T @ (W * self.model.noise_info) @ H)
        inner = self.decomp.s_inv + np.diag(np.asarray(w) / self.decomp.a)
        return symmetrize(self.C - self.B.T @ solve_spd(inner, self.B, "relaxed inner matrix"))

    def blocks(
        self,
        w: np.ndarray,
        Z: np.ndarray,
        W: Optional[np.ndarray] = None,
        V: Optional[np.ndarray] = None,
    ) -> Dict[str, np.ndarray]:
        """Evaluate every LMI block of the program at a candidate point."""
        n, m = self.model.n, self.model.m
        w = np.asarray(w, dtype=float)
        identity = np.eye(n)
        blocks = {}
        if self.kind == "weak":
            H = self.model.obs_matrix
            fisher = self.model.prior_info + H.T @ (W * self.model.noise_info) @ H
            blocks["fisher"] = np.block([[fisher, identity], [identity, Z]])
        else:
            inner = self.decomp.s_inv + np.diag(w / self.decomp.a)
            blocks["fisher"] = np.block([[self.C - V, identity], [identity, Z]])
            blocks["noise"] = np.block([[V, self.B.T], [self.B, inner]])
        if self.kind in ("general", "weak"):
            blocks["moment"] = np.block(
                [[W, w.reshape(m, 1)], [w.reshape(1, m), np.ones((1, 1))]]
            )
        return blocks


def _check_budget(model: MeasurementModel, s: int):
    if not 0 <= s <= model.m:
        raise BudgetError(f"budget {s} is outside 0..{model.m}")


def build_sdp_general(
    model: MeasurementModel, decomp: CovDecomposition, s: int
) -> SdpProblem:
    """Relaxation of the exact problem with C = Σ⁻¹ + HᵀS⁻¹H and B = S⁻¹H."""
    _check_budget(model, s)
    if not decomp.matches(model.noise_cov):
        raise PreconditionError("the decomposition does not reconstruct noise_cov")
    B = decomp.s_inv @ model.obs_matrix
    C = symmetrize(model.prior_info + model.obs_matrix.T @ B)
    return SdpProblem(kind="general", model=model, budget=s, decomp=decomp, C=C, B=B)


def build_sdp_weak(model: MeasurementModel, s: int) -> SdpProblem:
    _check_budget(model, s)
    return SdpProblem(kind="weak", model=model, budget=s)


def build_sdp_box(
    model: MeasurementModel, decomp: CovDecomposition, s: int
) -> SdpProblem:
    general = build_sdp_general(model, decomp, s)
    return SdpProblem(
        kind="box", model=model, budget=s, decomp=decomp, C=general.C, B=general.B
    )


@dataclass(frozen=True, eq=False)
class SdpSolution:
    kind: ProblemKind
    w_relaxed: np.ndarray
    W: Optional[np.ndarray]
    Z: np.ndarray
    V: Optional[np.ndarray]
    objective: float
    solver_status: str
    duality_gap: float
    backend: str


def _psd(expression) -> list:
    size = expression.shape[0]
    block = cp.Variable((size, size), PSD=True)
    return [block == expression]


def _reported_gap(problem: cp.Problem) -> Optional[float]:
    extra = getattr(problem.solver_stats, "extra_stats", None)
    primal = getattr(extra, "obj_val", None)
    dual = getattr(extra, "obj_val_dual", None)
    if primal is None or dual is None:
        return None
    return abs(float(primal) - float(dual))


def solve_sdp(
    problem: SdpProblem,
    tol: float = 1e-6,
    solver: Optional[str] = None,
    **solver_options: Any,
) -> SdpSolution:
    """Solve a relaxation with a conic interior-point backend.

    Args:
        problem (SdpProblem): The relaxation to solve.
        tol (float, optional): Accuracy requested from the backend. Defaults to 1e-6.
        solver (str, optional): A cvxpy solver name. Defaults to the `SDP.backend`
            entry of the local config, or CLARABEL.

    Raises:
        SolverError: If the backend fails or returns no point.

    Returns:
        SdpSolution: The relaxed point, its objective tr(Z), the backend status and the
        primal-dual gap (the epigraph slack tr(Z) − tr(J(w)⁻¹) when the backend does
        not report its dual objective).
    """
    model = problem.model
    m, n = model.m, model.n
    identity = np.eye(n)

    w = cp.Variable(m)
    Z = cp.Variable((n, n), symmetric=True)
    V = W = None
    constraints = []

    if problem.kind == "weak":
        W = cp.Variable((m, m), symmetric=True)
        H = model.obs_matrix
        fisher = model.prior_info + H.T @ cp.multiply(W, model.noise_info) @ H
        constraints += _psd(cp.bmat([[fisher, identity], [identity, Z]]))
    else:
        V = cp.Variable((n, n), symmetric=True)
        inner = problem.decomp.s_inv + cp.diag(w) / problem.decomp.a
        constraints += _psd(cp.bmat([[problem.C - V, identity], [identity, Z]]))
        constraints += _psd(cp.bmat([[V, problem.B.T], [problem.B, inner]]))

    if problem.kind == "box":
        constraints += [w >= 0, w <= 1, cp.sum(w) <= problem.budget]
    else:
        if W is None:
            W = cp.Variable((m, m), symmetric=True)
        column = cp.reshape(w, (m, 1), order="C")
        constraints += [cp.trace(W) <= problem.budget, cp.diag(W) == w]
        constraints += _psd(cp.bmat([[W, column], [column.T, np.ones((1, 1))]]))

    backend = sdp_backend(solver)
    if backend == "SCS":
        solver_options.setdefault("eps_abs", tol)
        solver_options.setdefault("eps_rel", tol)
    elif backend == "CLARABEL":
        solver_options.setdefault("tol_gap_abs", tol)
        solver_options.setdefault("tol_gap_rel", tol)

    program = cp.Problem(cp.Minimize(cp.trace(Z)), constraints)
    try:
        program.solve(solver=backend, **solver_options)
    except cp.error.SolverError as e:
        raise SolverError(f"{backend} failed on the {problem.kind} relaxation") from e

    status = program.status
    if w.value is None or Z.value is None:
        raise SolverError(f"{backend} returned no point (status: {status})")
    if status != cp.OPTIMAL:
        logger.warning(f"{backend} finished the {problem.kind} relaxation with status '{status}'.")

    w_relaxed = np.clip(w.value, 0.0, 1.0)
    W_value = None if W is None else symmetrize(W.value)
    V_value = None if V is None else symmetrize(V.value)
    Z_value = symmetrize(Z.value)
    objective = float(np.trace(Z_value))

    gap = _reported_gap(program)
    if gap is None:
        relaxed = problem.relaxed_fisher(w_relaxed, W_value)
        gap = abs(objective - float(np.trace(inv_spd(relaxed, "relaxed Fisher matrix"))))
    if gap > tol * max(1.0, abs(objective)):
        logger.warning(
            f"{backend} left a gap of {gap:.3g} on the {problem.kind} relaxation, above the requested {tol:.3g}."
        )

    logger.info(
        f"Solved the {problem.kind} relaxation with {backend}: status '{status}', tr(Z) = {objective:.6g}"
    )
    return SdpSolution(
        kind=problem.kind,
        w_relaxed=w_relaxed,
        W=W_value,
        Z=Z_value,
        V=V_value,
        objective=objective,
        solver_status=status,
        duality_gap=gap,
        backend=backend,
    )


@dataclass(frozen=True, eq=False)
class RoundingResult:
    selection: SelectionVector
    objective: float
    sample_count: int


def _scorer(
    model: MeasurementModel,
    decomp: Optional[CovDecomposition],
    objective: RoundingObjective,
):
    if objective == "exact":
        if decomp is None:
            decomp = decompose_covariance(model.noise_cov)
        return lambda selection: objective_trace_inverse(
            fisher_closed_form(model, decomp, selection)
        )
    if objective == "weak":
        return lambda selection: objective_trace_inverse(fisher_weak(model, selection))
    raise ValueError(f"unknown rounding objective '{objective}'")


def randomize_round(
    sol: SdpSolution,
    model: MeasurementModel,
    decomp: Optional[CovDecomposition],
    s: int,
    N: int = 100,
    seed: int = 0,
    objective: RoundingObjective = "exact",
) -> RoundingResult:
    """Gaussian randomisation over the relaxed moments.

    Draws ξ ~ N(w, W − wwᵀ), keeps the `s` largest entries of every draw and returns
    the pattern with the smallest objective. Negative eigenvalues of W − wwᵀ are
    clipped before sampling.

    Args:
        sol (SdpSolution): A lifted (general or weak) relaxation solution.
        model (MeasurementModel): The estimation model.
        decomp (CovDecomposition, optional): Split used by the exact objective.
        s (int): Number of sensors to activate.
        N (int, optional): Number of draws. Defaults to 100.
        seed (int, optional): Seed of the draws. Defaults to 0.
        objective (Literal["exact", "weak"], optional): Score draws by tr(J⁻¹)
            or by its weak-correlation approximation. Defaults to "exact".

    Raises:
        ValueError: If `N` is smaller than 1.
        PreconditionError: If the solution carries no moment matrix.

    Returns:
        RoundingResult: The best pattern, its objective and `N`.
    """
    if N < 1:
        raise ValueError("the number of randomisation draws must be at least 1")
    _check_budget(model, s)
    if sol.W is None:
        raise PreconditionError("randomisation needs the moment matrix W")

    w = sol.w_relaxed
    covariance = symmetrize(sol.W - np.outer(w, w))
    eigenvalues, eigenvectors = scipy.linalg.eigh(covariance)
    if eigenvalues[0] < -NEGATIVE_EIGENVALUE_TOL:
        logger.warning(
            f"W - ww^T has eigenvalue {eigenvalues[0]:.3g}; clipping before sampling."
        )
    factor = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))

    rng = make_rng(seed)
    draws = w + rng.standard_normal((N, model.m)) @ factor.T

    score = _scorer(model, decomp, objective)
    scores: Dict[Tuple[int, ...], float] = {}
    best_key, best_value = None, np.inf
    for draw in draws:
        key = tuple(top_s_indices(draw, s).tolist())
        if key not in scores:
            scores[key] = score(SelectionVector.from_indices(model.m, key))
        if scores[key] < best_value:
            best_key, best_value = key, scores[key]

    logger.debug(f"Randomisation visited {len(scores)} distinct patterns out of {N} draws.")
    return RoundingResult(
        selection=SelectionVector.from_indices(model.m, best_key, budget=s),
        objective=best_value,
        sample_count=N,
    )


def top_s_round(
    sol: SdpSolution,
    model: MeasurementModel,
    decomp: Optional[CovDecomposition],
    s: int,
    objective: RoundingObjective = "exact",
) -> RoundingResult:
    """Keep the `s` largest relaxed entries, no sampling."""
    _check_budget(model, s)
    selection = SelectionVector.from_indices(
        model.m, top_s_indices(sol.w_relaxed, s), budget=s
    )
    value = _scorer(model, decomp, objective)(selection)
    return RoundingResult(selection=selection, objective=value, sample_count=0)


def select_sdr(
    model: MeasurementModel,
    s: int,
    kind: ProblemKind = "general",
    randomize: bool = True,
    samples: int = 100,
    seed: int = 0,
    tol: float = 1e-6,
    solver: Optional[str] = None,
    decomp: Optional[CovDecomposition] = None,
) -> Tuple[RoundingResult, SdpSolution]:
    """Build, solve and round one relaxation.

    The weak relaxation is rounded against the weak objective, the others against
    the exact one. The box relaxation is always rounded by top-s.
    """
    if kind != "weak" and decomp is None:
        decomp = decompose_covariance(model.noise_cov)
    if kind == "general":
        problem = build_sdp_general(model, decomp, s)
    elif kind == "weak":
        problem = build_sdp_weak(model, s)
    elif kind == "box":
        problem = build_sdp_box(model, decomp, s)
    else:
        raise ValidationError(f"unknown relaxation '{kind}'")

    solution = solve_sdp(problem, tol=tol, solver=solver)
    objective = "weak" if kind == "weak" else "exact"
    if randomize and kind != "box":
        result = randomize_round(
            solution, model, decomp, s, N=samples, seed=seed, objective=objective
        )
    else:
        result = top_s_round(solution, model, decomp, s, objective=objective)
    return result, solution
