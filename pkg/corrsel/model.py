"""Measurement model, noise covariance handling and Fisher information.

A model has m sensors observing n parameters through `y = H x + v` with prior
`x ~ N(μ, Σ)` and correlated noise `v ~ N(0, R)`. A selection vector `w`
switches sensors on; the information matrix of the selected subset is
`J_w = Σ⁻¹ + H_wᵀ R_w⁻¹ H_w`, where `R_w` is the noise covariance restricted to the
active sensors (restrict first, then invert).
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from prefect.utilities import logging
from scipy.spatial.distance import cdist

from .exceptions import (
    BudgetError,
    InvalidGeometryError,
    PreconditionError,
    ValidationError,
)
from .utils import (
    check_positive_definite,
    inv_spd,
    min_eigenvalue,
    relative_frobenius,
    solve_spd,
    symmetrize,
)

logger = logging.get_logger(__name__)

DECOMPOSITION_RTOL = 1e-12
DIAGONAL_ATOL = 1e-14


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    prior_mean: np.ndarray
    prior_cov: np.ndarray
    obs_matrix: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        prior_mean = np.array(self.prior_mean, dtype=float).reshape(-1)
        obs_matrix = np.array(np.atleast_2d(self.obs_matrix), dtype=float)
        n = prior_mean.size
        m = obs_matrix.shape[0]
        if obs_matrix.shape[1] != n:
            raise ValidationError(
                f"obs_matrix must have n={n} columns, got {obs_matrix.shape[1]}"
            )
        prior_cov = np.array(check_positive_definite(self.prior_cov, "prior_cov"))
        if prior_cov.shape != (n, n):
            raise ValidationError(f"prior_cov must be {n}x{n}, got {prior_cov.shape}")
        noise_cov = np.array(check_positive_definite(self.noise_cov, "noise_cov"))
        if noise_cov.shape != (m, m):
            raise ValidationError(f"noise_cov must be {m}x{m}, got {noise_cov.shape}")

        object.__setattr__(self, "prior_mean", _frozen(prior_mean))
        object.__setattr__(self, "prior_cov", _frozen(prior_cov))
        object.__setattr__(self, "obs_matrix", _frozen(obs_matrix))
        object.__setattr__(self, "noise_cov", _frozen(noise_cov))

    @property
    def m(self) -> int:
        return self.obs_matrix.shape[0]

    @property
    def n(self) -> int:
        return self.obs_matrix.shape[1]

    @cached_property
    def prior_info(self) -> np.ndarray:
        """Σ⁻¹"""
        return _frozen(inv_spd(self.prior_cov, "prior_cov"))

    @cached_property
    def noise_info(self) -> np.ndarray:
        """R⁻¹ of the full network."""
        return _frozen(inv_spd(self.noise_cov, "noise_cov"))

    def with_noise_cov(self, noise_cov: np.ndarray) -> "MeasurementModel":
        return MeasurementModel(
            self.prior_mean, self.prior_cov, self.obs_matrix, noise_cov
        )

    def with_prior_cov(self, prior_cov: np.ndarray) -> "MeasurementModel":
        return MeasurementModel(
            self.prior_mean, prior_cov, self.obs_matrix, self.noise_cov
        )


@dataclass(frozen=True, eq=False)
class SelectionVector:
    """A Boolean activation pattern, optionally tied to a budget."""

    w: np.ndarray
    budget: Optional[int] = None

    def __post_init__(self):
        w = np.array(self.w).reshape(-1)
        if not np.all((w == 0) | (w == 1)):
            raise ValidationError("selection entries must be 0 or 1")
        w = _frozen(w.astype(np.int8))
        object.__setattr__(self, "w", w)
        if self.budget is not None:
            if self.budget < 0:
                raise BudgetError(f"budget must be non-negative, got {self.budget}")
            if self.count > self.budget:
                raise BudgetError(
                    f"{self.count} active sensors exceed the budget of {self.budget}"
                )

    @classmethod
    def zeros(cls, m: int, budget: Optional[int] = None) -> "SelectionVector":
        return cls(np.zeros(m, dtype=np.int8), budget)

    @classmethod
    def ones(cls, m: int, budget: Optional[int] = None) -> "SelectionVector":
        return cls(np.ones(m, dtype=np.int8), budget)

    @classmethod
    def from_indices(
        cls, m: int, indices: Iterable[int], budget: Optional[int] = None
    ) -> "SelectionVector":
        w = np.zeros(m, dtype=np.int8)
        w[list(indices)] = 1
        return cls(w, budget)

    @property
    def m(self) -> int:
        return self.w.size

    @property
    def count(self) -> int:
        return int(self.w.sum())

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.w)

    @property
    def inactive(self) -> np.ndarray:
        return np.flatnonzero(self.w == 0)

    def add(self, j: int) -> "SelectionVector":
        if self.w[j]:
            raise PreconditionError(f"sensor {j} is already active")
        w = self.w.copy()
        w[j] = 1
        return SelectionVector(w, self.budget)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SelectionVector):
            return NotImplemented
        return np.array_equal(self.w, other.w)

    def __hash__(self) -> int:
        return hash(self.w.tobytes())

    def __repr__(self) -> str:
        return f"SelectionVector(active={self.active.tolist()}, m={self.m}, budget={self.budget})"


SelectionLike = Union[SelectionVector, Sequence[int], np.ndarray]


def as_selection(w: SelectionLike, m: int) -> SelectionVector:
    if not isinstance(w, SelectionVector):
        w = SelectionVector(w)
    if w.m != m:
        raise ValidationError(f"selection has {w.m} entries, the model has m={m}")
    return w


@dataclass(frozen=True, eq=False)
class CovDecomposition:
    """Split R = a·I + S with a > 0 and S positive definite."""

    a: float
    s_matrix: np.ndarray

    def __post_init__(self):
        if not self.a > 0:
            raise ValidationError(f"a must be positive, got {self.a}")
        s_matrix = np.array(check_positive_definite(self.s_matrix, "s_matrix"))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "s_matrix", _frozen(s_matrix))

    @cached_property
    def s_inv(self) -> np.ndarray:
        return _frozen(inv_spd(self.s_matrix, "s_matrix"))

    def reconstruct(self) -> np.ndarray:
        return self.a * np.eye(self.s_matrix.shape[0]) + self.s_matrix

    def matches(self, noise_cov: np.ndarray) -> bool:
        return relative_frobenius(self.reconstruct(), noise_cov) <= DECOMPOSITION_RTOL


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    j: np.ndarray

    def __post_init__(self):
        j = np.array(self.j, dtype=float)
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ValidationError(f"Fisher matrix must be square, got {j.shape}")
        object.__setattr__(self, "j", _frozen(symmetrize(j)))

    @property
    def n(self) -> int:
        return self.j.shape[0]

    @cached_property
    def inverse(self) -> np.ndarray:
        """The MSE matrix P_w = J_w⁻¹."""
        return _frozen(inv_spd(self.j, "Fisher matrix"))

    @property
    def trace(self) -> float:
        return float(np.trace(self.j))


@dataclass(frozen=True, eq=False)
class SensorGeometry:
    positions: np.ndarray
    noise_var: float = 1.0
    corr_param: float = 0.1

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise InvalidGeometryError(
                f"positions must be an m x 2 array, got {positions.shape}"
            )
        if not np.all(np.isfinite(positions)):
            raise InvalidGeometryError("sensor positions must be finite")
        if not self.corr_param > 0:
            raise InvalidGeometryError(
                f"corr_param must be positive, got {self.corr_param}"
            )
        if self.noise_var < 0:
            raise ValidationError(f"noise_var must be >= 0, got {self.noise_var}")
        object.__setattr__(self, "positions", _frozen(positions))

    @property
    def m(self) -> int:
        return self.positions.shape[0]


def exp_covariance(geom: SensorGeometry) -> np.ndarray:
    """R_ij = σ_v² exp(−ρ‖β_i − β_j‖₂)."""
    distances = cdist(geom.positions, geom.positions)
    return geom.noise_var * np.exp(-geom.corr_param * distances)


def deploy_sensors(
    m: int, region: float, rng: np.random.Generator, lattice: bool = False
) -> np.ndarray:
    """Place `m` sensors uniformly over a `region` x `region` square.

    With `lattice=True` the positions are distinct integer lattice points,
    otherwise they are continuous uniform.
    """
    if lattice:
        side = int(region)
        if m > side * side:
            raise InvalidGeometryError(f"cannot place {m} sensors on a {side}x{side} lattice")
        cells = rng.choice(side * side, size=m, replace=False)
        return np.column_stack(np.unravel_index(cells, (side, side))).astype(float)
    return rng.uniform(0.0, region, size=(m, 2))


def exponential_instance(
    m: int,
    n: int,
    rho: float,
    rng: np.random.Generator,
    region: float = 50.0,
    lattice: bool = False,
    noise_var: float = 1.0,
    prior_mean: Optional[Sequence[float]] = None,
    prior_var: float = 1.0,
) -> Tuple[MeasurementModel, SensorGeometry]:
    """Random estimation instance with exponentially correlated noise.

    Rows of H are drawn from N(0, I/√n) and the noise covariance comes from
    `exp_covariance` over randomly deployed sensors.

    Args:
        m (int): Number of sensors.
        n (int): Number of parameters.
        rho (float): Correlation parameter; larger means weaker correlation.
        rng (np.random.Generator): Source of randomness.
        region (float, optional): Side of the deployment square. Defaults to 50.
        lattice (bool, optional): Snap sensors to distinct lattice points. Defaults to False.
        noise_var (float, optional): σ_v². Defaults to 1.
        prior_mean (Sequence[float], optional): μ. Defaults to 10 in every component.
        prior_var (float, optional): Σ = prior_var · I. Defaults to 1.

    Returns:
        Tuple[MeasurementModel, SensorGeometry]: The model and the geometry behind R.
    """
    positions = deploy_sensors(m, region, rng, lattice=lattice)
    geometry = SensorGeometry(positions, noise_var=noise_var, corr_param=rho)
    obs_matrix = rng.normal(0.0, n ** -0.25, size=(m, n))
    if prior_mean is None:
        prior_mean = np.full(n, 10.0)
    model = MeasurementModel(
        prior_mean=prior_mean,
        prior_cov=prior_var * np.eye(n),
        obs_matrix=obs_matrix,
        noise_cov=exp_covariance(geometry),
    )
    return model, geometry


def decompose_covariance(R: np.ndarray, a: Optional[float] = None) -> CovDecomposition:
    """Split R into a·I + S, by default with a = λ_min(R)/2.

    Raises:
        NotPositiveDefiniteError: If R is not positive definite.
        ValidationError: If an explicit `a` is not in (0, λ_min(R)).
    """
    R = check_positive_definite(R, "noise_cov")
    smallest = min_eigenvalue(R)
    if a is None:
        a = smallest / 2
    elif not 0 < a < smallest:
        raise ValidationError(f"a must lie in (0, {smallest}), got {a}")
    return CovDecomposition(a, R - a * np.eye(R.shape[0]))


def measurement_information(
    obs_matrix: np.ndarray, noise_cov: np.ndarray, w: SelectionVector
) -> np.ndarray:
    """H_wᵀ R_w⁻¹ H_w, zero for an empty selection."""
    active = w.active
    n = obs_matrix.shape[1]
    if active.size == 0:
        return np.zeros((n, n))
    h_w = obs_matrix[active]
    r_w = noise_cov[np.ix_(active, active)]
    return symmetrize(h_w.T @ solve_spd(r_w, h_w, "truncated noise covariance"))


def measurement_information_closed_form(
    obs_matrix: np.ndarray, decomp: CovDecomposition, w: SelectionVector
) -> np.ndarray:
    """HᵀS⁻¹H − HᵀS⁻¹(S⁻¹ + a⁻¹diag(w))⁻¹S⁻¹H."""
    s_inv = decomp.s_inv
    inner = s_inv + np.diag(w.w / decomp.a)
    weighted = s_inv @ obs_matrix
    correction = weighted.T @ solve_spd(inner, weighted, "closed-form inner matrix")
    return symmetrize(obs_matrix.T @ weighted - correction)


def fisher_truncated(model: MeasurementModel, w: SelectionLike) -> FisherMatrix:
    w = as_selection(w, model.m)
    gain = measurement_information(model.obs_matrix, model.noise_cov, w)
    return FisherMatrix(model.prior_info + gain)


def fisher_closed_form(
    model: MeasurementModel, decomp: CovDecomposition, w: SelectionLike
) -> FisherMatrix:
    """Fisher information as an explicit function of w through R = aI + S."""
    w = as_selection(w, model.m)
    if not decomp.matches(model.noise_cov):
        raise PreconditionError("the decomposition does not reconstruct noise_cov")
    gain = measurement_information_closed_form(model.obs_matrix, decomp, w)
    return FisherMatrix(model.prior_info + gain)


def fisher_uncorrelated(model: MeasurementModel, w: SelectionLike) -> FisherMatrix:
    w = as_selection(w, model.m)
    R = model.noise_cov
    off_diagonal = R - np.diag(np.diag(R))
    if np.max(np.abs(off_diagonal), initial=0.0) > DIAGONAL_ATOL:
        raise PreconditionError("noise_cov is not diagonal")
    weights = w.w / np.diag(R)
    H = model.obs_matrix
    return FisherMatrix(model.prior_info + (H.T * weights) @ H)


def objective_trace_inverse(J: Union[FisherMatrix, np.ndarray]) -> float:
    """tr(J⁻¹), the MMSE of the Bayesian estimator."""
    if not isinstance(J, FisherMatrix):
        J = FisherMatrix(J)
    return float(np.trace(J.inverse))


def mmse_estimate(
    model: MeasurementModel, w: SelectionLike, measurements: np.ndarray
) -> np.ndarray:
    """Linear MMSE estimates from the active measurements.

    Args:
        model (MeasurementModel): The estimation model.
        w (SelectionLike): Active sensors.
        measurements (np.ndarray): Active readings, shape (k,) or (trials, k).

    Returns:
        np.ndarray: Estimates with shape (n,) or (trials, n).
    """
    w = as_selection(w, model.m)
    measurements = np.asarray(measurements, dtype=float)
    active = w.active
    if active.size == 0:
        return np.broadcast_to(
            model.prior_mean, measurements.shape[:-1] + (model.n,)
        ).copy()
    h_w = model.obs_matrix[active]
    innovation_cov = h_w @ model.prior_cov @ h_w.T + model.noise_cov[
        np.ix_(active, active)
    ]
    residual = measurements - h_w @ model.prior_mean
    weights = solve_spd(innovation_cov, residual.T, "innovation covariance")
    return model.prior_mean + (model.prior_cov @ h_w.T @ weights).T


def empirical_mse(
    model: MeasurementModel, w: SelectionLike, trials: int, rng: np.random.Generator
) -> float:
    """Monte Carlo mean of ‖x̂ − x‖² for the MMSE estimator of the selected sensors."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    w = as_selection(w, model.m)
    x = rng.multivariate_normal(model.prior_mean, model.prior_cov, size=trials)
    noise = rng.multivariate_normal(np.zeros(model.m), model.noise_cov, size=trials)
    readings = x @ model.obs_matrix.T + noise
    estimates = mmse_estimate(model, w, readings[:, w.active])
    return float(np.mean(np.sum((estimates - x) ** 2, axis=1)))
