from typing import List, Sequence, Union

import numpy as np
import scipy.linalg

from .exceptions import IllConditionedError, NotPositiveDefiniteError

COND_LIMIT = 1e12

Seed = Union[int, Sequence[int], np.random.SeedSequence]


def symmetrize(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2


def min_eigenvalue(a: np.ndarray) -> float:
    return float(scipy.linalg.eigvalsh(symmetrize(a))[0])


def check_positive_definite(a: np.ndarray, name: str) -> np.ndarray:
    """Return `a` as a float array after checking it is symmetric positive definite.

    Args:
        a (np.ndarray): The candidate matrix.
        name (str): Used in error messages.

    Raises:
        NotPositiveDefiniteError: If `a` is not symmetric or its smallest eigenvalue is not positive.

    Returns:
        np.ndarray: The validated matrix.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotPositiveDefiniteError(f"{name} must be a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if not np.allclose(a, a.T, rtol=0, atol=1e-10 * scale):
        raise NotPositiveDefiniteError(f"{name} is not symmetric")
    if a.size and min_eigenvalue(a) <= 0:
        raise NotPositiveDefiniteError(f"{name} is not positive definite")
    return a


def inv_spd(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Invert a symmetric positive definite matrix, refusing ill-conditioned input."""
    a = symmetrize(np.asarray(a, dtype=float))
    if np.linalg.cond(a) > COND_LIMIT:
        raise IllConditionedError(f"{name} is numerically singular")
    try:
        factor = scipy.linalg.cho_factor(a)
    except np.linalg.LinAlgError as e:
        raise IllConditionedError(f"{name} is not positive definite") from e
    return symmetrize(scipy.linalg.cho_solve(factor, np.eye(a.shape[0])))


def solve_spd(a: np.ndarray, b: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Solve `a x = b` for a symmetric positive definite `a`, refusing ill-conditioned input."""
    a = symmetrize(np.asarray(a, dtype=float))
    if np.linalg.cond(a) > COND_LIMIT:
        raise IllConditionedError(f"{name} is numerically singular")
    try:
        return scipy.linalg.solve(a, b, assume_a="pos")
    except np.linalg.LinAlgError as e:
        raise IllConditionedError(f"{name} is not positive definite") from e


def relative_frobenius(a: np.ndarray, b: np.ndarray) -> float:
    """‖a − b‖_F / max(‖b‖_F, tiny)."""
    denominator = max(float(np.linalg.norm(b)), np.finfo(float).tiny)
    return float(np.linalg.norm(a - b)) / denominator


def top_s_indices(values: np.ndarray, s: int) -> np.ndarray:
    """Indices of the `s` largest entries; ties go to the lower index."""
    values = np.asarray(values, dtype=float)
    order = np.lexsort((np.arange(values.size), -values))
    return np.sort(order[:s])


def make_rng(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def spawn_seeds(seed: Seed, count: int) -> List[np.random.SeedSequence]:
    """Split one seed into `count` independent child streams."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(count)
