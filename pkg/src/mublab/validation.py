"""Input validation helpers, in the spirit of ``sklearn.utils.validation``.

Every public operation funnels its matrix arguments through these checks so
errors are raised uniformly and name the offending operand.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, DomainError, NormalizationError


@dataclass(frozen=True)
class Tolerance:
    """Pair of tolerances used across the library.

    ``predicate_tol`` bounds max-absolute-entry deviations in exact predicates
    (unitarity, CHM, reconstruction). ``search_tol`` is the looser threshold for
    quantities produced by numerical search or SVD (ray grouping, Schmidt
    rank, pattern detection).
    """

    predicate_tol: float = 1e-9
    search_tol: float = 1e-6

    def __post_init__(self):
        if not self.predicate_tol > 0:
            raise ValueError("predicate_tol must be positive")
        if not self.search_tol >= self.predicate_tol:
            raise ValueError("search_tol must be >= predicate_tol")


DEFAULT_TOL = Tolerance()


def check_tolerance(tol):
    if tol is None:
        return DEFAULT_TOL
    if isinstance(tol, Tolerance):
        return tol
    if isinstance(tol, (int, float)):
        return Tolerance(predicate_tol=float(tol), search_tol=max(float(tol), DEFAULT_TOL.search_tol))
    raise TypeError(f"cannot interpret {tol!r} as a Tolerance")


def check_matrix(M, name="matrix", square=False, order=None):
    """Return ``M`` as a 2-D complex128 array, validating its shape."""
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if square and M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if order is not None and M.shape != (order, order):
        raise DimensionError(f"{name} must have shape ({order}, {order}), got {M.shape}")
    return M


def check_vector(v, name="vector", dim=None):
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"{name} must be a non-empty 1-D array, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise DimensionError(f"{name} must have length {dim}, got {v.size}")
    return v


def check_unit_vector(v, tol=None, name="vector", dim=None):
    tol = check_tolerance(tol)
    v = check_vector(v, name=name, dim=dim)
    if abs(np.linalg.norm(v) - 1.0) > tol.predicate_tol:
        raise NormalizationError(f"{name} has norm {np.linalg.norm(v):.12g}, expected 1")
    return v


def unitarity_residual(M):
    return float(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[1]))))


def check_unitary(M, tol=None, name="matrix", order=None):
    tol = check_tolerance(tol)
    M = check_matrix(M, name=name, square=True, order=order)
    res = unitarity_residual(M)
    if res > tol.predicate_tol:
        raise DomainError(f"{name} is not unitary (max |M^dag M - I| = {res:.3g})")
    return M


def check_chm(M, tol=None, name="matrix", order=None):
    from .matcore import is_chm

    tol = check_tolerance(tol)
    M = check_matrix(M, name=name, square=True, order=order)
    if not is_chm(M, tol):
        raise DomainError(f"{name} is not a complex Hadamard matrix")
    return M


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
