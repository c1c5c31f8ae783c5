"""Mutual unbiasedness: overlaps, defects, and enumeration of MU vectors.

An MU vector of a set of bases is a dephased unit vector whose overlap with
every column of the identity and of each basis has modulus ``1/sqrt(d)``.
Being MU to the identity forces ``v_k = exp(i theta_k) / sqrt(d)``, so the
search runs over the phases ``theta_1 .. theta_{d-1}`` (``theta_0 = 0``).
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, DomainError
from .matcore import OMEGA, dephase_vector, fourier, is_complex_permutation
from .validation import (
    check_random_state,
    check_tolerance,
    check_unit_vector,
    check_unitary,
)

# enumerate the whole phase grid when it has at most this many points
MAX_GRID_POINTS = 2 ** 14


def mu_value(u, v):
    """``|<u|v>|`` for two unit vectors of equal length."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.ndim != 1 or u.shape != v.shape:
        raise DimensionError(f"vectors must have equal length, got {u.shape} and {v.shape}")
    check_unit_vector(u, name="u")
    check_unit_vector(v, name="v")
    return float(abs(np.vdot(u, v)))


def overlap_deviation(A, B):
    """Max over column pairs of ``| |<a_i|b_j>| - 1/sqrt(d) |`` (no validation)."""
    d = A.shape[0]
    return float(np.max(np.abs(np.abs(A.conj().T @ B) - 1 / np.sqrt(d))))


def mu_defect(A, B, tol=None):
    """Largest deviation of a cross-basis overlap modulus from ``1/sqrt(d)``."""
    tol = check_tolerance(tol)
    A = check_unitary(A, tol, name="A")
    B = check_unitary(B, tol, name="B")
    if A.shape != B.shape:
        raise DimensionError(f"A and B have different orders {A.shape} and {B.shape}")
    return overlap_deviation(A, B)


@dataclass
class MuEnumeration:
    """Result of an MU-vector search.

    ``exhaustive`` is only ever set by closed-form branches. ``continuum`` is
    a heuristic verdict; ``method`` says which branch produced the result.
    """

    vectors: list
    exhaustive: bool
    continuum: bool
    residuals: list
    method: str = "grid"
    cluster_counts: list = field(default_factory=list)

    def __len__(self):
        return len(self.vectors)

    def to_json(self):
        from .serialize import complex_to_json

        return {
            "schema": "mublab/mu-enumeration/v1",
            "vectors": [[complex_to_json(z) for z in v] for v in self.vectors],
            "exhaustive": bool(self.exhaustive),
            "continuum": bool(self.continuum),
            "heuristic": not self.exhaustive,
            "residuals": [float(r) for r in self.residuals],
            "method": self.method,
            "cluster_counts": [int(c) for c in self.cluster_counts],
        }


def _closed_form(U, tol):
    """Known answers for the order-2 and order-3 Fourier matrices."""
    d = U.shape[0]
    if d == 2:
        vecs = np.array([[1, 1j], [1, -1j]]) / np.sqrt(2)
    elif d == 3:
        w = OMEGA
        M = np.array([[1, 1, 1, 1, 1, 1],
                      [w, w ** 2, 1, w ** 2, w, 1],
                      [w, 1, w ** 2, w ** 2, 1, w]]) / np.sqrt(3)
        vecs = M.T
    else:
        return None
    F = fourier(d)
    # same basis as F up to column order and phases
    if not is_complex_permutation(F.conj().T @ U, tol.search_tol):
        return None
    return [v.copy() for v in vecs]


def _is_identity_basis(B, tol):
    return is_complex_permutation(B, tol.search_tol)


def _residuals(theta, A):
    """Residuals ``|z_j|^2 - 1/d`` and their Jacobian for phase batches ``theta`` (N, d-1)."""
    d = A.shape[1]
    full = np.concatenate([np.zeros((theta.shape[0], 1)), theta], axis=1)
    v = np.exp(1j * full) / np.sqrt(d)                      # (N, d)
    z = v @ A.T                                             # (N, K)
    r = np.abs(z) ** 2 - 1.0 / d
    dz = 1j * A[None, :, 1:] * v[:, None, 1:]               # (N, K, d-1)
    J = 2 * np.real(np.conj(z)[:, :, None] * dz)
    return r, J


def _batch_lm(theta, A, max_iter=200):
    """Levenberg-Marquardt on every row of ``theta`` at once.

    Rows leave the active set once converged or once the damping saturates.
    """
    theta = theta.copy()
    n, m = theta.shape
    lam = np.full(n, 1e-3)
    r, J = _residuals(theta, A)
    cost = np.sum(r ** 2, axis=1)
    eye = np.eye(m)
    active = np.flatnonzero(cost > 1e-30)
    for _ in range(max_iter):
        if not active.size:
            break
        Ja, ra = J[active], r[active]
        H = np.einsum("nki,nkj->nij", Ja, Ja) + lam[active, None, None] * eye
        g = np.einsum("nki,nk->ni", Ja, ra)
        trial = theta[active] - np.linalg.solve(H, g[:, :, None])[:, :, 0]
        r_t, J_t = _residuals(trial, A)
        cost_t = np.sum(r_t ** 2, axis=1)
        better = cost_t < cost[active]
        acc = active[better]
        theta[acc], r[acc], J[acc], cost[acc] = trial[better], r_t[better], J_t[better], cost_t[better]
        lam[active] = np.where(better, np.maximum(lam[active] / 3, 1e-12), lam[active] * 4)
        active = active[(cost[active] > 1e-30) & (lam[active] < 1e8)]
    return theta, r, J


def _cluster(vectors, radius):
    """Greedy clustering by max-entry distance; returns member index lists."""
    reps = np.empty((0, vectors.shape[1]), dtype=complex)
    members = []
    for k, v in enumerate(vectors):
        if reps.shape[0]:
            dist = np.max(np.abs(reps - v), axis=1)
            idx = int(np.argmin(dist))
            if dist[idx] <= radius:
                members[idx].append(k)
                continue
        reps = np.vstack([reps, v])
        members.append([k])
    return members


def _starts(d, depth, n_starts, rng):
    m = d - 1
    res = 2 ** depth
    if res ** m <= MAX_GRID_POINTS:
        axes = [2 * np.pi * np.arange(res) / res] * m
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
        return grid, "grid"
    pts = rng.integers(0, res, size=(n_starts, m)) * (2 * np.pi / res)
    return pts, "random-grid"


def _solve(A, d, depth, n_starts, rng, tol):
    starts, method = _starts(d, depth, n_starts, rng)
    theta, r, J = _batch_lm(starts, A)
    dev = _mu_dev_from_theta(theta, A)
    keep = dev <= tol.search_tol
    theta, J = theta[keep], J[keep]
    full = np.concatenate([np.zeros((theta.shape[0], 1)), theta], axis=1)
    vecs = np.exp(1j * full) / np.sqrt(d)
    groups = _cluster(vecs, 10 * tol.search_tol)
    reps = []
    for g in groups:
        mean = vecs[g].mean(axis=0)
        reps.append(np.angle(mean[1:] / mean[0]))
    if reps:
        rt, _, Jt = _batch_lm(np.array(reps), A)
    else:
        rt, Jt = np.zeros((0, d - 1)), np.zeros((0, A.shape[0], d - 1))
    return rt, Jt, method


def _mu_dev_from_theta(theta, A):
    d = A.shape[1]
    full = np.concatenate([np.zeros((theta.shape[0], 1)), theta], axis=1)
    v = np.exp(1j * full) / np.sqrt(d)
    z = v @ A.T
    if z.shape[1] == 0:
        return np.zeros(theta.shape[0])
    return np.max(np.abs(np.abs(z) - 1 / np.sqrt(d)), axis=1)


def mu_vectors_multi(bases, tol=None, grid_depth=7, n_starts=200, random_state=0,
                     include_identity=True):
    """Enumerate dephased unit vectors MU to the identity and to every basis in ``bases``.

    With ``include_identity=False`` the first basis takes the role of the
    identity: coordinates are rotated so that it becomes ``I_d`` and the
    returned vectors are mapped back. Phase starts come from the full
    ``2**grid_depth`` grid when it is small enough, otherwise ``n_starts``
    random grid points; each start is polished by Levenberg-Marquardt and the
    results are clustered. The search is repeated at two coarser settings and
    ``continuum`` is set when the cluster count grows strictly, or when a
    solution has a rank-deficient Jacobian (a tangent direction of solutions).
    """
    tol = check_tolerance(tol)
    bases = [check_unitary(B, tol, name=f"bases[{k}]") for k, B in enumerate(bases)]
    if not bases:
        raise DomainError("need at least one basis")
    d = bases[0].shape[0]
    if any(B.shape != (d, d) for B in bases):
        raise DimensionError("all bases must have the same order")
    if not 2 <= d <= 6:
        raise DomainError(f"order must be between 2 and 6, got {d}")
    frame = np.eye(d, dtype=complex)
    if not include_identity:
        frame = bases[0]
        bases = [frame.conj().T @ B for B in bases[1:]]
    rest = [B for B in bases if not _is_identity_basis(B, tol)]

    if len(rest) == 1:
        vecs = _closed_form(rest[0], tol)
        if vecs is not None:
            vecs = [dephase_vector(frame @ v) for v in vecs]
            res = [_mu_dev(v, frame, rest, d) for v in vecs]
            return MuEnumeration(vecs, exhaustive=True, continuum=False, residuals=res,
                                 method="closed-form")

    if not rest:
        return MuEnumeration([], exhaustive=False, continuum=True, residuals=[],
                             method="unconstrained")

    A = np.concatenate([B.conj().T for B in rest], axis=0)     # rows <b_j|
    rng = check_random_state(random_state)
    counts = []
    levels = [(max(grid_depth - 2, 1), max(n_starts // 4, 1)),
              (max(grid_depth - 1, 1), max(n_starts // 2, 1)),
              (grid_depth, n_starts)]
    for depth, n in levels:
        theta, J, method = _solve(A, d, depth, n, rng, tol)
        counts.append(theta.shape[0])
    full = np.concatenate([np.zeros((theta.shape[0], 1)), theta], axis=1)
    vecs = [np.exp(1j * t) / np.sqrt(d) for t in full]
    tangent = False
    for Jk in J:
        sv = np.linalg.svd(Jk, compute_uv=False)
        if sv.size and sv[-1] <= tol.search_tol:
            tangent = True
    continuum = tangent or (counts[0] < counts[1] < counts[2])
    out = [dephase_vector(frame @ v) for v in vecs]
    res = [_mu_dev(v, frame, rest, d) for v in out]
    keep = [k for k, r in enumerate(res) if r <= tol.search_tol]
    return MuEnumeration([out[k] for k in keep], exhaustive=False, continuum=continuum,
                         residuals=[res[k] for k in keep], method=method, cluster_counts=counts)


def _mu_dev(v, frame, rest, d):
    """MU deviation of ``v`` against the reference frame and the (rotated) bases."""
    w = frame.conj().T @ v
    dev = np.max(np.abs(np.abs(w) - 1 / np.sqrt(d)))
    for B in rest:
        dev = max(dev, np.max(np.abs(np.abs(B.conj().T @ w) - 1 / np.sqrt(d))))
    return float(dev)


def mu_vectors(U, tol=None, grid_depth=7, n_starts=200, random_state=0):
    """MU vectors of a single unitary ``U``; see :func:`mu_vectors_multi`."""
    return mu_vectors_multi([U], tol=tol, grid_depth=grid_depth, n_starts=n_starts,
                            random_state=random_state)


@dataclass
class FactorizationCheck:
    """Both sides of the product-state MU factorization.

    ``holds`` is true when the two sides agree (both MU or both not MU).
    """

    holds: bool
    product_mu: bool
    factors_mu: bool
    product_deviation: float
    factor_deviations: tuple


def check_product_mu_factorization(p, B, tol=None):
    """Compare ``p`` MU to a product basis with its factors MU to the factor sets."""
    from .bipartite import product_factors, schmidt_2x3

    tol = check_tolerance(tol)
    pv = p if hasattr(p, "factor_a") else schmidt_2x3(p, tol)
    if pv.second_coefficient > tol.search_tol:
        raise DomainError("p is not a product vector")
    A, Bf = product_factors(B, tol)
    full = np.max(np.abs(np.abs(B.conj().T @ pv.full) - 1 / np.sqrt(6)))
    dev_a = max(abs(abs(np.vdot(x, pv.a)) - 1 / np.sqrt(2)) for x in A)
    dev_b = max(abs(abs(np.vdot(y, pv.b)) - 1 / np.sqrt(3)) for y in Bf)
    product_mu = bool(full <= tol.search_tol)
    factors_mu = bool(dev_a <= tol.search_tol and dev_b <= tol.search_tol)
    return FactorizationCheck(product_mu == factors_mu, product_mu, factors_mu,
                              float(full), (float(dev_a), float(dev_b)))


def solve_mu_to_columns(U, columns, random_state=0, tol=None):
    """A unit vector whose overlap with each listed column of ``U`` has modulus ``1/sqrt(d)``.

    Solved from a random start by nonlinear least squares on
    ``|<u_k|v>|^2 - 1/d`` plus the norm constraint; returns ``(v, residual)``.
    """
    from scipy.optimize import least_squares

    tol = check_tolerance(tol)
    U = check_unitary(U, tol, name="U")
    d = U.shape[0]
    cols = U[:, list(columns)]
    rng = check_random_state(random_state)

    def resid(x):
        v = x[:d] + 1j * x[d:]
        return np.concatenate([np.abs(cols.conj().T @ v) ** 2 - 1 / d, [np.vdot(v, v).real - 1]])

    x0 = rng.standard_normal(2 * d)
    x0 /= np.linalg.norm(x0)
    sol = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="trf")
    v = sol.x[:d] + 1j * sol.x[d:]
    return v / np.linalg.norm(v), float(np.max(np.abs(resid(sol.x))))
