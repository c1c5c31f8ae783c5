"""Product structure of C^2 (x) C^3.

Vectors of length 6 are read in the ordering of ``np.kron(a, b)`` with
``a`` in C^2 and ``b`` in C^3, i.e. index ``3 * i + j`` holds ``|i, j>``.
"""
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import least_squares

from .exceptions import DomainError, InconsistencyError
from .matcore import dephase
from .validation import (
    check_matrix,
    check_tolerance,
    check_unit_vector,
    check_unitary,
)

FAMILIES = ("P1", "P2", "P3")


@dataclass(frozen=True)
class ProductVector:
    """A 6-dim vector together with its 2x3 Schmidt data.

    ``coefficients`` are non-increasing and truncated to ``schmidt_rank``;
    ``factor_a[k]`` and ``factor_b[k]`` are the matching unit Schmidt vectors.
    """

    full: np.ndarray
    schmidt_rank: int
    coefficients: tuple
    factor_a: tuple
    factor_b: tuple
    second_coefficient: float = 0.0

    @property
    def a(self):
        return self.factor_a[0]

    @property
    def b(self):
        return self.factor_b[0]

    def reconstruct(self):
        out = np.zeros(6, dtype=complex)
        for s, a, b in zip(self.coefficients, self.factor_a, self.factor_b):
            out += s * np.kron(a, b)
        return out


def schmidt_2x3(v, tol=None):
    """Schmidt decomposition of a unit vector in C^2 (x) C^3 via the SVD of its 2x3 reshape."""
    tol = check_tolerance(tol)
    v = check_unit_vector(v, tol, name="v", dim=6)
    U, s, Vh = np.linalg.svd(v.reshape(2, 3))
    rank = 1 if s[1] <= tol.predicate_tol else 2
    return ProductVector(
        full=v,
        schmidt_rank=rank,
        coefficients=tuple(float(x) for x in s[:rank]),
        factor_a=tuple(U[:, k].copy() for k in range(rank)),
        factor_b=tuple(Vh[k, :].copy() for k in range(rank)),
        second_coefficient=float(s[1]),
    )


def is_product(v, tol=None):
    tol = check_tolerance(tol)
    return schmidt_2x3(v, tol).second_coefficient <= tol.search_tol


def second_schmidt_coefficients(B):
    """Second Schmidt coefficient of every column of a 6 x n matrix."""
    B = check_matrix(B)
    blocks = B.T.reshape(-1, 2, 3)
    return np.linalg.svd(blocks, compute_uv=False)[:, 1]


def count_product_columns(B, tol=None):
    """Return ``(count, indices)`` of the product columns of an order-6 unitary."""
    tol = check_tolerance(tol)
    B = check_unitary(B, tol, name="B", order=6)
    idx = [int(k) for k in np.flatnonzero(second_schmidt_coefficients(B) <= tol.search_tol)]
    return len(idx), idx


# ---------------------------------------------------------------------------
# product vectors inside a subspace


@dataclass
class SpanProducts:
    """Product vectors found in a subspace.

    When ``continuum`` is set the list is only a finite sample of an
    infinite family; the flag comes from a numerical heuristic.
    """

    vectors: list
    continuum: bool
    kernel_dims: list = field(default_factory=list)
    cluster_counts: list = field(default_factory=list)


def _bloch_grid(depth):
    n_theta = 2 ** depth + 1
    n_phi = 2 ** (depth + 1)
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    a = np.stack([np.cos(T / 2), np.exp(1j * P) * np.sin(T / 2)], axis=-1)
    return a  # (n_theta, n_phi, 2)


def _kernel_op(Pc, a):
    """``Pc @ (a (x) I_3)`` for a batch of ``a``; shape (..., 6, 3)."""
    lift = a[..., :, None, None] * np.eye(3)          # (..., 2, 3, 3)
    lift = lift.reshape(a.shape[:-1] + (6, 3))
    return Pc @ lift


def _grid_minima(f):
    """Indices of local minima of f on a (theta, phi) grid, phi periodic."""
    n_theta = f.shape[0]
    pad = np.pad(f, ((1, 1), (0, 0)), constant_values=np.inf)
    ok = (f <= pad[:-2]) & (f <= pad[2:]) & (f <= np.roll(f, 1, axis=1)) & (f <= np.roll(f, -1, axis=1))
    ok[0, 1:] = False             # poles: one representative each
    ok[n_theta - 1, 1:] = False
    return np.argwhere(ok)


def _polish_product(Pc, a0, b0):
    def pack(a, b):
        return np.concatenate([a.real, a.imag, b.real, b.imag])

    def unpack(x):
        return x[0:2] + 1j * x[2:4], x[4:7] + 1j * x[7:10]

    def resid(x):
        a, b = unpack(x)
        r = Pc @ np.kron(a, b)
        return np.concatenate([r.real, r.imag, [np.vdot(a, a).real - 1, np.vdot(b, b).real - 1]])

    sol = least_squares(resid, pack(a0, b0), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    a, b = unpack(sol.x)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return a, b, float(np.max(np.abs(Pc @ np.kron(a, b))))


def _span_search(S, Pc, depth, tol):
    a_grid = _bloch_grid(depth)
    f = np.linalg.svd(_kernel_op(Pc, a_grid), compute_uv=False)[..., -1]
    mins = _grid_minima(f)
    order = np.argsort(f[mins[:, 0], mins[:, 1]], kind="stable")
    cap = 2 ** (depth + 2)
    found = []   # list of (a, b)
    for i, j in mins[order][:cap]:
        a0 = a_grid[i, j]
        _, _, Vh = np.linalg.svd(_kernel_op(Pc, a0))
        b0 = Vh[-1].conj()
        a, b, res = _polish_product(Pc, a0, b0)
        if res > tol.search_tol:
            continue
        p = np.kron(a, b)
        if any(abs(np.vdot(np.kron(qa, qb), p)) >= 1 - 10 * tol.search_tol for qa, qb in found):
            continue
        found.append((a, b))
    return found


def product_vectors_in_span(S, tol=None, grid_depth=5):
    """Find product vectors in the span of the orthonormal columns of ``S``.

    A product ``a (x) b`` lies in the span iff ``b`` is in the kernel of
    ``Pc (a (x) I_3)`` with ``Pc`` the projector onto the orthogonal
    complement. The C^2 factor is scanned on a Bloch-sphere grid, grid minima
    of the smallest singular value are polished by Levenberg-Marquardt on the
    product residual, and solutions are clustered by ray. A two-dimensional
    kernel at a solution, or a cluster count that grows strictly over two grid
    refinements, sets ``continuum``.
    """
    tol = check_tolerance(tol)
    S = check_matrix(S, name="S")
    if S.shape[0] != 6 or not 1 <= S.shape[1] <= 6:
        raise DomainError(f"S must be 6 x k with 1 <= k <= 6, got {S.shape}")
    gram = S.conj().T @ S
    if np.max(np.abs(gram - np.eye(S.shape[1]))) > tol.predicate_tol:
        raise DomainError("columns of S are not orthonormal")
    Pc = np.eye(6) - S @ S.conj().T
    if S.shape[1] == 6:
        sample = [schmidt_2x3(np.kron(np.eye(2)[i], np.eye(3)[j]), tol) for i in range(2) for j in range(3)]
        return SpanProducts(sample, True, [3] * 6, [])

    counts = []
    found = []
    for depth in (max(grid_depth - 2, 1), max(grid_depth - 1, 2), grid_depth):
        found = _span_search(S, Pc, depth, tol)
        counts.append(len(found))
    vectors, kdims = [], []
    for a, b in found:
        sv, Vh = np.linalg.svd(_kernel_op(Pc, a))[1:]
        kdim = int(np.sum(sv <= 10 * tol.search_tol))
        kdims.append(kdim)
        bs = [b] if kdim <= 1 else [Vh[-1 - k].conj() for k in range(kdim)]
        for bb in bs:
            p = S @ (S.conj().T @ np.kron(a, bb))
            vectors.append(schmidt_2x3(p / np.linalg.norm(p), tol))
    continuum = any(k >= 2 for k in kdims) or (counts[0] < counts[1] < counts[2])
    return SpanProducts(vectors, continuum, kdims, counts)


# ---------------------------------------------------------------------------
# classification of product-vector bases


def perp2(v):
    """The orthogonal complement ``(-v1*, v0*)`` of a unit vector in C^2."""
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def family_basis(family, **params):
    """Columns of the canonical product basis of ``family`` (no gauge checks)."""
    e2, e3 = np.eye(2), np.eye(3)
    if family == "P1":
        a = np.asarray(params["a"], dtype=complex)
        cols = [np.kron(e2[0], e3[j]) for j in range(3)] + [np.kron(e2[1], a[:, i]) for i in range(3)]
    elif family == "P2":
        b = np.asarray(params["b"], dtype=complex)
        c = np.asarray(params["c"], dtype=complex)
        b3 = np.append(b, 0)
        bp3 = np.append(perp2(b), 0)
        cols = [np.kron(e2[0], e3[0]), np.kron(e2[0], e3[1]),
                np.kron(e2[1], b3), np.kron(e2[1], bp3),
                np.kron(c, e3[2]), np.kron(perp2(c), e3[2])]
    elif family == "P3":
        d = np.asarray(params["d"], dtype=complex)
        e = np.asarray(params["e"], dtype=complex)
        ep = perp2(e)
        if abs(ep[0]) > 0:
            ep = ep * np.conj(ep[0]) / abs(ep[0])
        cols = [np.kron(e2[0], e3[0]), np.kron(e2[1], e3[0]),
                np.kron(d, e3[1]), np.kron(perp2(d), e3[1]),
                np.kron(e, e3[2]), np.kron(ep, e3[2])]
    else:
        raise ValueError(f"unknown family {family!r}")
    return np.stack(cols, axis=1)


@dataclass
class FamilyWitness:
    """Result of :func:`classify_product_basis`.

    ``kron(local_a, local_b) @ B[:, column_perm]`` equals
    ``family_basis(family, **canonical_params) @ diag(column_phases)``.
    """

    families: tuple
    family: str
    local_a: np.ndarray
    local_b: np.ndarray
    column_perm: tuple
    column_phases: np.ndarray
    canonical_params: dict

    def canonical_basis(self):
        return family_basis(self.family, **self.canonical_params)

    def reconstruct(self):
        """Rebuild the classified basis from the witness alone."""
        L = np.kron(self.local_a, self.local_b)
        cols = L.conj().T @ self.canonical_basis() * self.column_phases[None, :]
        out = np.empty_like(cols)
        out[:, list(self.column_perm)] = cols
        return out

    def to_json(self):
        from .serialize import to_jsonable

        return {
            "schema": "mublab/family-witness/v1",
            "families": list(self.families),
            "family": self.family,
            "local_a": to_jsonable(self.local_a),
            "local_b": to_jsonable(self.local_b),
            "column_perm": [int(k) for k in self.column_perm],
            "column_phases": to_jsonable(self.column_phases),
            "canonical_params": {k: to_jsonable(np.asarray(v, dtype=complex)) for k, v in self.canonical_params.items()},
        }


def same_ray(u, v, thr):
    """Unit vectors ``u``, ``v`` span the same ray: the sine of their angle is at most ``thr``."""
    return np.linalg.norm(v - np.vdot(u, v) * u) <= thr


def _ray_groups(vectors, thr):
    groups = []
    for k, v in enumerate(vectors):
        for g in groups:
            if same_ray(vectors[g[0]], v, thr):
                g.append(k)
                break
        else:
            groups.append([k])
    return groups


def _nearest_unitary(M):
    U, _, Vh = np.linalg.svd(M)
    return U @ Vh


def _basis_from_rows(*rows):
    return _nearest_unitary(np.vstack([np.conj(r) for r in rows]))


def _orthonormal_pair(r0, r1):
    r1 = r1 - np.vdot(r0, r1) * r0
    return r0, r1 / np.linalg.norm(r1)


def _real_ratio_phase(v):
    """Phase ``q`` with ``(v0, q v1)`` proportional to a real vector (1 if degenerate)."""
    if abs(v[0]) < 1e-12 or abs(v[1]) < 1e-12:
        return 1.0 + 0j
    r = v[1] / v[0]
    return np.conj(r / abs(r))


def _leading_real(v):
    k = 0 if abs(v[0]) >= 1e-12 else 1
    return v * np.conj(v[k]) / abs(v[k])


def _match_p1(A, Bf, groups_a, thr):
    if sorted(len(g) for g in groups_a) != [3, 3]:
        return None
    if abs(np.vdot(A[groups_a[0][0]], A[groups_a[1][0]])) > thr:
        return None
    return groups_a


def _match_p2(A, Bf, thr):
    groups_b = _ray_groups(Bf, thr)
    for g in groups_b:
        for i, j in combinations(g, 2):
            if abs(np.vdot(A[i], A[j])) > thr:
                continue
            rest = [k for k in range(6) if k not in (i, j)]
            sub = _ray_groups([A[k] for k in rest], thr)
            if sorted(len(s) for s in sub) != [2, 2]:
                continue
            h0 = [rest[k] for k in sub[0]]
            h1 = [rest[k] for k in sub[1]]
            if abs(np.vdot(A[h0[0]], A[h1[0]])) > thr:
                continue
            return (i, j), h0, h1
    return None


def _match_p3(Bf, thr):
    groups_b = _ray_groups(Bf, thr)
    if sorted(len(g) for g in groups_b) != [2, 2, 2]:
        return None
    return groups_b


def _witness_p1(A, Bf, groups):
    g0, g1 = sorted(groups, key=min)
    r0, r1 = _orthonormal_pair(A[g0[0]], A[g1[0]])
    W = _basis_from_rows(r0, r1)
    X = _basis_from_rows(*[Bf[k] for k in g0])
    amat = np.stack([X @ Bf[k] for k in g1], axis=1)
    left, amat_d, _ = dephase(amat)
    X = left[:, None] * X
    return W, X, tuple(g0 + g1), {"a": amat_d}


def _witness_p2(A, Bf, match):
    (i, j), h0, h1 = match
    r0, r1 = _orthonormal_pair(A[h0[0]], A[h1[0]])
    W = _basis_from_rows(r0, r1)
    X = _basis_from_rows(Bf[h0[0]], Bf[h0[1]], Bf[i])
    b = (X @ Bf[h1[0]])[:2]
    p = _real_ratio_phase(b)
    X = np.diag([1, p, 1]) @ X
    b = _leading_real((X @ Bf[h1[0]])[:2])
    c = W @ A[i]
    q = _real_ratio_phase(c)
    W = np.diag([1, q]) @ W
    c = _leading_real(W @ A[i])
    return W, X, (h0[0], h0[1], h1[0], h1[1], i, j), {"b": b.real.astype(complex), "c": c.real.astype(complex)}


def _witness_p3(A, Bf, groups):
    g0, g1, g2 = sorted(groups, key=min)
    X = _basis_from_rows(Bf[g0[0]], Bf[g1[0]], Bf[g2[0]])
    r0, r1 = _orthonormal_pair(A[g0[0]], A[g0[1]])
    W = _basis_from_rows(r0, r1)
    d = W @ A[g1[0]]
    W = np.diag([1, _real_ratio_phase(d)]) @ W
    d = _leading_real(W @ A[g1[0]])
    e = _leading_real(W @ A[g2[0]])
    return W, X, (g0[0], g0[1], g1[0], g1[1], g2[0], g2[1]), {"d": d.real.astype(complex), "e": e}


def product_factors(B, tol=None):
    """Per-column C^2 and C^3 Schmidt factors of a basis whose columns are all products."""
    tol = check_tolerance(tol)
    B = check_unitary(B, tol, name="B", order=6)
    A, Bf = [], []
    for k in range(6):
        pv = schmidt_2x3(B[:, k] / np.linalg.norm(B[:, k]), tol)
        if pv.second_coefficient > tol.search_tol:
            raise DomainError(f"column {k} of B is not a product vector "
                              f"(second Schmidt coefficient {pv.second_coefficient:.3g})")
        A.append(pv.factor_a[0])
        Bf.append(pv.factor_b[0])
    return A, Bf


def family_tags(B, tol=None):
    tol = check_tolerance(tol)
    A, Bf = product_factors(B, tol)
    return _family_matches(A, Bf, tol.search_tol)[0]


def _family_matches(A, Bf, thr):
    m1 = _match_p1(A, Bf, _ray_groups(A, thr), thr)
    m2 = _match_p2(A, Bf, thr)
    m3 = _match_p3(Bf, thr)
    tags = tuple(t for t, m in zip(FAMILIES, (m1, m2, m3)) if m is not None)
    return tags, (m1, m2, m3)


def classify_product_basis(B, tol=None):
    """Classify a product-vector basis of C^2 (x) C^3 into the families P1, P2, P3.

    The C^2 factors are grouped into rays (and the C^3 factors likewise):
    P1 is two orthogonal A-rays with three columns each; P2 is a B-ray shared
    by two columns with orthogonal A-factors while the other four columns sit
    on two orthogonal A-rays, two each; P3 is three B-rays with two columns
    each. All matching tags are reported; the witness is built for the first
    match in the order P1, P2, P3 whose witness reproduces ``B``.
    """
    tol = check_tolerance(tol)
    B = check_matrix(B, name="B", square=True)
    A, Bf = product_factors(B, tol)
    thr = tol.search_tol
    tags, (m1, m2, m3) = _family_matches(A, Bf, thr)
    if not tags:
        raise InconsistencyError("product basis matches none of P1, P2, P3; check tolerances")
    builders = {"P1": (_witness_p1, m1), "P2": (_witness_p2, m2), "P3": (_witness_p3, m3)}
    failures = []
    for family in tags:
        build, match = builders[family]
        W, X, perm, params = build(A, Bf, match)
        canon = np.kron(W, X) @ B[:, list(perm)]
        F = family_basis(family, **params)
        phases = np.einsum("ij,ij->j", F.conj(), canon)
        phases = phases / np.abs(phases)
        resid = np.max(np.abs(canon - F * phases[None, :]))
        if resid <= thr:
            break
        failures.append(f"{family} residual {resid:.3g}")
    else:
        raise InconsistencyError("no family witness reproduces the basis (" + "; ".join(failures) + ")")
    return FamilyWitness(tags, family, W, X, perm, phases, params)
