"""Forbidden sub-structures of order-6 complex Hadamard matrices.

A CHM that belongs to a trio of mutually unbiased CHMs contains none of
seven patterns:

    Y1  an order-3 subunitary submatrix
    Y2  a 3x2 submatrix of rank one
    Y3  an order-3 submatrix with one column orthogonal to the other two
    Y4  three product column vectors
    Y5  an order-3 singular submatrix
    Y6  a real 3x2 submatrix (here: real up to row/column phases)
    Y7  two product columns sharing their C^2 factor, |a,b> and |a,c>

:func:`detect_patterns` scans all of them exhaustively.
"""
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .bipartite import same_ray, schmidt_2x3
from .exceptions import DimensionError
from .mulab import overlap_deviation
from .validation import check_chm, check_matrix, check_tolerance

PATTERNS = ("Y1", "Y2", "Y3", "Y4", "Y5", "Y6", "Y7")

_TRIPLES = list(combinations(range(6), 3))
_PAIRS = list(combinations(range(6), 2))


@dataclass
class PatternCertificate:
    pattern: str
    row_indices: tuple
    col_indices: tuple
    detail: dict = field(default_factory=dict)

    def to_json(self):
        from .serialize import to_jsonable

        return {
            "pattern": self.pattern,
            "row_indices": [int(i) for i in self.row_indices],
            "col_indices": [int(i) for i in self.col_indices],
            "detail": to_jsonable(self.detail),
        }


def _blocks(M, row_sets, col_sets):
    r = np.array(row_sets)
    c = np.array(col_sets)
    return M[r[:, None, :, None], c[None, :, None, :]]    # (nr, nc, len r, len c)


def rephase_real_residual(block):
    """Largest imaginary part left after dephasing ``block`` (0 iff equivalent to a real matrix).

    Assumes the first row and column have no zero entries, which holds for
    blocks of a CHM.
    """
    block = np.asarray(block, dtype=complex)
    left = np.conj(block[:, 0]) / np.abs(block[:, 0])
    B = left[:, None] * block
    right = np.conj(B[0]) / np.abs(B[0])
    return float(np.max(np.abs((B * right[None, :]).imag)))


def _scan_square(M, thr, sing_thr):
    certs = []
    blocks = _blocks(M, _TRIPLES, _TRIPLES)                  # (20, 20, 3, 3)
    gram = np.conj(np.swapaxes(blocks, -1, -2)) @ blocks
    kappa = np.trace(gram, axis1=-2, axis2=-1).real / 3
    sub_dev = np.max(np.abs(gram - kappa[..., None, None] * np.eye(3)), axis=(-2, -1))
    smin = np.linalg.svd(blocks, compute_uv=False)[..., -1]
    for i, rows in enumerate(_TRIPLES):
        for j, cols in enumerate(_TRIPLES):
            if sub_dev[i, j] <= thr:
                certs.append(PatternCertificate("Y1", rows, cols, {"scale": float(kappa[i, j])}))
            g = gram[i, j]
            for k in range(3):
                others = [m for m in range(3) if m != k]
                if max(abs(g[k, m]) for m in others) <= thr:
                    certs.append(PatternCertificate("Y3", rows, cols, {"orthogonal_column": cols[k]}))
            if smin[i, j] <= sing_thr:
                certs.append(PatternCertificate("Y5", rows, cols, {"smallest_singular_value": float(smin[i, j])}))
    return certs


def _scan_3x2(M, thr, sing_thr):
    certs = []
    blocks = _blocks(M, _TRIPLES, _PAIRS)                    # (20, 15, 3, 2)
    s2 = np.linalg.svd(blocks, compute_uv=False)[..., -1]
    for i, rows in enumerate(_TRIPLES):
        for j, cols in enumerate(_PAIRS):
            if s2[i, j] <= sing_thr:
                _, _, Vh = np.linalg.svd(blocks[i, j])
                certs.append(PatternCertificate("Y2", rows, cols, {"row_factor": Vh[0].conj()}))
            strict = float(np.max(np.abs(blocks[i, j].imag)))
            rephased = rephase_real_residual(blocks[i, j])
            if rephased <= thr:
                certs.append(PatternCertificate("Y6", rows, cols, {
                    "strict": strict <= thr, "rephased": True,
                    "strict_residual": strict, "rephased_residual": rephased}))
    return certs


def _scan_columns(M, tol):
    certs = []
    thr = tol.search_tol
    prods = {}
    for k in range(6):
        col = M[:, k] / np.linalg.norm(M[:, k])
        pv = schmidt_2x3(col, tol)
        if pv.second_coefficient <= thr:
            prods[k] = pv
    rows = tuple(range(6))
    for cols in combinations(sorted(prods), 3):
        certs.append(PatternCertificate("Y4", rows, cols, {
            "factors_a": [prods[k].a for k in cols], "factors_b": [prods[k].b for k in cols]}))
    for i, j in combinations(sorted(prods), 2):
        if same_ray(prods[i].a, prods[j].a, thr):
            certs.append(PatternCertificate("Y7", rows, (i, j), {
                "factor_a": prods[i].a, "factors_b": [prods[i].b, prods[j].b]}))
    return certs


def detect_patterns(M, tol=None):
    """All Y1-Y7 certificates of an order-6 CHM, in pattern order."""
    tol = check_tolerance(tol)
    M = check_chm(M, tol, name="M", order=6)
    thr = tol.search_tol
    sing_thr = 10 * tol.search_tol
    certs = _scan_square(M, thr, sing_thr) + _scan_3x2(M, thr, sing_thr) + _scan_columns(M, tol)
    return sorted(certs, key=lambda c: PATTERNS.index(c.pattern))


def pattern_tags(certs):
    return sorted({c.pattern for c in certs}, key=PATTERNS.index)


def validate_certificate(M, cert, tol=None):
    """Re-check one certificate against ``M`` from scratch."""
    tol = check_tolerance(tol)
    M = check_matrix(M, square=True)
    thr = tol.search_tol
    block = M[np.ix_(list(cert.row_indices), list(cert.col_indices))]
    p = cert.pattern
    if p == "Y1":
        if block.shape != (3, 3):
            return False
        g = block.conj().T @ block
        return bool(np.max(np.abs(g - np.trace(g).real / 3 * np.eye(3))) <= thr and np.trace(g).real > thr)
    if p == "Y2":
        return block.shape == (3, 2) and np.linalg.svd(block, compute_uv=False)[-1] <= 10 * thr
    if p == "Y3":
        if block.shape != (3, 3):
            return False
        k = list(cert.col_indices).index(cert.detail["orthogonal_column"])
        g = block.conj().T @ block
        return all(abs(g[k, m]) <= thr for m in range(3) if m != k)
    if p == "Y5":
        return block.shape == (3, 3) and np.linalg.svd(block, compute_uv=False)[-1] <= 10 * thr
    if p == "Y6":
        return block.shape == (3, 2) and rephase_real_residual(block) <= thr
    if p in ("Y4", "Y7"):
        pvs = [schmidt_2x3(M[:, k] / np.linalg.norm(M[:, k]), tol) for k in cert.col_indices]
        if any(pv.second_coefficient > thr for pv in pvs):
            return False
        if p == "Y4":
            return len(pvs) == 3
        return len(pvs) == 2 and same_ray(pvs[0].a, pvs[1].a, thr)
    raise ValueError(f"unknown pattern {p!r}")


@dataclass
class TrioCheck:
    is_trio: bool
    defects: tuple
    contradictions: list = field(default_factory=list)


def trio_check(U, V, W, tol=None, screen_patterns=False):
    """Check that ``U^dag V``, ``V^dag W`` and ``W^dag U`` are all CHMs.

    ``defects`` are the max deviations of the entry moduli from ``1/sqrt(d)``.
    With ``screen_patterns`` every member is scanned for Y1-Y7; a passing
    trio whose member carries a pattern is reported in ``contradictions``.
    """
    tol = check_tolerance(tol)
    U = check_chm(U, tol, name="U")
    V = check_chm(V, tol, name="V")
    W = check_chm(W, tol, name="W")
    if not U.shape == V.shape == W.shape:
        raise DimensionError("trio members must have equal order")
    defects = (overlap_deviation(U, V), overlap_deviation(V, W), overlap_deviation(W, U))
    is_trio = all(x <= tol.search_tol for x in defects)
    contradictions = []
    if screen_patterns and U.shape[0] == 6:
        for name, X in zip("UVW", (U, V, W)):
            tags = pattern_tags(detect_patterns(X, tol))
            if is_trio and tags:
                contradictions.append({"member": name, "patterns": tags})
    return TrioCheck(is_trio, tuple(float(x) for x in defects), contradictions)


def transform_variant(M, variant):
    M = check_matrix(M, square=True)
    if variant == "adjoint":
        return M.conj().T
    if variant == "conjugate":
        return M.conj()
    if variant == "transpose":
        return M.T.copy()
    raise ValueError(f"unknown variant {variant!r}; expected adjoint, conjugate or transpose")
