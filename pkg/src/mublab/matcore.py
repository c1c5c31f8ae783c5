"""Dense complex linear algebra for small matrices.

Unitarity and complex-Hadamard predicates, the dephased canonical form and
complex-permutation equivalence of complex Hadamard matrices (CHMs).
"""
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .exceptions import DomainError
from .validation import check_matrix, check_tolerance, unitarity_residual

OMEGA = np.exp(2j * np.pi / 3)


def fourier(d):
    """Unitary Fourier matrix ``F[j, k] = exp(2 pi i j k / d) / sqrt(d)``."""
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


def direct_sum(A, B):
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    out = np.zeros((A.shape[0] + B.shape[0], A.shape[1] + B.shape[1]), dtype=complex)
    out[: A.shape[0], : A.shape[1]] = A
    out[A.shape[0]:, A.shape[1]:] = B
    return out


def random_unitary(d, rng):
    """Haar-random unitary via QR with the phase fix of Mezzadri."""
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_phases(n, rng):
    return np.exp(2j * np.pi * rng.random(n))


def random_complex_permutation(d, rng):
    P = np.eye(d, dtype=complex)[:, rng.permutation(d)]
    return P * random_phases(d, rng)


def is_unitary(M, tol=None):
    tol = check_tolerance(tol)
    M = check_matrix(M, square=True)
    return unitarity_residual(M) <= tol.predicate_tol


def is_chm(M, tol=None):
    """True iff ``M`` is unitary with every entry of modulus ``1/sqrt(d)``."""
    tol = check_tolerance(tol)
    M = check_matrix(M, square=True)
    d = M.shape[0]
    if not is_unitary(M, tol):
        return False
    return bool(np.max(np.abs(np.abs(M) - 1 / np.sqrt(d))) <= tol.predicate_tol)


def _unit_phase(z):
    return z / abs(z)


def dephase(M, zero_tol=0.0):
    """Bring ``M`` to dephased form.

    Returns ``(left, Md, right)`` with ``Md = diag(left) @ M @ diag(right)``
    and the first row and first column of ``Md`` real and non-negative.
    A row whose leading entry is zero keeps phase 1; a column whose top entry
    is zero is rephased by its first nonzero entry instead, so the operation
    is total and idempotent.
    """
    M = check_matrix(M, square=True)
    n_rows, n_cols = M.shape
    left = np.ones(n_rows, dtype=complex)
    for i in range(n_rows):
        if abs(M[i, 0]) > zero_tol:
            left[i] = np.conj(_unit_phase(M[i, 0]))
    LM = left[:, None] * M
    right = np.ones(n_cols, dtype=complex)
    for j in range(1, n_cols):
        nz = np.flatnonzero(np.abs(LM[:, j]) > zero_tol)
        if nz.size:
            right[j] = np.conj(_unit_phase(LM[nz[0], j]))
    Md = LM * right[None, :]
    # remove rounding residue on entries that are real by construction
    Md[:, 0] = np.where(np.abs(Md[:, 0]) > zero_tol, np.abs(Md[:, 0]), Md[:, 0])
    Md[0, :] = np.where(np.abs(Md[0, :]) > zero_tol, np.abs(Md[0, :]), Md[0, :])
    return left, Md, right


def dephase_vector(v, zero_tol=1e-12):
    """Rephase ``v`` so its first nonzero entry is real and positive."""
    v = np.asarray(v, dtype=complex)
    nz = np.flatnonzero(np.abs(v) > zero_tol)
    if not nz.size:
        return v.copy()
    return v * np.conj(_unit_phase(v[nz[0]]))


@dataclass(frozen=True)
class EquivalenceCertificate:
    """Complex permutation matrices with ``X = left @ Y @ right``."""

    left: np.ndarray
    right: np.ndarray

    def apply(self, Y):
        return self.left @ np.asarray(Y) @ self.right

    def inverse(self):
        """Certificate for the reverse direction ``Y = left^dag @ X @ right^dag``."""
        return EquivalenceCertificate(self.left.conj().T, self.right.conj().T)

    def residual(self, X, Y):
        return float(np.max(np.abs(np.asarray(X) - self.apply(Y))))


def is_complex_permutation(P, tol=1e-9):
    P = np.asarray(P)
    mask = np.abs(P) > tol
    if not (mask.sum(axis=0) == 1).all() or not (mask.sum(axis=1) == 1).all():
        return False
    return bool(np.all(np.abs(np.abs(P[mask]) - 1) <= tol))


def equivalent_chm(X, Y, tol=None):
    """Search for complex permutations ``C, D`` with ``X = C @ Y @ D``.

    Every row permutation of ``Y`` is tried. Columns of both matrices are
    normalized by their first-row entry; one column pair fixes the relative
    row phases, after which the remaining columns must match one-to-one.
    Returns an :class:`EquivalenceCertificate` or ``None``.
    """
    tol = check_tolerance(tol)
    X = check_matrix(X, name="X", square=True)
    Y = check_matrix(Y, name="Y", square=True)
    if X.shape != Y.shape:
        return None
    if not is_chm(X, tol):
        raise DomainError("X is not a complex Hadamard matrix")
    if not is_chm(Y, tol):
        raise DomainError("Y is not a complex Hadamard matrix")
    d = X.shape[0]
    Xn = X / X[0, :]
    match_tol = tol.search_tol
    perms = np.array(list(permutations(range(d))))
    Yp = Y[perms]                                # (P, d, d)
    Yn = Yp / Yp[:, 0:1, :]                      # columns start with 1
    for k in range(d):
        lam = Xn[:, 0][None, :] / Yn[:, :, k]    # row phases, lam[:, 0] == 1
        Z = lam[:, :, None] * Yn                 # (P, d, d)
        dist = np.max(np.abs(Xn[None, :, :, None] - Z[:, :, None, :]), axis=1)  # (P, xcol, zcol)
        best = dist.argmin(axis=2)
        ok = np.take_along_axis(dist, best[:, :, None], axis=2)[:, :, 0].max(axis=1) <= match_tol
        for p in np.flatnonzero(ok):
            sigma = best[p]
            if len(set(sigma.tolist())) != d:
                continue
            pi = perms[p]
            row_ph = lam[p] / np.abs(lam[p])
            Yperm = Y[pi]
            col_ph = X[0, :] / Yperm[0, sigma]
            col_ph = col_ph / np.abs(col_ph)
            left = np.eye(d, dtype=complex)[pi] * row_ph[:, None]
            right = np.eye(d, dtype=complex)[:, sigma] * col_ph[None, :]
            cert = EquivalenceCertificate(left, right)
            if cert.residual(X, Y) <= tol.predicate_tol:
                return cert
    return None
