import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mublab.constructor import fourier_family
from mublab.exceptions import DimensionError, DomainError
from mublab.matcore import (
    OMEGA,
    EquivalenceCertificate,
    dephase,
    dephase_vector,
    direct_sum,
    equivalent_chm,
    fourier,
    is_chm,
    is_complex_permutation,
    is_unitary,
    random_complex_permutation,
    random_unitary,
)
from strategies import angles, orders, rng_from, seeds

F6 = fourier(6)
F2F3 = np.kron(fourier(2), fourier(3))


def test_is_unitary_examples():
    assert is_unitary(np.eye(6))
    assert is_unitary(F6)
    M = np.eye(6)
    M[0, 0] = 2
    assert not is_unitary(M)


def test_is_unitary_rejects_non_square():
    with pytest.raises(DimensionError):
        is_unitary(np.ones((2, 3)))


def test_is_chm_examples():
    assert is_chm(F6)
    assert not is_chm(np.eye(6))
    assert is_chm(F2F3)
    with pytest.raises(DimensionError):
        is_chm(np.ones((6, 5)) / np.sqrt(6))


def test_fourier_entries():
    F = fourier(3)
    assert np.allclose(F * np.sqrt(3), [[1, 1, 1], [1, OMEGA, OMEGA ** 2], [1, OMEGA ** 2, OMEGA]])


def test_direct_sum_blocks():
    S = direct_sum(np.eye(2), 2 * np.eye(3))
    assert S.shape == (5, 5)
    assert np.allclose(np.diag(S), [1, 1, 2, 2, 2])
    assert np.count_nonzero(S) == 5


def test_dephase_undoes_column_phase():
    F = fourier(3)
    G = F.copy()
    G[:, 2] *= OMEGA
    _, D, _ = dephase(G)
    assert np.allclose(D, F, atol=1e-14)


def test_dephase_form_and_factorization(rng):
    M = random_unitary(6, rng)
    left, D, right = dephase(M)
    assert np.allclose(np.diag(left) @ M @ np.diag(right), D, atol=1e-14)
    assert np.allclose(np.abs(left), 1) and np.allclose(np.abs(right), 1)
    assert np.all(D[0].real >= 0) and np.allclose(D[0].imag, 0)
    assert np.all(D[:, 0].real >= 0) and np.allclose(D[:, 0].imag, 0)


def test_dephase_scrambled_fourier_matches(rng):
    S = np.diag(np.exp(2j * np.pi * rng.random(6))) @ F6 @ np.diag(np.exp(2j * np.pi * rng.random(6)))
    assert np.allclose(dephase(S)[1], dephase(F6)[1], atol=1e-13)


def test_dephase_passes_zeros_through():
    M = np.array([[0, 1], [1, 0]], dtype=complex) * 1j
    left, D, right = dephase(M)
    assert np.allclose(np.abs(D), np.abs(M))
    assert D[0, 0] == 0


@given(seeds, orders)
def test_dephase_idempotent(seed, d):
    M = random_unitary(d, rng_from(seed))
    _, D, _ = dephase(M)
    left, D2, right = dephase(D)
    assert np.allclose(left, 1) and np.allclose(right, 1)
    assert np.allclose(D2, D, atol=1e-13)


def test_dephase_vector():
    v = np.array([0, 1j, 1]) / np.sqrt(2)
    w = dephase_vector(v)
    assert w[0] == 0 and np.isclose(w[1], 1 / np.sqrt(2))


@given(angles, angles)
def test_chm_closed_under_transpose_conjugate_adjoint(a, b):
    M = fourier_family(np.exp(1j * a), np.exp(1j * b))
    assert is_chm(M)
    assert is_chm(M.T) and is_chm(M.conj()) and is_chm(M.conj().T)


def test_equivalent_chm_identity():
    cert = equivalent_chm(F6, F6)
    assert cert is not None
    assert cert.residual(F6, F6) <= 1e-9
    assert is_complex_permutation(cert.left) and is_complex_permutation(cert.right)


def test_equivalent_chm_row_swap():
    X = F6[[0, 1, 3, 2, 4, 5]]
    cert = equivalent_chm(X, F6)
    assert cert is not None and cert.residual(X, F6) <= 1e-9


def test_equivalent_chm_tensor_orders():
    X, Y = np.kron(fourier(2), fourier(3)), np.kron(fourier(3), fourier(2))
    cert = equivalent_chm(X, Y)
    assert cert is not None and cert.residual(X, Y) <= 1e-9


def test_equivalent_chm_rejects_inequivalent():
    # F6 and a generic member of its affine family are inequivalent
    Y = fourier_family(np.exp(0.7j), np.exp(1.9j))
    assert equivalent_chm(F6, Y) is None


def test_equivalent_chm_requires_chm():
    with pytest.raises(DomainError):
        equivalent_chm(np.eye(6), F6)


@given(seeds)
def test_equivalence_reflexive_symmetric(seed):
    rng = rng_from(seed)
    Y = fourier_family(np.exp(2j * np.pi * rng.random()), np.exp(2j * np.pi * rng.random()))
    X = random_complex_permutation(6, rng) @ Y @ random_complex_permutation(6, rng)
    cert = equivalent_chm(X, Y)
    assert cert is not None and cert.residual(X, Y) <= 1e-9
    back = cert.inverse()
    assert isinstance(back, EquivalenceCertificate)
    assert back.residual(Y, X) <= 1e-9
    assert equivalent_chm(Y, Y) is not None


@given(seeds)
def test_dephase_preserves_chm_and_class(seed):
    rng = rng_from(seed)
    Y = fourier_family(np.exp(2j * np.pi * rng.random()), np.exp(2j * np.pi * rng.random()))
    X = random_complex_permutation(6, rng) @ Y @ random_complex_permutation(6, rng)
    D = dephase(X)[1]
    assert is_chm(D)
    assert equivalent_chm(D, Y) is not None


@given(st.integers(2, 7), seeds)
def test_random_complex_permutation(d, seed):
    P = random_complex_permutation(d, rng_from(seed))
    assert is_complex_permutation(P)
    assert is_unitary(P)
