import json

import numpy as np
import pytest
from hypothesis import given

from mublab.bipartite import count_product_columns, same_ray, schmidt_2x3, second_schmidt_coefficients
from mublab.constructor import (
    F3_TILDE,
    F3_TILDE_DAG,
    W,
    Prop1Params,
    Prop2Params,
    build_family,
    build_prop1_candidate,
    build_prop2_candidate,
    build_T0,
    build_T1,
    build_U,
    check_prop1_constraints,
    complete_mub_prime,
    fourier_family,
    random_family_params,
    verify_eq13,
)
from mublab.exceptions import ConstructionError
from mublab.matcore import is_chm, is_complex_permutation, random_unitary
from mublab.mulab import mu_defect

from strategies import rng_from, seeds, unit_phases

EP5, EP7 = np.exp(1j * np.pi / 5), np.exp(1j * np.pi / 7)


def unitarity(M):
    return float(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[1]))))


def nice_params(u=None):
    if u is None:
        u = random_unitary(3, np.random.default_rng(3))
    return Prop1Params(EP5, EP7, np.exp(0.4j), np.exp(2.2j), u)


# product families

def test_p2_with_basis_vectors_is_computational_basis():
    B = build_family("P2", b=[1, 0], c=[1, 0])
    assert is_complex_permutation(B)


@pytest.mark.parametrize("family", ["P1", "P2", "P3"])
def test_families_are_product_bases(family, rng):
    for _ in range(20):
        B = build_family(family, **random_family_params(family, rng))
        assert unitarity(B) <= 1e-12
        assert np.all(second_schmidt_coefficients(B) <= 1e-12)


def test_family_gauge_violations():
    with pytest.raises(ConstructionError):
        build_family("P2", b=[1j, 0], c=[1, 0])
    with pytest.raises(ConstructionError):
        build_family("P3", d=[1, 0], e=[1j, 0])
    with pytest.raises(ConstructionError):
        build_family("P1", a=random_unitary(3, np.random.default_rng(0)))
    with pytest.raises(ConstructionError):
        build_family("P2", b=[1, 1], c=[1, 0])
    with pytest.raises(ConstructionError):
        build_family("P4")


# the order-3 unitary U(alpha, beta)

def test_build_u_examples():
    assert np.allclose(build_U(1, 1), np.eye(3), atol=1e-15)
    assert unitarity(build_U(W, W)) <= 1e-12
    U = build_U(EP5, EP7)
    assert not is_chm(U)
    assert np.min(np.abs(U)) > 1e-3


def test_build_u_random_unitary(rng):
    worst = 0.0
    for _ in range(1000):
        a, b = np.exp(2j * np.pi * rng.random(2))
        worst = max(worst, unitarity(build_U(a, b)))
    assert worst <= 1e-12


def test_build_u_rejects_non_unit():
    with pytest.raises(ConstructionError):
        build_U(2, 1)


def test_fourier_tilde_is_inverse_pair():
    assert np.allclose(F3_TILDE @ F3_TILDE_DAG, np.eye(3), atol=1e-15)


# 6+3 candidate

@given(seeds)
def test_six_three_columns_orthonormal(seed):
    p = Prop1Params.random(rng_from(seed))
    c = build_prop1_candidate(p)
    assert unitarity(c["first_mub"]) <= 1e-10
    assert unitarity(c["second_mub"]) <= 1e-10


@given(seeds)
def test_six_three_products_flat_and_mu_to_first(seed):
    p = Prop1Params.random(rng_from(seed))
    c = build_prop1_candidate(p)
    prods = c["second_mub"][:, :3]
    assert np.allclose(np.abs(prods), 1 / np.sqrt(6), atol=1e-12)
    assert np.all(second_schmidt_coefficients(prods) <= 1e-12)
    # the two products with a |+> factor are MU to the first basis
    assert np.allclose(np.abs(c["first_mub"].conj().T @ prods[:, :2]), 1 / np.sqrt(6), atol=1e-10)


def test_six_three_screens():
    u = random_unitary(3, np.random.default_rng(4))
    assert not check_prop1_constraints(Prop1Params(W, EP7, EP5, EP7, u)).alpha_ok
    s = check_prop1_constraints(Prop1Params(EP5, EP7, W, W ** 2, u))
    assert s.alpha_ok and not s.xy_ok and not s.ok
    assert not check_prop1_constraints(nice_params(np.eye(3))).u_entries_ok
    s = check_prop1_constraints(nice_params(u))
    assert s.ok and s.violations == []


def test_six_three_param_json_round_trip():
    p = nice_params()
    q = Prop1Params.from_json(json.loads(json.dumps(p.to_json())))
    for k in ("alpha", "beta", "x", "y"):
        assert getattr(q, k) == getattr(p, k)
    assert np.array_equal(q.u, p.u)


def test_six_three_rejects_bad_params():
    with pytest.raises(ConstructionError):
        build_prop1_candidate(Prop1Params(EP5, EP7, EP5, EP7, np.ones((3, 3))))
    with pytest.raises(ConstructionError):
        build_prop1_candidate(Prop1Params(2.0, EP7, EP5, EP7, np.eye(3)))


# Fourier identity

def test_fourier_identity_deterministic():
    r = verify_eq13()
    assert r["residual_step1"] <= 1e-12 and r["residual_step2"] <= 1e-12
    assert verify_eq13() == r


def test_fourier_identity_detects_corruption():
    r = verify_eq13(F3_TILDE.copy())
    assert r["residual_step1"] > 0.1


# 6+3+2+2 candidate

@given(seeds)
def test_six_three_two_two_bases_orthonormal(seed):
    bases = build_prop2_candidate(Prop2Params.random(rng_from(seed)))
    assert list(bases) == ["first_mub", "second", "third", "fourth"]
    for B in bases.values():
        assert unitarity(B) <= 1e-10


@given(seeds)
def test_six_three_two_two_product_census(seed):
    bases = build_prop2_candidate(Prop2Params.random(rng_from(seed)))
    assert tuple(count_product_columns(B)[0] for B in bases.values()) == (6, 3, 2, 2)


@given(seeds, unit_phases, unit_phases)
def test_six_three_two_two_two_qubit_factors(seed, u, v):
    p = Prop2Params.random(rng_from(seed))
    p = Prop2Params(p.prop1, u, v, p.xs, p.ys, p.b, p.c)
    bases = build_prop2_candidate(p)
    for name, ph in (("third", u), ("fourth", v)):
        for k, sign in ((0, 1), (1, -1)):
            a = schmidt_2x3(bases[name][:, k]).a
            assert same_ray(a, np.array([1, sign * ph]) / np.sqrt(2), 1e-9)


def test_six_three_two_two_param_json_round_trip(rng):
    p = Prop2Params.random(rng)
    q = Prop2Params.from_json(json.loads(json.dumps(p.to_json())))
    assert q.to_json() == p.to_json()
    for a, b in zip(build_prop2_candidate(p).values(), build_prop2_candidate(q).values()):
        assert np.array_equal(a, b)


def test_six_three_two_two_rejects_non_unitary_mixing(rng):
    p = Prop2Params.random(rng)
    with pytest.raises(ConstructionError):
        build_prop2_candidate(Prop2Params(p.prop1, p.u_phase, p.v_phase, p.xs, p.ys, np.ones((4, 4)), p.c))
    with pytest.raises(ConstructionError):
        build_prop2_candidate(Prop2Params(p.prop1, p.u_phase, p.v_phase, p.xs[:3], p.ys, p.b, p.c))


def test_with_first_pair_params_replaces_field(rng):
    p = Prop2Params.random(rng).with_prop1(alpha=W)
    assert p.prop1.alpha == W


# product MUB triples and complete sets

@pytest.mark.parametrize("d", [2, 3, 5])
def test_complete_mub_prime(d):
    bases = complete_mub_prime(d)
    assert len(bases) == d + 1
    for i in range(len(bases)):
        assert unitarity(bases[i]) <= 1e-12
        for k in range(i):
            assert mu_defect(bases[i], bases[k]) <= 1e-12


def test_complete_mub_prime_rejects():
    with pytest.raises(ConstructionError):
        complete_mub_prime(4)


@pytest.mark.parametrize("build", [build_T0, build_T1])
def test_product_triples(build):
    T = build(complete_mub_prime(2), complete_mub_prime(3))
    assert len(T) == 3
    for i in range(3):
        assert np.all(second_schmidt_coefficients(T[i]) <= 1e-12)
        for k in range(i):
            assert mu_defect(T[i], T[k]) <= 1e-10


def test_product_triples_reject_non_mu_input():
    bad = [np.eye(2), np.eye(2), np.eye(2)]
    with pytest.raises(ConstructionError):
        build_T0(bad, complete_mub_prime(3))
    with pytest.raises(ConstructionError):
        build_T1(complete_mub_prime(2), complete_mub_prime(3)[:3])


@given(unit_phases, unit_phases)
def test_fourier_family_is_chm(x, y):
    F = fourier_family(x, y)
    assert is_chm(F)
    assert np.allclose(fourier_family(1, 1), np.fft.fft(np.eye(6)).conj() / np.sqrt(6), atol=1e-12) \
        or np.allclose(fourier_family(1, 1), np.fft.fft(np.eye(6)) / np.sqrt(6), atol=1e-12)
