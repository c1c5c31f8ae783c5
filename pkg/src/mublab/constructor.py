"""Builders for the explicit objects of the four-MUB analysis in C^2 (x) C^3.

Conventions: ``w = exp(2 pi i / 3)``; a 6-vector is ``np.kron(a, b)`` with
``a`` in C^2 and ``b`` in C^3; the "first MUB" ``I_3 (+) U`` is the direct sum
acting as identity on ``|0> (x) C^3`` and as ``U`` on ``|1> (x) C^3``.
"""
from dataclasses import dataclass, replace

import numpy as np

from .bipartite import family_basis
from .exceptions import ConstructionError
from .matcore import OMEGA, direct_sum, fourier, random_phases, random_unitary
from .mulab import overlap_deviation
from .validation import check_random_state, check_tolerance, check_unitary

W = OMEGA
SQ2, SQ3 = np.sqrt(2), np.sqrt(3)

# symmetric order-3 Fourier matrix and its adjoint, as they appear in U(alpha, beta)
F3_TILDE = np.array([[1, 1, 1], [1, W, W ** 2], [1, W ** 2, W]]) / SQ3
F3_TILDE_DAG = np.array([[1, 1, 1], [1, W ** 2, W], [1, W, W ** 2]]) / SQ3

PLUS = np.array([1, 1]) / SQ2
MINUS = np.array([1, -1]) / SQ2


def _flat3(x, y):
    return np.array([1, x, y]) / SQ3


def _pv(a, b):
    # kron of two 1-D vectors, without np.kron's overhead
    return np.outer(a, b).ravel()


def _check_unit(name, z, tol):
    if abs(abs(z) - 1) > tol.predicate_tol:
        raise ConstructionError(f"|{name}| = {abs(z):.12g}, expected 1")


def _check_unitary(name, M, tol, order):
    M = np.asarray(M, dtype=complex)
    if M.shape != (order, order) or np.max(np.abs(M.conj().T @ M - np.eye(order))) > tol.predicate_tol:
        raise ConstructionError(f"{name} must be an order-{order} unitary")
    return M


# ---------------------------------------------------------------------------
# product-vector families


def build_family(family, tol=None, **params):
    """Canonical product basis of family P1, P2 or P3 with gauge checks.

    P1 takes ``a`` (order-3 unitary, dephased: first row and column real
    non-negative); P2 takes real unit 2-vectors ``b`` and ``c``; P3 takes a
    real unit 2-vector ``d`` and a unit 2-vector ``e`` with real first entry.
    """
    tol = check_tolerance(tol)
    t = tol.predicate_tol

    def unit2(name, real=False, first_real=False):
        v = np.asarray(params[name], dtype=complex)
        if v.shape != (2,) or abs(np.linalg.norm(v) - 1) > t:
            raise ConstructionError(f"{name} must be a unit vector in C^2")
        if real and np.max(np.abs(v.imag)) > t:
            raise ConstructionError(f"{name} must be real")
        if first_real and abs(v[0].imag) > t:
            raise ConstructionError(f"first entry of {name} must be real")
        return v

    if family == "P1":
        a = _check_unitary("a", params["a"], tol, 3)
        if np.max(np.abs(a[0].imag)) > t or np.max(np.abs(a[:, 0].imag)) > t \
                or np.min(a[0].real) < -t or np.min(a[:, 0].real) < -t:
            raise ConstructionError("a must be dephased (first row and column real non-negative)")
        B = family_basis("P1", a=a)
    elif family == "P2":
        B = family_basis("P2", b=unit2("b", real=True), c=unit2("c", real=True))
    elif family == "P3":
        B = family_basis("P3", d=unit2("d", real=True), e=unit2("e", first_real=True))
    else:
        raise ConstructionError(f"unknown family {family!r}")
    return B


def random_family_params(family, rng):
    """Random gauge-respecting parameters for :func:`build_family`."""
    rng = check_random_state(rng)

    def real_unit2():
        t = rng.uniform(0, 2 * np.pi)
        return np.array([np.cos(t), np.sin(t)], dtype=complex)

    if family == "P1":
        from .matcore import dephase

        return {"a": dephase(random_unitary(3, rng))[1]}
    if family == "P2":
        return {"b": real_unit2(), "c": real_unit2()}
    if family == "P3":
        t = rng.uniform(0, np.pi / 2)
        e = np.array([np.cos(t), np.sin(t) * np.exp(1j * rng.uniform(0, 2 * np.pi))])
        return {"d": real_unit2(), "e": e}
    raise ConstructionError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# 6+3 candidate


def build_U(alpha, beta, tol=None):
    """``F3~ diag(1, alpha, beta) F3~^dag``."""
    tol = check_tolerance(tol)
    _check_unit("alpha", alpha, tol)
    _check_unit("beta", beta, tol)
    return F3_TILDE @ np.diag([1, alpha, beta]) @ F3_TILDE_DAG


@dataclass(frozen=True)
class Prop1Params:
    alpha: complex
    beta: complex
    x: complex
    y: complex
    u: np.ndarray

    def validate(self, tol=None):
        tol = check_tolerance(tol)
        for name in ("alpha", "beta", "x", "y"):
            _check_unit(name, getattr(self, name), tol)
        _check_unitary("u", self.u, tol, 3)
        return self

    @classmethod
    def random(cls, rng):
        rng = check_random_state(rng)
        a, b, x, y = random_phases(4, rng)
        return cls(a, b, x, y, random_unitary(3, rng))

    def to_json(self):
        from .serialize import complex_to_json, matrix_to_json

        return {"alpha": complex_to_json(self.alpha), "beta": complex_to_json(self.beta),
                "x": complex_to_json(self.x), "y": complex_to_json(self.y),
                "u": matrix_to_json(self.u)}

    @classmethod
    def from_json(cls, obj):
        from .serialize import complex_from_json, matrix_from_json

        return cls(*(complex_from_json(obj[k]) for k in ("alpha", "beta", "x", "y")),
                   matrix_from_json(obj["u"], name="u"))


def prop1_products(x, y):
    """The three product columns of the second basis."""
    return np.stack([_pv(PLUS, _flat3(1, 1)),
                     _pv(PLUS, _flat3(W, W ** 2)),
                     _pv(MINUS, _flat3(x, y))], axis=1)


def prop1_building_vectors(x, y):
    """The three product vectors combined by ``u`` into the entangled columns."""
    return np.stack([_pv(PLUS, _flat3(W ** 2, W)),
                     _pv(MINUS, _flat3(x * W, y * W ** 2)),
                     _pv(MINUS, _flat3(x * W ** 2, y * W))], axis=1)


def _orthonormal_or_raise(name, V, tol):
    dev = np.max(np.abs(V.conj().T @ V - np.eye(V.shape[1])))
    if dev > tol.predicate_tol:
        raise ConstructionError(f"{name} are not orthonormal (deviation {dev:.3g})")


def build_prop1_candidate(p, tol=None):
    """First basis ``I_3 (+) U(alpha, beta)`` and the second basis of the 6+3 case.

    Columns 0-2 of the second basis are the products; column ``3 + j`` is
    ``sum_k u[j, k] g_k`` over the building vectors ``g_k``.
    """
    tol = check_tolerance(tol)
    p.validate(tol)
    first = direct_sum(np.eye(3), build_U(p.alpha, p.beta, tol))
    prods = prop1_products(p.x, p.y)
    g = prop1_building_vectors(p.x, p.y)
    _orthonormal_or_raise("product and building vectors", np.hstack([prods, g]), tol)
    second = np.hstack([prods, g @ np.asarray(p.u).T])
    return {"first_mub": first, "second_mub": second}


@dataclass
class Prop1Screen:
    alpha_ok: bool
    xy_ok: bool
    u_entries_ok: bool
    violations: list

    @property
    def ok(self):
        return self.alpha_ok and self.xy_ok and self.u_entries_ok


def check_prop1_constraints(p, tol=None):
    """Necessary conditions: alpha not a cube root of unity, (x, y) off the
    nine-point grid of cube roots, and no zero entries in ``u``."""
    tol = check_tolerance(tol)
    roots = W ** np.arange(3)
    d_alpha = float(np.min(np.abs(p.alpha - roots)))
    d_xy = float(min(np.hypot(abs(p.x - wm), abs(p.y - wn)) for wm in roots for wn in roots))
    u_min = float(np.min(np.abs(p.u)))
    out = Prop1Screen(d_alpha > tol.search_tol, d_xy > tol.search_tol, u_min > tol.search_tol, [])
    if not out.alpha_ok:
        out.violations.append(f"alpha is a cube root of unity (distance {d_alpha:.3g})")
    if not out.xy_ok:
        out.violations.append(f"(x, y) is a pair of cube roots of unity (distance {d_xy:.3g})")
    if not out.u_entries_ok:
        out.violations.append(f"u has a zero entry (min modulus {u_min:.3g})")
    return out


# ---------------------------------------------------------------------------
# the 6+3+2+2 candidate


@dataclass(frozen=True)
class Prop2Params:
    prop1: Prop1Params
    u_phase: complex
    v_phase: complex
    xs: tuple
    ys: tuple
    b: np.ndarray
    c: np.ndarray

    def validate(self, tol=None):
        tol = check_tolerance(tol)
        self.prop1.validate(tol)
        _check_unit("u", self.u_phase, tol)
        _check_unit("v", self.v_phase, tol)
        if len(self.xs) != 4 or len(self.ys) != 4:
            raise ConstructionError("xs and ys must each hold four phases")
        for k in range(4):
            _check_unit(f"x{k + 1}", self.xs[k], tol)
            _check_unit(f"y{k + 1}", self.ys[k], tol)
        _check_unitary("b", self.b, tol, 4)
        _check_unitary("c", self.c, tol, 4)
        return self

    @classmethod
    def random(cls, rng):
        rng = check_random_state(rng)
        p1 = Prop1Params.random(rng)
        ph = random_phases(10, rng)
        return cls(p1, ph[0], ph[1], tuple(ph[2:6]), tuple(ph[6:10]),
                   random_unitary(4, rng), random_unitary(4, rng))

    def with_prop1(self, **kw):
        return replace(self, prop1=replace(self.prop1, **kw))

    def to_json(self):
        from .serialize import complex_to_json, matrix_to_json

        return {"prop1": self.prop1.to_json(),
                "u": complex_to_json(self.u_phase), "v": complex_to_json(self.v_phase),
                "xs": [complex_to_json(z) for z in self.xs],
                "ys": [complex_to_json(z) for z in self.ys],
                "b": matrix_to_json(self.b), "c": matrix_to_json(self.c)}

    @classmethod
    def from_json(cls, obj):
        from .serialize import complex_from_json, matrix_from_json

        return cls(Prop1Params.from_json(obj["prop1"]),
                   complex_from_json(obj["u"]), complex_from_json(obj["v"]),
                   tuple(complex_from_json(z) for z in obj["xs"]),
                   tuple(complex_from_json(z) for z in obj["ys"]),
                   matrix_from_json(obj["b"], name="b"), matrix_from_json(obj["c"], name="c"))


def _two_product_basis(phase, x_a, y_a, x_b, y_b, coeffs, tol, name, check=True):
    a_p = np.array([1, phase]) / SQ2
    a_m = np.array([1, -phase]) / SQ2
    prods = np.stack([_pv(a_p, _flat3(x_a, y_a)), np.kron(a_m, _flat3(x_b, y_b))], axis=1)
    h = np.stack([_pv(a_p, _flat3(x_a * W, y_a * W ** 2)),
                  _pv(a_p, _flat3(x_a * W ** 2, y_a * W)),
                  _pv(a_m, _flat3(x_b * W, y_b * W ** 2)),
                  _pv(a_m, _flat3(x_b * W ** 2, y_b * W))], axis=1)
    if check:
        _orthonormal_or_raise(f"{name} product and building vectors", np.hstack([prods, h]), tol)
    return np.hstack([prods, h @ np.asarray(coeffs).T])


def build_prop2_candidate(p, tol=None):
    """The four bases of the 6+3+2+2 candidate.

    The third and fourth bases carry two products with C^2 factors
    ``(1, +-u)`` resp. ``(1, +-v)`` followed by four entangled columns mixed
    by ``b`` resp. ``c``.
    """
    tol = check_tolerance(tol)
    p.validate(tol)
    pc = build_prop1_candidate(p.prop1, tol)
    xs, ys = p.xs, p.ys
    third = _two_product_basis(p.u_phase, xs[0], ys[0], xs[1], ys[1], p.b, tol, "third basis")
    fourth = _two_product_basis(p.v_phase, xs[2], ys[2], xs[3], ys[3], p.c, tol, "fourth basis")
    return {"first_mub": pc["first_mub"], "second": pc["second_mub"], "third": third, "fourth": fourth}


# ---------------------------------------------------------------------------
# Fourier identity used to exclude (x, y) on the cube-root grid


def _eq13_matrices(left=None):
    i = 1j
    if left is None:
        left = F3_TILDE_DAG.copy()
    mu = np.array([[1, 1, 1, 1, 1, 1],
                   [W, W ** 2, 1, W ** 2, W, 1],
                   [W, 1, W ** 2, W ** 2, 1, W]]) / SQ3
    middle = np.array([[i, W ** 2 * i, W ** 2 * i, -i, -W * i, -W * i],
                       [W ** 2 * i, i, W ** 2 * i, -W * i, -W * i, -i],
                       [W ** 2 * i, W ** 2 * i, i, -W * i, -i, -W * i]]) / SQ3
    right = np.array([[1, 1, 1, 1, 1, 1],
                      [W ** 2, W, 1, W, 1, W ** 2],
                      [W ** 2, 1, W, W, W ** 2, 1]]) / SQ3
    diag = np.diag([i, W ** 2 * i, W ** 2 * i, -i, -W * i, -W * i])
    return left, mu, middle, right, diag


def verify_eq13(left=None):
    """Residuals of the two equalities ``L M = Mid`` and ``Mid = R diag(...)``.

    ``left`` replaces the leading order-3 factor (for fault injection).
    """
    L, mu, middle, right, diag = _eq13_matrices(left)
    return {"residual_step1": float(np.max(np.abs(L @ mu - middle))),
            "residual_step2": float(np.max(np.abs(middle - right @ diag)))}


# ---------------------------------------------------------------------------
# product-vector MUB triples and complete sets in prime dimension


def complete_mub_prime(d):
    """``d + 1`` mutually unbiased bases of C^d for prime ``d <= 5``.

    Identity, then ``diag(w^(r j^2)) F`` for ``r = 0..d-1`` (``w = exp(2 pi i/d)``);
    for ``d = 2`` the last basis is ``diag(1, i) F_2``.
    """
    if d not in (2, 3, 5):
        raise ConstructionError(f"complete_mub_prime supports d in (2, 3, 5), got {d}")
    F = fourier(d)
    j = np.arange(d)
    out = [np.eye(d, dtype=complex)]
    if d == 2:
        return out + [F, np.diag([1, 1j]) @ F]
    for r in range(d):
        out.append(np.diag(np.exp(2j * np.pi * r * j ** 2 / d)) @ F)
    return out


def _check_mu_set(name, bases, tol):
    for i in range(len(bases)):
        check_unitary(bases[i], tol, name=f"{name}[{i}]")
        for k in range(i):
            if overlap_deviation(bases[i], bases[k]) > tol.search_tol:
                raise ConstructionError(f"{name}[{k}] and {name}[{i}] are not mutually unbiased")


def build_T0(mubs2, mubs3, tol=None):
    """Three product-vector MUBs ``{a_j d_k}, {b_j e_k}, {c_j f_k}``."""
    tol = check_tolerance(tol)
    if len(mubs2) < 3 or len(mubs3) < 3:
        raise ConstructionError("need three MUBs in C^2 and three in C^3")
    _check_mu_set("mubs2", mubs2[:3], tol)
    _check_mu_set("mubs3", mubs3[:3], tol)
    return [np.kron(mubs2[k], mubs3[k]) for k in range(3)]


def build_T1(mubs2, mubs3, tol=None):
    """Like :func:`build_T0` but the third member is ``{c_0 f_k, c_1 g_k}``."""
    tol = check_tolerance(tol)
    if len(mubs2) < 3 or len(mubs3) < 4:
        raise ConstructionError("need three MUBs in C^2 and four in C^3")
    _check_mu_set("mubs2", mubs2[:3], tol)
    _check_mu_set("mubs3", mubs3[:4], tol)
    c, f, g = mubs2[2], mubs3[2], mubs3[3]
    third = np.hstack([np.kron(c[:, [0]], f), np.kron(c[:, [1]], g)])
    return [np.kron(mubs2[0], mubs3[0]), np.kron(mubs2[1], mubs3[1]), third]


def fourier_family(x, y):
    """Two-parameter affine family through ``F_6``: rows 1, 4 (resp. 2, 5) of the
    odd columns are multiplied by ``x`` (resp. ``y``)."""
    F = fourier(6) * np.sqrt(6)
    F = F.copy()
    F[1::3, 1::2] *= x
    F[2::3, 1::2] *= y
    return F / np.sqrt(6)
