"""Acceptance suite: closed-form reproductions plus randomized property checks.

``run_acceptance`` evaluates every criterion, prints one line per criterion
and returns an :class:`AcceptanceReport`. ``faults`` injects known
corruptions (currently ``"eq13"``) to show the suite can fail.
"""
import time
from dataclasses import dataclass, field

import numpy as np

from .bipartite import classify_product_basis, count_product_columns, second_schmidt_coefficients
from .constructor import (
    F3_TILDE,
    W,
    Prop1Params,
    Prop2Params,
    build_family,
    build_prop1_candidate,
    build_prop2_candidate,
    build_T0,
    check_prop1_constraints,
    complete_mub_prime,
    random_family_params,
    verify_eq13,
)
from .matcore import dephase, dephase_vector, fourier, random_complex_permutation, random_unitary
from .mulab import mu_defect, mu_vectors, mu_vectors_multi, solve_mu_to_columns
from .patterns import detect_patterns, pattern_tags, trio_check, validate_certificate
from .validation import DEFAULT_TOL

TIME_BUDGET = 60.0

# MU vectors of the order-3 Fourier matrix, as columns
F3_MU_VECTORS = np.array([[1, 1, 1, 1, 1, 1],
                          [W, W ** 2, 1, W ** 2, W, 1],
                          [W, 1, W ** 2, W ** 2, 1, W]]) / np.sqrt(3)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d}. {self.title}: {self.detail} ({self.seconds:.2f}s)"


@dataclass
class AcceptanceReport:
    results: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def to_json(self):
        return {"schema": "mublab/acceptance/v1", "passed": self.passed, "seconds": self.seconds,
                "results": [{"number": r.number, "title": r.title, "passed": bool(r.passed),
                             "detail": r.detail, "seconds": r.seconds} for r in self.results]}


def _same_vector_sets(found, expected, tol):
    found = [dephase_vector(v) for v in found]
    expected = [dephase_vector(v) for v in expected]
    if len(found) != len(expected):
        return False
    used = set()
    for v in found:
        k = next((k for k, e in enumerate(expected) if k not in used and np.max(np.abs(v - e)) <= tol), None)
        if k is None:
            return False
        used.add(k)
    return True


def check_f2_mu_vectors(rng, faults):
    en = mu_vectors(fourier(2))
    expected = [np.array([1, 1j]) / np.sqrt(2), np.array([1, -1j]) / np.sqrt(2)]
    res = max(en.residuals, default=np.inf)
    ok = len(en) == 2 and res <= 1e-9 and _same_vector_sets(en.vectors, expected, 1e-9)
    return ok, f"{len(en)} vectors, max residual {res:.1e}"


def check_f3_mu_vectors(rng, faults):
    en = mu_vectors(fourier(3))
    res = max(en.residuals, default=np.inf)
    ok = len(en) == 6 and res <= 1e-9 and _same_vector_sets(en.vectors, list(F3_MU_VECTORS.T), 1e-9)
    return ok, f"{len(en)} vectors, max residual {res:.1e}"


def check_eq13(rng, faults):
    left = F3_TILDE.copy() if "eq13" in faults else None
    r = verify_eq13(left)
    ok = r["residual_step1"] <= 1e-12 and r["residual_step2"] <= 1e-12
    return ok, f"residuals {r['residual_step1']:.1e}, {r['residual_step2']:.1e}"


def check_t0_no_mu_vectors(rng, faults):
    T0 = build_T0(complete_mub_prime(2), complete_mub_prime(3))
    en = mu_vectors_multi(T0, grid_depth=7, n_starts=500, random_state=rng)
    return len(en) == 0, f"{len(en)} clusters"


def check_classification(rng, faults, n=200):
    counts, worst = {}, 0.0
    for fam in ("P1", "P2", "P3"):
        good = 0
        for _ in range(n):
            B = build_family(fam, **random_family_params(fam, rng))
            L = np.kron(random_unitary(2, rng), random_unitary(3, rng))
            X = L @ B @ random_complex_permutation(6, rng)
            w = classify_product_basis(X)
            err = float(np.max(np.abs(w.reconstruct() - X)))
            worst = max(worst, err)
            good += fam in w.families and err <= 1e-8
        counts[fam] = good
    ok = all(c == n for c in counts.values())
    return ok, ", ".join(f"{f} {c}/{n}" for f, c in counts.items()) + f", worst reconstruction {worst:.1e}"


def real_block_chm():
    """``F_2 (x) F_3`` with rows reordered so rows 0-2, columns 0-1 hold ``[[1,1],[1,-1],[1,1]]/sqrt6``."""
    M = np.kron(fourier(2), fourier(3))
    order = [0, 3, 1, 2, 4, 5]
    return M[order][:, [0, 3, 1, 2, 4, 5]]


def check_patterns(rng, faults):
    M = np.kron(fourier(2), fourier(3))
    certs = detect_patterns(M)
    tags = pattern_tags(certs)
    R = real_block_chm()
    rcerts = detect_patterns(R)
    y6_block = any(c.pattern == "Y6" and tuple(c.row_indices) == (0, 1, 2) and tuple(c.col_indices) == (0, 1)
                   for c in rcerts)
    revalid = all(validate_certificate(M, c) for c in certs) and all(validate_certificate(R, c) for c in rcerts)
    ok = "Y4" in tags and "Y7" in tags and y6_block and revalid
    return ok, f"F2xF3 tags {','.join(tags)}; real-block Y6 at rows 0-2 cols 0-1: {y6_block}; " \
               f"{len(certs) + len(rcerts)} certificates re-validated: {revalid}"


def check_prop1(rng, faults, n=100):
    bad, defects = 0, []
    for _ in range(n):
        p = Prop1Params.random(rng)
        if not check_prop1_constraints(p).ok:
            continue
        second = build_prop1_candidate(p)["second_mub"]
        s = second_schmidt_coefficients(second)
        orth = np.max(np.abs(second.conj().T @ second - np.eye(6))) <= DEFAULT_TOL.predicate_tol
        n_prod = int(np.sum(s <= DEFAULT_TOL.search_tol))
        bad += not (orth and n_prod == 3 and np.all(np.sort(s)[3:] > DEFAULT_TOL.search_tol))
        defects.append(mu_defect(build_prop1_candidate(p)["first_mub"], second))
    u = random_unitary(3, rng)
    rejected_alpha = all(not check_prop1_constraints(Prop1Params(a, 1j, 1j, -1j, u)).alpha_ok
                         for a in (1, W, W ** 2))
    rejected_xy = all(not check_prop1_constraints(Prop1Params(1j, -1j, W ** m, W ** k, u)).xy_ok
                      for m in range(3) for k in range(3))
    ok = bad == 0 and rejected_alpha and rejected_xy
    return ok, f"{n - bad}/{n} bases with 3+3 Schmidt split; cube-root screens reject: " \
               f"{rejected_alpha and rejected_xy}; first/second defect (reported only) " \
               f"min {min(defects):.3f}"


def check_prop2_census(rng, faults, n=100):
    bad = 0
    for _ in range(n):
        bases = build_prop2_candidate(Prop2Params.random(rng))
        census = tuple(count_product_columns(B)[0] for B in bases.values())
        bad += census != (6, 3, 2, 2)
    return bad == 0, f"(6,3,2,2) census in {n - bad}/{n}, total 13"


def check_complete_sets(rng, faults):
    worst = 0.0
    for d in (2, 3, 5):
        bases = complete_mub_prime(d)
        for i in range(len(bases)):
            for k in range(i):
                worst = max(worst, mu_defect(bases[i], bases[k]))
    trio = trio_check(*complete_mub_prime(3)[1:])
    ok = worst <= 1e-12 and trio.is_trio
    return ok, f"max pairwise defect {worst:.1e}; d=3 trio passes: {trio.is_trio}"


def check_invariance(rng, faults, n=100):
    worst_mu = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 7))
        A, B, X = (random_unitary(d, rng) for _ in range(3))
        P1, P2 = random_complex_permutation(d, rng), random_complex_permutation(d, rng)
        worst_mu = max(worst_mu, abs(mu_defect(A, B) - mu_defect(X @ A @ P1, X @ B @ P2)))
    worst_trio = 0.0
    for _ in range(n):
        # random rephased, permuted Fourier matrices: CHMs that generally are not a trio
        trio = [np.diag(np.exp(2j * np.pi * rng.random(6))) @ fourier(6) @ random_complex_permutation(6, rng)
                for _ in range(3)]
        t0 = trio_check(*trio).defects
        t1 = trio_check(*(M.conj() for M in trio)).defects
        worst_trio = max(worst_trio, float(np.max(np.abs(np.subtract(t0, t1)))))
    worst_deph = 0.0
    for _ in range(n):
        M = dephase(random_unitary(6, rng))[1]
        worst_deph = max(worst_deph, float(np.max(np.abs(dephase(M)[1] - M))))
    worst_col = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 7))
        U = random_unitary(d, rng)
        v, _ = solve_mu_to_columns(U, range(d - 1), rng)
        worst_col = max(worst_col, abs(abs(np.vdot(U[:, -1], v)) - 1 / np.sqrt(d)))
    ok = worst_mu <= 1e-10 and worst_trio <= 1e-12 and worst_deph <= 1e-12 and worst_col <= 1e-8
    return ok, f"mu {worst_mu:.1e}, trio {worst_trio:.1e}, dephase {worst_deph:.1e}, last column {worst_col:.1e}"


CRITERIA = [
    (1, "MU vectors of F2", check_f2_mu_vectors),
    (2, "MU vectors of F3", check_f3_mu_vectors),
    (3, "order-3 Fourier identity", check_eq13),
    (4, "no vector MU to the product triple T0", check_t0_no_mu_vectors),
    (5, "product-basis classification", check_classification),
    (6, "forbidden patterns Y4/Y6/Y7", check_patterns),
    (7, "6+3 candidate structure and screens", check_prop1),
    (8, "6+3+2+2 product census", check_prop2_census),
    (9, "complete MUB sets in d=2,3,5", check_complete_sets),
    (10, "invariance suite", check_invariance),
]


def run_acceptance(seed=0, faults=(), only=None, echo=print):
    """Run the criteria (all, or the numbers in ``only``); criterion 11 is the wall-clock budget."""
    report = AcceptanceReport()
    start = time.perf_counter()
    for number, title, fn in CRITERIA:
        if only and number not in only:
            continue
        rng = np.random.default_rng([seed, number])
        t = time.perf_counter()
        try:
            ok, detail = fn(rng, set(faults))
        except Exception as exc:  # a crash is a failed criterion, not an aborted suite
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        res = CriterionResult(number, title, bool(ok), detail, time.perf_counter() - t)
        report.results.append(res)
        if echo:
            echo(res.line())
    report.seconds = time.perf_counter() - start
    if not only or 11 in only:
        res = CriterionResult(11, "suite runtime", report.seconds < TIME_BUDGET,
                              f"{report.seconds:.1f}s of {TIME_BUDGET:.0f}s budget", 0.0)
        report.results.append(res)
        if echo:
            echo(res.line())
    return report
