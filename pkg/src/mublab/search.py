"""Numerical screening of candidate four-MUB sets.

``set_defect`` scalarizes "every pair is mutually unbiased"; ``minimize_defect``
runs derivative-free coordinate descent over all free phases and coefficient
unitaries of the 6+3+2+2 candidate; ``grid_census`` sweeps a parameter grid
and streams one :class:`SearchReport` per point to JSON lines.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from itertools import combinations, product

import numpy as np
from scipy.optimize import minimize_scalar

from .bipartite import count_product_columns
from .constructor import (
    F3_TILDE,
    F3_TILDE_DAG,
    Prop1Params,
    Prop2Params,
    build_prop1_candidate,
    build_prop2_candidate,
    _two_product_basis,
    check_prop1_constraints,
    prop1_building_vectors,
    prop1_products,
)
from .exceptions import DomainError
from .matcore import direct_sum, fourier, is_chm, random_unitary
from .mulab import overlap_deviation
from .patterns import detect_patterns, pattern_tags
from .validation import Tolerance, check_tolerance, check_unitary

logger = logging.getLogger(__name__)

REVIEW_THRESHOLD = 1e-4


def set_defect(bases, tol=None):
    """Max of the pairwise MU defect over all unordered pairs of ``bases``."""
    tol = check_tolerance(tol)
    if len(bases) < 2:
        raise DomainError("set_defect needs at least two bases")
    bases = [check_unitary(B, tol, name=f"bases[{k}]") for k, B in enumerate(bases)]
    return max(overlap_deviation(A, B) for A, B in combinations(bases, 2))


# ---------------------------------------------------------------------------
# Givens parametrization of U(n)


def givens_pairs(n):
    return [(r - 1, r) for c in range(n - 1) for r in range(n - 1, c, -1)]


def _givens(n, i, j, theta, phi):
    G = np.eye(n, dtype=complex)
    c, s = np.cos(theta), np.sin(theta)
    G[i, i], G[i, j] = c, -np.exp(-1j * phi) * s
    G[j, i], G[j, j] = np.exp(1j * phi) * s, c
    return G


def givens_to_unitary(n, angles):
    """``G_1 ... G_m diag(exp(i phases))`` from ``angles = [theta, phi]*m + phases``."""
    pairs = givens_pairs(n)
    m = len(pairs)
    angles = np.asarray(angles, dtype=float)
    th, ph = angles[0:2 * m:2], angles[1:2 * m:2]
    c, s = np.cos(th), np.sin(th)
    e = np.exp(1j * ph)
    U = np.eye(n, dtype=complex)
    for k, (i, j) in enumerate(pairs):
        ci, cj = U[:, i].copy(), U[:, j]
        U[:, i] = c[k] * ci + e[k] * s[k] * cj
        U[:, j] = -np.conj(e[k]) * s[k] * ci + c[k] * cj
    return U * np.exp(1j * angles[2 * m:])[None, :]


def unitary_to_givens(U):
    """Inverse of :func:`givens_to_unitary` (column-wise elimination of the subdiagonal)."""
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    angles = []
    Wm = U.copy()
    for c in range(n - 1):
        for r in range(n - 1, c, -1):
            a, b = Wm[r - 1, c], Wm[r, c]
            theta = np.arctan2(abs(b), abs(a))
            phi = np.angle(b) - (np.angle(a) if abs(a) > 0 else 0.0)
            G = _givens(n, r - 1, r, theta, phi)
            Wm = G.conj().T @ Wm
            angles += [theta, phi]
    angles += list(np.angle(np.diag(Wm)))
    return np.array(angles)


# ---------------------------------------------------------------------------
# flat parameter vector for the 6+3+2+2 candidate

_PHASE_NAMES = ("alpha", "beta", "x", "y", "u", "v", "x1", "x2", "x3", "x4", "y1", "y2", "y3", "y4")
_N_PHASES = len(_PHASE_NAMES)


def params_to_vector(p):
    ph = [p.prop1.alpha, p.prop1.beta, p.prop1.x, p.prop1.y, p.u_phase, p.v_phase, *p.xs, *p.ys]
    return np.concatenate([np.angle(ph), unitary_to_givens(p.prop1.u),
                           unitary_to_givens(p.b), unitary_to_givens(p.c)])


def vector_to_params(vec):
    e = np.exp(1j * np.asarray(vec[:_N_PHASES]))
    k = _N_PHASES
    a = givens_to_unitary(3, vec[k:k + 9])
    b = givens_to_unitary(4, vec[k + 9:k + 25])
    c = givens_to_unitary(4, vec[k + 25:k + 41])
    p1 = Prop1Params(e[0], e[1], e[2], e[3], a)
    return Prop2Params(p1, e[4], e[5], tuple(e[6:10]), tuple(e[10:14]), b, c)


def candidate_defect(p):
    bases = list(build_prop2_candidate(p).values())
    return max(overlap_deviation(A, B) for A, B in combinations(bases, 2))


# which basis each coordinate of the flat vector feeds
_OWNER = np.array([0, 0, 1, 1, 2, 3, 2, 2, 3, 3, 2, 2, 3, 3] + [1] * 9 + [2] * 16 + [3] * 16)


class _DefectModel:
    """Set defect of the candidate as a function of the flat vector, with the
    four bases and six pairwise defects cached so a single-coordinate move
    only rebuilds one basis."""

    def __init__(self, vec):
        self.vec = np.array(vec, dtype=float)
        self.bases = [self._basis(b, self.vec) for b in range(4)]
        self.pair = np.zeros((4, 4))
        for i, j in combinations(range(4), 2):
            self.pair[i, j] = self.pair[j, i] = overlap_deviation(self.bases[i], self.bases[j])

    @staticmethod
    def _basis(which, vec):
        e = np.exp(1j * vec[:_N_PHASES])
        k = _N_PHASES
        if which == 0:
            return direct_sum(np.eye(3), F3_TILDE @ np.diag([1, e[0], e[1]]) @ F3_TILDE_DAG)
        if which == 1:
            a = givens_to_unitary(3, vec[k:k + 9])
            return np.hstack([prop1_products(e[2], e[3]), prop1_building_vectors(e[2], e[3]) @ a.T])
        if which == 2:
            b = givens_to_unitary(4, vec[k + 9:k + 25])
            return _two_product_basis(e[4], e[6], e[10], e[7], e[11], b, None, "", check=False)
        c = givens_to_unitary(4, vec[k + 25:k + 41])
        return _two_product_basis(e[5], e[8], e[12], e[9], e[13], c, None, "", check=False)

    def value(self):
        return float(self.pair.max())

    def trial(self, k, t):
        """Defect with coordinate ``k`` set to ``t`` (cache untouched)."""
        b = _OWNER[k]
        vec = self.vec.copy()
        vec[k] = t
        B = self._basis(b, vec)
        rest = [self.pair[i, j] for i, j in combinations(range(4), 2) if b not in (i, j)]
        return max(max(rest), *(overlap_deviation(B, self.bases[o]) for o in range(4) if o != b))

    def commit(self, k, t):
        b = _OWNER[k]
        self.vec[k] = t
        self.bases[b] = self._basis(b, self.vec)
        for o in range(4):
            if o != b:
                self.pair[b, o] = self.pair[o, b] = overlap_deviation(self.bases[b], self.bases[o])


# ---------------------------------------------------------------------------
# reports


@dataclass
class SearchReport:
    kind: str
    params: dict
    best_defect: float
    product_census: list
    pattern_hits: list
    iterations: int
    seed: int
    initial_defect: float = None
    review: bool = False
    screened_out: bool = False
    violations: list = field(default_factory=list)
    history: list = field(default_factory=list)
    index: list = None

    def to_json(self):
        out = asdict(self)
        out["schema"] = "mublab/search-report/v1"
        return out

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj):
        obj = dict(obj)
        obj.pop("schema", None)
        return cls(**obj)


def _pattern_hits(first, others, tol):
    """Pattern tags of ``first^dag B`` for each B, or None when that is not a CHM."""
    loose = Tolerance(tol.search_tol, tol.search_tol)
    hits = []
    for B in others:
        R = first.conj().T @ B
        hits.append(pattern_tags(detect_patterns(R, loose)) if is_chm(R, loose) else None)
    return hits


def _line_search(model, k, f0, n_probe):
    """Best value of coordinate ``k`` on the circle: coarse probe, then bounded Brent."""
    base = model.vec[k]
    best_off, best_val = 0.0, f0
    for off in 2 * np.pi * np.arange(1, n_probe) / n_probe:
        val = model.trial(k, base + off)
        if val < best_val:
            best_off, best_val = off, val
    h = 2 * np.pi / n_probe
    res = minimize_scalar(lambda t: model.trial(k, base + t), bounds=(best_off - h, best_off + h),
                          method="bounded", options={"xatol": 1e-10, "maxiter": 60})
    if res.fun < best_val:
        best_off, best_val = res.x, res.fun
    return base + best_off, best_val


def _descend(vec, max_iters, n_probe, rng):
    model = _DefectModel(vec)
    cur = model.value()
    history = [cur]
    iters = 0
    for _ in range(max_iters):
        iters += 1
        start = cur
        for k in rng.permutation(vec.size):
            t, val = _line_search(model, k, cur, n_probe)
            if val < cur:
                model.commit(k, t)
                cur = model.value()
        history.append(cur)
        if start - cur < 1e-12:
            break
    return model.vec, cur, history, iters


def minimize_defect(initial, seed=0, restarts=1, max_iters=20, n_probe=12, tol=None):
    """Coordinate descent on the set defect of the 6+3+2+2 candidate.

    Restart 0 starts from ``initial``; later restarts from random parameters.
    Each coordinate (a phase, or a Givens angle of a coefficient unitary) is
    optimized on the circle; a move is kept only if it lowers the incumbent,
    so the reported defect never exceeds the initial one.
    """
    tol = check_tolerance(tol)
    initial.validate(tol)
    rng = np.random.default_rng(seed)
    init_val = candidate_defect(initial)
    best_vec, best_val, best_hist, total_iters = None, np.inf, [], 0
    for r in range(max(restarts, 1)):
        start = initial if r == 0 else Prop2Params.random(rng)
        vec = params_to_vector(start)
        vec, val, hist, iters = _descend(vec, max_iters, n_probe, rng)
        total_iters += iters
        logger.debug("restart %d: defect %.6g after %d sweeps", r, val, iters)
        if val < best_val:
            best_vec, best_val, best_hist = vec.copy(), val, hist
    best = vector_to_params(best_vec)
    bases = build_prop2_candidate(best, tol)
    census = [count_product_columns(B, tol)[0] for B in bases.values()]
    first = bases["first_mub"]
    hits = [None] + _pattern_hits(first, [bases["second"], bases["third"], bases["fourth"]], tol)
    return SearchReport(
        kind="minimize", params=best.to_json(), best_defect=float(best_val),
        product_census=census, pattern_hits=hits, iterations=total_iters, seed=int(seed),
        initial_defect=float(init_val), review=bool(best_val < REVIEW_THRESHOLD),
        history=[float(h) for h in best_hist])


# ---------------------------------------------------------------------------
# grid census

DEFAULT_SCREENS = ("constraints", "census", "defect")
_AXES = ("alpha", "beta", "x", "y")


def _axis_values(spec, rng):
    if spec is None:
        return [float(rng.uniform(0, 2 * np.pi))]
    if isinstance(spec, list):
        return [float(t) for t in spec]
    if isinstance(spec, dict):
        if spec.get("cube_roots"):
            return [0.0, 2 * np.pi / 3, 4 * np.pi / 3]
        if "random" in spec:
            return [float(t) for t in rng.uniform(0, 2 * np.pi, int(spec["random"]))]
        if "linspace" in spec:
            a, b, n = spec["linspace"]
            return [float(t) for t in np.linspace(a, b, int(n))]
    raise ValueError(f"cannot interpret grid axis {spec!r}")


def grid_points(space, seed=0):
    """Expand a grid spec into ``(index, angles)`` pairs in row-major order."""
    rng = np.random.default_rng(seed)
    axes = [_axis_values(space.get(name), rng) for name in _AXES]
    for idx in product(*(range(len(a)) for a in axes)):
        yield list(idx), [axes[k][i] for k, i in enumerate(idx)]


def grid_size(space, seed=0):
    rng = np.random.default_rng(seed)
    return int(np.prod([len(_axis_values(space.get(n), rng)) for n in _AXES]))


def grid_census(space, screens=DEFAULT_SCREENS, seed=0, tol=None, minimize_opts=None):
    """Yield one :class:`SearchReport` per grid point of the 6+3 candidate.

    ``space`` maps ``alpha``, ``beta``, ``x``, ``y`` to a list of angles,
    ``{"random": n}``, ``{"cube_roots": true}`` or ``{"linspace": [a, b, n]}``,
    and ``u`` to ``"random"`` (per-point Haar unitary, the default) or
    ``"fourier"``. Screens: ``constraints``, ``census``, ``patterns``,
    ``defect``, ``minimize``. Points failing the constraint screen are
    marked ``screened_out`` and never minimized.
    """
    tol = check_tolerance(tol)
    screens = set(screens)
    n = grid_size(space, seed)
    point_seeds = np.random.SeedSequence(seed).generate_state(n)
    u_mode = space.get("u", "random")
    for k, (idx, angles) in enumerate(grid_points(space, seed)):
        pseed = int(point_seeds[k])
        prng = np.random.default_rng(pseed)
        u = fourier(3) if u_mode == "fourier" else random_unitary(3, prng)
        a, b, x, y = np.exp(1j * np.array(angles))
        p = Prop1Params(a, b, x, y, u)
        cand = build_prop1_candidate(p, tol)
        first, second = cand["first_mub"], cand["second_mub"]
        violations, screened = [], False
        if "constraints" in screens:
            scr = check_prop1_constraints(p, tol)
            violations, screened = scr.violations, not scr.ok
        census = [count_product_columns(first, tol)[0], count_product_columns(second, tol)[0]] \
            if "census" in screens else []
        hits = []
        if "patterns" in screens and not screened:
            hits = [None] + _pattern_hits(first, [second], tol)
        defect = overlap_deviation(first, second) if "defect" in screens or "minimize" in screens else float("nan")
        report = SearchReport(kind="census", params=p.to_json(), best_defect=float(defect),
                              product_census=census, pattern_hits=hits, iterations=0, seed=pseed,
                              initial_defect=float(defect), screened_out=screened,
                              violations=violations, index=idx)
        if "minimize" in screens and not screened:
            p2 = Prop2Params.random(prng)
            p2 = Prop2Params(p, p2.u_phase, p2.v_phase, p2.xs, p2.ys, p2.b, p2.c)
            sub = minimize_defect(p2, seed=pseed, tol=tol, **(minimize_opts or {}))
            report.kind = "census+minimize"
            report.params = sub.params
            report.best_defect = sub.best_defect
            report.initial_defect = sub.initial_defect
            report.product_census = sub.product_census
            report.pattern_hits = sub.pattern_hits
            report.iterations = sub.iterations
            report.review = sub.review
            report.history = sub.history
        yield report


def write_reports(reports, path):
    """Append reports to a JSON-lines file, one line each.

    A failed write is logged and counted; the sweep continues.
    Returns ``(written, errors)``.
    """
    written, errors = 0, []
    for rep in reports:
        try:
            with open(path, "a") as fh:
                fh.write(rep.dumps() + "\n")
            written += 1
        except OSError as exc:
            logger.error("could not write report %s: %s", rep.index, exc)
            errors.append({"index": rep.index, "error": str(exc)})
    return written, errors


def read_reports(path):
    with open(path) as fh:
        return [SearchReport.from_json(json.loads(line)) for line in fh if line.strip()]
