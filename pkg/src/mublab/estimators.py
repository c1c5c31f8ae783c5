"""scikit-learn style wrappers around the core operations.

The estimators carry only their hyper-parameters in ``__init__`` so that
``get_params``/``set_params``/``clone`` work; everything learned ends in an
underscore.
"""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bipartite import classify_product_basis
from .constructor import Prop2Params
from .mulab import mu_vectors_multi
from .patterns import PATTERNS, detect_patterns
from .search import minimize_defect
from .validation import check_random_state, check_tolerance


def _as_matrix_list(X):
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [X]
    return list(X)


class MUVectorFinder(BaseEstimator):
    """Find the flat vectors MU to the identity and every basis in ``X``."""

    def __init__(self, tol=None, grid_depth=7, n_starts=200, random_state=0, include_identity=True):
        self.tol = tol
        self.grid_depth = grid_depth
        self.n_starts = n_starts
        self.random_state = random_state
        self.include_identity = include_identity

    def fit(self, X, y=None):
        self.bases_ = _as_matrix_list(X)
        self.enumeration_ = mu_vectors_multi(
            self.bases_, tol=self.tol, grid_depth=self.grid_depth, n_starts=self.n_starts,
            random_state=self.random_state, include_identity=self.include_identity)
        self.vectors_ = np.array(self.enumeration_.vectors).reshape(-1, self.bases_[0].shape[0])
        self.exhaustive_ = self.enumeration_.exhaustive
        self.continuum_ = self.enumeration_.continuum
        return self

    def predict(self, V):
        """For each row of ``V``, whether it is MU to every fitted basis."""
        check_is_fitted(self, "bases_")
        tol = check_tolerance(self.tol)
        V = np.atleast_2d(np.asarray(V, dtype=complex))
        d = V.shape[1]
        bases = list(self.bases_)
        if self.include_identity:
            bases = [np.eye(d)] + bases
        out = []
        for v in V:
            out.append(all(np.max(np.abs(np.abs(B.conj().T @ v) - 1 / np.sqrt(d))) <= tol.search_tol
                           for B in bases))
        return np.array(out)

    def score(self, V, y=None):
        return float(np.mean(self.predict(V)))


class ProductBasisClassifier(ClassifierMixin, BaseEstimator):
    """Label product-vector bases of C^2 (x) C^3 with their family P1, P2 or P3."""

    def __init__(self, tol=None):
        self.tol = tol

    def fit(self, X=None, y=None):
        self.classes_ = np.array(["P1", "P2", "P3"])
        return self

    def predict_witness(self, X):
        return [classify_product_basis(B, self.tol) for B in _as_matrix_list(X)]

    def predict(self, X):
        check_is_fitted(self, "classes_")
        return np.array([w.family for w in self.predict_witness(X)])


class PatternDetector(TransformerMixin, BaseEstimator):
    """Map order-6 CHMs to a boolean indicator row over Y1..Y7."""

    def __init__(self, tol=None):
        self.tol = tol

    def fit(self, X=None, y=None):
        self.patterns_ = PATTERNS
        return self

    def transform(self, X):
        check_is_fitted(self, "patterns_")
        mats = _as_matrix_list(X)
        self.certificates_ = [detect_patterns(M, self.tol) for M in mats]
        out = np.zeros((len(mats), len(PATTERNS)), dtype=bool)
        for i, certs in enumerate(self.certificates_):
            for c in certs:
                out[i, PATTERNS.index(c.pattern)] = True
        return out


class DefectMinimizer(BaseEstimator):
    """Coordinate-descent search for a low set defect of the 6+3+2+2 candidate.

    ``fit(X)`` accepts a :class:`Prop2Params` start (or None for a random one).
    """

    def __init__(self, restarts=1, max_iters=20, n_probe=12, random_state=0, tol=None):
        self.restarts = restarts
        self.max_iters = max_iters
        self.n_probe = n_probe
        self.random_state = random_state
        self.tol = tol

    def fit(self, X=None, y=None):
        rng = check_random_state(self.random_state)
        start = X if isinstance(X, Prop2Params) else Prop2Params.random(rng)
        seed = int(rng.integers(2 ** 31))
        self.report_ = minimize_defect(start, seed=seed, restarts=self.restarts, max_iters=self.max_iters,
                                       n_probe=self.n_probe, tol=self.tol)
        self.best_defect_ = self.report_.best_defect
        self.best_params_ = Prop2Params.from_json(self.report_.params)
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "report_")
        return -self.best_defect_


__all__ = ["MUVectorFinder", "ProductBasisClassifier", "PatternDetector", "DefectMinimizer"]
