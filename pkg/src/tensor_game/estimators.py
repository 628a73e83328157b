"""scikit-learn style wrappers around the extraction pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .extract import CodewordMeasurement, PastingConfig, codeword_point_average, extract_global, point_agreement
from .strategies import SynchronousStrategy


def check_strategy(s) -> SynchronousStrategy:
    """Reject anything that is not a valid synchronous strategy."""
    if not isinstance(s, SynchronousStrategy):
        raise TypeError(f"expected a SynchronousStrategy, got {type(s).__name__}")
    return s.validate()


def check_points(U, n: int, m: int) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=np.int64))
    if U.shape[1] != m:
        raise ValueError(f"points need {m} coordinates, got {U.shape[1]}")
    if U.min(initial=0) < 0 or U.max(initial=0) >= n:
        raise ValueError(f"coordinates must lie in [0, {n})")
    return U


class GlobalCodewordExtractor(BaseEstimator, TransformerMixin):
    """Fit on a strategy; the fitted state is a complete codeword measurement.

    `transform` maps a strategy to the per-codeword agreement
    tau(G_c A_c) of the fitted measurement with its points, `predict`
    evaluates the most likely codeword at points and `score` is the total
    agreement (1 - eta when scored on the training strategy).
    """

    def __init__(self, method=2, k=None, tuple_budget=10**4, tuple_samples=2000, seed=0, tol=1e-9,
                 final_improve=True):
        self.method = method
        self.k = k
        self.tuple_budget = tuple_budget
        self.tuple_samples = tuple_samples
        self.seed = seed
        self.tol = tol
        self.final_improve = final_improve

    def _config(self) -> PastingConfig:
        return PastingConfig(self.method, self.k, self.tuple_budget, self.tuple_samples, self.seed)

    def fit(self, X, y=None):
        s = check_strategy(X)
        self.measurement_, self.report_ = extract_global(s, self._config(), tol=self.tol,
                                                         final_improve=self.final_improve)
        self.eta_ = self.report_.eta
        self.codeword_ = self.measurement_.codeword(self.measurement_.mode())
        self.m_, self.n_ = s.m, s.n
        return self

    def transform(self, X):
        M = self._matching(X)
        A = codeword_point_average(X)
        return np.real(np.einsum("gij,gji->g", M.elements, A)) / M.r

    def predict(self, U):
        check_is_fitted(self, "codeword_")
        U = check_points(U, self.n_, self.m_)
        return self.codeword_.table[tuple(U.T)]

    def _matching(self, X) -> CodewordMeasurement:
        check_is_fitted(self, "measurement_")
        s = check_strategy(X)
        M: CodewordMeasurement = self.measurement_
        if s.code is not M.code or s.m != M.m or s.r != M.r:
            raise ValueError("strategy does not match the fitted measurement")
        return M

    def score(self, X, y=None) -> float:
        return point_agreement(X, self._matching(X))
