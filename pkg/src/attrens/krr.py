"""Weighted multi-output kernel ridge regression with a safeguarded dual solve.

The dual system is (K + lambda * W^-1) A = Y with W = diag(sample_weights),
which is equivalent to weighted least squares in the primal. Factorization
uses Cholesky with an escalating jitter retry before giving up.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator, RegressorMixin

from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    NonFiniteInput,
    SingularSystem,
)

DEFAULT_BYTE_BUDGET = 2 << 30  # 2 GiB for the Gram matrix


@dataclass(frozen=True)
class Kernel:
    """Kernel choice: 'rbf' (gamma), 'linear', or 'polynomial' (degree, coef0)."""

    kind: str = "rbf"
    gamma: float = None  # rbf; None means 1/d
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rbf", "linear", "polynomial"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")


def _pairwise_sq_dists(X, Z):
    xx = (X * X).sum(axis=1)[:, None]
    zz = (Z * Z).sum(axis=1)[None, :]
    sq = xx + zz - 2.0 * X @ Z.T
    np.maximum(sq, 0.0, out=sq)
    return sq


def gram_matrix(X: np.ndarray, kernel: Kernel, Z: np.ndarray = None) -> np.ndarray:
    """Kernel matrix k(X, Z); Z defaults to X (the training Gram matrix)."""
    X = np.asarray(X, dtype=np.float64)
    Z = X if Z is None else np.asarray(Z, dtype=np.float64)
    if not (np.isfinite(X).all() and np.isfinite(Z).all()):
        raise NonFiniteInput("kernel inputs contain non-finite values")
    if X.shape[1] != Z.shape[1]:
        raise DimensionMismatch(f"feature dims differ: {X.shape[1]} vs {Z.shape[1]}")
    if kernel.kind == "linear":
        return X @ Z.T
    if kernel.kind == "polynomial":
        return (X @ Z.T + kernel.coef0) ** kernel.degree
    gamma = kernel.gamma if kernel.gamma is not None else 1.0 / X.shape[1]
    return np.exp(-gamma * _pairwise_sq_dists(X, Z))


class WeightedKernelRidge(BaseEstimator, RegressorMixin):
    """Multi-output KRR with per-sample weights.

    Parameters
    ----------
    kernel : Kernel
    ridge : positive regularization strength (lambda)
    byte_budget : fail fast if the n x n Gram matrix would exceed this many bytes
    """

    def __init__(self, kernel=Kernel(), ridge=1.0, byte_budget=DEFAULT_BYTE_BUDGET):
        self.kernel = kernel
        self.ridge = ridge
        self.byte_budget = byte_budget

    def fit(self, X, Y, sample_weight=None):
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y[:, None]
        n = X.shape[0]
        if Y.shape[0] != n:
            raise DimensionMismatch(f"{n} rows in X vs {Y.shape[0]} in Y")
        if self.ridge <= 0:
            raise ValueError("ridge must be positive")
        if n * n * 8 > self.byte_budget:
            raise BudgetExceeded(
                f"Gram matrix needs {n * n * 8} bytes, budget is {self.byte_budget}"
            )
        if sample_weight is None:
            sample_weight = np.ones(n)
        sample_weight = np.asarray(sample_weight, dtype=np.float64)
        if sample_weight.shape != (n,):
            raise DimensionMismatch("sample_weight length must equal n")
        if np.any(sample_weight <= 0):
            raise ValueError("sample weights must be positive")

        K = gram_matrix(X, self.kernel)
        system = K + self.ridge * np.diag(1.0 / sample_weight)
        self.dual_coef_ = _solve_spd_with_jitter(system, Y, K)
        self.X_fit_ = X
        self.sample_weight_ = sample_weight
        return self

    def predict(self, X_new):
        X_new = np.asarray(X_new, dtype=np.float64)
        if X_new.shape[1] != self.X_fit_.shape[1]:
            raise DimensionMismatch(
                f"{X_new.shape[1]} features vs {self.X_fit_.shape[1]} at fit time"
            )
        return gram_matrix(X_new, self.kernel, self.X_fit_) @ self.dual_coef_


def _solve_spd_with_jitter(system, Y, K, max_retries=8):
    """Cholesky solve, doubling a trace-scaled jitter on failure."""
    n = system.shape[0]
    jitter = 1e-10 * np.trace(K) / n
    bump = 0.0
    for attempt in range(max_retries + 1):
        try:
            factor = cho_factor(system + bump * np.eye(n), lower=True)
            return cho_solve(factor, Y)
        except np.linalg.LinAlgError:
            bump = jitter if attempt == 0 else bump * 2.0
    raise SingularSystem(
        f"Cholesky failed after {max_retries} jitter escalations (last bump {bump:.3e})"
    )


def krr_fit(X, Y, kernel=Kernel(), ridge=1.0, weights=None,
            byte_budget=DEFAULT_BYTE_BUDGET) -> WeightedKernelRidge:
    """Functional alias over WeightedKernelRidge.fit."""
    model = WeightedKernelRidge(kernel=kernel, ridge=ridge, byte_budget=byte_budget)
    return model.fit(X, Y, sample_weight=weights)


def krr_predict(model: WeightedKernelRidge, X_new) -> np.ndarray:
    return model.predict(X_new)
