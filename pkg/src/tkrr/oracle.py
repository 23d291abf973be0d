"""Exact dual-form kernel ridge regression, used to check the primal solver.

The dual solve ``alpha = (K + ridge I)^-1 y`` is dense and cubic in N, so
training sets are capped at :data:`MAX_POINTS`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import FeatureMapConfig, approx_gram, exact_rbf_gram
from .exceptions import DimensionError, ParameterError

MAX_POINTS = 2000


@dataclass(frozen=True)
class ApproxKernel:
    """Finite Laplace-feature kernel."""

    feature_map: FeatureMapConfig

    def __call__(self, X, Y) -> np.ndarray:
        return approx_gram(X, Y, self.feature_map)


@dataclass(frozen=True)
class ExactRbfKernel:
    lengthscale: float

    def __call__(self, X, Y) -> np.ndarray:
        return exact_rbf_gram(X, Y, self.lengthscale)


@dataclass(frozen=True)
class DualKrrModel:
    support_points: np.ndarray
    alphas: np.ndarray
    kernel: ApproxKernel | ExactRbfKernel
    ridge: float

    def __post_init__(self):
        if self.alphas.shape[0] != self.support_points.shape[0]:
            raise DimensionError("one coefficient per support point is required")
        if self.ridge < 0:
            raise ParameterError("ridge must be >= 0")

    @property
    def param_count(self) -> int:
        n, d = self.support_points.shape
        return dual_param_count(n, d)


def dual_param_count(n_points: int, dims: int) -> int:
    """Stored numbers of a kernel expansion: the support points plus one coefficient each."""
    return n_points * dims + n_points


def gram_matrix(points, kernel) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    K = kernel(X, X)
    # symmetrize exactly; the products are equal up to summation order
    return np.triu(K) + np.triu(K, 1).T


def dual_fit(X, y, kernel, ridge: float) -> DualKrrModel:
    """Solve ``(K + ridge I) alpha = y``.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the regularized Gram matrix is singular.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] > MAX_POINTS:
        raise ParameterError(f"dual oracle limited to {MAX_POINTS} points, got {X.shape[0]}")
    if ridge < 0:
        raise ParameterError("ridge must be >= 0")
    K = gram_matrix(X, kernel) + ridge * np.eye(X.shape[0])
    try:
        alphas = scipy.linalg.solve(K, y, assume_a="pos")
    except np.linalg.LinAlgError:
        alphas = scipy.linalg.solve(K, y, assume_a="sym")
    return DualKrrModel(X, alphas, kernel, float(ridge))


def dual_predict(model: DualKrrModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return model.kernel(X, model.support_points) @ model.alphas
