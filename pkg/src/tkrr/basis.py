"""Laplace-eigenfunction features approximating the RBF kernel on a hyperbox.

On ``[-U, U]`` the Dirichlet Laplacian has eigenfunctions
``sin(pi i (x + U) / (2U)) / sqrt(U)`` with frequencies ``pi i / (2U)``.
Weighting each by the square root of the RBF spectral density gives
features whose inner product converges to the kernel as the basis grows,
up to a boundary effect that decays like ``exp(-dist_to_edge^2 / (2 l^2))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import DimensionError, DomainError, ParameterError

SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class FeatureMapConfig:
    """Per-dimension basis sizes and half-widths with one shared lengthscale.

    Build with :meth:`uniform` for the common case of identical dimensions.
    """

    basis_counts: tuple[int, ...]
    half_widths: tuple[float, ...]
    lengthscale: float

    def __post_init__(self):
        counts = tuple(int(m) for m in self.basis_counts)
        widths = tuple(float(u) for u in self.half_widths)
        if len(counts) == 0:
            raise ParameterError("need at least one dimension")
        if len(counts) != len(widths):
            raise DimensionError(
                f"{len(counts)} basis counts but {len(widths)} half-widths")
        if any(m < 1 for m in counts):
            raise ParameterError(f"basis counts must be >= 1, got {counts}")
        if any(not u > 0 for u in widths):
            raise ParameterError(f"half-widths must be > 0, got {widths}")
        if not float(self.lengthscale) > 0:
            raise ParameterError(f"lengthscale must be > 0, got {self.lengthscale}")
        object.__setattr__(self, "basis_counts", counts)
        object.__setattr__(self, "half_widths", widths)
        object.__setattr__(self, "lengthscale", float(self.lengthscale))

    @classmethod
    def uniform(cls, dims: int, basis: int = 20, half_width: float = 1.25,
                lengthscale: float = 0.6) -> "FeatureMapConfig":
        return cls((basis,) * dims, (half_width,) * dims, lengthscale)

    @property
    def dims(self) -> int:
        return len(self.basis_counts)

    def with_lengthscale(self, lengthscale: float) -> "FeatureMapConfig":
        return FeatureMapConfig(self.basis_counts, self.half_widths, lengthscale)


def rbf_spectral_density(omega, lengthscale: float):
    """Spectral density of the unit-variance 1-D RBF kernel."""
    if not lengthscale > 0:
        raise ParameterError(f"lengthscale must be > 0, got {lengthscale}")
    omega = np.asarray(omega, dtype=float)
    out = lengthscale * SQRT_2PI * np.exp(-0.5 * (lengthscale * omega) ** 2)
    return float(out) if out.ndim == 0 else out


def exact_rbf_kernel(x, x2, lengthscale: float) -> float:
    if not lengthscale > 0:
        raise ParameterError(f"lengthscale must be > 0, got {lengthscale}")
    diff = np.atleast_1d(np.asarray(x, dtype=float) - np.asarray(x2, dtype=float))
    return float(np.exp(-diff @ diff / (2.0 * lengthscale**2)))


def _basis_weights(m: int, half_width: float, lengthscale: float):
    freqs = np.pi * np.arange(1, m + 1) / (2.0 * half_width)
    amp = np.sqrt(rbf_spectral_density(freqs, lengthscale) / half_width)
    return freqs, amp


def _check_dim(d: int, cfg: FeatureMapConfig) -> None:
    if not 0 <= d < cfg.dims:
        raise DimensionError(f"dimension index {d} outside 0..{cfg.dims - 1}")


def local_feature_map(x, d: int, cfg: FeatureMapConfig) -> np.ndarray:
    """Features of coordinate ``d`` for a scalar or a vector of samples.

    Returns shape ``(M_d,)`` for a scalar input and ``(N, M_d)`` otherwise.

    Raises
    ------
    DomainError
        If any value lies outside ``[-U_d, U_d]``.
    """
    _check_dim(d, cfg)
    u = cfg.half_widths[d]
    x = np.asarray(x, dtype=float)
    if not np.all(np.abs(x) <= u):
        bad = x[~(np.abs(x) <= u)] if x.ndim else x
        raise DomainError(
            f"dimension {d}: values {np.atleast_1d(bad)[:5]} outside [-{u}, {u}]")
    freqs, amp = _basis_weights(cfg.basis_counts[d], u, cfg.lengthscale)
    return amp * np.sin(np.multiply.outer(x + u, freqs))


def feature_tensor(x, cfg: FeatureMapConfig) -> list[np.ndarray]:
    """Local feature vectors of one sample; their outer product is the rank-one feature tensor."""
    x = np.asarray(x, dtype=float)
    if x.shape != (cfg.dims,):
        raise DimensionError(f"expected a vector of length {cfg.dims}, got shape {x.shape}")
    return [local_feature_map(x[d], d, cfg) for d in range(cfg.dims)]


def feature_matrices(X, cfg: FeatureMapConfig) -> list[np.ndarray]:
    """Per-dimension ``(N, M_d)`` feature matrices for a batch ``X`` of shape ``(N, D)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != cfg.dims:
        raise DimensionError(f"expected shape (N, {cfg.dims}), got {X.shape}")
    return [local_feature_map(X[:, d], d, cfg) for d in range(cfg.dims)]


def approx_kernel(x, x2, cfg: FeatureMapConfig) -> float:
    fx = feature_tensor(x, cfg)
    fx2 = feature_tensor(x2, cfg)
    return float(np.prod([a @ b for a, b in zip(fx, fx2)]))


def approx_gram(X, Y, cfg: FeatureMapConfig) -> np.ndarray:
    """Kernel matrix of the finite-feature approximation between two batches."""
    out = None
    for fx, fy in zip(feature_matrices(X, cfg), feature_matrices(Y, cfg)):
        k = fx @ fy.T
        out = k if out is None else out * k
    return out


def exact_rbf_gram(X, Y, lengthscale: float) -> np.ndarray:
    if not lengthscale > 0:
        raise ParameterError(f"lengthscale must be > 0, got {lengthscale}")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    sq = cdist(np.atleast_2d(X), np.atleast_2d(Y), "sqeuclidean")
    return np.exp(-sq / (2.0 * lengthscale**2))


def grid_error_1d(basis: int, half_width: float, lengthscale: float,
                  grid: Sequence[float]) -> float:
    """Max absolute gap between approximate and exact kernel over a 1-D grid."""
    cfg = FeatureMapConfig((basis,), (half_width,), lengthscale)
    g = np.asarray(grid, dtype=float)[:, None]
    return float(np.max(np.abs(approx_gram(g, g, cfg) - exact_rbf_gram(g, g, lengthscale))))
