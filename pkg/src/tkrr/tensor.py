"""CPD tensors and the multilinear kernels built on them.

Vectorization is column-major throughout (first index varies fastest), so
``vec(A) = (A^(D) ⊙ ... ⊙ A^(1)) 1`` with ``⊙`` the Khatri-Rao product.
Factor columns carry their own scale; :func:`normalize_cpd` is only an
export helper.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .exceptions import DimensionError, TensorSizeError

DENSE_CAP = 10**7


@dataclass(frozen=True)
class CpdTensor:
    """Rank-R tensor stored as D factor matrices of shape (M_d, R)."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        # C order fixes the memory layout, so downstream reductions are bitwise repeatable
        factors = tuple(np.array(f, dtype=float, copy=True, order="C") for f in self.factors)
        if len(factors) == 0:
            raise DimensionError("a CPD needs at least one factor matrix")
        for f in factors:
            if f.ndim != 2:
                raise DimensionError(f"factor matrices must be 2-D, got shape {f.shape}")
        ranks = {f.shape[1] for f in factors}
        if len(ranks) != 1:
            raise DimensionError(f"factor matrices disagree on rank: {sorted(ranks)}")
        if factors[0].shape[1] < 1:
            raise DimensionError("rank must be at least 1")
        if any(f.shape[0] < 1 for f in factors):
            raise DimensionError("every mode needs at least one row")
        for f in factors:
            if not np.all(np.isfinite(f)):
                raise ValueError("factor matrices contain NaN or Inf")
            f.setflags(write=False)
        object.__setattr__(self, "factors", factors)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def mode_sizes(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def ndim(self) -> int:
        return len(self.factors)

    def replace_factor(self, d: int, factor: np.ndarray) -> "CpdTensor":
        """Return a copy with factor ``d`` swapped out."""
        factors = list(self.factors)
        factors[d] = factor
        return CpdTensor(tuple(factors))


@dataclass(frozen=True)
class DenseTensor:
    """Full tensor with values flattened in column-major order."""

    shape: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        values = np.asarray(self.values, dtype=float).ravel()
        if any(s < 1 for s in shape):
            raise DimensionError(f"shape entries must be positive, got {shape}")
        if values.size != int(np.prod(shape)):
            raise DimensionError(f"{values.size} values do not fill shape {shape}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "values", values)

    def to_array(self) -> np.ndarray:
        return self.values.reshape(self.shape, order="F")

    @classmethod
    def from_array(cls, array: np.ndarray) -> "DenseTensor":
        array = np.asarray(array, dtype=float)
        return cls(array.shape, array.ravel(order="F"))


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product; column r is ``kron(a[:, r], b[:, r])``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("khatri_rao expects two matrices")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(
            f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def cpd_to_dense(w: CpdTensor, cap: int = DENSE_CAP) -> DenseTensor:
    """Materialize ``w`` via the chained Khatri-Rao formula.

    Raises
    ------
    TensorSizeError
        If the full tensor would hold more than ``cap`` entries.
    """
    size = int(np.prod([float(m) for m in w.mode_sizes]))
    if size > cap:
        raise TensorSizeError(f"dense tensor would have {size} entries (cap {cap})")
    # factors reversed so the first mode ends up fastest
    kr = reduce(khatri_rao, w.factors[::-1])
    return DenseTensor(w.mode_sizes, kr.sum(axis=1))


def gram_matrices(w: CpdTensor) -> list[np.ndarray]:
    """Per-mode R×R Gram matrices ``W^(d)T W^(d)``."""
    return [f.T @ f for f in w.factors]


def cpd_inner_product(a: CpdTensor, b: CpdTensor) -> float:
    """Frobenius inner product without densifying: ``1^T (⊛_d A^(d)T B^(d)) 1``."""
    if a.mode_sizes != b.mode_sizes:
        raise DimensionError(f"mode sizes differ: {a.mode_sizes} vs {b.mode_sizes}")
    prod = np.ones((a.rank, b.rank))
    for fa, fb in zip(a.factors, b.factors):
        prod *= fa.T @ fb
    return float(prod.sum())


def cpd_param_count(w: CpdTensor) -> int:
    return w.rank * sum(w.mode_sizes)


def normalize_cpd(w: CpdTensor) -> tuple[CpdTensor, np.ndarray]:
    """Rescale every factor column to unit length.

    Returns the normalized tensor and the per-component weights that
    reproduce the original. A zero column gets weight 0 and is replaced by
    the first canonical basis vector.
    """
    weights = np.ones(w.rank)
    factors = []
    for f in w.factors:
        norms = np.linalg.norm(f, axis=0)
        out = np.zeros_like(f)
        nz = norms > 0
        out[:, nz] = f[:, nz] / norms[nz]
        out[0, ~nz] = 1.0
        weights *= norms
        factors.append(out)
    return CpdTensor(tuple(factors)), weights


def scale_components(w: CpdTensor, weights: Sequence[float]) -> CpdTensor:
    """Absorb per-component weights into the first factor."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (w.rank,):
        raise DimensionError(f"expected {w.rank} weights, got {weights.shape}")
    return w.replace_factor(0, w.factors[0] * weights[None, :])
