"""Primal kernel ridge regression with a CPD-constrained weight tensor.

The model is ``f(x) = <Phi(x), W>`` with ``Phi(x)`` the outer product of the
per-dimension Laplace features and ``W`` a rank-R CPD. Training minimizes

    sum_n (f(x_n) - y_n)^2 + ridge * <W, W>

by alternating least squares: each step solves exactly for one factor
matrix with the others held fixed, so the objective never increases.
Fine-tuning is the same iteration started from a trained model's factors.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgError, LinAlgWarning

from .basis import FeatureMapConfig, feature_matrices
from .dataset import LabeledDataset
from .exceptions import DimensionError, ParameterError
from .signal.scaling import ScalerParams, apply_scaler
from .tensor import CpdTensor, cpd_inner_product

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """ALS settings.

    ``update_dims`` are 0-based dimension indices; ``None`` means all.
    ``warm_start`` replaces the seeded standard-normal initialization.
    ``max_updates`` truncates the run after that many single-factor updates.
    """

    rank: int = 30
    ridge: float = 1e-4
    sweeps: int = 1
    seed: int = 0
    warm_start: CpdTensor | None = None
    update_dims: tuple[int, ...] | None = None
    max_updates: int | None = None

    def __post_init__(self):
        if self.rank < 1:
            raise ParameterError(f"rank must be >= 1, got {self.rank}")
        if not self.ridge >= 0:
            raise ParameterError(f"ridge must be >= 0, got {self.ridge}")
        if self.sweeps < 0:
            raise ParameterError(f"sweeps must be >= 0, got {self.sweeps}")
        if self.max_updates is not None and self.max_updates < 0:
            raise ParameterError("max_updates must be >= 0")
        if self.update_dims is not None:
            dims = tuple(sorted(set(int(d) for d in self.update_dims)))
            if not dims:
                raise ParameterError("update_dims must be nonempty when given")
            object.__setattr__(self, "update_dims", dims)


@dataclass
class TkrrModel:
    feature_map: FeatureMapConfig
    weights: CpdTensor
    ridge: float
    scaler: ScalerParams | None = None
    threshold: float = 0.0
    history: list[float] = field(default_factory=list)
    singular_updates: int = 0

    def __post_init__(self):
        if self.weights.mode_sizes != self.feature_map.basis_counts:
            raise DimensionError(
                f"weight modes {self.weights.mode_sizes} do not match basis counts "
                f"{self.feature_map.basis_counts}")
        if not np.isfinite(self.threshold):
            raise ParameterError("threshold must be finite")
        if self.scaler is not None and self.scaler.dims != self.feature_map.dims:
            raise DimensionError("scaler and feature map disagree on dimension count")

    @property
    def dims(self) -> int:
        return self.feature_map.dims

    @property
    def rank(self) -> int:
        return self.weights.rank

    @property
    def param_count(self) -> int:
        return self.rank * sum(self.feature_map.basis_counts)


@dataclass(frozen=True)
class AlsStep:
    """State after one single-factor update."""

    update: int
    dim: int
    weights: CpdTensor
    objective: float
    singular: bool


def init_factors(cfg: TrainConfig, fmap: FeatureMapConfig) -> CpdTensor:
    if cfg.warm_start is not None:
        w = cfg.warm_start
        if w.mode_sizes != fmap.basis_counts or w.rank != cfg.rank:
            raise DimensionError(
                f"warm start has modes {w.mode_sizes} and rank {w.rank}; expected "
                f"{fmap.basis_counts} and rank {cfg.rank}")
        return CpdTensor(tuple(f.copy() for f in w.factors))
    rng = np.random.default_rng(cfg.seed)
    return CpdTensor(tuple(rng.standard_normal((m, cfg.rank)) for m in fmap.basis_counts))


def dimension_projections(X, weights: CpdTensor, fmap: FeatureMapConfig) -> list[np.ndarray]:
    """``Q[d][n, r] = phi_d(x_nd) . w_r^(d)`` for every dimension."""
    return [phi @ f for phi, f in zip(feature_matrices(X, fmap), weights.factors)]


def _hadamard_excluding(mats: Sequence[np.ndarray], d: int, shape) -> np.ndarray:
    out = np.ones(shape)
    for k, m in enumerate(mats):
        if k != d:
            out *= m
    return out


def _solve_block(gram: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve the symmetric PSD block system, falling back to least squares when singular."""
    scale = np.sqrt(np.diag(gram))
    scale[~(scale > 0)] = 1.0
    g = gram / scale[:, None] / scale[None, :]
    b = rhs / scale
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", LinAlgWarning)
            v = scipy.linalg.solve(g, b, assume_a="pos")
        singular = False
    except (LinAlgError, LinAlgWarning):
        v = scipy.linalg.lstsq(g, b)[0]
        singular = True
    return v / scale, singular


class _AlsState:
    """Caches feature matrices, projections and Gram matrices across updates."""

    def __init__(self, X, y, weights: CpdTensor, ridge: float, fmap: FeatureMapConfig):
        if weights.mode_sizes != fmap.basis_counts:
            raise DimensionError("weights do not match the feature map")
        self.y = np.asarray(y, dtype=float)
        self.ridge = float(ridge)
        self.phi = feature_matrices(X, fmap)
        self.factors = list(weights.factors)
        self.q = [p @ f for p, f in zip(self.phi, self.factors)]
        self.grams = [f.T @ f for f in self.factors]

    @property
    def weights(self) -> CpdTensor:
        return CpdTensor(tuple(self.factors))

    def update(self, d: int) -> tuple[float, bool]:
        n, r = self.q[d].shape
        phi = self.phi[d]
        m = phi.shape[1]
        z = _hadamard_excluding(self.q, d, (n, r))
        h = _hadamard_excluding(self.grams, d, (r, r))
        # row n of the design is vec(phi_n z_n^T), column-major: index r*M + m
        a = (z[:, :, None] * phi[:, None, :]).reshape(n, r * m)
        gram = a.T @ a + self.ridge * np.kron(h, np.eye(m))
        v, singular = _solve_block(gram, a.T @ self.y)
        factor = v.reshape(r, m).T
        self.factors[d] = factor
        self.q[d] = phi @ factor
        self.grams[d] = factor.T @ factor
        resid = a @ v - self.y
        reg = float(np.sum(self.grams[d] * h))
        return float(resid @ resid + self.ridge * reg), singular


def _schedule(dims: int, cfg: TrainConfig) -> list[int]:
    order = list(range(dims)) if cfg.update_dims is None else list(cfg.update_dims)
    if any(not 0 <= d < dims for d in order):
        raise DimensionError(f"update_dims {order} outside 0..{dims - 1}")
    steps = order * cfg.sweeps
    if cfg.max_updates is not None:
        steps = steps[:cfg.max_updates]
    return steps


def _check_data(data: LabeledDataset, fmap: FeatureMapConfig) -> None:
    if data.dims != fmap.dims:
        raise DimensionError(f"data has {data.dims} features, feature map expects {fmap.dims}")
    if len(data) < 1:
        raise ValueError("need at least one training row")


def als_path(data: LabeledDataset, cfg: TrainConfig, fmap: FeatureMapConfig) -> Iterator[AlsStep]:
    """Yield the model state after every single-factor update.

    Dimensions are visited in ascending order, ``cfg.sweeps`` times, and the
    run stops early after ``cfg.max_updates`` updates.
    """
    _check_data(data, fmap)
    state = _AlsState(data.features, data.labels, init_factors(cfg, fmap), cfg.ridge, fmap)
    for k, d in enumerate(_schedule(fmap.dims, cfg), start=1):
        obj, singular = state.update(d)
        if singular:
            log.warning("update %d (dimension %d): singular block system, used least squares", k, d)
        yield AlsStep(k, d, state.weights, obj, singular)


def als_factor_update(d: int, data: LabeledDataset, weights: CpdTensor, ridge: float,
                      fmap: FeatureMapConfig) -> tuple[np.ndarray, float, bool]:
    """One exact block update of factor ``d``.

    Returns the new factor, the full objective after the update, and whether
    the block system was singular.
    """
    _check_data(data, fmap)
    if not 0 <= d < fmap.dims:
        raise DimensionError(f"dimension {d} outside 0..{fmap.dims - 1}")
    state = _AlsState(data.features, data.labels, weights, ridge, fmap)
    obj, singular = state.update(d)
    return state.factors[d].copy(), obj, singular


def fit(data: LabeledDataset, cfg: TrainConfig, fmap: FeatureMapConfig,
        scaler: ScalerParams | None = None) -> TkrrModel:
    """Train on rows already mapped into the feature-map hyperbox.

    ``scaler`` is stored on the model so that later predictions on raw
    feature rows are scaled the same way; it is not applied to ``data``.
    """
    weights = init_factors(cfg, fmap)
    history = []
    singular = 0
    for step in als_path(data, cfg, fmap):
        weights = step.weights
        history.append(step.objective)
        singular += step.singular
    return TkrrModel(fmap, weights, cfg.ridge, scaler=scaler, history=history,
                     singular_updates=singular)


def finetune(model: TkrrModel, data: LabeledDataset, sweeps: int = 1,
             update_dims: Sequence[int] | None = None,
             max_updates: int | None = None) -> TkrrModel:
    """Warm-started ALS on new rows with the source model's feature map and ridge."""
    if data.dims != model.dims:
        raise DimensionError(f"data has {data.dims} features, model expects {model.dims}")
    cfg = TrainConfig(rank=model.rank, ridge=model.ridge, sweeps=sweeps,
                      warm_start=model.weights,
                      update_dims=None if update_dims is None else tuple(update_dims),
                      max_updates=max_updates)
    tuned = fit(data, cfg, model.feature_map, scaler=model.scaler)
    return replace(tuned, threshold=model.threshold)


def _prepare_inputs(model: TkrrModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dims:
        raise DimensionError(f"expected {model.dims} features, got {X.shape[1]}")
    if model.scaler is not None:
        X, _ = apply_scaler(model.scaler, X)
    return X


def _uniform_scores(model: TkrrModel, X: np.ndarray) -> np.ndarray:
    phi = np.stack(feature_matrices(X, model.feature_map))  # (D, N, M)
    stacked = np.stack(model.weights.factors)  # (D, M, R)
    proj = np.matmul(phi, stacked)  # (D, N, R)
    return proj.prod(axis=0).sum(axis=1)


def predict_scores(model: TkrrModel, X) -> np.ndarray:
    """Scores ``<Phi(x), W>`` for a batch of raw feature rows (scaled by the model's scaler)."""
    X = _prepare_inputs(model, X)
    fmap = model.feature_map
    if len(set(fmap.basis_counts)) == 1:
        return _uniform_scores(model, X)
    prod = np.ones((X.shape[0], model.rank))
    for q in dimension_projections(X, model.weights, fmap):
        prod *= q
    return prod.sum(axis=1)


def predict_score(model: TkrrModel, x) -> float:
    return float(predict_scores(model, np.asarray(x, dtype=float)[None, :])[0])


def predict_labels(model: TkrrModel, X) -> np.ndarray:
    return np.where(predict_scores(model, X) > model.threshold, 1, -1)


def predict_label(model: TkrrModel, x) -> int:
    return 1 if predict_score(model, x) > model.threshold else -1


def objective(model: TkrrModel, data: LabeledDataset, ridge: float | None = None) -> float:
    """Squared loss plus ``ridge * <W, W>`` on rows already in the hyperbox."""
    ridge = model.ridge if ridge is None else ridge
    _check_data(data, model.feature_map)
    prod = np.ones((len(data), model.rank))
    for q in dimension_projections(data.features, model.weights, model.feature_map):
        prod *= q
    resid = prod.sum(axis=1) - data.labels
    return float(resid @ resid + ridge * cpd_inner_product(model.weights, model.weights))


def regularizer_blocks(weights: CpdTensor) -> list[float]:
    """``<vec(W_d^T W_d), vec(H_d)>`` for each d, with H_d the Gram product over the other modes.

    Every entry equals ``<W, W>``; exposed so that identity can be checked.
    """
    grams = [f.T @ f for f in weights.factors]
    r = weights.rank
    return [float(np.sum(g * _hadamard_excluding(grams, d, (r, r)))) for d, g in enumerate(grams)]
