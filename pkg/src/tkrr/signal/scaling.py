"""Min-max scaling into [-1, 1] with clamping at apply time."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import DimensionError

LOW, HIGH = -1.0, 1.0


@dataclass(frozen=True)
class ScalerParams:
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.minimum, dtype=float).ravel()
        hi = np.asarray(self.maximum, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise DimensionError("minimum and maximum differ in length")
        if np.any(hi < lo):
            raise ValueError("maximum below minimum for some feature")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    @property
    def degenerate(self) -> np.ndarray:
        """Features that were constant on the training rows."""
        return self.maximum == self.minimum

    @property
    def dims(self) -> int:
        return self.minimum.shape[0]


def fit_scaler(features) -> ScalerParams:
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("cannot fit a scaler on an empty training set")
    return ScalerParams(X.min(axis=0), X.max(axis=0))


def apply_scaler(params: ScalerParams, features) -> tuple[np.ndarray, int]:
    """Map features into [-1, 1]; returns the scaled rows and the number of clamped entries."""
    X = np.asarray(features, dtype=float)
    if X.shape[-1] != params.dims:
        raise DimensionError(f"scaler fitted on {params.dims} features, got {X.shape[-1]}")
    span = params.maximum - params.minimum
    safe = np.where(params.degenerate, 1.0, span)
    out = LOW + (HIGH - LOW) * (X - params.minimum) / safe
    out = np.where(params.degenerate, 0.0, out)
    clamped = int(np.count_nonzero((out < LOW) | (out > HIGH)))
    return np.clip(out, LOW, HIGH), clamped
