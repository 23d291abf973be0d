from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError


@dataclass(frozen=True)
class LabeledDataset:
    """Feature rows with ±1 labels and the bookkeeping the CV schemes need.

    Rows of one group are expected in time order; the leave-one-seizure-in
    plan uses row distance as its notion of temporal adjacency.
    """

    features: np.ndarray
    labels: np.ndarray
    group_ids: np.ndarray
    seizure_ids: np.ndarray
    overlap_flags: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise DimensionError(f"features must be 2-D, got shape {X.shape}")
        n = X.shape[0]
        y = np.asarray(self.labels, dtype=float).ravel()
        groups = np.asarray(self.group_ids).ravel()
        seizures = np.asarray(self.seizure_ids, dtype=int).ravel()
        overlap = np.asarray(self.overlap_flags, dtype=bool).ravel()
        for name, arr in (("labels", y), ("group_ids", groups),
                          ("seizure_ids", seizures), ("overlap_flags", overlap)):
            if arr.shape[0] != n:
                raise DimensionError(f"{name} has {arr.shape[0]} entries, features have {n} rows")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "group_ids", groups)
        object.__setattr__(self, "seizure_ids", seizures)
        object.__setattr__(self, "overlap_flags", overlap)

    @classmethod
    def from_arrays(cls, X, y, group_ids=None) -> "LabeledDataset":
        """Wrap plain arrays; grouping columns default to a single group with no events."""
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        groups = np.zeros(n, dtype=int) if group_ids is None else group_ids
        return cls(X, y, groups, np.zeros(n, dtype=int), np.zeros(n, dtype=bool))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dims(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "LabeledDataset":
        index = np.asarray(index)
        return LabeledDataset(self.features[index], self.labels[index], self.group_ids[index],
                              self.seizure_ids[index], self.overlap_flags[index])

    def with_features(self, X) -> "LabeledDataset":
        return LabeledDataset(X, self.labels, self.group_ids, self.seizure_ids, self.overlap_flags)
