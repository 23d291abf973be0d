from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ParameterError
from .recording import SEIZURE, Recording


@dataclass(frozen=True)
class WindowSpec:
    length_s: float = 2.0
    seizure_overlap: float = 0.5
    background_overlap: float = 0.0

    def __post_init__(self):
        if not self.length_s > 0:
            raise ParameterError("window length must be positive")
        for ov in (self.seizure_overlap, self.background_overlap):
            if not 0 <= ov < 1:
                raise ParameterError(f"overlap {ov} outside [0, 1)")


@dataclass(frozen=True)
class Window:
    start: int
    stop: int
    label: int
    seizure_id: int
    overlap: bool


def segment_windows(rec: Recording, spec: WindowSpec = WindowSpec()) -> list[Window]:
    """Cut each annotation span into fixed-length windows.

    Windows never cross a span boundary and partial tails are dropped. With
    overlap, every window sharing samples with an already kept
    non-overlapping window is flagged, so dropping the flagged ones leaves a
    gap-free non-overlapping tiling.
    """
    fs = rec.sample_rate
    length = int(round(spec.length_s * fs))
    out = []
    for ann in rec.annotations:
        seizure = ann.label == SEIZURE
        overlap = spec.seizure_overlap if seizure else spec.background_overlap
        stride = max(1, int(round(length * (1.0 - overlap))))
        first = int(np.ceil(ann.start * fs - 1e-9))
        last = min(int(np.floor(ann.end * fs + 1e-9)), rec.n_samples)
        next_clean = first
        for start in range(first, last - length + 1, stride):
            flagged = start < next_clean
            if not flagged:
                next_clean = start + length
            out.append(Window(start, start + length, 1 if seizure else -1,
                              ann.seizure_id if seizure else 0, flagged))
    return out


def window_samples(rec: Recording, win: Window) -> np.ndarray:
    return rec.channels[:, win.start:win.stop]
