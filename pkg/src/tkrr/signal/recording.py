from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SEIZURE = "seizure"
BACKGROUND = "background"


@dataclass(frozen=True)
class Annotation:
    start: float
    end: float
    label: str
    seizure_id: int = 0

    def __post_init__(self):
        if self.label not in (SEIZURE, BACKGROUND):
            raise ValueError(f"unknown annotation label {self.label!r}")
        if not self.end > self.start:
            raise ValueError(f"annotation end {self.end} not after start {self.start}")


@dataclass(frozen=True)
class Recording:
    """Multichannel samples of shape ``(C, S)`` plus labelled time spans in seconds."""

    channels: np.ndarray
    sample_rate: float
    annotations: tuple[Annotation, ...] = ()
    patient_id: str = "p0"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.channels, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2:
            raise ValueError(f"channels must be (C, S), got shape {x.shape}")
        if not self.sample_rate > 0:
            raise ValueError("sample rate must be positive")
        anns = tuple(sorted(self.annotations, key=lambda a: a.start))
        duration = x.shape[1] / self.sample_rate
        for a in anns:
            if a.start < 0 or a.end > duration + 1e-9:
                raise ValueError(f"annotation [{a.start}, {a.end}] outside [0, {duration}]")
        for prev, nxt in zip(anns, anns[1:]):
            if nxt.start < prev.end - 1e-9:
                raise ValueError(f"annotations overlap at {nxt.start}")
        object.__setattr__(self, "channels", x)
        object.__setattr__(self, "annotations", anns)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def with_channels(self, channels, sample_rate: float | None = None) -> "Recording":
        return Recording(channels, self.sample_rate if sample_rate is None else sample_rate,
                         self.annotations, self.patient_id, self.meta)
