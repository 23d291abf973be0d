"""Recording -> feature matrix: resample, filter, window, extract, sort channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import LabeledDataset
from .features import N_FEATURES, channel_features, sort_channel_features
from .filters import bandpass_filter, notch_filter, resample
from .recording import Recording
from .windows import WindowSpec, segment_windows


@dataclass(frozen=True)
class PipelineConfig:
    sample_rate: float = 250.0
    band: tuple[float, float] = (0.1, 50.0)
    filter_order: int = 4
    notch_freq: float = 50.0
    notch_q: float = 30.0
    window: WindowSpec = WindowSpec()


def feature_names(n_channels: int) -> list[str]:
    return [f"f{i + 1:02d}" for i in range(n_channels * N_FEATURES)]


def window_features(filtered: np.ndarray, raw: np.ndarray, fs: float) -> np.ndarray:
    """Sorted feature vector of one ``(C, L)`` window; ``raw`` feeds the HF band."""
    per_channel = np.vstack([channel_features(f, fs, hf_samples=r)
                             for f, r in zip(filtered, raw)])
    return sort_channel_features(per_channel)


def extract_features(rec: Recording, cfg: PipelineConfig = PipelineConfig()) -> LabeledDataset:
    """Window-level features for one recording, rows in time order.

    The HF band is read from the resampled signal before band-pass and notch
    filtering; every other feature from the filtered signal.
    """
    raw = resample(rec, cfg.sample_rate)
    filtered = notch_filter(
        bandpass_filter(raw, cfg.band[0], cfg.band[1], cfg.filter_order),
        cfg.notch_freq, cfg.notch_q)
    windows = segment_windows(filtered, cfg.window)
    n_cols = rec.n_channels * N_FEATURES
    X = np.empty((len(windows), n_cols))
    for i, w in enumerate(windows):
        X[i] = window_features(filtered.channels[:, w.start:w.stop],
                               raw.channels[:, w.start:w.stop], cfg.sample_rate)
    return LabeledDataset(
        X,
        np.array([w.label for w in windows], dtype=float),
        np.array([rec.patient_id] * len(windows), dtype=object),
        np.array([w.seizure_id for w in windows], dtype=int),
        np.array([w.overlap for w in windows], dtype=bool),
    )


def concat_datasets(parts) -> LabeledDataset:
    parts = list(parts)
    return LabeledDataset(
        np.vstack([p.features for p in parts]),
        np.concatenate([p.labels for p in parts]),
        np.concatenate([p.group_ids.astype(object) for p in parts]),
        np.concatenate([p.seizure_ids for p in parts]),
        np.concatenate([p.overlap_flags for p in parts]),
    )
