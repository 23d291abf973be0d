"""Resampling and causal IIR filtering of recordings."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy import signal

from ..exceptions import ParameterError
from .recording import Recording

MAX_POLYPHASE_FACTOR = 1000


def _rational_ratio(target: float, source: float) -> tuple[int, int] | None:
    ratio = Fraction(target).limit_denominator(10**6) / Fraction(source).limit_denominator(10**6)
    if ratio.numerator > MAX_POLYPHASE_FACTOR or ratio.denominator > MAX_POLYPHASE_FACTOR:
        return None
    if not np.isclose(float(ratio), target / source, rtol=1e-12, atol=0):
        return None
    return ratio.numerator, ratio.denominator


def resample(rec: Recording, target_hz: float = 250.0) -> Recording:
    """Resample every channel to ``target_hz``.

    Polyphase windowed-sinc when the rates have a small rational ratio,
    linear interpolation otherwise. Annotations stay in seconds.
    """
    if not target_hz > 0:
        raise ParameterError("target rate must be positive")
    if rec.n_samples == 0:
        raise ValueError("empty recording")
    if rec.sample_rate == target_hz:
        return rec
    ratio = _rational_ratio(target_hz, rec.sample_rate)
    if ratio is not None:
        up, down = ratio
        out = signal.resample_poly(rec.channels, up, down, axis=1)
    else:
        n_out = int(round(rec.n_samples * target_hz / rec.sample_rate))
        t_in = np.arange(rec.n_samples) / rec.sample_rate
        t_out = np.arange(n_out) / target_hz
        out = np.vstack([np.interp(t_out, t_in, ch) for ch in rec.channels])
    return rec.with_channels(out, sample_rate=target_hz)


def butter_bandpass_sos(low: float, high: float, fs: float, order: int = 4) -> np.ndarray:
    """Butterworth band-pass as second-order sections (bilinear transform, prewarped edges)."""
    if not 0 < low < high < fs / 2:
        raise ParameterError(f"band edges need 0 < {low} < {high} < {fs / 2}")
    return signal.butter(order, [low, high], btype="bandpass", fs=fs, output="sos")


def bandpass_filter(rec: Recording, low: float = 0.1, high: float = 50.0,
                    order: int = 4) -> Recording:
    sos = butter_bandpass_sos(low, high, rec.sample_rate, order)
    return rec.with_channels(signal.sosfilt(sos, rec.channels, axis=1))


def notch_filter(rec: Recording, freq: float = 50.0, q: float = 30.0) -> Recording:
    if not 0 < freq < rec.sample_rate / 2:
        raise ParameterError(f"notch frequency {freq} outside (0, {rec.sample_rate / 2})")
    b, a = signal.iirnotch(freq, q, fs=rec.sample_rate)
    return rec.with_channels(signal.lfilter(b, a, rec.channels, axis=1))
