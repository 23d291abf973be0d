"""Per-channel window features: 7 time-domain, 7 spectral, 2 entropy.

Column order of one channel's 16 features::

    zero_crossings, maxima, minima, skewness, kurtosis, rms, line_length,
    total_power, peak_freq, delta, theta, alpha, beta, hf,
    spectral_entropy, sample_entropy
"""

from __future__ import annotations

import numpy as np
from scipy import signal, stats

from ..exceptions import ParameterError

FEATURE_NAMES = (
    "zero_crossings", "maxima", "minima", "skewness", "kurtosis", "rms", "line_length",
    "total_power", "peak_freq", "delta", "theta", "alpha", "beta", "hf",
    "spectral_entropy", "sample_entropy",
)
N_FEATURES = len(FEATURE_NAMES)

BANDS = {
    "delta": (1.0, 3.0),
    "theta": (4.0, 8.0),
    "alpha": (9.0, 13.0),
    "beta": (14.0, 20.0),
}
HF_BAND = (40.0, 80.0)
MIN_FREQ = 0.5
MIN_HF_RATE = 200.0


def _is_constant(x: np.ndarray) -> bool:
    return x.size == 0 or np.all(x == x[0])


def time_domain_features(x) -> np.ndarray:
    """Zero crossings, strict local maxima and minima, skewness, excess kurtosis, RMS, line length."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 samples")
    nz = x[x != 0]
    crossings = np.count_nonzero(np.signbit(nz[1:]) != np.signbit(nz[:-1]))
    mid, left, right = x[1:-1], x[:-2], x[2:]
    maxima = np.count_nonzero((mid > left) & (mid > right))
    minima = np.count_nonzero((mid < left) & (mid < right))
    if _is_constant(x):
        skew = kurt = 0.0
    else:
        skew = stats.skew(x, bias=False)
        kurt = stats.kurtosis(x, fisher=True, bias=False)
    rms = np.sqrt(np.mean(x**2))
    line_length = np.sum(np.abs(np.diff(x)))
    return np.array([crossings, maxima, minima, skew, kurt, rms, line_length], dtype=float)


def hann_periodogram(x, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided PSD of a single Hann-tapered segment."""
    return signal.periodogram(np.asarray(x, dtype=float), fs=fs, window="hann",
                              detrend=False, scaling="density")


def _band_mean(freqs, psd, band) -> float:
    sel = (freqs >= band[0]) & (freqs <= band[1])
    return float(psd[sel].mean()) if np.any(sel) else 0.0


def frequency_domain_features(x, fs: float, hf_samples=None) -> np.ndarray:
    """Total power, peak frequency, and mean PSD in the delta/theta/alpha/beta/HF bands.

    ``hf_samples`` is the same window taken before the band-pass filter; the
    HF band is measured on it. Defaults to ``x``.
    """
    if fs < MIN_HF_RATE:
        raise ParameterError(f"sample rate {fs} too low for the {HF_BAND} Hz band")
    freqs, psd = hann_periodogram(x, fs)
    sel = freqs >= MIN_FREQ
    df = freqs[1] - freqs[0]
    total = float(np.sum(psd[sel]) * df)
    peak = float(freqs[sel][np.argmax(psd[sel])]) if total > 0 else 0.0
    bands = [_band_mean(freqs, psd, b) for b in BANDS.values()]
    hf_f, hf_psd = hann_periodogram(x if hf_samples is None else hf_samples, fs)
    return np.array([total, peak, *bands, _band_mean(hf_f, hf_psd, HF_BAND)])


def spectral_entropy(x, fs: float = 1.0) -> float:
    """Shannon entropy of the normalized PSD over all one-sided bins, scaled to [0, 1]."""
    x = np.asarray(x, dtype=float)
    if _is_constant(x):
        return 0.0
    _, psd = hann_periodogram(x, fs)
    p = psd / psd.sum()
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)) / np.log(p.size))


def sample_entropy(x, m: int = 2, r_factor: float = 0.2) -> float:
    """Sample entropy ``-log(A / B)`` with Chebyshev tolerance ``r_factor * std``.

    B counts template pairs of length ``m`` within tolerance, A those of
    length ``m + 1``; both use the same ``L - m`` template starts and exclude
    self-matches. A constant series gives 0. When no pair matches, the
    largest finite value ``log(P)`` is returned, with P the number of
    template pairs.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if _is_constant(x):
        return 0.0
    r = r_factor * np.std(x)
    close = np.abs(x[:, None] - x[None, :]) <= r
    k = n - m
    match = np.ones((k, k), dtype=bool)
    for t in range(m):
        match &= close[t:t + k, t:t + k]
    longer = match & close[m:m + k, m:m + k]
    upper = np.triu_indices(k, 1)
    b = np.count_nonzero(match[upper])
    a = np.count_nonzero(longer[upper])
    if a == 0 or b == 0:
        return float(np.log(k * (k - 1) / 2))
    return float(-np.log(a / b))


def entropy_features(x, fs: float = 1.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size < 100:
        raise ValueError("entropy features need at least 100 samples")
    return np.array([spectral_entropy(x, fs), sample_entropy(x)])


def channel_features(x, fs: float, hf_samples=None) -> np.ndarray:
    return np.concatenate([
        time_domain_features(x),
        frequency_domain_features(x, fs, hf_samples),
        entropy_features(x, fs),
    ])


def sort_channel_features(per_channel) -> np.ndarray:
    """Sort each feature's channel values in descending order, then flatten feature-major.

    The result does not depend on channel order.
    """
    f = np.asarray(per_channel, dtype=float)
    if f.ndim != 2:
        raise ValueError("expected a (channels, features) matrix")
    return (-np.sort(-f, axis=0)).T.ravel()
