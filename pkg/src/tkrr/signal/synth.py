"""Synthetic two-channel EEG with annotated rhythmic seizures.

Background is 1/f^beta noise with a weak alpha rhythm, mains hum and
occasional non-epileptic rhythmic bursts (drowsiness-like theta/alpha
trains) whose rate, frequency and size are patient specific.
The background level drifts slowly between states over minutes. Seizures
are 3-5 Hz spike-like bursts whose amplitude grows over the event, placed on
one channel and leaking weakly into the other, alternating sides between
consecutive seizures; each event jitters frequency, size and growth around
the patient's typical values. Each patient draws its own spectral slope,
amplitudes, seizure frequency and waveform from a patient seed, so patients
differ systematically while staying individually consistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .recording import BACKGROUND, SEIZURE, Annotation, Recording

N_CHANNELS = 2


@dataclass(frozen=True)
class PatientProfile:
    background_scale: float
    spectral_slope: float
    alpha_freq: float
    alpha_amp: float
    seizure_freq: float
    seizure_amp: float
    amp_growth: float
    harmonics: tuple[float, float]
    channel_gains: tuple[float, float]
    leak: float
    line_noise: float
    mimic_rate: float
    mimic_freq: float
    mimic_amp: float
    state_depth: float
    state_period: float
    event_jitter: float


def patient_profile(patient_seed: int) -> PatientProfile:
    rng = np.random.default_rng([patient_seed, 0x5EED])
    return PatientProfile(
        background_scale=float(np.exp(rng.uniform(np.log(5.0), np.log(40.0)))),
        spectral_slope=float(rng.uniform(0.8, 1.8)),
        alpha_freq=float(rng.uniform(8.5, 11.5)),
        alpha_amp=float(rng.uniform(0.1, 0.5)),
        seizure_freq=float(rng.uniform(3.0, 5.0)),
        seizure_amp=float(rng.uniform(0.8, 2.5)),
        amp_growth=float(rng.uniform(1.5, 3.0)),
        harmonics=(float(rng.uniform(0.2, 0.7)), float(rng.uniform(0.0, 0.4))),
        channel_gains=(float(rng.uniform(0.7, 1.3)), float(rng.uniform(0.7, 1.3))),
        leak=float(rng.uniform(0.1, 0.4)),
        line_noise=float(rng.uniform(0.0, 0.3)),
        mimic_rate=float(rng.uniform(0.0, 0.03)),
        mimic_freq=float(rng.uniform(3.0, 9.0)),
        mimic_amp=float(rng.uniform(0.5, 2.0)),
        state_depth=float(rng.uniform(0.2, 0.6)),
        state_period=float(rng.uniform(60.0, 240.0)),
        event_jitter=float(rng.uniform(0.05, 0.15)),
    )


def colored_noise(rng: np.random.Generator, n: int, fs: float, slope: float) -> np.ndarray:
    """Unit-variance noise with power spectrum ~ 1/f^slope above 0.5 Hz."""
    spec = rng.standard_normal(n // 2 + 1) + 1j * rng.standard_normal(n // 2 + 1)
    f = np.fft.rfftfreq(n, 1.0 / fs)
    spec *= np.maximum(f, 0.5) ** (-slope / 2.0)
    spec[0] = 0.0
    x = np.fft.irfft(spec, n)
    return x / x.std()


def _burst(t: np.ndarray, prof: PatientProfile, rng: np.random.Generator) -> np.ndarray:
    dur = t[-1] - t[0] if t.size > 1 else 1.0
    frac = (t - t[0]) / dur
    jit = prof.event_jitter
    # frequency drifts down slightly over the event
    freq = prof.seizure_freq * (1.0 - 0.15 * frac) * rng.uniform(1 - jit, 1 + jit)
    phase = 2 * np.pi * np.cumsum(freq) * (t[1] - t[0] if t.size > 1 else 1.0)
    phase += rng.uniform(0, 2 * np.pi)
    h2, h3 = prof.harmonics
    wave = np.sin(phase) + h2 * np.sin(2 * phase) + h3 * np.sin(3 * phase)
    wave /= np.sqrt(1 + h2**2 + h3**2)
    size = prof.seizure_amp * np.exp(rng.normal(0.0, 1.5 * jit))
    growth = 1.0 + (prof.amp_growth - 1.0) * rng.uniform(0.3, 1.3)
    envelope = size * (1.0 + (growth - 1.0) * frac)
    return envelope * wave


def _add_mimics(x: np.ndarray, t: np.ndarray, spans, prof: PatientProfile,
                rng: np.random.Generator) -> None:
    """Short rhythmic background bursts, kept clear of the seizure spans."""
    duration = t[-1] + (t[1] - t[0])
    fs = 1.0 / (t[1] - t[0])
    n_bursts = rng.poisson(prof.mimic_rate * duration)
    for _ in range(n_bursts):
        length = rng.uniform(2.0, 6.0)
        start = rng.uniform(0.0, max(duration - length, 0.0))
        if any(start < e + 2.0 and start + length > s - 2.0 for s, e in spans):
            continue
        i0, i1 = int(start * fs), int((start + length) * fs)
        seg = t[i0:i1] - t[i0]
        taper = np.sin(np.pi * seg / length) ** 2
        wave = np.sin(2 * np.pi * prof.mimic_freq * seg + rng.uniform(0, 2 * np.pi))
        side = rng.integers(0, N_CHANNELS)
        x[side, i0:i1] += prof.mimic_amp * prof.channel_gains[side] * taper * wave


def synthesize_recording(seed: int, duration: float, seizures: Sequence[tuple[float, float]],
                         patient_seed: int | None = None, sample_rate: float = 250.0,
                         patient_id: str = "p0") -> Recording:
    """Generate one recording with seizures at the given ``(start_s, duration_s)`` spans.

    Gaps between seizures are annotated as background, so every sample is
    covered. Deterministic in ``(seed, patient_seed)``.
    """
    spans = sorted((float(s), float(s) + float(d)) for s, d in seizures)
    for start, end in spans:
        if start < 0 or end > duration or not end > start:
            raise ValueError(f"seizure [{start}, {end}] does not fit in {duration} s")
    for (_, e0), (s1, _) in zip(spans, spans[1:]):
        if s1 < e0:
            raise ValueError("seizures overlap")
    prof = patient_profile(seed if patient_seed is None else patient_seed)
    rng = np.random.default_rng([seed, 0xEE6])
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    x = np.empty((N_CHANNELS, n))
    for c in range(N_CHANNELS):
        bg = colored_noise(rng, n, sample_rate, prof.spectral_slope)
        alpha_phase = 2 * np.pi * prof.alpha_freq * t + np.cumsum(rng.normal(0, 0.02, n))
        bg += prof.alpha_amp * np.sqrt(2) * np.sin(alpha_phase)
        bg += 0.05 * rng.standard_normal(n)
        x[c] = prof.channel_gains[c] * bg
    # slow state changes: smooth random log-gain with the patient's time scale
    n_knots = int(duration / prof.state_period) + 2
    knots = rng.normal(0.0, prof.state_depth, n_knots)
    x *= np.exp(np.interp(t, np.linspace(0.0, duration, n_knots), knots))
    x += prof.line_noise * np.sin(2 * np.pi * 50.0 * t)
    _add_mimics(x, t, spans, prof, rng)

    annotations = []
    cursor = 0.0
    for k, (start, end) in enumerate(spans, start=1):
        if start > cursor:
            annotations.append(Annotation(cursor, start, BACKGROUND))
        annotations.append(Annotation(start, end, SEIZURE, k))
        i0, i1 = int(round(start * sample_rate)), int(round(end * sample_rate))
        burst = _burst(t[i0:i1], prof, rng)
        side = (k - 1) % N_CHANNELS
        x[side, i0:i1] += prof.channel_gains[side] * burst
        x[1 - side, i0:i1] += prof.leak * prof.channel_gains[1 - side] * burst
        cursor = end
    if cursor < duration:
        annotations.append(Annotation(cursor, duration, BACKGROUND))
    x *= prof.background_scale
    return Recording(x, sample_rate, tuple(annotations), patient_id)


def seizure_layout(rng: np.random.Generator, n_seizures: int, duration: float,
                   min_len: float = 10.0, max_len: float = 30.0,
                   min_gap: float = 20.0) -> list[tuple[float, float]]:
    """Random non-overlapping seizure spans, each at least ``min_len`` seconds."""
    lengths = rng.uniform(min_len, max_len, n_seizures)
    slack = duration - lengths.sum() - min_gap * (n_seizures + 1)
    if slack < 0:
        raise ValueError(f"{n_seizures} seizures do not fit in {duration} s")
    cuts = np.sort(rng.uniform(0, slack, n_seizures))
    spans = []
    pos = min_gap
    prev_cut = 0.0
    for length, cut in zip(lengths, cuts):
        pos += cut - prev_cut
        spans.append((round(float(pos), 3), round(float(length), 3)))
        pos += length + min_gap
        prev_cut = cut
    return spans
