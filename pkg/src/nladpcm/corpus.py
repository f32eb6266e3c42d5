"""Synthetic test signals standing in for a speech corpus.

Every generator takes a ``numpy.random.Generator`` and a length and returns
float64 samples peaking at ``peak`` in normalized amplitude.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .signal_io import SampleBuffer, store_pcm

KINDS = ("ar", "sines", "voiced", "nlar", "tanhar", "mixed")


def _normalize(x, peak):
    m = np.max(np.abs(x))
    return x * (peak / m) if m > 0 else x


def _random_ar2(rng):
    radius = rng.uniform(0.85, 0.97)
    theta = rng.uniform(0.05, 0.6) * np.pi
    return np.array([2 * radius * np.cos(theta), -radius * radius])


def ar_signal(rng, n, peak=0.5, sections=2):
    """Stable AR(2*sections) process under a slow amplitude envelope."""
    denom = np.ones(1)
    for _ in range(sections):
        denom = np.convolve(denom, np.r_[1.0, -_random_ar2(rng)])
    x = lfilter([1.0], denom, rng.normal(size=n))
    env = 1.0 + 0.5 * np.sin(2 * np.pi * rng.uniform(0.5, 3.0) * np.arange(n) / n + rng.uniform(0, 2 * np.pi))
    return _normalize(x * env, peak)


def sines_signal(rng, n, peak=0.5, rate=8000, n_partials=4):
    """Sum of amplitude- and frequency-modulated sinusoids."""
    t = np.arange(n) / rate
    x = np.zeros(n)
    for _ in range(n_partials):
        f0 = rng.uniform(100.0, 1500.0)
        fm = rng.uniform(0.5, 4.0)
        dev = rng.uniform(0.0, 30.0)
        phase = 2 * np.pi * np.cumsum(f0 + dev * np.sin(2 * np.pi * fm * t)) / rate
        am = 1.0 + 0.6 * np.sin(2 * np.pi * rng.uniform(0.5, 3.0) * t + rng.uniform(0, 2 * np.pi))
        x += rng.uniform(0.3, 1.0) * am * np.sin(phase + rng.uniform(0, 2 * np.pi))
    return _normalize(x, peak)


def voiced_signal(rng, n, peak=0.5, rate=8000, segment=400):
    """Alternating voiced (pulse train through a resonator) and unvoiced (noise) stretches."""
    x = np.zeros(n)
    pos = 0
    voiced = bool(rng.integers(2))
    while pos < n:
        length = min(int(segment * rng.uniform(0.6, 1.4)), n - pos)
        if voiced:
            period = int(rate / rng.uniform(90.0, 220.0))
            excitation = np.zeros(length)
            excitation[rng.integers(period)::period] = 1.0
            seg = lfilter([1.0], np.r_[1.0, -_random_ar2(rng)], excitation)
            seg = lfilter([1.0], np.r_[1.0, -_random_ar2(rng)], seg)
            seg = seg / (np.max(np.abs(seg)) or 1.0)
        else:
            seg = 0.15 * rng.normal(size=length)
        x[pos:pos + length] = seg
        pos += length
        voiced = not voiced
    return _normalize(x, peak)


def nlar_signal(rng, n, peak=0.8, gain=None, noise=0.1):
    """Nonlinear autoregression ``x[n] = tanh(gain * (a1 x[n-1] + a2 x[n-2])) + noise``."""
    a1, a2 = _random_ar2(rng)
    gain = rng.uniform(1.5, 2.5) if gain is None else gain
    e = noise * rng.normal(size=n)
    x = np.zeros(n)
    x1 = x2 = 0.0
    for i in range(n):
        x1, x2 = math.tanh(gain * (a1 * x1 + a2 * x2)) + e[i], x1
        x[i] = x1
    return _normalize(x, peak)


def tanhar_signal(rng, n, peak=0.8, gain=None):
    """Saturated AR process, ``x[n] = tanh(gain * AR(2)[n] / std)``."""
    a = _random_ar2(rng)
    s = lfilter([1.0], np.r_[1.0, -a], rng.normal(size=n))
    gain = rng.uniform(1.5, 2.5) if gain is None else gain
    return _normalize(np.tanh(gain * s / np.std(s)), peak)


GENERATORS = {
    "ar": ar_signal,
    "sines": sines_signal,
    "voiced": voiced_signal,
    "nlar": nlar_signal,
    "tanhar": tanhar_signal,
}


def make_corpus(kind="mixed", n_files=10, n_samples=4000, seed=0):
    """List of sample arrays; ``mixed`` cycles through ``ar``, ``sines`` and ``voiced``."""
    if kind not in KINDS:
        raise ValueError(f"unknown corpus kind {kind!r}; expected one of {KINDS}")
    rng = np.random.default_rng(seed)
    kinds = ["ar", "sines", "voiced"] if kind == "mixed" else [kind]
    return [GENERATORS[kinds[i % len(kinds)]](rng, n_samples) for i in range(n_files)]


def write_corpus(directory, kind="mixed", n_files=10, n_samples=4000, seed=0, rate=8000):
    """Write a synthetic corpus as 16-bit wav files and return their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, x in enumerate(make_corpus(kind, n_files, n_samples, seed)):
        path = directory / f"{kind}_{i:03d}.wav"
        store_pcm(SampleBuffer(x, rate), path)
        paths.append(path)
    return paths
