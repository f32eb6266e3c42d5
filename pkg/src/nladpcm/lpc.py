"""Autocorrelation-method linear prediction.

Prediction convention: ``xhat[n] = sum(a[i] * x[n - i] for i in 1..p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LinearCoeffs:
    a: np.ndarray
    # Diagnostics from the recursion; empty for hand-built coefficient sets.
    reflection: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    error_energy: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64).reshape(-1)
        if len(self.a) < 1:
            raise ValueError("order must be at least 1")
        if not np.all(np.isfinite(self.a)):
            raise ValueError("coefficients must be finite")

    @property
    def order(self) -> int:
        return len(self.a)

    @classmethod
    def zeros(cls, order: int) -> "LinearCoeffs":
        return cls(np.zeros(order))


def autocorrelation(window, order: int) -> np.ndarray:
    """Biased autocorrelation ``r[0..order]`` of ``window`` (no lag window)."""
    w = np.asarray(window, dtype=np.float64)
    n = len(w)
    if order < 0 or n < order + 1:
        raise ValueError(f"window of length {n} too short for order {order}")
    return np.array([np.dot(w[k:], w[: n - k]) for k in range(order + 1)])


def levinson_durbin(r, order: int) -> LinearCoeffs:
    """Solve the autocorrelation normal equations by the Levinson recursion.

    The recursion stops early, leaving the higher coefficients at zero, when the
    error energy is no longer positive or a reflection coefficient reaches
    magnitude one.
    """
    r = np.asarray(r, dtype=np.float64)
    if order < 1:
        raise ValueError("order must be at least 1")
    if len(r) < order + 1:
        raise ValueError(f"need {order + 1} autocorrelation lags, got {len(r)}")
    if not r[0] > 0.0:
        raise ValueError("r[0] must be positive (silent or degenerate window)")

    a = np.zeros(order + 1)
    a[0] = 1.0  # a[0] is a placeholder; a[1:] holds the predictor
    ks = np.zeros(order)
    energies = np.zeros(order + 1)
    energy = r[0]
    energies[0] = energy
    for i in range(1, order + 1):
        if energy <= 0.0:
            break
        acc = r[i] - np.dot(a[1:i], r[i - 1 : 0 : -1])
        k = acc / energy
        if not abs(k) < 1.0:
            break
        prev = a[1:i].copy()
        a[1:i] = prev - k * prev[::-1]
        a[i] = k
        ks[i - 1] = k
        energy = energy * (1.0 - k * k)
        energies[i] = energy
    else:
        i = order + 1
    energies[i:] = energies[i - 1]
    return LinearCoeffs(a[1:], ks, energies)


def hamming_taper(window) -> np.ndarray:
    w = np.asarray(window, dtype=np.float64)
    return w * np.hamming(len(w))


def fit_lpc(window, order: int, taper: str = "rect") -> LinearCoeffs:
    """Fit an order-``order`` predictor to ``window``; silence gives the zero predictor."""
    w = np.asarray(window, dtype=np.float64)
    if taper == "hamming":
        w = hamming_taper(w)
    elif taper != "rect":
        raise ValueError(f"unknown taper {taper!r}")
    r = autocorrelation(w, order)
    if not r[0] > 0.0:
        return LinearCoeffs.zeros(order)
    return levinson_durbin(r, order)


def lpc_predict(history, coeffs: LinearCoeffs) -> float:
    """Predict the next sample from ``history`` (most recent sample last)."""
    p = coeffs.order
    h = np.asarray(history, dtype=np.float64)
    if len(h) < p:
        raise ValueError(f"history of {len(h)} samples, predictor needs {p}")
    return float(np.dot(coeffs.a, h[-1 : -p - 1 : -1]))
