"""Midrise uniform quantizer with Jayant one-word-memory step adaptation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Multipliers indexed by code magnitude (innermost cell first).
JAYANT_MULTIPLIERS = {
    2: (0.8, 1.6),
    3: (0.9, 0.9, 1.25, 1.75),
    4: (0.9, 0.9, 0.9, 0.9, 1.2, 1.6, 2.0, 2.4),
    5: (0.9,) * 8 + (1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6),
}

DELTA_MIN = 1e-5
DELTA_MAX = 0.5
DELTA_INIT = 0.01


@dataclass(frozen=True)
class QuantizerConfig:
    bits: int = 4
    multipliers: tuple = field(default=None)
    delta_min: float = DELTA_MIN
    delta_max: float = DELTA_MAX
    delta_init: float = DELTA_INIT

    def __post_init__(self):
        if not 2 <= self.bits <= 5:
            raise ValueError(f"bits must be in [2, 5], got {self.bits}")
        if self.multipliers is None:
            object.__setattr__(self, "multipliers", JAYANT_MULTIPLIERS[self.bits])
        mult = tuple(float(m) for m in self.multipliers)
        object.__setattr__(self, "multipliers", mult)
        if len(mult) != self.half:
            raise ValueError(f"{self.bits}-bit quantizer needs {self.half} multipliers, got {len(mult)}")
        if any(not m > 0 for m in mult):
            raise ValueError("multipliers must be positive")
        if not 0 < self.delta_min <= self.delta_init <= self.delta_max:
            raise ValueError("need 0 < delta_min <= delta_init <= delta_max")

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def half(self) -> int:
        return 1 << (self.bits - 1)

    def initial_state(self) -> "QuantizerState":
        return QuantizerState(self.delta_init)


@dataclass(frozen=True)
class QuantizerState:
    delta: float


def magnitude(code: int) -> int:
    """Magnitude rank of a signed midrise code: 0 and -1 are innermost."""
    return code if code >= 0 else -code - 1


def step(e: float, delta: float, config: QuantizerConfig):
    """One encoder step on a bare step size; returns ``(code, e_hat, next_delta)``."""
    half = config.half
    i = math.floor(e / delta)
    if i < -half:
        i = -half
    elif i > half - 1:
        i = half - 1
    return i, (i + 0.5) * delta, adapt(delta, i, config)


def adapt(delta: float, code: int, config: QuantizerConfig) -> float:
    nxt = delta * config.multipliers[code if code >= 0 else -code - 1]
    if nxt < config.delta_min:
        return config.delta_min
    if nxt > config.delta_max:
        return config.delta_max
    return nxt


def quantize(e: float, state: QuantizerState, config: QuantizerConfig):
    """Quantize residual ``e``; returns ``(code, e_hat, next_state)``.

    Reconstruction uses the current step; the step is adapted afterwards.
    """
    if not math.isfinite(e):
        raise ValueError("residual must be finite")
    code, e_hat, nxt = step(float(e), state.delta, config)
    return code, e_hat, QuantizerState(nxt)


def check_code(code: int, config: QuantizerConfig) -> None:
    if not -config.half <= code <= config.half - 1:
        raise ValueError(f"code {code} out of range for {config.bits} bits")


def dequantize(code: int, state: QuantizerState, config: QuantizerConfig):
    """Decoder side: ``(e_hat, next_state)`` from the code alone."""
    code = int(code)
    check_code(code, config)
    return (code + 0.5) * state.delta, QuantizerState(adapt(state.delta, code, config))


def pack_codes(codes, bits: int) -> bytes:
    """Offset codes to unsigned and pack ``bits`` bits each, most significant bit first."""
    u = np.asarray(codes, dtype=np.int64) + (1 << (bits - 1))
    if len(u) and (u.min() < 0 or u.max() >= 1 << bits):
        raise ValueError(f"code out of range for {bits} bits")
    shifts = np.arange(bits - 1, -1, -1)
    bitarr = ((u[:, None] >> shifts) & 1).astype(np.uint8).ravel()
    return np.packbits(bitarr).tobytes()


def unpack_codes(data: bytes, bits: int, count: int) -> np.ndarray:
    need = packed_len(count, bits)
    if len(data) < need:
        raise ValueError(f"code payload truncated: need {need} bytes, have {len(data)}")
    bitarr = np.unpackbits(np.frombuffer(data[:need], dtype=np.uint8))[: count * bits]
    weights = 1 << np.arange(bits - 1, -1, -1)
    u = bitarr.reshape(count, bits).astype(np.int64) @ weights
    return u - (1 << (bits - 1))


def packed_len(count: int, bits: int) -> int:
    return (count * bits + 7) // 8
