"""PCM file I/O, framing and the segmental SNR metric."""

from __future__ import annotations

import logging
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

FORMATS = ("raw16le", "wav")

SEGSNR_MIN_DB = -10.0
SEGSNR_MAX_DB = 80.0


class PcmError(ValueError):
    """Malformed or empty PCM file."""


@dataclass
class SampleBuffer:
    """Mono signal in normalized amplitude [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int = 8000

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    def __len__(self):
        return len(self.samples)


@dataclass
class SegSnrReport:
    segsnr_db: float
    per_segment_db: np.ndarray = field(repr=False)
    segment_len: int
    std_db: float


def _guess_format(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = "wav" if path.suffix.lower() == ".wav" else "raw16le"
    if fmt not in FORMATS:
        raise PcmError(f"unknown PCM format {fmt!r}; expected one of {FORMATS}")
    return fmt


def load_pcm(path, fmt: str | None = None, sample_rate_hz: int = 8000) -> SampleBuffer:
    """Read 16-bit PCM into a :class:`SampleBuffer`.

    ``fmt`` is ``"raw16le"`` or ``"wav"``; when omitted it is taken from the
    file suffix. Raw files carry no rate, so ``sample_rate_hz`` is used.
    """
    path = Path(path)
    fmt = _guess_format(path, fmt)
    if fmt == "raw16le":
        data = path.read_bytes()
        if len(data) % 2:
            raise PcmError(f"{path}: raw16le byte length {len(data)} is odd")
        ints = np.frombuffer(data, dtype="<i2")
        rate = sample_rate_hz
    else:
        try:
            with wave.open(str(path), "rb") as w:
                channels = w.getnchannels()
                width = w.getsampwidth()
                rate = w.getframerate()
                frames = w.readframes(w.getnframes())
        except (wave.Error, EOFError) as exc:
            raise PcmError(f"{path}: malformed wav file ({exc})") from exc
        if width != 2:
            raise PcmError(f"{path}: only 16-bit PCM wav is supported (got {8 * width}-bit)")
        ints = np.frombuffer(frames, dtype="<i2")
        if channels > 1:
            logger.warning("%s: %d channels, keeping the first", path, channels)
            ints = ints[: len(ints) - len(ints) % channels].reshape(-1, channels)[:, 0]
    if len(ints) == 0:
        raise PcmError(f"{path}: zero-length signal")
    return SampleBuffer(ints.astype(np.float64) / 32768.0, rate)


def to_int16(samples) -> np.ndarray:
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")


def pcm16(samples) -> np.ndarray:
    """Samples as they read back after a 16-bit store."""
    return to_int16(samples).astype(np.float64) / 32768.0


def store_pcm(buffer: SampleBuffer, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = _guess_format(path, fmt)
    ints = to_int16(buffer.samples)
    if fmt == "raw16le":
        path.write_bytes(ints.tobytes())
        return
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(buffer.sample_rate_hz))
        w.writeframes(ints.tobytes())


def frames(samples, frame_len: int) -> np.ndarray:
    """View of ``samples`` as consecutive full frames; the partial tail is dropped."""
    if frame_len <= 0:
        raise ValueError("frame_len must be positive")
    x = np.asarray(samples, dtype=np.float64)
    n = len(x) // frame_len
    return x[: n * frame_len].reshape(n, frame_len)


def snr_db(signal_energy: float, noise_energy: float) -> float:
    """Clamped SNR of one segment."""
    if noise_energy <= 0.0:
        return SEGSNR_MAX_DB
    if signal_energy <= 0.0:
        return SEGSNR_MIN_DB
    value = 10.0 * np.log10(signal_energy / noise_energy)
    return float(min(max(value, SEGSNR_MIN_DB), SEGSNR_MAX_DB))


def segsnr(original, decoded, segment_len: int) -> SegSnrReport:
    x = original.samples if isinstance(original, SampleBuffer) else np.asarray(original, float)
    y = decoded.samples if isinstance(decoded, SampleBuffer) else np.asarray(decoded, float)
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if segment_len <= 0:
        raise ValueError("segment_len must be positive")
    if len(x) < segment_len:
        raise ValueError(f"signal of {len(x)} samples is shorter than one segment ({segment_len})")
    xs = frames(x, segment_len)
    es = xs - frames(y, segment_len)
    sig = np.sum(xs * xs, axis=1)
    err = np.sum(es * es, axis=1)
    per = np.array([snr_db(s, e) for s, e in zip(sig, err)])
    return SegSnrReport(float(np.mean(per)), per, segment_len, float(np.std(per)))
