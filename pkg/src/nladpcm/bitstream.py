"""Binary container for :class:`~nladpcm.codec.EncodedStream`.

Layout (little-endian throughout, version 1)::

    magic            4s   b"NADP"
    version          u8   1
    -- codec configuration --
    predictor        u8   0 lpc, 1 mlp, 2 hybrid
    adaptation       u8   0 forward, 1 backward
    hybrid_metric    u8   0 closed, 1 open
    lpc_taper        u8   0 rect, 1 hamming
    lpc_order        u32
    frame_len        u32
    training_window  u32
    computing_window u32
    max_refits       u64  0 = unlimited, otherwise cap + 1
    rng_seed         u64
    bits             u8
    multipliers      f64 x 2**(bits-1)
    delta_min        f64
    delta_max        f64
    delta_init       f64
    mlp_inputs       u32
    mlp_hidden       u32
    mlp_activation   u8   0 tanh, 1 sigmoid
    mlp_selection    u8   0 open, 1 closed, 2 auto
    mlp_n_random     u32
    mlp_use_prev     u8
    epochs_random    u32
    epochs_prev      u32
    init_scale       f64
    train_epochs     u32  (informational; refits use epochs_random/epochs_prev)
    lambda_init      f64
    lambda_up        f64
    lambda_down      f64
    lambda_max       f64
    -- stream --
    sample_rate_hz   u32
    sample_count     u64
    hybrid bits      ceil(n_frames / 8) bytes, msb first (hybrid mode only)
    forward payload  f64 x payload_size per refit, in refit order (forward mode only)
    codes            ceil(sample_count * bits / 8) bytes, offset-binary, msb first
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .codec import ADAPTATIONS, HYBRID_METRICS, MLP_SELECTIONS, PREDICTORS, CodecConfig, EncodedStream, MlpConfig
from .mlp import ACTIVATIONS, TrainConfig
from .quantizer import QuantizerConfig, pack_codes, packed_len, unpack_codes

MAGIC = b"NADP"
VERSION = 1
TAPERS = ("rect", "hamming")


class StreamFormatError(ValueError):
    pass


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise StreamFormatError(f"truncated stream: need {n} bytes at offset {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        values = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return values if len(values) > 1 else values[0]


def _enum(options, value, name):
    if value >= len(options):
        raise StreamFormatError(f"invalid {name} tag {value}")
    return options[value]


def _config_bytes(cfg: CodecConfig) -> bytes:
    q, m = cfg.quantizer, cfg.mlp
    out = [
        struct.pack(
            "<BBBBIIIIQQB",
            PREDICTORS.index(cfg.predictor),
            ADAPTATIONS.index(cfg.adaptation),
            HYBRID_METRICS.index(cfg.hybrid_metric),
            TAPERS.index(cfg.lpc_taper),
            cfg.lpc_order,
            cfg.frame_len,
            cfg.training_window,
            cfg.computing_window,
            0 if cfg.max_refits is None else cfg.max_refits + 1,
            cfg.rng_seed,
            q.bits,
        ),
        struct.pack(f"<{len(q.multipliers)}d", *q.multipliers),
        struct.pack("<ddd", q.delta_min, q.delta_max, q.delta_init),
        struct.pack(
            "<IIBBIBIId",
            m.n_inputs,
            m.n_hidden,
            ACTIVATIONS.index(m.activation),
            MLP_SELECTIONS.index(m.selection),
            m.n_random,
            int(m.use_prev),
            m.epochs_random,
            m.epochs_prev,
            m.init_scale,
        ),
        struct.pack("<Idddd", m.train.epochs, m.train.lambda_init, m.train.lambda_up,
                    m.train.lambda_down, m.train.lambda_max),
    ]
    return b"".join(out)


def _read_config(r: _Reader) -> CodecConfig:
    (pred, adapt, metric, taper, order, frame_len, tw, cw, max_refits, seed, bits) = r.unpack("BBBBIIIIQQB")
    if not 2 <= bits <= 5:
        raise StreamFormatError(f"invalid quantizer bit count {bits}")
    mults = r.unpack(f"{1 << (bits - 1)}d")
    mults = mults if isinstance(mults, tuple) else (mults,)
    dmin, dmax, dinit = r.unpack("ddd")
    n_in, n_hid, act, sel, n_random, use_prev, ep_r, ep_p, init_scale = r.unpack("IIBBIBIId")
    train = r.unpack("Idddd")
    try:
        return CodecConfig(
            predictor=_enum(PREDICTORS, pred, "predictor"),
            lpc_order=order,
            adaptation=_enum(ADAPTATIONS, adapt, "adaptation"),
            frame_len=frame_len,
            training_window=tw,
            computing_window=cw,
            quantizer=QuantizerConfig(bits, mults, dmin, dmax, dinit),
            mlp=MlpConfig(
                n_random=n_random,
                use_prev=bool(use_prev),
                epochs_random=ep_r,
                epochs_prev=ep_p,
                train=TrainConfig(*train),
                n_inputs=n_in,
                n_hidden=n_hid,
                activation=_enum(ACTIVATIONS, act, "activation"),
                init_scale=init_scale,
                selection=_enum(MLP_SELECTIONS, sel, "selection"),
            ),
            hybrid_metric=_enum(HYBRID_METRICS, metric, "hybrid metric"),
            lpc_taper=_enum(TAPERS, taper, "taper"),
            rng_seed=seed,
            max_refits=None if max_refits == 0 else max_refits - 1,
        )
    except StreamFormatError:
        raise
    except ValueError as exc:
        raise StreamFormatError(f"invalid configuration in stream: {exc}") from exc


def to_bytes(stream: EncodedStream) -> bytes:
    stream.validate()
    cfg = stream.config
    parts = [MAGIC, bytes([VERSION]), _config_bytes(cfg),
             struct.pack("<IQ", stream.sample_rate_hz, stream.sample_count)]
    if cfg.predictor == "hybrid":
        parts.append(np.packbits(np.asarray(stream.hybrid_bits, dtype=np.uint8)).tobytes())
    for block in stream.forward_payload:
        parts.append(np.asarray(block, dtype="<f8").tobytes())
    parts.append(pack_codes(stream.codes, cfg.bits))
    return b"".join(parts)


def from_bytes(data: bytes) -> EncodedStream:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise StreamFormatError("not an NADP stream (bad magic)")
    version = r.unpack("B")
    if version != VERSION:
        raise StreamFormatError(f"unsupported stream version {version}")
    cfg = _read_config(r)
    rate, count = r.unpack("IQ")
    if count == 0:
        raise StreamFormatError("empty stream")
    bits = np.zeros(0, dtype=np.uint8)
    if cfg.predictor == "hybrid":
        n_frames = -(-count // cfg.frame_len)
        bits = np.unpackbits(np.frombuffer(r.take((n_frames + 7) // 8), dtype=np.uint8))[:n_frames]
    payload = []
    if cfg.adaptation == "forward":
        size = cfg.payload_size
        for _ in range(cfg.refit_count(count)):
            payload.append(np.frombuffer(r.take(8 * size), dtype="<f8").astype(np.float64))
    codes = unpack_codes(r.take(packed_len(count, cfg.bits)), cfg.bits, count)
    if r.pos != len(data):
        raise StreamFormatError(f"{len(data) - r.pos} trailing bytes after stream")
    stream = EncodedStream(cfg, count, codes, bits, payload, rate)
    stream.validate()
    return stream


def save(stream: EncodedStream, path) -> None:
    Path(path).write_bytes(to_bytes(stream))


def load(path) -> EncodedStream:
    return from_bytes(Path(path).read_bytes())
