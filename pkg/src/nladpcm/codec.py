"""ADPCM encoder and decoder with linear, neural and switched predictors.

Both directions run through :class:`_Coder`, so the decoder repeats the
encoder's refits and quantizer steps with the same arithmetic. The per-sample
loop works on Python floats, which keeps it free of any dependence on array
memory layout and makes encoder/decoder synchrony exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from operator import mul
from typing import Optional

import numpy as np

from .lpc import LinearCoeffs, fit_lpc
from .mlp import (
    MlpWeights,
    TrainConfig,
    TrainingError,
    TrainingSet,
    multistart_train,
    n_params,
)
from .quantizer import QuantizerConfig, adapt, check_code, step
from .signal_io import SampleBuffer, snr_db

PREDICTORS = ("lpc", "mlp", "hybrid")
ADAPTATIONS = ("forward", "backward")
HYBRID_METRICS = ("closed", "open")
MLP_SELECTIONS = ("open", "closed", "auto")


@dataclass(frozen=True)
class MlpConfig:
    """Multistart training settings for the neural predictor."""

    n_random: int = 3
    use_prev: bool = True
    epochs_random: int = 6
    epochs_prev: int = 3
    train: TrainConfig = field(default_factory=TrainConfig)
    n_inputs: int = 10
    n_hidden: int = 2
    activation: str = "tanh"
    init_scale: float = 0.2
    # How candidates are scored: "open" is prediction SSE on the training
    # window, "closed" is reconstruction SSE from running the quantizer loop,
    # "auto" is closed for forward adaptation and open for backward.
    selection: str = "auto"

    def __post_init__(self):
        if self.n_random < 0 or self.epochs_random < 0 or self.epochs_prev < 0:
            raise ValueError("candidate counts and epochs must be non-negative")
        if self.n_random == 0 and not self.use_prev:
            raise ValueError("MLP needs at least one candidate")
        if self.n_inputs < 1 or self.n_hidden < 1:
            raise ValueError("MLP layer sizes must be positive")
        if self.selection not in MLP_SELECTIONS:
            raise ValueError(f"selection must be one of {MLP_SELECTIONS}")
        if self.init_scale < 0:
            raise ValueError("init_scale must be non-negative")


@dataclass(frozen=True)
class CodecConfig:
    """Codec settings.

    ``training_window`` and ``computing_window`` default to ``frame_len``
    (block-adaptive coding). ``computing_window=1`` refits every sample.
    """

    predictor: str = "lpc"
    lpc_order: int = 10
    adaptation: str = "backward"
    frame_len: int = 100
    training_window: Optional[int] = None
    computing_window: Optional[int] = None
    quantizer: QuantizerConfig = field(default_factory=QuantizerConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    hybrid_metric: str = "closed"
    lpc_taper: str = "rect"
    rng_seed: int = 0
    max_refits: Optional[int] = None

    def __post_init__(self):
        if self.training_window is None:
            object.__setattr__(self, "training_window", self.frame_len)
        if self.computing_window is None:
            object.__setattr__(self, "computing_window", self.frame_len)
        if self.predictor not in PREDICTORS:
            raise ValueError(f"predictor must be one of {PREDICTORS}, got {self.predictor!r}")
        if self.adaptation not in ADAPTATIONS:
            raise ValueError(f"adaptation must be one of {ADAPTATIONS}, got {self.adaptation!r}")
        if self.hybrid_metric not in HYBRID_METRICS:
            raise ValueError(f"hybrid_metric must be one of {HYBRID_METRICS}")
        if self.lpc_taper not in ("rect", "hamming"):
            raise ValueError("lpc_taper must be 'rect' or 'hamming'")
        if self.lpc_order < 1:
            raise ValueError("lpc_order must be positive")
        if min(self.frame_len, self.training_window, self.computing_window) < 1:
            raise ValueError("frame and window lengths must be positive")
        if self.uses_lpc and self.training_window < self.lpc_order + 1:
            raise ValueError(f"training_window must be at least lpc_order + 1 = {self.lpc_order + 1}")
        if self.uses_mlp and self.training_window < self.mlp.n_inputs + 1:
            raise ValueError(f"training_window must be at least {self.mlp.n_inputs + 1} for the MLP")
        if self.predictor == "hybrid":
            if self.adaptation != "backward":
                raise ValueError("hybrid prediction is defined for backward adaptation only")
            if self.computing_window != self.frame_len:
                raise ValueError("hybrid mode refits once per frame: computing_window must equal frame_len")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")
        if self.max_refits is not None and self.max_refits < 0:
            raise ValueError("max_refits must be non-negative")

    @property
    def uses_lpc(self) -> bool:
        return self.predictor in ("lpc", "hybrid")

    @property
    def uses_mlp(self) -> bool:
        return self.predictor in ("mlp", "hybrid")

    @property
    def bits(self) -> int:
        return self.quantizer.bits

    @property
    def context_len(self) -> int:
        return max(self.lpc_order, self.mlp.n_inputs, self.training_window)

    @property
    def payload_size(self) -> int:
        """Floats per forward-mode coefficient block."""
        if self.predictor == "lpc":
            return self.lpc_order
        return n_params(self.mlp.n_inputs, self.mlp.n_hidden)

    def refit_count(self, sample_count: int) -> int:
        """Number of coefficient refits a stream of ``sample_count`` samples performs."""
        blocks = -(-sample_count // self.computing_window)
        n = blocks if self.adaptation == "forward" else max(blocks - 1, 0)
        return n if self.max_refits is None else min(n, self.max_refits)

    def with_bits(self, bits: int) -> "CodecConfig":
        q = self.quantizer
        return replace(self, quantizer=QuantizerConfig(
            bits,
            q.multipliers if bits == q.bits else None,
            delta_min=q.delta_min,
            delta_max=q.delta_max,
            delta_init=q.delta_init,
        ))


@dataclass
class EncodedStream:
    """Everything the decoder needs.

    ``codes`` holds the signed quantizer codes, one per sample;
    ``hybrid_bits`` holds one bit per frame in hybrid mode (1 = neural);
    ``forward_payload`` holds one unquantized coefficient vector per refit in
    forward mode.
    """

    config: CodecConfig
    sample_count: int
    codes: np.ndarray
    hybrid_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    forward_payload: list = field(default_factory=list)
    sample_rate_hz: int = 8000

    def validate(self) -> None:
        cfg = self.config
        if self.sample_count < 1:
            raise ValueError("empty stream")
        if len(self.codes) != self.sample_count:
            raise ValueError(f"stream has {len(self.codes)} codes for {self.sample_count} samples")
        n_frames = -(-self.sample_count // cfg.frame_len)
        want_bits = n_frames if cfg.predictor == "hybrid" else 0
        if len(self.hybrid_bits) != want_bits:
            raise ValueError(f"expected {want_bits} hybrid bits, got {len(self.hybrid_bits)}")
        want_blocks = cfg.refit_count(self.sample_count) if cfg.adaptation == "forward" else 0
        if len(self.forward_payload) != want_blocks:
            raise ValueError(f"expected {want_blocks} forward payload blocks, got {len(self.forward_payload)}")
        for block in self.forward_payload:
            if np.shape(block) != (cfg.payload_size,):
                raise ValueError(f"forward payload block of shape {np.shape(block)}, expected ({cfg.payload_size},)")

    @property
    def side_info_bits(self) -> int:
        return len(self.hybrid_bits)


@dataclass
class FrameStat:
    index: int
    start: int
    length: int
    predictor: str
    prediction_gain_db: float
    snr_db: float
    delta_end: float
    mlp_refits: int = 0
    mlp_selected_prev: int = 0
    mlp_failures: int = 0
    # Hybrid only: each branch's decision metric from the shared entry state.
    lpc_branch_error: Optional[float] = None
    mlp_branch_error: Optional[float] = None


@dataclass
class EncodeReport:
    stream: EncodedStream
    reconstruction: SampleBuffer
    frames: list

    @property
    def selected_prev_fraction(self) -> float:
        refits = sum(f.mlp_refits for f in self.frames)
        if refits == 0:
            return float("nan")
        return sum(f.mlp_selected_prev for f in self.frames) / refits

    @property
    def nonlinear_fraction(self) -> float:
        return float(np.mean([f.predictor == "mlp" for f in self.frames]))


def _clip(v: float) -> float:
    return -1.0 if v < -1.0 else (1.0 if v > 1.0 else v)


def _zero_predictor(hist):
    return 0.0


def lpc_predictor(coeffs: LinearCoeffs):
    """Scalar predictor closure over a history list (most recent last)."""
    p = coeffs.order
    rev = [float(v) for v in coeffs.a[::-1]]
    if not any(rev):
        return _zero_predictor

    def predict(hist):
        return sum(map(mul, rev, hist[-p:]))

    return predict


def mlp_predictor(weights: MlpWeights):
    if weights.is_zero():
        return _zero_predictor
    p = weights.n_inputs
    rows = [[float(v) for v in row] for row in weights.w1]
    units = list(zip(rows, weights.b1.tolist(), weights.w2.tolist()))
    b2 = weights.b2
    tanh = math.tanh
    if weights.activation == "tanh":
        def predict(hist):
            ctx = hist[-p:]
            out = b2
            for row, b, v in units:
                out += v * tanh(b + sum(map(mul, row, ctx)))
            return out
    else:
        def predict(hist):
            ctx = hist[-p:]
            out = b2
            for row, b, v in units:
                out += v * (0.5 * (1.0 + tanh(0.5 * (b + sum(map(mul, row, ctx))))))
            return out
    return predict


class _Span:
    """Result of coding a run of samples with one predictor."""

    __slots__ = ("codes", "recon", "preds", "deltas", "delta", "sse_rec", "sse_pred")


def code_span(predict, qcfg: QuantizerConfig, hist: list, delta: float, n: int,
              x=None, codes=None) -> _Span:
    """Run the ADPCM loop for ``n`` samples, appending reconstructions to ``hist``.

    Encodes ``x`` when given, otherwise decodes ``codes``. Predictions and
    reconstructions are limited to the normalized range [-1, 1].
    """
    out = _Span()
    out_codes, recon, preds, deltas = [], [], [], []
    sse_rec = sse_pred = 0.0
    append = hist.append
    for j in range(n):
        pred = _clip(predict(hist))
        if x is not None:
            e = x[j] - pred
            code, e_hat, delta = step(e, delta, qcfg)
            sse_pred += e * e
        else:
            code = codes[j]
            e_hat = (code + 0.5) * delta
            delta = adapt(delta, code, qcfg)
        y = _clip(pred + e_hat)
        if x is not None:
            d = x[j] - y
            sse_rec += d * d
        append(y)
        out_codes.append(code)
        recon.append(y)
        preds.append(pred)
        deltas.append(delta)
    out.codes, out.recon, out.preds, out.deltas = out_codes, recon, preds, deltas
    out.delta, out.sse_rec, out.sse_pred = delta, sse_rec, sse_pred
    return out


def refit_seed(rng_seed: int, refit_index: int) -> int:
    return int(np.random.SeedSequence([rng_seed, refit_index]).generate_state(1, np.uint64)[0] >> 1)


class _Coder:
    def __init__(self, config: CodecConfig):
        self.cfg = config
        self.q = config.quantizer
        self.pad = config.context_len
        self.hist = [0.0] * self.pad
        self.delta = self.q.delta_init
        self.lpc = LinearCoeffs.zeros(config.lpc_order)
        self.mlp: Optional[MlpWeights] = None
        self.lpc_fn = _zero_predictor
        self.mlp_fn = _zero_predictor
        self.refits = 0
        self.mlp_events = []  # (sample index, selected_prev, failed)
        self.branch_log = []  # (sample index, lpc metric, mlp metric)

    # -- coefficient estimation -------------------------------------------------

    def _closed_loop_score(self, window, delta, frame=None):
        if frame is not None:
            # Forward mode: code the actual frame from the actual coder state.
            hist, target = self.hist[-self.pad:], frame
        else:
            m = self.cfg.mlp.n_inputs
            hist, target = window[:m].tolist(), window[m:].tolist()

        def score(weights):
            return code_span(mlp_predictor(weights), self.q, list(hist), delta, len(target), x=target).sse_rec

        return score

    def closed_selection(self) -> bool:
        sel = self.cfg.mlp.selection
        return sel == "closed" or (sel == "auto" and self.cfg.adaptation == "forward")

    def fit_lpc(self, window) -> LinearCoeffs:
        return fit_lpc(window, self.cfg.lpc_order, self.cfg.lpc_taper)

    def fit_mlp(self, window, t: int, frame=None) -> MlpWeights:
        mc = self.cfg.mlp
        window = np.array(window, dtype=np.float64)
        data = TrainingSet.from_window(window, mc.n_inputs)
        prev = self.mlp if mc.use_prev else None
        if prev is None and mc.n_random == 0:
            prev = MlpWeights.zeros(mc.n_inputs, mc.n_hidden, mc.activation)
        score = self._closed_loop_score(window, self.delta, frame) if self.closed_selection() else None
        try:
            res = multistart_train(
                prev, data, mc.n_random, mc.epochs_random, mc.epochs_prev,
                rng_seed=refit_seed(self.cfg.rng_seed, self.refits), config=mc.train,
                score=score, init_scale=mc.init_scale, n_inputs=mc.n_inputs,
                n_hidden=mc.n_hidden, activation=mc.activation,
            )
        except TrainingError:
            self.mlp_events.append((t, False, True))
            return MlpWeights.zeros(mc.n_inputs, mc.n_hidden, mc.activation)
        self.mlp_events.append((t, res.selected_prev, False))
        return res.weights

    def set_lpc(self, coeffs: LinearCoeffs):
        self.lpc = coeffs
        self.lpc_fn = lpc_predictor(coeffs)

    def set_mlp(self, weights: MlpWeights):
        self.mlp = weights
        self.mlp_fn = mlp_predictor(weights)

    def can_refit(self) -> bool:
        return self.cfg.max_refits is None or self.refits < self.cfg.max_refits

    def refit_backward(self, t: int):
        window = self.hist[-self.cfg.training_window:]
        if self.cfg.uses_lpc:
            self.set_lpc(self.fit_lpc(window))
        if self.cfg.uses_mlp:
            self.set_mlp(self.fit_mlp(window, t))
        self.refits += 1

    def apply_payload(self, block):
        if self.cfg.predictor == "lpc":
            self.set_lpc(LinearCoeffs(block))
        else:
            mc = self.cfg.mlp
            self.set_mlp(MlpWeights.from_vector(block, mc.n_inputs, mc.n_hidden, mc.activation))
        self.refits += 1

    def active_fn(self):
        return self.lpc_fn if self.cfg.predictor == "lpc" else self.mlp_fn

    # -- main loops -----------------------------------------------------------------

    def run(self, n: int, x=None, codes=None, payload=None, hybrid_bits=None):
        """Code ``n`` samples. Returns (codes, recon, preds, deltas, labels, payload, bits)."""
        cfg = self.cfg
        encoding = x is not None
        if encoding and cfg.adaptation == "forward":
            padded = np.concatenate([np.zeros(self.pad), np.asarray(x, dtype=np.float64)])
        all_codes, recon, preds, deltas, labels = [], [], [], [], []
        out_payload, out_bits = [], []
        cw = cfg.computing_window
        t = 0
        block = 0
        while t < n:
            m = min(cw, n - t)
            if cfg.adaptation == "forward":
                if self.can_refit():
                    if encoding:
                        end = self.pad + t + m
                        window = padded[end - cfg.training_window:end]
                        if cfg.predictor == "lpc":
                            vec = self.fit_lpc(window).a
                        else:
                            vec = self.fit_mlp(window, t, x[t:t + m]).to_vector()
                        out_payload.append(vec)
                    else:
                        vec = payload[len(out_payload)]
                        out_payload.append(vec)
                    self.apply_payload(vec)
            elif t > 0 and self.can_refit():
                self.refit_backward(t)

            xs = x[t:t + m] if encoding else None
            cs = None if encoding else codes[t:t + m]
            if cfg.predictor == "hybrid":
                if encoding:
                    span, bit = self._hybrid_encode(xs, m, t)
                else:
                    bit = int(hybrid_bits[block])
                    span = code_span(self.mlp_fn if bit else self.lpc_fn, self.q, self.hist,
                                     self.delta, m, codes=cs)
                out_bits.append(bit)
                label = "mlp" if bit else "lpc"
            else:
                span = code_span(self.active_fn(), self.q, self.hist, self.delta, m, x=xs, codes=cs)
                label = cfg.predictor
            self.delta = span.delta
            all_codes.extend(span.codes)
            recon.extend(span.recon)
            preds.extend(span.preds)
            deltas.extend(span.deltas)
            labels.extend([label] * m)
            t += m
            block += 1
        return all_codes, recon, preds, deltas, labels, out_payload, out_bits

    def _hybrid_encode(self, xs, m, t):
        base = self.hist[-self.pad:]
        lin = code_span(self.lpc_fn, self.q, list(base), self.delta, m, x=xs)
        nl = code_span(self.mlp_fn, self.q, list(base), self.delta, m, x=xs)
        if self.cfg.hybrid_metric == "closed":
            lin_err, nl_err = lin.sse_rec, nl.sse_rec
        else:
            lin_err, nl_err = lin.sse_pred, nl.sse_pred
        # Ties go to the linear branch.
        bit = 1 if nl_err < lin_err else 0
        span = nl if bit else lin
        self.hist.extend(span.recon)
        self.branch_log.append((t, lin_err, nl_err))
        return span, bit


def _frame_stats(cfg, x, recon, preds, deltas, labels, mlp_events, branch_log):
    n = len(recon)
    fl = cfg.frame_len
    x = np.asarray(x, dtype=np.float64)
    recon = np.asarray(recon)
    preds = np.asarray(preds)
    out = []
    for k, start in enumerate(range(0, n, fl)):
        sl = slice(start, min(start + fl, n))
        xs = x[sl]
        sig = float(xs @ xs)
        pe = xs - preds[sl]
        re = xs - recon[sl]
        pred_err = float(pe @ pe)
        gain = 0.0 if sig <= 0.0 else snr_db(sig, pred_err)
        out.append(FrameStat(k, start, sl.stop - start, labels[start],
                             gain, snr_db(sig, float(re @ re)), deltas[sl.stop - 1]))
    for t, selected_prev, failed in mlp_events:
        f = out[t // fl]
        f.mlp_refits += 1
        f.mlp_selected_prev += int(selected_prev)
        f.mlp_failures += int(failed)
    for t, lin_err, nl_err in branch_log:
        f = out[t // fl]
        f.lpc_branch_error, f.mlp_branch_error = lin_err, nl_err
    return out


def _as_samples(signal):
    if isinstance(signal, SampleBuffer):
        return signal.samples, signal.sample_rate_hz
    return np.asarray(signal, dtype=np.float64).reshape(-1), 8000


def encode_stats(signal, config: CodecConfig) -> EncodeReport:
    """Encode and also return per-frame instrumentation of the same run."""
    x, rate = _as_samples(signal)
    if len(x) < 1:
        raise ValueError("cannot encode an empty signal")
    coder = _Coder(config)
    xl = x.tolist()
    codes, recon, preds, deltas, labels, payload, bits = coder.run(len(xl), x=xl)
    stream = EncodedStream(
        config=config,
        sample_count=len(xl),
        codes=np.asarray(codes, dtype=np.int64),
        hybrid_bits=np.asarray(bits, dtype=np.uint8),
        forward_payload=[np.asarray(v, dtype=np.float64) for v in payload],
        sample_rate_hz=rate,
    )
    frames_ = _frame_stats(config, x, recon, preds, deltas, labels, coder.mlp_events, coder.branch_log)
    return EncodeReport(stream, SampleBuffer(np.asarray(recon), rate), frames_)


def encode(signal, config: CodecConfig):
    """Encode ``signal``; returns ``(stream, local_reconstruction)``."""
    report = encode_stats(signal, config)
    return report.stream, report.reconstruction


def decode(stream: EncodedStream) -> SampleBuffer:
    stream.validate()
    cfg = stream.config
    codes = [int(c) for c in stream.codes]
    for c in set(codes):
        check_code(c, cfg.quantizer)
    coder = _Coder(cfg)
    _, recon, *_ = coder.run(
        stream.sample_count,
        codes=codes,
        payload=list(stream.forward_payload),
        hybrid_bits=stream.hybrid_bits,
    )
    return SampleBuffer(np.asarray(recon), stream.sample_rate_hz)
