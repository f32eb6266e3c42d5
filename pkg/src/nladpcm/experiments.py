"""Configuration files and SEGSNR parameter sweeps.

Configuration files are flat ``key = value`` text with ``#`` comments. The
same keys are accepted as CLI flags (``--frame-len`` for ``frame_len``).
"""

from __future__ import annotations

import csv
import glob
import io
import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .codec import CodecConfig, MlpConfig, encode_stats
from .mlp import TrainConfig
from .quantizer import QuantizerConfig
from .signal_io import PcmError, load_pcm, pcm16, segsnr

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "schema_version",
    "method",
    "predictor",
    "adaptation",
    "lpc_order",
    "nq",
    "frame_len",
    "training_window",
    "computing_window",
    "seed",
    "n_files",
    "segsnr_db",
    "std_db",
    "selected_prev_fraction",
    "samples_per_second",
)

# Codec keys: name -> parser. Lists are comma separated.
def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none") else int(text)


def _floats(text: str):
    return tuple(float(v) for v in text.split(",") if v.strip())


CODEC_KEYS = {
    "predictor": str,
    "lpc_order": int,
    "adaptation": str,
    "frame_len": int,
    "training_window": _opt_int,
    "computing_window": _opt_int,
    "bits": int,
    "multipliers": _floats,
    "delta_min": float,
    "delta_max": float,
    "delta_init": float,
    "hybrid_metric": str,
    "lpc_taper": str,
    "rng_seed": int,
    "max_refits": _opt_int,
    "mlp_n_random": int,
    "mlp_use_prev": _bool,
    "mlp_epochs_random": int,
    "mlp_epochs_prev": int,
    "mlp_inputs": int,
    "mlp_hidden": int,
    "mlp_activation": str,
    "mlp_init_scale": float,
    "mlp_selection": str,
    "lambda_init": float,
    "lambda_up": float,
    "lambda_down": float,
    "lambda_max": float,
}

SWEEP_KEYS = {
    "corpus": lambda s: [v.strip() for v in s.split(",") if v.strip()],
    "methods": lambda s: [v.strip() for v in s.split(",") if v.strip()],
    "bits": lambda s: [int(v) for v in s.split(",") if v.strip()],
    "frame_lens": lambda s: [int(v) for v in s.split(",") if v.strip()],
    "training_windows": lambda s: [int(v) for v in s.split(",") if v.strip()],
    "computing_windows": lambda s: [int(v) for v in s.split(",") if v.strip()],
    "seeds": lambda s: [int(v) for v in s.split(",") if v.strip()],
    "segment_len": _opt_int,
    "output": str,
    "jobs": int,
}


def read_kv(path) -> dict:
    """Parse a ``key = value`` file into a dict of raw strings."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_values(raw: dict, keys: dict, where: str = "config") -> dict:
    out = {}
    for key, value in raw.items():
        if key not in keys:
            raise ValueError(f"{where}: unknown key {key!r}")
        try:
            out[key] = keys[key](value) if isinstance(value, str) else value
        except ValueError as exc:
            raise ValueError(f"{where}: bad value for {key!r}: {exc}") from exc
    return out


def build_config(values: dict, base: Optional[CodecConfig] = None) -> CodecConfig:
    """Apply parsed codec key values on top of ``base``."""
    base = base or CodecConfig()
    v = dict(values)
    q0, m0 = base.quantizer, base.mlp
    bits = v.pop("bits", q0.bits)
    mults = v.pop("multipliers", None)
    if mults is None and bits == q0.bits:
        mults = q0.multipliers
    quant = QuantizerConfig(
        bits,
        mults,
        v.pop("delta_min", q0.delta_min),
        v.pop("delta_max", q0.delta_max),
        v.pop("delta_init", q0.delta_init),
    )
    train = TrainConfig(
        m0.train.epochs,
        v.pop("lambda_init", m0.train.lambda_init),
        v.pop("lambda_up", m0.train.lambda_up),
        v.pop("lambda_down", m0.train.lambda_down),
        v.pop("lambda_max", m0.train.lambda_max),
    )
    mlp = MlpConfig(
        n_random=v.pop("mlp_n_random", m0.n_random),
        use_prev=v.pop("mlp_use_prev", m0.use_prev),
        epochs_random=v.pop("mlp_epochs_random", m0.epochs_random),
        epochs_prev=v.pop("mlp_epochs_prev", m0.epochs_prev),
        train=train,
        n_inputs=v.pop("mlp_inputs", m0.n_inputs),
        n_hidden=v.pop("mlp_hidden", m0.n_hidden),
        activation=v.pop("mlp_activation", m0.activation),
        init_scale=v.pop("mlp_init_scale", m0.init_scale),
        selection=v.pop("mlp_selection", m0.selection),
    )
    frame_len = v.pop("frame_len", base.frame_len)
    # Windows left unset follow the frame length (block-adaptive).
    tw = v.pop("training_window", None)
    cw = v.pop("computing_window", None)
    fields_ = dict(
        predictor=base.predictor,
        lpc_order=base.lpc_order,
        adaptation=base.adaptation,
        hybrid_metric=base.hybrid_metric,
        lpc_taper=base.lpc_taper,
        rng_seed=base.rng_seed,
        max_refits=base.max_refits,
    )
    fields_.update(v)
    return CodecConfig(
        frame_len=frame_len,
        training_window=tw,
        computing_window=cw,
        quantizer=quant,
        mlp=mlp,
        **fields_,
    )


def load_config(path, overrides: Optional[dict] = None) -> CodecConfig:
    values = parse_values(read_kv(path), CODEC_KEYS, str(path)) if path else {}
    values.update(overrides or {})
    return build_config(values)


# -- methods -----------------------------------------------------------------------


class Method(NamedTuple):
    predictor: str
    adaptation: str
    lpc_order: int = 10

    @property
    def label(self) -> str:
        tag = "F" if self.adaptation == "forward" else "B"
        if self.predictor == "lpc":
            name = f"LPC{self.lpc_order}"
        elif self.predictor == "mlp":
            name = "MLP"
        else:
            name = "HYBRID" if self.lpc_order == 10 else f"HYBRID{self.lpc_order}"
        return f"ADPCM{tag}-{name}"


STANDARD_METHODS = (
    Method("lpc", "forward", 10),
    Method("lpc", "forward", 25),
    Method("mlp", "forward"),
    Method("lpc", "backward", 10),
    Method("lpc", "backward", 25),
    Method("mlp", "backward"),
    Method("hybrid", "backward"),
)


def parse_method(token: str) -> Method:
    """Parse ``lpc10/forward``, ``mlp/backward``, ``hybrid`` or a label like ``ADPCMB-LPC25``."""
    t = token.strip().lower()
    if t.startswith("adpcm"):
        t = t[len("adpcm"):]
        adaptation = {"f": "forward", "b": "backward"}.get(t[:1])
        if adaptation is None:
            raise ValueError(f"bad method label {token!r}")
        name = t[1:].lstrip("-")
    else:
        name, _, adaptation = t.partition("/")
        adaptation = adaptation or "backward"
        if adaptation not in ("forward", "backward"):
            raise ValueError(f"bad adaptation in method {token!r}")
    for predictor in ("lpc", "mlp", "hybrid"):
        if name.startswith(predictor):
            digits = name[len(predictor):]
            if predictor == "mlp" and digits:
                break
            return Method(predictor, adaptation, int(digits) if digits else 10)
    raise ValueError(f"bad method {token!r}")


# -- sweeps ------------------------------------------------------------------------


@dataclass
class SweepSpec:
    corpus: list
    methods: list
    bits_list: list
    frame_lens: list = field(default_factory=lambda: [100])
    training_windows: list = field(default_factory=list)
    computing_windows: list = field(default_factory=list)
    seeds: list = field(default_factory=lambda: [0])
    output_path: Optional[str] = None
    base: CodecConfig = field(default_factory=CodecConfig)
    segment_len: Optional[int] = None
    jobs: int = 1

    def __post_init__(self):
        self.methods = [m if isinstance(m, Method) else parse_method(m) for m in self.methods]
        if not self.corpus:
            raise ValueError("sweep corpus is empty")
        if not self.methods:
            raise ValueError("sweep has no methods")
        if not self.bits_list:
            raise ValueError("sweep has no quantizer bit counts")
        if not self.frame_lens or not self.seeds:
            raise ValueError("sweep needs at least one frame length and one seed")

    def cells(self):
        """Every configuration of the sweep, in output order."""
        tws = self.training_windows or [None]
        cws = self.computing_windows or [None]
        for method, bits, fl, tw, cw, seed in itertools.product(
            self.methods, self.bits_list, self.frame_lens, tws, cws, self.seeds
        ):
            cfg = replace(
                self.base.with_bits(bits),
                predictor=method.predictor,
                adaptation=method.adaptation,
                lpc_order=method.lpc_order,
                frame_len=fl,
                training_window=fl if tw is None else tw,
                computing_window=fl if cw is None else cw,
                rng_seed=seed,
            )
            yield method, cfg


def load_sweep(path, overrides: Optional[dict] = None) -> SweepSpec:
    raw = read_kv(path)
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    sweep_raw = {k: v for k, v in raw.items() if k in SWEEP_KEYS}
    codec_raw = {k: v for k, v in raw.items() if k not in SWEEP_KEYS}
    s = parse_values(sweep_raw, SWEEP_KEYS, str(path))
    base = build_config(parse_values(codec_raw, CODEC_KEYS, str(path)))
    root = Path(path).parent
    corpus = []
    for pattern in s.get("corpus", []):
        full = pattern if Path(pattern).is_absolute() else str(root / pattern)
        matches = sorted(glob.glob(full)) if any(ch in pattern for ch in "*?[") else [full]
        if not matches:
            raise FileNotFoundError(f"corpus pattern matched nothing: {pattern}")
        corpus.extend(matches)
    output = s.get("output")
    if output and not Path(output).is_absolute():
        output = str(root / output)
    return SweepSpec(
        corpus=corpus,
        methods=s.get("methods", []),
        bits_list=s.get("bits", []),
        frame_lens=s.get("frame_lens", [base.frame_len]),
        training_windows=s.get("training_windows", []),
        computing_windows=s.get("computing_windows", []),
        seeds=s.get("seeds", [base.rng_seed]),
        output_path=output,
        base=base,
        segment_len=s.get("segment_len"),
        jobs=s.get("jobs", 1),
    )


@dataclass
class ResultRow:
    method: str
    predictor: str
    adaptation: str
    lpc_order: int
    nq: int
    frame_len: int
    training_window: int
    computing_window: int
    seed: int
    n_files: int
    segsnr_db: float
    std_db: float
    selected_prev_fraction: Optional[float]
    samples_per_second: float

    def as_csv(self) -> list:
        def f(v):
            return "" if v is None or (isinstance(v, float) and np.isnan(v)) else f"{v:.6f}"

        return [
            CSV_SCHEMA_VERSION, self.method, self.predictor, self.adaptation, self.lpc_order,
            self.nq, self.frame_len, self.training_window, self.computing_window, self.seed,
            self.n_files, f(self.segsnr_db), f(self.std_db), f(self.selected_prev_fraction),
            f"{self.samples_per_second:.1f}",
        ]


def evaluate_file(samples, config: CodecConfig, segment_len: Optional[int] = None):
    """Encode one signal; returns (segsnr report, encode report, seconds)."""
    start = time.perf_counter()
    report = encode_stats(samples, config)
    elapsed = time.perf_counter() - start
    # Score what a decoder writes to disk, so CLI eval of a decoded file agrees exactly.
    seg = segsnr(samples, pcm16(report.reconstruction.samples), segment_len or config.frame_len)
    return seg, report, elapsed


def run_cell(method: Method, config: CodecConfig, signals, segment_len=None) -> ResultRow:
    file_means, pooled = [], []
    refits = selected = 0
    seconds = 0.0
    total = 0
    for x in signals:
        seg, report, elapsed = evaluate_file(x, config, segment_len)
        file_means.append(seg.segsnr_db)
        pooled.extend(seg.per_segment_db)
        refits += sum(f.mlp_refits for f in report.frames)
        selected += sum(f.mlp_selected_prev for f in report.frames)
        seconds += elapsed
        total += len(x)
    return ResultRow(
        method=method.label,
        predictor=config.predictor,
        adaptation=config.adaptation,
        lpc_order=config.lpc_order,
        nq=config.bits,
        frame_len=config.frame_len,
        training_window=config.training_window,
        computing_window=config.computing_window,
        seed=config.rng_seed,
        n_files=len(file_means),
        segsnr_db=float(np.mean(file_means)),
        std_db=float(np.std(pooled)),
        selected_prev_fraction=selected / refits if refits else None,
        samples_per_second=total / seconds if seconds > 0 else float("inf"),
    )


def _run_cell_args(args):
    return run_cell(*args)


def load_corpus(paths) -> list:
    """Load every file up front so that an unreadable one aborts before any coding."""
    signals = []
    for path in paths:
        if not Path(path).is_file():
            raise FileNotFoundError(f"corpus file not found: {path}")
        try:
            signals.append(load_pcm(path).samples)
        except PcmError as exc:
            raise PcmError(f"corpus file {path}: {exc}") from exc
    return signals


def run_sweep(spec: SweepSpec, signals=None) -> list:
    """Run every cell of ``spec``; writes the CSV when ``spec.output_path`` is set.

    ``signals`` may be passed in directly (arrays) instead of loading ``spec.corpus``.
    """
    signals = load_corpus(spec.corpus) if signals is None else signals
    cells = list(spec.cells())
    for method, cfg in cells:
        if cfg.computing_window == 1 and cfg.uses_mlp and max(len(x) for x in signals) > 2000:
            logger.warning("%s refits every sample on long signals; this is slow", method.label)
            break
    jobs = [(method, cfg, signals, spec.segment_len) for method, cfg in cells]
    if spec.jobs > 1:
        with ProcessPoolExecutor(spec.jobs) as pool:
            rows = list(pool.map(_run_cell_args, jobs))
    else:
        rows = [_run_cell_args(j) for j in jobs]
    if spec.output_path:
        write_csv(rows, spec.output_path)
    return rows


def csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.as_csv())
    return buf.getvalue()


def write_csv(rows, path) -> None:
    Path(path).write_text(csv_text(rows), encoding="utf-8")


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def table(rows, methods=None) -> str:
    """Method-by-Nq text table of ``segsnr std`` pairs, averaged over seeds and windows."""
    bits = sorted({r.nq for r in rows})
    labels = [m.label for m in methods] if methods else list(dict.fromkeys(r.method for r in rows))
    lines = ["METHOD".ljust(16) + "".join(f"Nq={b} segsnr   std  ".rjust(22) for b in bits)]
    for label in labels:
        cells = []
        for b in bits:
            sel = [r for r in rows if r.method == label and r.nq == b]
            if sel:
                cells.append(f"{np.mean([r.segsnr_db for r in sel]):>14.2f}{np.mean([r.std_db for r in sel]):>8.2f}")
            else:
                cells.append(" " * 22)
        lines.append(label.ljust(16) + "".join(cells))
    return "\n".join(lines)
