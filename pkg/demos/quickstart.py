"""Encode a signal with each predictor, write the stream to disk and decode it back."""

import tempfile
from pathlib import Path

import numpy as np

from nladpcm import CodecConfig, bitstream, decode, encode, segsnr
from nladpcm.corpus import voiced_signal

rng = np.random.default_rng(0)
x = voiced_signal(rng, 8000)  # one second at 8 kHz
tmp = Path(tempfile.mkdtemp())

for predictor, adaptation in [("lpc", "forward"), ("lpc", "backward"), ("mlp", "backward"), ("hybrid", "backward")]:
    cfg = CodecConfig(predictor=predictor, adaptation=adaptation).with_bits(4)
    stream, local = encode(x, cfg)

    path = tmp / f"{predictor}_{adaptation}.nadp"
    bitstream.save(stream, path)
    decoded = decode(bitstream.load(path))

    # The decoder repeats every refit, so its output equals the encoder's copy exactly.
    assert np.array_equal(decoded.samples, local.samples)
    rep = segsnr(x, decoded, 100)
    extra = f"  side bits {stream.side_info_bits}" if predictor == "hybrid" else ""
    print(f"{predictor:6s} {adaptation:8s} {path.stat().st_size:6d} bytes  "
          f"SEGSNR {rep.segsnr_db:6.2f} dB  std {rep.std_db:5.2f}{extra}")
