import struct

import numpy as np
import pytest

from nladpcm import bitstream
from nladpcm.bitstream import StreamFormatError, from_bytes, to_bytes
from nladpcm.codec import CodecConfig, MlpConfig, decode, encode
from nladpcm.mlp import TrainConfig
from nladpcm.quantizer import QuantizerConfig

FAST_MLP = MlpConfig(n_random=1, epochs_random=2, epochs_prev=1)


def signal(n=450, seed=0):
    rng = np.random.default_rng(seed)
    return 0.4 * np.sin(np.arange(n) * 0.07) + 0.05 * rng.normal(size=n)


@pytest.mark.parametrize("cfg", [
    CodecConfig(),
    CodecConfig(adaptation="forward", lpc_taper="hamming").with_bits(2),
    CodecConfig(predictor="mlp", adaptation="forward", mlp=FAST_MLP, rng_seed=9).with_bits(3),
    CodecConfig(predictor="hybrid", mlp=FAST_MLP, hybrid_metric="open").with_bits(5),
    CodecConfig(frame_len=60, training_window=80, computing_window=7, max_refits=20),
    CodecConfig(quantizer=QuantizerConfig(3, (0.8, 1.0, 1.3, 1.9), 1e-4, 0.3, 0.02)),
    CodecConfig(predictor="mlp", mlp=MlpConfig(n_random=2, use_prev=False, epochs_random=1, n_inputs=6,
                                               n_hidden=3, activation="sigmoid", init_scale=0.1,
                                               selection="closed", train=TrainConfig(4, 1e-3, 5, 0.5, 1e8))),
], ids=lambda c: f"{c.predictor}-{c.adaptation}-{c.bits}")
def test_round_trip(cfg):
    stream, recon = encode(signal(), cfg)
    back = from_bytes(to_bytes(stream))
    assert back.config == cfg
    assert back.sample_count == stream.sample_count
    assert np.array_equal(back.codes, stream.codes)
    assert np.array_equal(back.hybrid_bits, stream.hybrid_bits)
    assert all(np.array_equal(a, b) for a, b in zip(back.forward_payload, stream.forward_payload))
    assert np.array_equal(decode(back).samples, recon.samples)


def test_save_and_load(tmp_path):
    stream, _ = encode(signal(), CodecConfig())
    bitstream.save(stream, tmp_path / "a.nadp")
    assert to_bytes(bitstream.load(tmp_path / "a.nadp")) == to_bytes(stream)


def test_code_section_size():
    stream, _ = encode(signal(n=333), CodecConfig().with_bits(3))
    data = to_bytes(stream)
    empty, _ = encode(signal(n=1), CodecConfig().with_bits(3))
    header = len(to_bytes(empty)) - 1
    assert len(data) - header == -(-333 * 3 // 8)


@pytest.fixture
def data():
    return to_bytes(encode(signal(), CodecConfig(predictor="hybrid", mlp=FAST_MLP))[0])


def test_bad_magic(data):
    with pytest.raises(StreamFormatError, match="magic"):
        from_bytes(b"RIFF" + data[4:])


def test_wrong_version(data):
    with pytest.raises(StreamFormatError, match="version"):
        from_bytes(data[:4] + bytes([2]) + data[5:])


@pytest.mark.parametrize("cut", [3, 10, 60, -1])
def test_truncated(data, cut):
    with pytest.raises(StreamFormatError):
        from_bytes(data[:cut])


def test_trailing_bytes(data):
    with pytest.raises(StreamFormatError, match="trailing"):
        from_bytes(data + b"\0")


def test_invalid_predictor_tag(data):
    with pytest.raises(StreamFormatError, match="predictor"):
        from_bytes(data[:5] + bytes([7]) + data[6:])


def test_invalid_bit_count(data):
    offset = 5 + struct.calcsize("<BBBBIIIIQQ")
    with pytest.raises(StreamFormatError, match="bit count"):
        from_bytes(data[:offset] + bytes([9]) + data[offset + 1:])


def test_inconsistent_config_is_reported(data):
    # frame_len of zero cannot build a configuration.
    offset = 5 + struct.calcsize("<BBBBI")
    bad = data[:offset] + struct.pack("<I", 0) + data[offset + 4:]
    with pytest.raises(StreamFormatError, match="configuration"):
        from_bytes(bad)
