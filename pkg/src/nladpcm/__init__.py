"""ADPCM speech coding with linear and neural-network prediction."""

from .codec import CodecConfig, EncodedStream, MlpConfig, decode, encode, encode_stats
from .lpc import LinearCoeffs, autocorrelation, levinson_durbin, lpc_predict
from .mlp import MlpWeights, TrainConfig, TrainingSet, lm_train, mlp_forward, mlp_jacobian, multistart_train
from .quantizer import QuantizerConfig, QuantizerState, dequantize, quantize
from .signal_io import SampleBuffer, SegSnrReport, load_pcm, segsnr, store_pcm

__version__ = "0.1.0"

__all__ = [
    "CodecConfig",
    "EncodedStream",
    "LinearCoeffs",
    "MlpConfig",
    "MlpWeights",
    "QuantizerConfig",
    "QuantizerState",
    "SampleBuffer",
    "SegSnrReport",
    "TrainConfig",
    "TrainingSet",
    "autocorrelation",
    "decode",
    "dequantize",
    "encode",
    "encode_stats",
    "levinson_durbin",
    "lm_train",
    "load_pcm",
    "lpc_predict",
    "mlp_forward",
    "mlp_jacobian",
    "multistart_train",
    "quantize",
    "segsnr",
    "store_pcm",
]
