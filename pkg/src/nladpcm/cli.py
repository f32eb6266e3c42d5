"""Command line front end: ``nladpcm {encode,decode,eval,sweep,gen-corpus}``.

Exit status: 0 success, 1 usage or configuration error, 2 I/O error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import bitstream
from .codec import decode, encode_stats
from .corpus import KINDS, write_corpus
from .experiments import CODEC_KEYS, csv_text, load_config, load_sweep, parse_values, run_sweep, table
from .mlp import TrainingError
from .signal_io import FORMATS, PcmError, load_pcm, pcm16, segsnr, store_pcm

logger = logging.getLogger("nladpcm")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_codec_flags(p):
    p.add_argument("--config", help="key = value codec configuration file")
    group = p.add_argument_group("codec settings (override the config file)")
    for key in CODEC_KEYS:
        group.add_argument("--" + key.replace("_", "-"), dest=key, metavar=key.upper())


def _codec_overrides(args) -> dict:
    raw = {k: getattr(args, k) for k in CODEC_KEYS if getattr(args, k, None) is not None}
    return parse_values(raw, CODEC_KEYS, "command line")


def _add_format(p, *names):
    for name in names:
        p.add_argument(f"--{name}-format", choices=FORMATS, default=None,
                       help="PCM container (default: from file suffix)")


def build_parser():
    parser = _Parser(prog="nladpcm", description="ADPCM with linear and neural prediction")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="encode a PCM file into an NADP stream")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--recon", help="also write the encoder's local reconstruction here")
    p.add_argument("--segment-len", type=int, help="SEGSNR segment length (default: frame_len)")
    _add_format(p, "input")
    _add_codec_flags(p)

    p = sub.add_parser("decode", help="decode an NADP stream to PCM")
    p.add_argument("input")
    p.add_argument("output")
    _add_format(p, "output")

    p = sub.add_parser("eval", help="SEGSNR of a decoded file against the original")
    p.add_argument("original")
    p.add_argument("decoded")
    p.add_argument("--segment-len", type=int, default=100)
    _add_format(p, "original", "decoded")

    p = sub.add_parser("sweep", help="run a sweep spec and write a CSV")
    p.add_argument("spec", help="key = value sweep file")
    p.add_argument("--output", help="CSV path (overrides the sweep file)")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--table", action="store_true", help="print a method x Nq summary table")

    p = sub.add_parser("gen-corpus", help="write a synthetic test corpus")
    p.add_argument("directory")
    p.add_argument("--kind", choices=KINDS, default="mixed")
    p.add_argument("--files", type=int, default=10)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=int, default=8000)
    return parser


def _report(label, rep):
    print(f"{label}: SEGSNR {rep.segsnr_db:.4f} dB  std {rep.std_db:.4f} dB  "
          f"({len(rep.per_segment_db)} segments of {rep.segment_len})")


def cmd_encode(args):
    cfg = load_config(args.config, _codec_overrides(args))
    signal = load_pcm(args.input, args.input_format)
    if cfg.computing_window == 1 and cfg.uses_mlp and len(signal) > 2000:
        logger.warning("computing_window = 1 retrains the MLP at every sample; expect a long run")
    report = encode_stats(signal, cfg)
    bitstream.save(report.stream, args.output)
    if args.recon:
        store_pcm(report.reconstruction, args.recon)
    seg_len = args.segment_len or cfg.frame_len
    if len(signal) >= seg_len:
        _report("encoder", segsnr(signal, pcm16(report.reconstruction.samples), seg_len))


def cmd_decode(args):
    stream = bitstream.load(args.input)
    store_pcm(decode(stream), args.output, args.output_format)


def cmd_eval(args):
    original = load_pcm(args.original, args.original_format)
    decoded = load_pcm(args.decoded, args.decoded_format)
    _report("eval", segsnr(original, decoded, args.segment_len))


def cmd_sweep(args):
    overrides = {"output": args.output, "jobs": str(args.jobs) if args.jobs else None}
    spec = load_sweep(args.spec, overrides)
    rows = run_sweep(spec)
    if spec.output_path is None:
        print(csv_text(rows), end="")
    if args.table:
        print(table(rows, spec.methods))


def cmd_gen_corpus(args):
    for path in write_corpus(args.directory, args.kind, args.files, args.samples, args.seed, args.rate):
        print(path)


COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "gen-corpus": cmd_gen_corpus,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"nladpcm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except OSError as exc:
        print(f"nladpcm: I/O error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except (PcmError, bitstream.StreamFormatError) as exc:
        print(f"nladpcm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TrainingError, ArithmeticError, FloatingPointError) as exc:
        print(f"nladpcm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"nladpcm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
