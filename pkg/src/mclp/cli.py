"""``mclp`` command-line tool.

Exit codes: 0 ok, 1 usage, 2 unsupported input, 3 I/O error or corrupt data.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .bitstream import (ContainerHeader, is_truncated_wideband, load_container,
                        save_container, strip_highband)
from .codebooks import FRAME_MS, MODES_BY_NAME, mode_by_name
from .codec import decode_frames, encode_signal, peak_in_range, prefilter
from .errors import CodecError, ContainerError
from .prng import loss_stream
from .wavio import UnsupportedWavError, read_wav, write_wav

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3
IP_UDP_RTP_BYTES = 40


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _err(msg: str):
    print(f"mclp: {msg}", file=sys.stderr)


def overhead_bps(frame_ms: int = FRAME_MS, header_bytes: int = IP_UDP_RTP_BYTES) -> int:
    """IP/UDP/RTP overhead with one frame per packet."""
    return header_bytes * 8 * 1000 // frame_ms


def payload_bps(frames) -> int:
    """Average codec rate over the frames that are present."""
    present = [f for f in frames if f]
    if not present:
        return 0
    return sum(len(f) for f in present) * 8 * 1000 // (len(present) * FRAME_MS)


def cmd_encode(args) -> int:
    mode = mode_by_name(args.mode)
    if args.rate is not None and args.rate != mode.rate:
        _err(f"mode {mode.name} needs --rate {mode.rate}")
        return EXIT_USAGE
    try:
        x, rate = read_wav(args.input)
    except UnsupportedWavError as exc:
        _err(f"unsupported input: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        _err(f"cannot read {args.input}: {exc}")
        return EXIT_IO
    if rate != mode.rate:
        _err(f"unsupported input: {args.input} is {rate} Hz, mode {mode.name} needs {mode.rate} Hz")
        return EXIT_INPUT
    if not peak_in_range(x):
        peak = float(abs(x).max()) if x.size else 0.0
        _err(f"warning: input peak {peak:.0f} is outside the recommended 5000..20000")
    x = prefilter(x, rate, notch=not args.no_notch, hp=not args.no_highpass)
    frames = encode_signal(x, mode) if x.size else []
    header = ContainerHeader(mode.rate, mode.mode_id, len(frames))
    try:
        save_container(args.output, header, frames)
    except OSError as exc:
        _err(f"cannot write {args.output}: {exc}")
        return EXIT_IO
    nbytes = sum(len(f) for f in frames)
    print(f"frames={len(frames)} bytes={nbytes} bitrate={payload_bps(frames)} bps",
          file=sys.stderr)
    return EXIT_OK


def cmd_decode(args) -> int:
    try:
        header, frames = load_container(args.input)
        mode = header.mode
        narrowband = mode.wideband and (args.narrowband or is_truncated_wideband(header, frames))
        y = decode_frames(frames, mode, narrowband=narrowband)
    except CodecError as exc:
        _err(str(exc))
        return EXIT_IO
    rate = mode.narrowband.rate if narrowband else mode.rate
    try:
        write_wav(args.output, y, rate)
    except OSError as exc:
        _err(f"cannot write {args.output}: {exc}")
        return EXIT_IO
    print(f"frames={len(frames)} samples={y.size} rate={rate}", file=sys.stderr)
    return EXIT_OK


def simulate_loss(frames, loss_rate: float, seed: int) -> tuple[list[bytes], list[int]]:
    """Replace each frame by an empty (lost) entry with probability ``loss_rate``."""
    rng = loss_stream(seed)
    out, lost = [], []
    for i, f in enumerate(frames):
        if rng.uniform() < loss_rate:
            out.append(b"")
            lost.append(i)
        else:
            out.append(f)
    return out, lost


def cmd_simulate_loss(args) -> int:
    if not 0.0 <= args.loss_rate <= 1.0:
        _err("--loss-rate must be in [0, 1]")
        return EXIT_USAGE
    try:
        header, frames = load_container(args.input)
        out, lost = simulate_loss(frames, args.loss_rate, args.seed)
        save_container(args.output, header, out)
    except (ContainerError, OSError) as exc:
        _err(str(exc))
        return EXIT_IO
    realized = len(lost) / len(frames) if frames else 0.0
    print(f"frames: {len(frames)}")
    print(f"lost: {len(lost)}")
    print(f"realized_rate: {realized:.4f}")
    print("lost_indices: " + ",".join(str(i) for i in lost))
    return EXIT_OK


def info_report(header: ContainerHeader, frames) -> list[tuple[str, object]]:
    payload = payload_bps(frames)
    overhead = overhead_bps()
    return [
        ("sample_rate", header.sample_rate),
        ("mode", header.mode.name),
        ("frames", len(frames)),
        ("lost_frames", sum(1 for f in frames if not f)),
        ("payload_bps", payload),
        ("overhead_bps", overhead),
        ("total_bps", payload + overhead if frames else 0),
    ]


def cmd_info(args) -> int:
    try:
        header, frames = load_container(args.input)
    except ContainerError as exc:
        _err(str(exc))
        return EXIT_IO
    for key, value in info_report(header, frames):
        print(f"{key}: {value}")
    return EXIT_OK


def cmd_strip(args) -> int:
    try:
        header, frames = strip_highband(*load_container(args.input))
        save_container(args.output, header, frames)
    except (ContainerError, OSError) as exc:
        _err(str(exc))
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mclp", description="CELP speech codec")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("encode", help="encode a PCM16 mono WAV into a container")
    e.add_argument("input")
    e.add_argument("output")
    e.add_argument("--mode", default="nb-low", choices=sorted(MODES_BY_NAME))
    e.add_argument("--rate", type=int, choices=(8000, 16000),
                   help="expected sample rate (must agree with the mode)")
    e.add_argument("--no-notch", action="store_true", help="skip the DC notch filter")
    e.add_argument("--no-highpass", action="store_true", help="skip the high-pass filter")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="decode a container into a PCM16 WAV")
    d.add_argument("input")
    d.add_argument("output")
    d.add_argument("--narrowband", action="store_true",
                   help="decode only the 8 kHz layer of a wideband stream")
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("simulate-loss", help="mark frames lost at random")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--loss-rate", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_simulate_loss)

    i = sub.add_parser("info", help="print stream statistics and VoIP bandwidth")
    i.add_argument("input")
    i.set_defaults(func=cmd_info)

    t = sub.add_parser("strip", help="truncate wideband frames to their narrowband layer")
    t.add_argument("input")
    t.add_argument("output")
    t.set_defaults(func=cmd_strip)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
