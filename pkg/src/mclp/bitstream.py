"""Frame bit packing and the length-prefixed container file.

Bits are written MSB-first within each byte; multi-byte container integers
are little-endian. See FORMAT.md for the byte-level layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

from . import codebooks as cb
from .codebooks import (HB_LPC_ORDER, MODES, NB_HIGH, NB_LPC_ORDER, PITCH_MIN,
                        SUBFRAMES, ModeTable)
from .errors import ContainerError, NotAContainerError, TruncatedFrameError
from .nb import FrameParams, SubframeParams
from .wideband import HighbandParams, WbFrameParams

MAGIC = b"MCLP"
VERSION = 1
_HEADER = struct.Struct("<4sBIBI")
HEADER_SIZE = _HEADER.size
_LENGTH = struct.Struct("<H")


class BitWriter:
    def __init__(self):
        self._acc = 0
        self._nbits = 0

    def write(self, value: int, nbits: int):
        if value < 0 or value >> nbits:
            raise ValueError(f"{value} does not fit in {nbits} bits")
        self._acc = (self._acc << nbits) | value
        self._nbits += nbits

    @property
    def bit_count(self) -> int:
        return self._nbits

    def getvalue(self) -> bytes:
        """Bytes written so far, the last partial byte padded with zero bits."""
        pad = -self._nbits % 8
        return (self._acc << pad).to_bytes((self._nbits + pad) // 8, "big")


class BitReader:
    def __init__(self, data: bytes):
        self._size = 8 * len(data)
        self._value = int.from_bytes(data, "big")
        self._pos = 0

    @property
    def remaining(self) -> int:
        return self._size - self._pos

    def read(self, nbits: int) -> int:
        if nbits > self._size - self._pos:
            raise TruncatedFrameError(
                f"read of {nbits} bits past end of {self._size // 8}-byte buffer")
        self._pos += nbits
        return (self._value >> (self._size - self._pos)) & ((1 << nbits) - 1)


def _write_nb(w: BitWriter, params: FrameParams, mode: ModeTable):
    nb = mode.narrowband
    for i in params.lsp_indices:
        w.write(i, cb.LSP_BITS)
    w.write(params.global_gain_index, cb.GLOBAL_GAIN_BITS)
    for sub in params.subframes:
        w.write(sub.pitch - PITCH_MIN, cb.PITCH_BITS)
        w.write(sub.pitch_gain_index, cb.PITCH_GAIN_BITS)
        w.write(sub.corr_index, cb.CORR_BITS)
        for i in sub.innovation:
            w.write(i, nb.codebook_bits)


def _read_nb(r: BitReader, mode: ModeTable) -> FrameParams:
    nb = mode.narrowband
    lsp = tuple(r.read(cb.LSP_BITS) for _ in range(NB_LPC_ORDER))
    global_idx = r.read(cb.GLOBAL_GAIN_BITS)
    subs = []
    for _ in range(SUBFRAMES):
        pitch = r.read(cb.PITCH_BITS) + PITCH_MIN
        gain_idx = r.read(cb.PITCH_GAIN_BITS)
        corr = r.read(cb.CORR_BITS)
        innovation = tuple(r.read(nb.codebook_bits) for _ in range(nb.subvectors))
        subs.append(SubframeParams(pitch, gain_idx, corr, innovation))
    return FrameParams(lsp, global_idx, tuple(subs))


def _write_hb(w: BitWriter, hb: HighbandParams):
    for i in hb.lsp_indices:
        w.write(i, cb.LSP_BITS)
    w.write(hb.global_gain_index, cb.GLOBAL_GAIN_BITS)
    for i in hb.corr_indices:
        w.write(i, cb.CORR_BITS)
    if hb.innovation is not None:
        for sub in hb.innovation:
            for i in sub:
                w.write(i, NB_HIGH.codebook_bits)


def _read_hb(r: BitReader, mode: ModeTable) -> HighbandParams:
    lsp = tuple(r.read(cb.LSP_BITS) for _ in range(HB_LPC_ORDER))
    global_idx = r.read(cb.GLOBAL_GAIN_BITS)
    corr = tuple(r.read(cb.CORR_BITS) for _ in range(SUBFRAMES))
    innovation = None
    if mode.highband_innovation:
        innovation = tuple(
            tuple(r.read(NB_HIGH.codebook_bits) for _ in range(NB_HIGH.subvectors))
            for _ in range(SUBFRAMES))
    return HighbandParams(lsp, global_idx, corr, innovation)


def pack_frame(params: FrameParams | WbFrameParams, mode: ModeTable) -> bytes:
    """Serialise one frame; the result is exactly ``mode.frame_bytes`` long.

    A wideband frame whose high band is ``None`` packs to its narrowband
    section only.
    """
    if mode.wideband:
        if not isinstance(params, WbFrameParams):
            raise TypeError("wideband modes pack WbFrameParams")
        params.nb.validate(mode)
        w = BitWriter()
        _write_nb(w, params.nb, mode)
        out = w.getvalue()
        if params.hb is not None:
            params.hb.validate(mode)
            w = BitWriter()
            _write_hb(w, params.hb)
            out += w.getvalue()
        return out
    if not isinstance(params, FrameParams):
        raise TypeError("narrowband modes pack FrameParams")
    params.validate(mode)
    w = BitWriter()
    _write_nb(w, params, mode)
    return w.getvalue()


def unpack_frame(data: bytes, mode: ModeTable) -> FrameParams | WbFrameParams:
    """Parse one frame.

    Narrowband: needs at least ``mode.nb_bytes`` bytes. Wideband: a buffer
    holding only the narrowband section, or a partial high-band section,
    yields ``hb=None``.
    """
    if len(data) < mode.nb_bytes:
        raise TruncatedFrameError(
            f"{mode.name} frames need {mode.nb_bytes} bytes, got {len(data)}")
    nb = _read_nb(BitReader(data[:mode.nb_bytes]), mode)
    nb.validate(mode)
    if not mode.wideband:
        return nb
    hb = None
    if len(data) >= mode.frame_bytes:
        hb = _read_hb(BitReader(data[mode.nb_bytes:mode.frame_bytes]), mode)
    return WbFrameParams(nb, hb)


def narrowband_section(frame: bytes, mode: ModeTable) -> bytes:
    """Leading bytes of a wideband frame that form a valid narrowband frame."""
    return bytes(frame[:mode.nb_bytes])


# --- container -------------------------------------------------------------

@dataclass(frozen=True)
class ContainerHeader:
    sample_rate: int
    mode_id: int
    frame_count: int
    version: int = VERSION

    @property
    def mode(self) -> ModeTable:
        return MODES[self.mode_id]


def write_container(header: ContainerHeader, frames) -> bytes:
    """Header followed by each frame behind a 16-bit little-endian length.

    A zero length marks a lost frame. ``header.frame_count`` is replaced by
    the actual number of frames.
    """
    frames = [bytes(f) for f in frames]
    if header.mode_id not in MODES:
        raise ContainerError(f"unknown mode id {header.mode_id}")
    out = bytearray(_HEADER.pack(MAGIC, header.version, header.sample_rate,
                                 header.mode_id, len(frames)))
    for f in frames:
        if len(f) > 0xFFFF:
            raise ContainerError("frame longer than 65535 bytes")
        out += _LENGTH.pack(len(f))
        out += f
    return bytes(out)


def read_container(data: bytes) -> tuple[ContainerHeader, list[bytes]]:
    if len(data) < HEADER_SIZE:
        raise NotAContainerError("file shorter than the container header")
    magic, version, rate, mode_id, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise NotAContainerError("bad magic, not a container")
    if version != VERSION:
        raise NotAContainerError(f"unsupported container version {version}")
    if mode_id not in MODES:
        raise ContainerError(f"unknown mode id {mode_id}")
    pos = HEADER_SIZE
    frames = []
    for i in range(count):
        if pos + _LENGTH.size > len(data):
            raise ContainerError("file ends inside a length prefix", i)
        (n,) = _LENGTH.unpack_from(data, pos)
        pos += _LENGTH.size
        if pos + n > len(data):
            raise ContainerError("file ends inside a frame", i)
        frames.append(bytes(data[pos:pos + n]))
        pos += n
    return ContainerHeader(rate, mode_id, count, version), frames


def save_container(path, header: ContainerHeader, frames):
    Path(path).write_bytes(write_container(header, frames))


def load_container(path) -> tuple[ContainerHeader, list[bytes]]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ContainerError(f"cannot read {path}: {exc}") from exc
    return read_container(data)


def strip_highband(header: ContainerHeader, frames) -> tuple[ContainerHeader, list[bytes]]:
    """Rewrite every wideband frame to its narrowband section (lost frames stay empty)."""
    mode = header.mode
    if not mode.wideband:
        return header, list(frames)
    return header, [narrowband_section(f, mode) if f else b"" for f in frames]


def is_truncated_wideband(header: ContainerHeader, frames) -> bool:
    """True when every present frame of a wideband container is narrowband-only."""
    mode = header.mode
    present = [f for f in frames if f]
    return mode.wideband and bool(present) and all(len(f) == mode.nb_bytes for f in present)

