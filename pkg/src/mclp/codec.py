"""Whole-signal helpers on top of the frame-level encoders and decoders."""

from __future__ import annotations

import numpy as np

from .bitstream import pack_frame, unpack_frame
from .codebooks import ModeTable
from .dsp import FilterState, NotchConfig, dc_notch, highpass
from .errors import InvalidInputError
from .nb import NarrowbandDecoder, NarrowbandEncoder
from .wideband import WidebandDecoder, WidebandEncoder

HIGHPASS_HZ = {8000: 300.0, 16000: 50.0}
PEAK_RANGE = (5000.0, 20000.0)


def make_encoder(mode: ModeTable):
    return WidebandEncoder(mode) if mode.wideband else NarrowbandEncoder(mode)


def make_decoder(mode: ModeTable):
    return WidebandDecoder(mode) if mode.wideband else NarrowbandDecoder(mode)


def prefilter(x, rate: int, notch: bool = True, hp: bool = True) -> np.ndarray:
    """DC notch then high-pass (300 Hz at 8 kHz, 50 Hz at 16 kHz)."""
    y = np.asarray(x, dtype=np.float64)
    if notch:
        y = dc_notch(y, NotchConfig(), FilterState.zeros(1))
    if hp:
        y = highpass(y, HIGHPASS_HZ[rate], rate, FilterState.zeros(2))
    return y


def peak_in_range(x) -> bool:
    """Whether the input peak lies in the recommended 5000..20000 band."""
    peak = float(np.max(np.abs(x))) if np.size(x) else 0.0
    return PEAK_RANGE[0] <= peak <= PEAK_RANGE[1]


def pad_to_frames(x, frame_size: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    tail = (-x.size) % frame_size
    return np.concatenate((x, np.zeros(tail))) if tail else x


def encode_signal(x, mode: ModeTable) -> list[bytes]:
    """Encode a whole signal (zero-padded to whole frames) into packed frames.

    Each frame is given the following samples as look-ahead; the last frame's
    look-ahead is zero.
    """
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("non-finite samples")
    enc = make_encoder(mode)
    n = enc.frame_size
    x = pad_to_frames(x, n)
    padded = np.concatenate((x, np.zeros(enc.lookahead)))
    frames = []
    for start in range(0, x.size, n):
        la = padded[start + n:start + n + enc.lookahead]
        frames.append(pack_frame(enc.encode_frame(x[start:start + n], la), mode))
    return frames


def decode_frames(frames, mode: ModeTable, narrowband: bool = False) -> np.ndarray:
    """Decode packed frames; an empty frame is a loss and gets concealed.

    With ``narrowband`` a wideband stream is decoded to its 8 kHz low band.
    """
    dec = make_decoder(mode)
    out = []
    for data in frames:
        if not data:
            out.append(dec.conceal_frame(narrowband) if mode.wideband else dec.conceal_frame())
            continue
        params = unpack_frame(data, mode)
        if mode.wideband:
            out.append(dec.decode_frame(params, narrowband))
        else:
            out.append(dec.decode_frame(params))
    if not out:
        return np.zeros(0)
    return np.concatenate(out)
