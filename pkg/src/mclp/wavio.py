"""PCM16 mono WAV reading and writing on top of the stdlib ``wave`` module."""

from __future__ import annotations

import wave

import numpy as np

from .errors import CodecError


class UnsupportedWavError(CodecError):
    """The file is a WAV, but not 16-bit PCM mono."""


def read_wav(path) -> tuple[np.ndarray, int]:
    """Return the samples as float64 and the sample rate.

    Raises :class:`UnsupportedWavError` for anything other than PCM16 mono and
    ``OSError`` when the file cannot be read.
    """
    try:
        with wave.open(str(path), "rb") as w:
            channels, width, rate = w.getnchannels(), w.getsampwidth(), w.getframerate()
            if w.getcomptype() != "NONE":
                raise UnsupportedWavError(f"compressed WAV ({w.getcomptype()}) is not supported")
            if channels != 1:
                raise UnsupportedWavError(f"expected mono, got {channels} channels")
            if width != 2:
                raise UnsupportedWavError(f"expected 16-bit samples, got {8 * width}-bit")
            raw = w.readframes(w.getnframes())
    except wave.Error as exc:
        # The stdlib rejects float and other non-PCM formats here.
        raise UnsupportedWavError(str(exc)) from exc
    except EOFError as exc:
        raise UnsupportedWavError(f"truncated WAV: {exc}") from exc
    return np.frombuffer(raw, dtype="<i2").astype(np.float64), rate


def to_pcm16(samples) -> np.ndarray:
    return np.clip(np.rint(np.asarray(samples, dtype=np.float64)), -32768, 32767).astype("<i2")


def write_wav(path, samples, rate: int):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(to_pcm16(samples).tobytes())
