"""Regenerate the golden vectors in ``tests/data``.

Writes two reference recordings (8 kHz and 16 kHz), encodes them in every
mode through the ``mclp`` command line with default prefilters, and stores
the containers and their decodes. Only rerun after an intentional bitstream or DSP change.
"""

import sys
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from mclp.cli import main as cli
from mclp.wavio import write_wav

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
REFERENCES = {"reference_nb.wav": 8000, "reference_wb.wav": 16000}
CASES = (("reference_nb.wav", "nb-low"), ("reference_nb.wav", "nb-high"),
         ("reference_wb.wav", "wb-low"), ("reference_wb.wav", "wb-high"))


def resonator(formants, rate):
    a = np.array([1.0])
    for f, r in formants:
        a = np.convolve(a, [1.0, -2.0 * r * np.cos(2 * np.pi * f / rate), r * r])
    return a


def reference_signal(rate: int, seconds: float = 0.6) -> np.ndarray:
    """Voiced stretch with a pitch glide, a noise burst, then a second vowel."""
    rng = np.random.default_rng(20240611)
    n = int(rate * seconds)
    exc = np.zeros(n)
    t, k = 0.0, 0
    voiced_end = int(0.45 * n)
    while t < voiced_end:
        exc[int(t)] = 1.0
        t += rate / (110.0 + 40.0 * k / 40)
        k += 1
    burst = slice(int(0.5 * n), int(0.62 * n))
    exc[burst] = rng.normal(size=exc[burst].size) * 0.05
    t = 0.68 * n
    while t < 0.95 * n:
        exc[int(t)] = 1.0
        t += rate / 180.0
    a1 = resonator(((700, 0.97), (1100, 0.95), (2500, 0.92)), rate)
    a2 = resonator(((300, 0.97), (2200, 0.95), (3000, 0.92)), rate)
    split = int(0.65 * n)
    y = np.concatenate((lfilter([1.0], a1, exc[:split]), lfilter([1.0], a2, exc[split:])))
    y += rng.normal(size=n) * 1e-4 * np.max(np.abs(y))
    return np.rint(y * (14000.0 / np.max(np.abs(y))))


def main() -> int:
    DATA.mkdir(exist_ok=True)
    for name, rate in REFERENCES.items():
        write_wav(DATA / name, reference_signal(rate), rate)
    for name, mode in CASES:
        wav = DATA / name
        stem = f"golden_{mode.replace('-', '_')}"
        for argv in (["encode", wav, DATA / f"{stem}.mclp", "--mode", mode],
                     ["decode", DATA / f"{stem}.mclp", DATA / f"{stem}.wav"]):
            if cli([str(a) for a in argv]):
                return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
