"""Signals and reference routines shared by the test modules."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from mclp import codebooks as cb
from mclp.codec import decode_frames, encode_signal
from mclp.dsp import perceptual_weight
from mclp.nb import HISTORY_LEN, FrameParams, SubframeParams
from mclp.wideband import HighbandParams, WbFrameParams

# Five resonances (Hz, pole radius) giving a fixed, vowel-like AR(10) envelope.
FORMANTS = ((500.0, 0.97), (1200.0, 0.95), (2300.0, 0.93), (3000.0, 0.90), (3600.0, 0.85))


def ar10_polynomial(rate: int = 8000) -> np.ndarray:
    a = np.array([1.0])
    for f, r in FORMANTS:
        w = 2.0 * np.pi * f / rate
        a = np.convolve(a, [1.0, -2.0 * r * np.cos(w), r * r])
    return a


def voiced_signal(seconds: float = 2.0, period: int = 57, peak: float = 12000.0,
                  rate: int = 8000) -> np.ndarray:
    """Pulse train through a fixed AR(10) filter, scaled to ``peak``."""
    n = int(round(seconds * rate))
    pulses = np.zeros(n)
    pulses[::period] = 1.0
    y = lfilter([1.0], ar10_polynomial(rate), pulses)
    return y * (peak / np.max(np.abs(y)))


def segmental_snr(ref, test, seg: int = 80, silence_db: float = -40.0) -> float:
    """Mean per-segment SNR in dB over segments louder than ``silence_db``
    relative to the loudest segment."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)[:ref.size]
    n = ref.size // seg
    r = ref[:n * seg].reshape(n, seg)
    d = r - test[:n * seg].reshape(n, seg)
    energy = np.sum(r * r, axis=1)
    keep = energy > energy.max() * 10.0 ** (silence_db / 10.0)
    noise = np.maximum(np.sum(d * d, axis=1), 1e-12 * energy)
    return float(np.mean(10.0 * np.log10(energy[keep] / noise[keep])))


def step_up(reflections) -> np.ndarray:
    """LPC coefficients (A(z) = 1 + sum a_i z^-i) from reflection coefficients."""
    a = np.zeros(0)
    for k in reflections:
        a = np.concatenate((a + k * a[::-1], [k]))
    return a


def step_down(lpc) -> np.ndarray:
    """Reflection coefficients of A(z); inverse of :func:`step_up`."""
    a = np.array(lpc, dtype=np.float64)
    ks = []
    while a.size:
        k = a[-1]
        ks.append(k)
        if abs(k) >= 1.0:
            break
        a = (a[:-1] - k * a[:-1][::-1]) / (1.0 - k * k)
    return np.array(ks[::-1])


def random_stable_lpc(rng, order: int = 10, kmax: float = 0.95) -> np.ndarray:
    return step_up(rng.uniform(-kmax, kmax, order))


def random_nb_params(rng, mode) -> FrameParams:
    nb = mode.narrowband
    subs = tuple(
        SubframeParams(int(rng.integers(cb.PITCH_MIN, cb.PITCH_MAX + 1)),
                       int(rng.integers(0, len(cb.PITCH_GAIN_TABLE))),
                       int(rng.integers(0, cb.CORR_LEVELS)),
                       tuple(int(v) for v in rng.integers(0, 1 << nb.codebook_bits, nb.subvectors)))
        for _ in range(cb.SUBFRAMES))
    return FrameParams(tuple(int(v) for v in rng.integers(0, cb.LSP_LEVELS, cb.NB_LPC_ORDER)),
                       int(rng.integers(0, cb.GLOBAL_LEVELS)), subs)


def random_hb_params(rng, mode) -> HighbandParams:
    innovation = None
    if mode.highband_innovation:
        innovation = tuple(
            tuple(int(v) for v in rng.integers(0, 1 << cb.NB_HIGH.codebook_bits,
                                               cb.NB_HIGH.subvectors))
            for _ in range(cb.SUBFRAMES))
    return HighbandParams(tuple(int(v) for v in rng.integers(0, cb.LSP_LEVELS, cb.HB_LPC_ORDER)),
                          int(rng.integers(0, cb.GLOBAL_LEVELS)),
                          tuple(int(v) for v in rng.integers(0, cb.CORR_LEVELS, cb.SUBFRAMES)),
                          innovation)


def random_params(rng, mode):
    if mode.wideband:
        return WbFrameParams(random_nb_params(rng, mode), random_hb_params(rng, mode))
    return random_nb_params(rng, mode)


def band_energy(x, rate: float, lo_hz: float, hi_hz: float) -> float:
    """Energy of ``x`` between two frequencies, by direct DFT."""
    power = np.abs(np.fft.rfft(x)) ** 2
    f = np.fft.rfftfreq(len(x), 1.0 / rate)
    return float(np.sum(power[(f >= lo_hz) & (f <= hi_hz)]))


@lru_cache(maxsize=None)
def encoded_voiced(mode_name: str):
    """(signal, packed frames, decoded signal) for the 2 s voiced test signal."""
    mode = cb.mode_by_name(mode_name)
    x = voiced_signal()
    frames = encode_signal(x, mode)
    return x, tuple(frames), decode_frames(frames, mode)


# Exhaustive reference searches, written without the library's search code.

N = 40


def brute_excitation(history, pitch, gains):
    ext = list(history) + [0.0] * N
    h = len(history)
    for n in range(N):
        i = h + n - pitch
        ext[h + n] = gains[0] * ext[i - 1] + gains[1] * ext[i] + gains[2] * ext[i + 1]
    return np.array(ext[h:])


def brute_adaptive(target, history, impulse, rows=None):
    rows = range(len(cb.PITCH_GAIN_TABLE)) if rows is None else rows
    best, best_err = None, np.inf
    for pitch in range(cb.PITCH_MIN, cb.PITCH_MAX + 1):
        for gi in rows:
            y = np.convolve(brute_excitation(history, pitch, cb.PITCH_GAIN_TABLE[gi]), impulse)[:N]
            err = float(np.sum((target - y) ** 2))
            if err < best_err:
                best, best_err = (pitch, gi), err
    return best


def brute_fixed(target, book, gain, impulse):
    remaining = np.array(target, dtype=np.float64)
    chosen = []
    for pos in range(0, N, book.subvector_len):
        best, best_err, best_y = None, np.inf, None
        for j in range(book.size):
            u = np.zeros(N)
            u[pos:pos + book.subvector_len] = gain * book.shapes[j]
            y = np.convolve(u, impulse)[:N]
            err = float(np.sum((remaining - y) ** 2))
            if err < best_err:
                best, best_err, best_y = j, err, y
        chosen.append(best)
        remaining = remaining - best_y
    return tuple(chosen)


def weighted_impulse(rng):
    lpc = random_stable_lpc(rng, kmax=0.8)
    delta = np.r_[1.0, np.zeros(N - 1)]
    return perceptual_weight(lfilter([1.0], np.r_[1.0, lpc], delta), lpc)


def random_instance(rng):
    history = rng.normal(size=HISTORY_LEN) * rng.uniform(10, 3000)
    impulse = weighted_impulse(rng)
    if rng.random() < 0.5:
        target = rng.normal(size=N) * rng.uniform(10, 3000)
    else:
        pitch = int(rng.integers(17, 145))
        gains = cb.PITCH_GAIN_TABLE[rng.integers(32)]
        e = brute_excitation(history, pitch, gains) + rng.normal(size=N) * 50
        target = np.convolve(e, impulse)[:N]
    return target, history, impulse
