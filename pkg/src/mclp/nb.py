"""Narrowband CELP encoder and decoder.

One 20 ms frame is 160 samples split into four 40-sample sub-frames. Per frame
the encoder sends quantized LSPs and a global excitation gain; per sub-frame it
sends an integer pitch period with a 3-tap gain vector, a gain correction and
the innovation sub-vector indices. Encoder and decoder rebuild the excitation
through the same function, so their excitation histories stay bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import codebooks as cb
from .codebooks import (LOOKAHEAD, NB_FRAME, NB_LOW, PITCH_GAIN_TABLE, PITCH_MAX,
                        PITCH_MIN, SUBFRAME, SUBFRAMES, InnovationCodebook, ModeTable)
from .dsp import (FilterState, WeightingConfig, WeightingState, autocorrelate,
                  convolution_matrix, filter_all_pole, filter_all_zero,
                  levinson_durbin, lpc_to_lsp, lsp_to_lpc, perceptual_weight)
from .errors import InvalidInputError, LspConversionError, MalformedFrameError

HISTORY_LEN = 256
# Excitation samples are clipped here in both encoder and decoder; keeps
# pathological parameter streams (large gains at short lags) finite.
EXCITATION_LIMIT = 131072.0
CONCEAL_DECAY = 0.85
CONCEAL_MAX_GAIN = 0.9
# Encoder-side cap on g0 + g1 + g2. With a non-expansive pitch loop a decoder
# that lost a frame converges back to the encoder instead of drifting away.
MAX_PITCH_GAIN_SUM = 1.0
OUTPUT_MIN, OUTPUT_MAX = -32768.0, 32767.0


def flat_lsp(order: int = cb.NB_LPC_ORDER) -> np.ndarray:
    """LSPs of A(z) = 1, used as the cold-start "previous frame"."""
    return np.arange(1, order + 1) * np.pi / (order + 1)


def interpolate_lsp(prev: np.ndarray, cur: np.ndarray, subframe: int) -> np.ndarray:
    w = (2 * subframe + 1) / (2 * SUBFRAMES)
    return (1.0 - w) * prev + w * cur


@dataclass(frozen=True)
class SubframeParams:
    pitch: int
    pitch_gain_index: int
    corr_index: int
    innovation: tuple[int, ...]


@dataclass(frozen=True)
class FrameParams:
    lsp_indices: tuple[int, ...]
    global_gain_index: int
    subframes: tuple[SubframeParams, ...]

    def validate(self, mode: ModeTable):
        """Raise :class:`MalformedFrameError` if any index is out of range."""
        if len(self.lsp_indices) != cb.NB_LPC_ORDER:
            raise MalformedFrameError("expected 10 LSP indices")
        if any(not 0 <= i < cb.LSP_LEVELS for i in self.lsp_indices):
            raise MalformedFrameError("LSP index out of range")
        if not 0 <= self.global_gain_index < cb.GLOBAL_LEVELS:
            raise MalformedFrameError("global gain index out of range")
        if len(self.subframes) != SUBFRAMES:
            raise MalformedFrameError(f"expected {SUBFRAMES} sub-frames")
        nb = mode.narrowband
        for sub in self.subframes:
            if not PITCH_MIN <= sub.pitch <= PITCH_MAX:
                raise MalformedFrameError(f"pitch {sub.pitch} outside {PITCH_MIN}..{PITCH_MAX}")
            if not 0 <= sub.pitch_gain_index < len(PITCH_GAIN_TABLE):
                raise MalformedFrameError("pitch gain index out of range")
            if not 0 <= sub.corr_index < cb.CORR_LEVELS:
                raise MalformedFrameError("gain correction index out of range")
            if len(sub.innovation) != nb.subvectors:
                raise MalformedFrameError(
                    f"expected {nb.subvectors} innovation indices, got {len(sub.innovation)}")
            if any(not 0 <= i < (1 << nb.codebook_bits) for i in sub.innovation):
                raise MalformedFrameError("innovation index out of range")


class ExcitationHistory:
    """Most recent ``HISTORY_LEN`` excitation samples; ``samples[-1]`` is newest."""

    def __init__(self, length: int = HISTORY_LEN):
        self.samples = np.zeros(length)

    def push(self, e: np.ndarray):
        n = e.size
        self.samples[:-n] = self.samples[n:]
        self.samples[-n:] = e

    def reset(self):
        self.samples[:] = 0.0

    def copy(self) -> "ExcitationHistory":
        h = ExcitationHistory(self.samples.size)
        h.samples[:] = self.samples
        return h


def adaptive_excitation(history: np.ndarray, pitch: int, gains, length: int = SUBFRAME) -> np.ndarray:
    """3-tap adaptive-codebook contribution g0 e[n-T-1] + g1 e[n-T] + g2 e[n-T+1].

    Taps that fall inside the current sub-frame read the adaptive contribution
    already computed for this sub-frame, one sample at a time.
    """
    g0, g1, g2 = (float(g) for g in gains)
    h = history.size
    buf = np.concatenate((history, np.zeros(length)))
    if pitch >= length + 1:
        base = h - pitch - 1
        return (g0 * buf[base:base + length] + g1 * buf[base + 1:base + 1 + length]
                + g2 * buf[base + 2:base + 2 + length])
    vals = buf.tolist()
    for n in range(length):
        i = h + n - pitch
        vals[h + n] = g0 * vals[i - 1] + g1 * vals[i] + g2 * vals[i + 1]
    return np.array(vals[h:])


def innovation_vector(codebook: InnovationCodebook, indices) -> np.ndarray:
    return np.concatenate([codebook.shapes[i] for i in indices])


def build_excitation(history: np.ndarray, sub: SubframeParams, codebook: InnovationCodebook,
                     gain: float) -> np.ndarray:
    """Excitation of one sub-frame: adaptive contribution plus gain-scaled innovation."""
    e_a = adaptive_excitation(history, sub.pitch, PITCH_GAIN_TABLE[sub.pitch_gain_index])
    e = e_a + gain * innovation_vector(codebook, sub.innovation)
    return np.clip(e, -EXCITATION_LIMIT, EXCITATION_LIMIT)


class AdaptiveResult(NamedTuple):
    pitch: int
    gain_index: int
    error: float


def adaptive_search(target, history, impulse, pitch_min: int = PITCH_MIN,
                    pitch_max: int = PITCH_MAX,
                    max_gain_sum: float | None = None) -> AdaptiveResult:
    """Exhaustive closed-loop search over pitch period and 3-tap gain vector.

    ``impulse`` is the impulse response of the weighted synthesis filter over
    one sub-frame. Minimises ||target - impulse * e_a||^2; ties go to the
    smallest period, then the smallest gain index. ``max_gain_sum`` restricts
    the search to table rows whose taps sum to at most that value.
    """
    x = np.asarray(target, dtype=np.float64)
    history = np.asarray(history, dtype=np.float64)
    n = x.size
    hmat = convolution_matrix(np.asarray(impulse, dtype=np.float64)[:n])
    rows = np.arange(len(PITCH_GAIN_TABLE))
    if max_gain_sum is not None:
        rows = rows[PITCH_GAIN_TABLE.sum(axis=1) <= max_gain_sum + 1e-12]
    g = PITCH_GAIN_TABLE[rows]
    h = history.size
    errors = np.empty((pitch_max - pitch_min + 1, len(g)))
    for row, pitch in enumerate(range(pitch_min, pitch_max + 1)):
        if pitch >= n + 1:
            base = h - pitch - 1
            taps = np.stack([history[base + k:base + k + n] for k in range(3)])
            cand = g @ (taps @ hmat)
        else:
            buf = np.zeros((len(g), pitch + 1 + n))
            buf[:, :pitch + 1] = history[h - pitch - 1:]
            g0, g1, g2 = g[:, 0], g[:, 1], g[:, 2]
            off = pitch + 1
            for m in range(n):
                i = off + m - pitch
                buf[:, off + m] = g0 * buf[:, i - 1] + g1 * buf[:, i] + g2 * buf[:, i + 1]
            cand = buf[:, off:] @ hmat
        d = x - cand
        errors[row] = np.sum(d * d, axis=1)
    best = int(np.argmin(errors))
    row, col = divmod(best, len(g))
    return AdaptiveResult(pitch_min + row, int(rows[col]), float(errors[row, col]))


class FixedResult(NamedTuple):
    indices: tuple[int, ...]
    filtered: np.ndarray


def fixed_search(target, codebook: InnovationCodebook, gain: float, impulse) -> FixedResult:
    """Sequential sub-vector search with the gain already fixed.

    Each sub-vector position picks the entry minimising the weighted error
    given the filtered contributions of the positions already chosen; ties go
    to the lowest index.
    """
    x = np.asarray(target, dtype=np.float64)
    n = x.size
    length = codebook.subvector_len
    hmat = convolution_matrix(np.asarray(impulse, dtype=np.float64)[:n])
    filtered = gain * (codebook.shapes @ hmat[:length])
    remaining = x.copy()
    chosen = []
    for pos in range(0, n, length):
        cand = filtered[:, :n - pos]
        d = remaining[pos:] - cand
        j = int(np.argmin(np.sum(d * d, axis=1)))
        remaining[pos:] -= cand[j]
        chosen.append(j)
    return FixedResult(tuple(chosen), x - remaining)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def subframe_correction(residual: np.ndarray, global_gain: float) -> int:
    if global_gain <= 0.0:
        return 0
    return cb.quantize_gain_corr(_rms(residual) / global_gain)


def open_loop_gain(residual) -> tuple[int, tuple[int, ...]]:
    """Global gain index of a frame residual plus one correction per sub-frame.

    The reconstructed sub-frame gain is
    ``dequantize_gain(global) * dequantize_gain_corr(corr)``.
    """
    r = np.asarray(residual, dtype=np.float64)
    gi = cb.quantize_gain(_rms(r))
    g = cb.dequantize_gain(gi)
    sub = r.size // SUBFRAMES
    corr = tuple(subframe_correction(r[j * sub:(j + 1) * sub], g) for j in range(SUBFRAMES))
    return gi, corr


def subframe_gain(global_index: int, corr_index: int) -> float:
    return cb.dequantize_gain(global_index) * cb.dequantize_gain_corr(corr_index)


def analyze_lsp(signal: np.ndarray, order: int, rate: int, fallback: np.ndarray) -> np.ndarray:
    """LPC analysis of a windowed buffer; returns ``fallback`` when conversion fails."""
    lev = levinson_durbin(autocorrelate(signal, "hamming", order, rate), order)
    try:
        return lpc_to_lsp(lev.lpc)
    except LspConversionError:
        return fallback.copy()


@dataclass
class SubframeTrace:
    """Weighted-domain errors of one sub-frame (zero excitation, after pitch, final)."""

    zero: float
    adaptive: float
    final: float


class NarrowbandEncoder:
    """Analysis-by-synthesis encoder for one channel.

    ``encode_frame`` takes the 160-sample frame and the next 80 samples of
    look-ahead (zero-padded when omitted).
    """

    lookahead = LOOKAHEAD
    frame_size = NB_FRAME

    def __init__(self, mode: ModeTable = NB_LOW, weighting: WeightingConfig = WeightingConfig(),
                 max_pitch_gain: float | None = MAX_PITCH_GAIN_SUM):
        if mode.wideband:
            raise InvalidInputError("narrowband encoder needs a narrowband mode")
        self.mode = mode
        self.weighting = weighting
        self.max_pitch_gain = max_pitch_gain
        self.codebook = cb.build_innovation_codebook(mode)
        self.reset()

    def reset(self):
        self.history = ExcitationHistory()
        self.prev_lsp = flat_lsp()
        self.prev_qlsp = flat_lsp()
        self.residual_state = FilterState.zeros(cb.NB_LPC_ORDER)
        self.synth_state = FilterState.zeros(cb.NB_LPC_ORDER)
        self.input_weight = WeightingState.zeros()
        self.synth_weight = WeightingState.zeros()
        self.frame_count = 0
        self.last_excitation = np.zeros(NB_FRAME)
        self.last_synthesis = np.zeros(NB_FRAME)
        self.trace: list[SubframeTrace] = []

    def encode_frame(self, frame, lookahead=None) -> FrameParams:
        s = np.asarray(frame, dtype=np.float64)
        if s.shape != (NB_FRAME,):
            raise InvalidInputError(f"narrowband frames are {NB_FRAME} samples, got {s.shape}")
        if lookahead is None:
            la = np.zeros(LOOKAHEAD)
        else:
            la = np.asarray(lookahead, dtype=np.float64)
            if la.shape != (LOOKAHEAD,):
                raise InvalidInputError(f"look-ahead must be {LOOKAHEAD} samples")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(la))):
            raise InvalidInputError("non-finite input samples")

        # Step 1: LPC on frame + look-ahead, LSP conversion and quantization.
        lsp = analyze_lsp(np.concatenate((s, la)), cb.NB_LPC_ORDER, cb.NB_RATE, self.prev_lsp)
        lsp_idx = cb.quantize_lsp(lsp)
        qlsp = cb.dequantize_lsp(lsp_idx)

        lpcs = [lsp_to_lpc(interpolate_lsp(self.prev_lsp, lsp, j)) for j in range(SUBFRAMES)]
        qlpcs = [lsp_to_lpc(interpolate_lsp(self.prev_qlsp, qlsp, j)) for j in range(SUBFRAMES)]
        residual = np.concatenate([
            filter_all_zero(s[j * SUBFRAME:(j + 1) * SUBFRAME], qlpcs[j], self.residual_state)
            for j in range(SUBFRAMES)])

        # Step 3 (frame part): open-loop global gain from the LPC residual energy.
        global_idx = cb.quantize_gain(_rms(residual))
        global_gain = cb.dequantize_gain(global_idx)

        delta = np.zeros(SUBFRAME)
        delta[0] = 1.0
        subs = []
        exc = []
        synth = []
        self.trace = []
        for j in range(SUBFRAMES):
            sl = slice(j * SUBFRAME, (j + 1) * SUBFRAME)
            lpc, qlpc = lpcs[j], qlpcs[j]
            sw = perceptual_weight(s[sl], lpc, self.weighting, self.input_weight)
            zir = perceptual_weight(
                filter_all_pole(np.zeros(SUBFRAME), qlpc, self.synth_state.copy()),
                lpc, self.weighting, self.synth_weight.copy())
            target = sw - zir
            impulse = perceptual_weight(filter_all_pole(delta, qlpc), lpc, self.weighting)
            hmat = convolution_matrix(impulse)

            # Step 2: adaptive codebook.
            ad = adaptive_search(target, self.history.samples, impulse,
                                 max_gain_sum=self.max_pitch_gain)
            e_a = adaptive_excitation(self.history.samples, ad.pitch,
                                      PITCH_GAIN_TABLE[ad.gain_index])
            y_a = e_a @ hmat

            # Step 3 (sub-frame part): correction from what pitch prediction left.
            corr = subframe_correction(residual[sl] - e_a, global_gain)
            gain = subframe_gain(global_idx, corr)

            # Step 4: fixed codebook with the gain already set.
            fx = fixed_search(target - y_a, self.codebook, gain, impulse)
            sub = SubframeParams(ad.pitch, ad.gain_index, corr, fx.indices)
            subs.append(sub)

            e = build_excitation(self.history.samples, sub, self.codebook, gain)
            self.history.push(e)
            y = filter_all_pole(e, qlpc, self.synth_state)
            perceptual_weight(y, lpc, self.weighting, self.synth_weight)
            exc.append(e)
            synth.append(y)

            d_a = target - y_a
            d_f = target - e @ hmat
            self.trace.append(SubframeTrace(float(target @ target), float(d_a @ d_a),
                                            float(d_f @ d_f)))

        self.prev_lsp = lsp
        self.prev_qlsp = qlsp
        self.frame_count += 1
        self.last_excitation = np.concatenate(exc)
        self.last_synthesis = np.concatenate(synth)
        return FrameParams(lsp_idx, global_idx, tuple(subs))


class NarrowbandDecoder:
    """Decoder for one channel, with pitch-repetition concealment of lost frames."""

    frame_size = NB_FRAME

    def __init__(self, mode: ModeTable = NB_LOW):
        if mode.wideband:
            raise InvalidInputError("narrowband decoder needs a narrowband mode")
        self.mode = mode
        self.codebook = cb.build_innovation_codebook(mode)
        self.reset()

    def reset(self):
        self.history = ExcitationHistory()
        self.prev_qlsp = flat_lsp()
        self.synth_state = FilterState.zeros(cb.NB_LPC_ORDER)
        self.last_pitch = PITCH_MIN
        self.last_pitch_gain = 0.0
        self.consecutive_lost = 0
        self.have_good = False
        self.frame_count = 0
        self.last_excitation = np.zeros(NB_FRAME)
        self.last_gains = np.zeros(SUBFRAMES)

    def decode_frame(self, params: FrameParams) -> np.ndarray:
        params.validate(self.mode)
        qlsp = cb.dequantize_lsp(params.lsp_indices)
        out = []
        exc = []
        gains = []
        for j, sub in enumerate(params.subframes):
            qlpc = lsp_to_lpc(interpolate_lsp(self.prev_qlsp, qlsp, j))
            gain = subframe_gain(params.global_gain_index, sub.corr_index)
            e = build_excitation(self.history.samples, sub, self.codebook, gain)
            self.history.push(e)
            out.append(filter_all_pole(e, qlpc, self.synth_state))
            exc.append(e)
            gains.append(gain)
        last = params.subframes[-1]
        self.last_pitch = last.pitch
        self.last_pitch_gain = float(np.sum(PITCH_GAIN_TABLE[last.pitch_gain_index]))
        self.prev_qlsp = qlsp
        self.consecutive_lost = 0
        self.have_good = True
        self.frame_count += 1
        self.last_excitation = np.concatenate(exc)
        self.last_gains = np.array(gains)
        return np.clip(np.concatenate(out), OUTPUT_MIN, OUTPUT_MAX)

    def conceal_frame(self) -> np.ndarray:
        """Replacement audio for a missing frame.

        Repeats the last pitch period with a single tap of gain
        ``min(0.9, last pitch gain sum) * 0.85**k`` on the k-th consecutive
        loss, no innovation, and the last frame's synthesis filter.
        """
        self.consecutive_lost += 1
        self.frame_count += 1
        if not self.have_good:
            self.last_excitation = np.zeros(NB_FRAME)
            self.last_gains = np.zeros(SUBFRAMES)
            return np.zeros(NB_FRAME)
        g = min(CONCEAL_MAX_GAIN, self.last_pitch_gain) * CONCEAL_DECAY ** self.consecutive_lost
        qlpc = lsp_to_lpc(self.prev_qlsp)
        out = []
        exc = []
        for _ in range(SUBFRAMES):
            e = adaptive_excitation(self.history.samples, self.last_pitch, (0.0, g, 0.0))
            self.history.push(e)
            out.append(filter_all_pole(e, qlpc, self.synth_state))
            exc.append(e)
        self.last_excitation = np.concatenate(exc)
        self.last_gains = self.last_gains * CONCEAL_DECAY
        return np.clip(np.concatenate(out), OUTPUT_MIN, OUTPUT_MAX)
