"""Two-band wideband layer.

A 16 kHz frame is split by a 64-tap QMF bank into two 8 kHz bands. The low
band goes through the narrowband codec unchanged; the high band gets an
order-8 LPC envelope and gains, plus either its own fixed-codebook innovation
(WB-HIGH) or the decoded low-band excitation rescaled to the high-band gain
(WB-LOW, "folding"). The high-band bits follow the byte-aligned narrowband
section, so dropping them leaves a valid narrowband frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import codebooks as cb
from .codebooks import (HB_LPC_ORDER, NB_HIGH, SUBFRAME, SUBFRAMES, WB_LOW,
                        ModeTable)
from .dsp import (FilterState, WeightingConfig, WeightingState, filter_all_pole,
                  filter_all_zero, lsp_to_lpc, perceptual_weight)
from .errors import InvalidInputError, MalformedFrameError
from .nb import (EXCITATION_LIMIT, OUTPUT_MAX, OUTPUT_MIN, FrameParams,
                 NarrowbandDecoder, NarrowbandEncoder, _rms, analyze_lsp,
                 fixed_search, flat_lsp, innovation_vector, interpolate_lsp,
                 subframe_correction, subframe_gain)

WB_FRAME = 320
WB_LOOKAHEAD = 160
QMF_TAPS = 64
QMF_DELAY = QMF_TAPS - 1

# First half of the symmetric prototype low-pass; produced by tools/design_qmf.py
# (least-squares refinement of a Hamming-windowed sinc for power complementarity).
QMF_HALF = np.array([
     2.66057548826710617e-05, -2.85824535842633787e-05, -8.56211274631928044e-05,  1.38450045605480578e-04,
     1.39612187223711338e-04, -3.57161444501584836e-04, -1.28291454203917691e-04,  6.70403228775264979e-04,
    -2.17944086494038090e-06, -1.02078352254011419e-03,  2.55529910200733468e-04,  1.34755178400063698e-03,
    -5.55737172700828514e-04, -1.66735556198561985e-03,  7.63763808637525740e-04,  2.17115191758147094e-03,
    -7.60838642052383491e-04, -3.29542955578437284e-03,  5.91673493971635106e-04,  5.73207586403587637e-03,
    -6.37013592579767341e-04, -1.03813224257473316e-02,  1.79089485407620051e-03,  1.83367866690375102e-02,
    -5.70798399019058818e-03, -3.11890254405186376e-02,  1.55613366693182677e-02,  5.27345741227895001e-02,
    -3.98661413570639833e-02, -9.95917293422104027e-02,  1.28781510008318167e-01,  4.66234763549688569e-01,
])
QMF_LOWPASS = np.concatenate((QMF_HALF, QMF_HALF[::-1]))
QMF_HIGHPASS = QMF_LOWPASS * (-1.0) ** np.arange(QMF_TAPS)


class QmfBank:
    """Streaming two-band analysis/synthesis pair.

    The high band comes out spectrally flipped. Analysis followed by
    synthesis reproduces the input delayed by 63 samples.
    """

    def __init__(self):
        self.reset()

    def reset(self):
        self.analysis_mem = np.zeros(QMF_TAPS - 1)
        self.low_mem = np.zeros(QMF_TAPS - 1)
        self.high_mem = np.zeros(QMF_TAPS - 1)

    def copy(self) -> "QmfBank":
        q = QmfBank()
        q.analysis_mem = self.analysis_mem.copy()
        q.low_mem = self.low_mem.copy()
        q.high_mem = self.high_mem.copy()
        return q

    def analysis(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.size % 2:
            raise InvalidInputError("QMF analysis needs an even number of samples")
        buf = np.concatenate((self.analysis_mem, x))
        self.analysis_mem = buf[-(QMF_TAPS - 1):].copy()
        low = np.convolve(buf, QMF_LOWPASS, mode="valid")[0::2]
        high = np.convolve(buf, QMF_HIGHPASS, mode="valid")[0::2]
        return low, high

    def synthesis(self, low, high) -> np.ndarray:
        low = np.asarray(low, dtype=np.float64)
        high = np.asarray(high, dtype=np.float64)
        if low.shape != high.shape or low.ndim != 1:
            raise InvalidInputError("QMF bands must have equal length")
        ul = np.zeros(2 * low.size)
        uh = np.zeros(2 * high.size)
        ul[0::2] = low
        uh[0::2] = high
        bl = np.concatenate((self.low_mem, ul))
        bh = np.concatenate((self.high_mem, uh))
        self.low_mem = bl[-(QMF_TAPS - 1):].copy()
        self.high_mem = bh[-(QMF_TAPS - 1):].copy()
        return (2.0 * np.convolve(bl, QMF_LOWPASS, mode="valid")
                - 2.0 * np.convolve(bh, QMF_HIGHPASS, mode="valid"))


def qmf_analysis(frame, bank: QmfBank | None = None) -> tuple[np.ndarray, np.ndarray]:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (WB_FRAME,):
        raise InvalidInputError(f"wideband frames are {WB_FRAME} samples, got {frame.shape}")
    return (bank or QmfBank()).analysis(frame)


def qmf_synthesis(low, high, bank: QmfBank | None = None) -> np.ndarray:
    if np.shape(low) != (WB_FRAME // 2,) or np.shape(high) != (WB_FRAME // 2,):
        raise InvalidInputError(f"sub-band frames are {WB_FRAME // 2} samples")
    return (bank or QmfBank()).synthesis(low, high)


@dataclass(frozen=True)
class HighbandParams:
    lsp_indices: tuple[int, ...]
    global_gain_index: int
    corr_indices: tuple[int, ...]
    innovation: tuple[tuple[int, ...], ...] | None = None

    def validate(self, mode: ModeTable):
        if len(self.lsp_indices) != HB_LPC_ORDER or any(
                not 0 <= i < cb.LSP_LEVELS for i in self.lsp_indices):
            raise MalformedFrameError("bad high-band LSP indices")
        if not 0 <= self.global_gain_index < cb.GLOBAL_LEVELS:
            raise MalformedFrameError("high-band gain index out of range")
        if len(self.corr_indices) != SUBFRAMES or any(
                not 0 <= i < cb.CORR_LEVELS for i in self.corr_indices):
            raise MalformedFrameError("bad high-band gain corrections")
        if mode.highband_innovation:
            if self.innovation is None or len(self.innovation) != SUBFRAMES:
                raise MalformedFrameError("WB-HIGH frames carry high-band innovation")
            for sub in self.innovation:
                if len(sub) != NB_HIGH.subvectors or any(
                        not 0 <= i < (1 << NB_HIGH.codebook_bits) for i in sub):
                    raise MalformedFrameError("bad high-band innovation indices")
        elif self.innovation is not None:
            raise MalformedFrameError("WB-LOW frames carry no high-band innovation")


@dataclass(frozen=True)
class WbFrameParams:
    """Low-band frame plus optional high band (``None`` when truncated)."""

    nb: FrameParams
    hb: HighbandParams | None


def fold_excitation(lowband_excitation: np.ndarray, gain: float) -> np.ndarray:
    """Low-band sub-frame excitation rescaled to RMS ``gain``."""
    r = _rms(lowband_excitation)
    if r == 0.0:
        return np.zeros_like(lowband_excitation)
    return lowband_excitation * (gain / r)


class _HighbandSynth:
    """High-band synthesis shared by encoder and decoder."""

    def __init__(self, mode: ModeTable):
        self.mode = mode
        self.codebook = cb.build_innovation_codebook(NB_HIGH)
        self.reset()

    def reset(self):
        self.prev_qlsp = flat_lsp(HB_LPC_ORDER)
        self.synth_state = FilterState.zeros(HB_LPC_ORDER)

    def excitation(self, gain: float, innovation, lowband_exc: np.ndarray) -> np.ndarray:
        """Coded innovation when ``innovation`` is given, folded low band otherwise."""
        if innovation is not None:
            e = gain * innovation_vector(self.codebook, innovation)
        else:
            e = fold_excitation(lowband_exc, gain)
        return np.clip(e, -EXCITATION_LIMIT, EXCITATION_LIMIT)


class WidebandEncoder:
    """Embedded wideband encoder: narrowband low band plus high-band layer."""

    frame_size = WB_FRAME
    lookahead = WB_LOOKAHEAD

    def __init__(self, mode: ModeTable = WB_LOW, weighting: WeightingConfig = WeightingConfig()):
        if not mode.wideband:
            raise InvalidInputError("wideband encoder needs a wideband mode")
        self.mode = mode
        self.weighting = weighting
        self.nb = NarrowbandEncoder(mode.narrowband, weighting)
        self.hb = _HighbandSynth(mode)
        self.reset()

    def reset(self):
        self.nb.reset()
        self.hb.reset()
        self.qmf = QmfBank()
        self.prev_lsp = flat_lsp(HB_LPC_ORDER)
        self.residual_state = FilterState.zeros(HB_LPC_ORDER)
        self.input_weight = WeightingState.zeros(HB_LPC_ORDER)
        self.synth_weight = WeightingState.zeros(HB_LPC_ORDER)
        self.frame_count = 0

    def encode_frame(self, frame, lookahead=None) -> WbFrameParams:
        x = np.asarray(frame, dtype=np.float64)
        if x.shape != (WB_FRAME,):
            raise InvalidInputError(f"wideband frames are {WB_FRAME} samples, got {x.shape}")
        if lookahead is None:
            la = np.zeros(WB_LOOKAHEAD)
        else:
            la = np.asarray(lookahead, dtype=np.float64)
            if la.shape != (WB_LOOKAHEAD,):
                raise InvalidInputError(f"look-ahead must be {WB_LOOKAHEAD} samples")
        low, high = self.qmf.analysis(x)
        la_low, la_high = self.qmf.copy().analysis(la)

        nb_params = self.nb.encode_frame(low, la_low)

        lsp = analyze_lsp(np.concatenate((high, la_high)), HB_LPC_ORDER, cb.NB_RATE,
                          self.prev_lsp)
        lsp_idx = cb.quantize_lsp(lsp)
        qlsp = cb.dequantize_lsp(lsp_idx)
        lpcs = [lsp_to_lpc(interpolate_lsp(self.prev_lsp, lsp, j)) for j in range(SUBFRAMES)]
        qlpcs = [lsp_to_lpc(interpolate_lsp(self.hb.prev_qlsp, qlsp, j)) for j in range(SUBFRAMES)]
        residual = np.concatenate([
            filter_all_zero(high[j * SUBFRAME:(j + 1) * SUBFRAME], qlpcs[j], self.residual_state)
            for j in range(SUBFRAMES)])
        global_idx = cb.quantize_gain(_rms(residual))
        global_gain = cb.dequantize_gain(global_idx)
        corr = tuple(subframe_correction(residual[j * SUBFRAME:(j + 1) * SUBFRAME], global_gain)
                     for j in range(SUBFRAMES))

        innovation = []
        delta = np.zeros(SUBFRAME)
        delta[0] = 1.0
        for j in range(SUBFRAMES):
            sl = slice(j * SUBFRAME, (j + 1) * SUBFRAME)
            lpc, qlpc = lpcs[j], qlpcs[j]
            gain = subframe_gain(global_idx, corr[j])
            indices = None
            if self.mode.highband_innovation:
                # No adaptive codebook up here: the whole target goes to the fixed search.
                sw = perceptual_weight(high[sl], lpc, self.weighting, self.input_weight)
                zir = perceptual_weight(
                    filter_all_pole(np.zeros(SUBFRAME), qlpc, self.hb.synth_state.copy()),
                    lpc, self.weighting, self.synth_weight.copy())
                impulse = perceptual_weight(filter_all_pole(delta, qlpc), lpc, self.weighting)
                indices = fixed_search(sw - zir, self.hb.codebook, gain, impulse).indices
                innovation.append(indices)
            e = self.hb.excitation(gain, indices, self.nb.last_excitation[sl])
            y = filter_all_pole(e, qlpc, self.hb.synth_state)
            perceptual_weight(y, lpc, self.weighting, self.synth_weight)

        self.prev_lsp = lsp
        self.hb.prev_qlsp = qlsp
        self.frame_count += 1
        hb = HighbandParams(lsp_idx, global_idx, corr,
                            tuple(innovation) if self.mode.highband_innovation else None)
        return WbFrameParams(nb_params, hb)


class WidebandDecoder:
    """Decoder for embedded wideband frames.

    A frame whose high band is missing (``hb is None``) is decoded from its
    low band alone; the high band is left silent.
    """

    frame_size = WB_FRAME

    def __init__(self, mode: ModeTable = WB_LOW):
        if not mode.wideband:
            raise InvalidInputError("wideband decoder needs a wideband mode")
        self.mode = mode
        self.nb = NarrowbandDecoder(mode.narrowband)
        self.hb = _HighbandSynth(mode)
        self.reset()

    def reset(self):
        self.nb.reset()
        self.hb.reset()
        self.qmf = QmfBank()
        self.last_lowband = np.zeros(WB_FRAME // 2)
        self.frame_count = 0

    def _highband(self, hb: HighbandParams | None) -> np.ndarray:
        if hb is None:
            return np.zeros(WB_FRAME // 2)
        try:
            hb.validate(self.mode)
        except MalformedFrameError:
            return np.zeros(WB_FRAME // 2)
        qlsp = cb.dequantize_lsp(hb.lsp_indices)
        out = []
        for j in range(SUBFRAMES):
            qlpc = lsp_to_lpc(interpolate_lsp(self.hb.prev_qlsp, qlsp, j))
            gain = subframe_gain(hb.global_gain_index, hb.corr_indices[j])
            indices = None if hb.innovation is None else hb.innovation[j]
            e = self.hb.excitation(gain, indices,
                                   self.nb.last_excitation[j * SUBFRAME:(j + 1) * SUBFRAME])
            out.append(filter_all_pole(e, qlpc, self.hb.synth_state))
        self.hb.prev_qlsp = qlsp
        return np.concatenate(out)

    def decode_frame(self, params: WbFrameParams, narrowband: bool = False) -> np.ndarray:
        """Decode to 320 samples at 16 kHz, or to the 160-sample low band."""
        low = self.nb.decode_frame(params.nb)
        self.last_lowband = low
        high = self._highband(params.hb)
        self.frame_count += 1
        out = self.qmf.synthesis(low, high)
        if narrowband:
            return low
        return np.clip(out, OUTPUT_MIN, OUTPUT_MAX)

    def conceal_frame(self, narrowband: bool = False) -> np.ndarray:
        low = self.nb.conceal_frame()
        self.last_lowband = low
        self.frame_count += 1
        out = self.qmf.synthesis(low, np.zeros(WB_FRAME // 2))
        if narrowband:
            return low
        return np.clip(out, OUTPUT_MIN, OUTPUT_MAX)
