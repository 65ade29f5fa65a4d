"""Mode tables, quantizers and codebooks.

The mode tables are the single source of truth for the bitstream layout; every
bit count used by the packer and the container is derived from them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .prng import CODEBOOK_SEED, XorShiftStar

FRAME_MS = 20
SUBFRAMES = 4
NB_RATE = 8000
WB_RATE = 16000
NB_FRAME = 160
SUBFRAME = 40
LOOKAHEAD = 80
NB_LPC_ORDER = 10
HB_LPC_ORDER = 8

LSP_BITS = 4
PITCH_BITS = 7
PITCH_GAIN_BITS = 5
CORR_BITS = 3
GLOBAL_GAIN_BITS = 5
PITCH_MIN = 17
PITCH_MAX = 144

LSP_LEVELS = 1 << LSP_BITS
LSP_MARGIN = 0.25
LSP_EDGE = 0.02
LSP_MIN_SEPARATION = 0.008

GLOBAL_LEVELS = 1 << GLOBAL_GAIN_BITS
GLOBAL_LOG2_MAX = 15.0
CORR_LEVELS = 1 << CORR_BITS
CORR_DB_MIN = -12.0
CORR_DB_MAX = 9.6


@dataclass(frozen=True)
class ModeTable:
    """Bit allocation and codebook geometry of one coding mode.

    For the wideband modes ``subvector_len``/``codebook_bits`` describe the
    embedded narrowband layer; ``highband_innovation`` selects whether the high
    band carries its own fixed-codebook indices (WB-HIGH) or reuses the folded
    low-band excitation (WB-LOW).
    """

    mode_id: int
    name: str
    rate: int
    subvector_len: int
    codebook_bits: int
    highband_innovation: bool = False

    @property
    def wideband(self) -> bool:
        return self.rate == WB_RATE

    @property
    def frame_size(self) -> int:
        return self.rate * FRAME_MS // 1000

    @property
    def subvectors(self) -> int:
        return SUBFRAME // self.subvector_len

    @property
    def innovation_bits_per_subframe(self) -> int:
        return self.subvectors * self.codebook_bits

    @property
    def innovation_bps(self) -> int:
        return self.innovation_bits_per_subframe * SUBFRAMES * 1000 // FRAME_MS

    @property
    def lsp_bits(self) -> int:
        return NB_LPC_ORDER * LSP_BITS

    @property
    def nb_bits(self) -> int:
        per_subframe = (PITCH_BITS + PITCH_GAIN_BITS + CORR_BITS
                        + self.innovation_bits_per_subframe)
        return self.lsp_bits + GLOBAL_GAIN_BITS + SUBFRAMES * per_subframe

    @property
    def hb_bits(self) -> int:
        if not self.wideband:
            return 0
        bits = HB_LPC_ORDER * LSP_BITS + GLOBAL_GAIN_BITS + SUBFRAMES * CORR_BITS
        if self.highband_innovation:
            bits += SUBFRAMES * NB_HIGH.innovation_bits_per_subframe
        return bits

    @property
    def total_bits(self) -> int:
        return self.nb_bits + self.hb_bits

    @property
    def nb_bytes(self) -> int:
        return (self.nb_bits + 7) // 8

    @property
    def hb_bytes(self) -> int:
        return (self.hb_bits + 7) // 8

    @property
    def frame_bytes(self) -> int:
        # The narrowband section is padded to a byte boundary on its own so a
        # wideband frame can be truncated to a valid narrowband frame.
        return self.nb_bytes + self.hb_bytes

    @property
    def narrowband(self) -> "ModeTable":
        """Mode of the embedded low-band layer (itself for narrowband modes)."""
        if not self.wideband:
            return self
        return NB_HIGH if self.highband_innovation else NB_LOW

    @property
    def bitrate(self) -> int:
        """Payload bit rate with fixed-size frames, in bits per second."""
        return self.frame_bytes * 8 * 1000 // FRAME_MS


NB_LOW = ModeTable(0, "nb-low", NB_RATE, 20, 5)
NB_HIGH = ModeTable(1, "nb-high", NB_RATE, 5, 8)
WB_LOW = ModeTable(2, "wb-low", WB_RATE, 20, 5, highband_innovation=False)
WB_HIGH = ModeTable(3, "wb-high", WB_RATE, 5, 8, highband_innovation=True)

MODES = {m.mode_id: m for m in (NB_LOW, NB_HIGH, WB_LOW, WB_HIGH)}
MODES_BY_NAME = {m.name: m for m in MODES.values()}


def mode_by_name(name: str) -> ModeTable:
    try:
        return MODES_BY_NAME[name.lower()]
    except KeyError:
        raise ValueError(f"unknown mode {name!r}; choose from {sorted(MODES_BY_NAME)}") from None


# --- LSP scalar quantizer -------------------------------------------------

@lru_cache(maxsize=None)
def lsp_ranges(order: int = NB_LPC_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Per-coefficient quantizer ranges centred on the flat-spectrum LSPs."""
    i = np.arange(1, order + 1)
    base = np.pi / (order + 1)
    lo = np.maximum(LSP_EDGE, (i - 1) * base - LSP_MARGIN)
    hi = np.minimum(np.pi - LSP_EDGE, i * base + LSP_MARGIN)
    return lo, hi


def lsp_steps(order: int = NB_LPC_ORDER) -> np.ndarray:
    lo, hi = lsp_ranges(order)
    return (hi - lo) / (LSP_LEVELS - 1)


def lsp_levels(order: int = NB_LPC_ORDER) -> np.ndarray:
    """Reconstruction levels, shape (order, 16)."""
    lo, _ = lsp_ranges(order)
    return lo[:, None] + lsp_steps(order)[:, None] * np.arange(LSP_LEVELS)


def enforce_separation(lsp: np.ndarray, min_sep: float = LSP_MIN_SEPARATION) -> np.ndarray:
    """Sort and push neighbours at least ``min_sep`` apart inside (0, pi)."""
    w = np.sort(np.asarray(lsp, dtype=np.float64))
    w[0] = max(w[0], LSP_EDGE)
    for i in range(1, w.size):
        w[i] = max(w[i], w[i - 1] + min_sep)
    w[-1] = min(w[-1], np.pi - LSP_EDGE)
    for i in range(w.size - 2, -1, -1):
        w[i] = min(w[i], w[i + 1] - min_sep)
    return w


def quantize_lsp(lsp) -> tuple[int, ...]:
    lsp = np.asarray(lsp, dtype=np.float64)
    lo, _ = lsp_ranges(lsp.size)
    idx = np.floor((lsp - lo) / lsp_steps(lsp.size) + 0.5)
    return tuple(int(v) for v in np.clip(idx, 0, LSP_LEVELS - 1))


def dequantize_lsp(indices) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    order = indices.size
    lo, _ = lsp_ranges(order)
    return enforce_separation(lo + lsp_steps(order) * indices)


# --- pitch gains -----------------------------------------------------------

PITCH_TAP_GAINS = (0.0, 0.25, 0.5, 0.75, 0.9, 1.05, 1.2, 1.35)
PITCH_SIDE_TAPS = ((0.0, 0.0), (0.1, 0.1), (0.25, 0.0), (0.0, 0.25))

# Row index = 4 * (centre-tap index) + side-tap index; rows are (g0, g1, g2).
PITCH_GAIN_TABLE = np.array(
    [(g0, g1, g2) for g1, (g0, g2) in itertools.product(PITCH_TAP_GAINS, PITCH_SIDE_TAPS)])
PITCH_GAIN_TABLE.setflags(write=False)


def quantize_pitch_gains(g0: float, g1: float, g2: float) -> int:
    d = PITCH_GAIN_TABLE - np.array([g0, g1, g2], dtype=np.float64)
    return int(np.argmin(np.sum(d * d, axis=1)))


# --- excitation gains ------------------------------------------------------

GLOBAL_GAIN_LEVELS = 2.0 ** (GLOBAL_LOG2_MAX * np.arange(GLOBAL_LEVELS) / (GLOBAL_LEVELS - 1)) - 1.0
CORR_DB_LEVELS = CORR_DB_MIN + (CORR_DB_MAX - CORR_DB_MIN) * np.arange(CORR_LEVELS) / (CORR_LEVELS - 1)
CORR_GAIN_LEVELS = 10.0 ** (CORR_DB_LEVELS / 20.0)


def quantize_gain(rms: float) -> int:
    """Global excitation gain: uniform in log2(1 + rms) over [0, 15], 32 levels."""
    if rms <= 0.0:
        return 0
    v = math.log2(1.0 + rms) * (GLOBAL_LEVELS - 1) / GLOBAL_LOG2_MAX
    return min(GLOBAL_LEVELS - 1, int(math.floor(v + 0.5)))


def dequantize_gain(index: int) -> float:
    return float(GLOBAL_GAIN_LEVELS[index])


def quantize_gain_corr(ratio: float) -> int:
    """Sub-frame gain correction: 8 levels uniform in dB over [-12, 9.6]."""
    if ratio <= 0.0:
        return 0
    db = 20.0 * math.log10(ratio)
    return int(np.argmin(np.abs(CORR_DB_LEVELS - db)))


def dequantize_gain_corr(index: int) -> float:
    return float(CORR_GAIN_LEVELS[index])


# --- innovation codebooks --------------------------------------------------

@dataclass(frozen=True)
class InnovationCodebook:
    """Ternary sub-vector codebook.

    ``values`` holds the raw {-1, 0, +1} entries and ``energies`` their
    integer energies. The codec uses ``shapes``: each entry scaled to unit RMS,
    so the sub-frame gain sets the innovation level directly. Entry 0 is the
    only all-zero entry.
    """

    subvector_len: int
    bits: int
    values: np.ndarray
    energies: np.ndarray
    shapes: np.ndarray

    @property
    def size(self) -> int:
        return self.values.shape[0]


def _ternary(u32: int) -> int:
    # u < 1/6 -> -1, u > 5/6 -> +1, compared exactly on the integer numerator.
    if 6 * u32 < (1 << 32):
        return -1
    if 6 * u32 > 5 * (1 << 32):
        return 1
    return 0


@lru_cache(maxsize=None)
def _generate(subvector_len: int, bits: int) -> InnovationCodebook:
    rng = XorShiftStar(CODEBOOK_SEED)
    n = 1 << bits
    values = np.zeros((n, subvector_len), dtype=np.int8)
    for j in range(1, n):
        row = [0] * subvector_len
        while not any(row):
            row = [_ternary(rng.next_u32()) for _ in range(subvector_len)]
        values[j] = row
    values.setflags(write=False)
    energies = np.sum(values.astype(np.int64) ** 2, axis=1)
    energies.setflags(write=False)
    scale = np.zeros(n)
    nz = energies > 0
    scale[nz] = np.sqrt(subvector_len / energies[nz])
    shapes = values * scale[:, None]
    shapes.setflags(write=False)
    return InnovationCodebook(subvector_len, bits, values, energies, shapes)


def build_innovation_codebook(mode: ModeTable) -> InnovationCodebook:
    """Codebook for the narrowband layer of ``mode``; identical on every call."""
    nb = mode.narrowband
    return _generate(nb.subvector_len, nb.codebook_bits)
