"""Signal-processing primitives shared by the narrowband and wideband codecs.

LPC polynomials are handled as arrays ``a[0..p-1]`` holding a1..ap of
``A(z) = 1 + sum_i a_i z^-i``, so the prediction residual is
``x[n] + sum_i a_i x[n-i]``.

Stateful filters keep their delay line in a :class:`FilterState`. The state is
the transposed direct-form memory used by :func:`scipy.signal.lfilter`, which
means filtering a signal in chunks is bit-identical to filtering it at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from numpy.polynomial import chebyshev
from scipy.signal import lfilter

from .errors import InvalidInputError, LspConversionError, NumericOverflowError

LPC_ORDER = 10
WHITE_NOISE_CORRECTION = 1.0001
LAG_WINDOW_BANDWIDTH_HZ = 60.0
LSP_GRID_POINTS = 512
LSP_BISECTION_TOL = 1e-8
LSP_SUBDIVISION = 1 << 5
REFLECTION_CLAMP = 0.999


@dataclass(frozen=True)
class WeightingConfig:
    gamma1: float = 0.9
    gamma2: float = 0.6

    def __post_init__(self):
        if not 0.0 < self.gamma2 <= self.gamma1 <= 1.0:
            raise InvalidInputError(
                f"weighting factors must satisfy 0 < gamma2 <= gamma1 <= 1, "
                f"got {self.gamma1}, {self.gamma2}")


@dataclass(frozen=True)
class NotchConfig:
    alpha: float = 0.98

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"notch radius must be in (0, 1), got {self.alpha}")


@dataclass
class FilterState:
    """Delay line of one linear filter."""

    memory: np.ndarray

    @classmethod
    def zeros(cls, order: int) -> "FilterState":
        return cls(np.zeros(order))

    def reset(self):
        self.memory[:] = 0.0

    def copy(self) -> "FilterState":
        return FilterState(self.memory.copy())


@dataclass
class WeightingState:
    """Numerator and denominator memories of the weighting filter."""

    zero: FilterState = field(default_factory=lambda: FilterState.zeros(LPC_ORDER))
    pole: FilterState = field(default_factory=lambda: FilterState.zeros(LPC_ORDER))

    @classmethod
    def zeros(cls, order: int = LPC_ORDER) -> "WeightingState":
        return cls(FilterState.zeros(order), FilterState.zeros(order))

    def reset(self):
        self.zero.reset()
        self.pole.reset()

    def copy(self) -> "WeightingState":
        return WeightingState(self.zero.copy(), self.pole.copy())


class LevinsonResult(NamedTuple):
    lpc: np.ndarray
    reflections: np.ndarray
    error: float
    degenerate: bool


def _as_signal(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError("expected a one-dimensional signal")
    return x


def _frozen(a: np.ndarray) -> np.ndarray:
    # cached arrays are shared between callers
    a.flags.writeable = False
    return a


@lru_cache(maxsize=None)
def _window(kind: str, n: int) -> np.ndarray:
    if kind == "hamming":
        return _frozen(np.hamming(n))
    if kind in ("rectangular", "boxcar"):
        return _frozen(np.ones(n))
    raise InvalidInputError(f"unknown window {kind!r}")


@lru_cache(maxsize=None)
def lag_window(max_lag: int, rate: int = 8000,
               bandwidth: float = LAG_WINDOW_BANDWIDTH_HZ) -> np.ndarray:
    """Gaussian lag window ``exp(-(2 pi f0 k / fs)^2 / 2)`` for k = 0..max_lag."""
    k = np.arange(max_lag + 1)
    return _frozen(np.exp(-0.5 * (2.0 * np.pi * bandwidth * k / rate) ** 2))


def autocorrelate(frame, window: str = "hamming", max_lag: int = LPC_ORDER,
                  rate: int = 8000, condition: bool = True) -> np.ndarray:
    """Windowed autocorrelation for lags 0..max_lag.

    With ``condition`` the zero lag is scaled by 1.0001 (white-noise floor at
    -40 dB) and all lags are multiplied by a 60 Hz Gaussian lag window.
    """
    x = _as_signal(frame)
    if x.size == 0:
        raise InvalidInputError("cannot autocorrelate an empty frame")
    if x.size < max_lag + 1:
        raise InvalidInputError(
            f"frame of {x.size} samples is too short for {max_lag} lags")
    xw = x * _window(window, x.size)
    n = xw.size
    acf = np.array([float(np.dot(xw[:n - k], xw[k:])) for k in range(max_lag + 1)])
    if condition:
        acf[0] *= WHITE_NOISE_CORRECTION
        acf *= lag_window(max_lag, rate)
    return acf


def levinson_durbin(acf, order: int = LPC_ORDER) -> LevinsonResult:
    """Solve the normal equations for an order-``order`` predictor.

    Reflection coefficients follow ``k_i = -a_i^(i)``, so an AR(1) source with
    correlation 0.9 gives ``k_1 = 0.9`` and ``a_1 = -0.9``. A reflection with
    magnitude >= 1 is clamped to 0.999 and the result is flagged degenerate.
    """
    r = [float(v) for v in np.asarray(acf, dtype=np.float64)]
    if len(r) < order + 1:
        raise InvalidInputError(f"need {order + 1} lags, got {len(r)}")
    a = [0.0] * order
    k = [0.0] * order
    if r[0] <= 0.0:
        return LevinsonResult(np.zeros(order), np.zeros(order), 0.0, r[0] < 0.0)

    err = r[0]
    degenerate = False
    for i in range(order):
        acc = r[i + 1]
        for j in range(i):
            acc += a[j] * r[i - j]
        ki = acc / err
        if not abs(ki) < 1.0:
            ki = REFLECTION_CLAMP if ki > 0 else -REFLECTION_CLAMP
            degenerate = True
        prev = a[:i]
        for j in range(i):
            a[j] = prev[j] - ki * prev[i - 1 - j]
        a[i] = -ki
        k[i] = ki
        err *= 1.0 - ki * ki
    return LevinsonResult(np.array(a), np.array(k), err, degenerate)


def _symmetric_parts(lpc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deflated sum and difference polynomials P(z)/(1+z^-1), Q(z)/(1-z^-1)."""
    p = lpc.size
    full = np.concatenate(([1.0], lpc, [0.0]))
    rev = full[::-1]
    psum = full + rev
    pdif = full - rev
    pp = np.empty(p + 1)
    qq = np.empty(p + 1)
    pp[0] = psum[0]
    qq[0] = pdif[0]
    for i in range(1, p + 1):
        pp[i] = psum[i] - pp[i - 1]
        qq[i] = pdif[i] + qq[i - 1]
    return pp, qq


def _cheb_series(sym: np.ndarray) -> np.ndarray:
    # sym is symmetric of degree 2m; on the unit circle it equals
    # e^{-jm w} (sym[m] + 2 sum_{k<m} sym[k] cos((m-k) w)).
    m = (sym.size - 1) // 2
    c = np.empty(m + 1)
    c[0] = sym[m]
    c[1:] = 2.0 * sym[:m][::-1]
    return c


@lru_cache(maxsize=None)
def _cheb_to_power(degree: int) -> np.ndarray:
    # Row j holds the power-basis coefficients of T_j(x).
    m = np.zeros((degree + 1, degree + 1))
    for j in range(degree + 1):
        t = np.zeros(degree + 1)
        t[j] = 1.0
        row = chebyshev.cheb2poly(t)
        m[j, :row.size] = row
    return m


def _horner(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    # coeffs[..., k] multiplies x**k; evaluated row-wise.
    y = coeffs[..., -1]
    for k in range(coeffs.shape[-1] - 2, -1, -1):
        y = y * x + coeffs[..., k]
    return y


_SUBDIVISION_POINTS = np.linspace(0.0, 1.0, LSP_SUBDIVISION + 1)


@lru_cache(maxsize=None)
def _lsp_grid(points: int) -> tuple[np.ndarray, np.ndarray]:
    grid = np.linspace(0.0, np.pi, points + 1)
    return grid, np.cos(grid)


def _brackets(values: np.ndarray, expected: int) -> np.ndarray:
    positive = values >= 0.0
    idx = np.flatnonzero(positive[:-1] != positive[1:])
    if idx.size != expected:
        raise LspConversionError(
            f"found {idx.size} sign changes, expected {expected}")
    return idx


def lpc_to_lsp(lpc, grid_points: int = LSP_GRID_POINTS) -> np.ndarray:
    """Line spectral frequencies (radians, ascending) of a stable even-order LPC.

    Both deflated polynomials are evaluated as Chebyshev series in cos(w) on a
    uniform grid over [0, pi]; every sign change is then bisected to 1e-8 rad.
    Raises :class:`LspConversionError` when the grid does not bracket every
    root, in which case callers keep the previous frame's LSPs.
    """
    lpc = _as_signal(lpc)
    p = lpc.size
    if p % 2:
        raise InvalidInputError("LSP conversion needs an even order")
    pp, qq = _symmetric_parts(lpc)
    conv = _cheb_to_power(p // 2)
    power_p = _cheb_series(pp) @ conv
    power_q = _cheb_series(qq) @ conv
    grid, x = _lsp_grid(grid_points)
    ip = _brackets(_horner(power_p, x), p // 2)
    iq = _brackets(_horner(power_q, x), p // 2)

    # Bisect all p brackets at once: row r of coeffs is the polynomial of root r.
    idx = np.empty(p, dtype=int)
    idx[0::2] = ip
    idx[1::2] = iq
    coeffs = np.empty((p, power_p.size))
    coeffs[0::2] = power_p
    coeffs[1::2] = power_q
    # Each pass splits every bracket into 32 equal parts and keeps the first
    # sign change: five bisection halvings at once, vectorised over the roots.
    lo = grid[idx]
    width = grid[idx + 1] - lo
    sub = _SUBDIVISION_POINTS
    rows = np.arange(p)
    passes = int(np.ceil(np.log((np.pi / grid_points) / LSP_BISECTION_TOL)
                         / np.log(LSP_SUBDIVISION)))
    for _ in range(passes):
        pts = lo[:, None] + width[:, None] * sub
        x = np.cos(pts)
        vals = coeffs[:, -1:]
        for k in range(coeffs.shape[1] - 2, -1, -1):
            vals = vals * x + coeffs[:, k:k + 1]
        positive = vals >= 0.0
        j = np.argmax(positive[:, 1:] != positive[:, :1], axis=1)
        lo = pts[rows, j]
        width = width / LSP_SUBDIVISION
    lsp = lo + 0.5 * width
    if not np.all(np.diff(lsp) > 0.0):
        raise LspConversionError("roots of P and Q do not interleave")
    return lsp


def _times_quadratic(poly: list, c: float) -> list:
    # poly * (1 + c z^-1 + z^-2)
    out = poly + [0.0, 0.0]
    for k, v in enumerate(poly):
        out[k + 1] += c * v
        out[k + 2] += v
    return out


def lsp_to_lpc(lsp) -> np.ndarray:
    """Rebuild A(z) from ascending line spectral frequencies."""
    lsp = _as_signal(lsp)
    p = lsp.size
    c = (-2.0 * np.cos(lsp)).tolist()
    pp = [1.0]
    qq = [1.0]
    for i in range(0, p, 2):
        pp = _times_quadratic(pp, c[i])
    for i in range(1, p, 2):
        qq = _times_quadratic(qq, c[i])
    # (1 + z^-1) P'(z) and (1 - z^-1) Q'(z), averaged; only taps 1..p are kept.
    return np.array([0.5 * (pp[i] + pp[i - 1] + qq[i] - qq[i - 1]) for i in range(1, p + 1)])


def bandwidth_expand(lpc, gamma: float) -> np.ndarray:
    """Coefficients of A(z/gamma): ``a_i * gamma**i``."""
    lpc = _as_signal(lpc)
    return lpc * gamma ** np.arange(1, lpc.size + 1)


def _run(b, a, x, state: FilterState | None) -> np.ndarray:
    x = _as_signal(x)
    order = max(len(a), len(b)) - 1
    if state is None:
        zi = np.zeros(order)
    else:
        if state.memory.size != order:
            raise InvalidInputError(
                f"filter state holds {state.memory.size} taps, filter needs {order}")
        zi = state.memory
    if x.size == 0:
        return x.copy()
    if len(a) == 1:
        # lfilter's FIR shortcut adds the carried state after convolving, which
        # breaks bit-exact chunking; a zero pole keeps the direct-form path.
        a = [a[0], 0.0]
    y, zf = lfilter(b, a, x, zi=zi)
    if not np.all(np.isfinite(y)):
        raise NumericOverflowError("filter output is not finite")
    if state is not None:
        state.memory = zf
    return y


def filter_all_pole(x, lpc, state: FilterState | None = None) -> np.ndarray:
    """Filter through the synthesis filter 1/A(z)."""
    return _run([1.0], np.concatenate(([1.0], lpc)), x, state)


def filter_all_zero(x, lpc, state: FilterState | None = None) -> np.ndarray:
    """Filter through the analysis filter A(z)."""
    return _run(np.concatenate(([1.0], lpc)), [1.0], x, state)


def perceptual_weight(x, lpc, cfg: WeightingConfig = WeightingConfig(),
                      state: WeightingState | None = None) -> np.ndarray:
    """Apply W(z) = A(z/gamma1) / A(z/gamma2)."""
    if state is None:
        state = WeightingState.zeros(len(lpc))
    y = filter_all_zero(x, bandwidth_expand(lpc, cfg.gamma1), state.zero)
    return filter_all_pole(y, bandwidth_expand(lpc, cfg.gamma2), state.pole)


def notch_coefficients(cfg: NotchConfig = NotchConfig()) -> tuple[np.ndarray, np.ndarray]:
    """(b, a) of N(z) = (1 - z^-1) / (1 - alpha z^-1)."""
    return np.array([1.0, -1.0]), np.array([1.0, -cfg.alpha])


def dc_notch(x, cfg: NotchConfig = NotchConfig(),
             state: FilterState | None = None) -> np.ndarray:
    b, a = notch_coefficients(cfg)
    return _run(b, a, x, state)


def highpass_coefficients(cutoff_hz: float, rate: int,
                          q: float = 1.0 / np.sqrt(2.0)) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear-transform biquad high-pass, normalised so a[0] = 1."""
    if not 0.0 < cutoff_hz < rate / 2.0:
        raise InvalidInputError(f"cutoff {cutoff_hz} Hz must lie in (0, {rate / 2})")
    w0 = 2.0 * np.pi * cutoff_hz / rate
    cw = np.cos(w0)
    alpha = np.sin(w0) / (2.0 * q)
    b = np.array([(1.0 + cw) / 2.0, -(1.0 + cw), (1.0 + cw) / 2.0])
    a = np.array([1.0 + alpha, -2.0 * cw, 1.0 - alpha])
    return b / a[0], a / a[0]


def highpass(x, cutoff_hz: float, rate: int,
             state: FilterState | None = None) -> np.ndarray:
    """Second-order Butterworth-style high-pass (300 Hz narrowband, 50 Hz wideband)."""
    b, a = highpass_coefficients(cutoff_hz, rate)
    return _run(b, a, x, state)


def impulse_response(num, den, length: int) -> np.ndarray:
    """First ``length`` samples of the impulse response of num(z)/den(z)."""
    delta = np.zeros(length)
    delta[0] = 1.0
    return lfilter(num, den, delta)


def convolution_matrix(h: np.ndarray) -> np.ndarray:
    """Upper-triangular M with ``(u @ M)[n] = sum_{i<=n} u[i] h[n-i]``."""
    n = h.size
    m = np.zeros((n, n))
    for i in range(n):
        m[i, i:] = h[:n - i]
    return m
