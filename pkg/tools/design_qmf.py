"""Design the 64-tap QMF prototype stored in ``mclp.wideband.QMF_HALF``.

Starts from a Hamming-windowed sinc (cutoff pi/2) and refines the 32 free
coefficients of the symmetric filter by least squares on two goals: power
complementarity |H(w)|^2 + |H(pi - w)|^2 = 1 and stopband energy beyond
0.64 pi. Run once; the printed table is pasted into the module.
"""

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import firwin

TAPS = 64
GRID = np.linspace(0.0, np.pi, 2048)
STOPBAND = 0.64 * np.pi


def amplitude(half, w):
    h = np.concatenate([half, half[::-1]])
    return np.cos(np.outer(w, np.arange(TAPS) - (TAPS - 1) / 2)) @ h


def residuals(half):
    a = amplitude(half, GRID)
    b = amplitude(half, np.pi - GRID)
    return np.concatenate([10.0 * (a * a + b * b - 1.0), a[GRID >= STOPBAND]])


def main():
    start = firwin(TAPS, 0.5, window="hamming")[:TAPS // 2]
    sol = least_squares(residuals, start, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    for i in range(0, TAPS // 2, 4):
        print("    " + " ".join(f"{v: .17e}," for v in sol.x[i:i + 4]))


if __name__ == "__main__":
    main()
