"""Spectral helpers for 2pi-periodic node data on uniform grids."""
from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def uniform_alpha(n: int) -> np.ndarray:
    return -np.pi + np.arange(n) * TWO_PI / n


def deriv(f: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral derivative of periodic samples. The Nyquist mode carries no
    sign information for odd derivatives and is zeroed there."""
    n = f.size
    k = np.fft.fftfreq(n, d=1.0 / n)
    c = np.fft.fft(f) * (1j * k) ** order
    if n % 2 == 0 and order % 2 == 1:
        c[n // 2] = 0.0
    return np.real(np.fft.ifft(c))


def upsample(f: np.ndarray, n_fine: int) -> np.ndarray:
    """Trigonometric interpolation of periodic samples onto a finer uniform
    grid with the same start point (zero-padded FFT; Nyquist split)."""
    n = f.size
    if n_fine == n:
        return f.copy()
    if n_fine < n:
        raise ValueError("n_fine must be >= len(f)")
    c = np.fft.fft(f) / n
    cf = np.zeros(n_fine, dtype=complex)
    half = n // 2
    cf[:half] = c[:half]
    cf[n_fine - half + 1:] = c[half + 1:]
    if n % 2 == 0:
        cf[half] = 0.5 * c[half]
        cf[n_fine - half] += 0.5 * c[half]
    else:
        cf[half] = c[half]
    return np.real(np.fft.ifft(cf) * n_fine)


def eval_interpolant(f: np.ndarray, alpha0: float, query: np.ndarray,
                     order: int = 0) -> np.ndarray:
    """Evaluate the trigonometric interpolant of samples f (on the uniform
    grid starting at alpha0) or its derivative at arbitrary query points."""
    n = f.size
    c = np.fft.fft(f) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        if order % 2 == 1:
            c[n // 2] = 0.0
        else:
            # treat the Nyquist pair as a real cosine mode
            k = k.copy()
    coef = c * (1j * k) ** order
    q = np.atleast_1d(np.asarray(query, dtype=float)) - alpha0
    vals = np.exp(1j * np.outer(q, k)) @ coef
    return np.real(vals) if np.ndim(query) else float(np.real(vals[0]))


def spectral_tail_ratio(f: np.ndarray) -> float:
    """Max coefficient magnitude in the top octave relative to the overall max."""
    c = np.abs(np.fft.fft(f))
    top = max(c[f.size // 4: 3 * f.size // 4].max(), 0.0)
    peak = c.max()
    return float(top / peak) if peak > 0 else 0.0


def filter_coefficients(f: np.ndarray, rel_threshold: float) -> np.ndarray:
    """Zero Fourier coefficients below rel_threshold of the max magnitude."""
    c = np.fft.fft(f)
    peak = np.abs(c).max()
    if peak > 0.0:
        c[np.abs(c) < rel_threshold * peak] = 0.0
    return np.real(np.fft.ifft(c))
