"""Welch power spectral density and cumulative power spectrum."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from mrpfg.errors import InvalidInputError


@dataclass(frozen=True)
class WelchResult:
    freq_hz: np.ndarray
    psd: np.ndarray
    f_r: float


def welch_psd(
    x,
    fs: float,
    segment_len: int | None = None,
    overlap_frac: float = 0.5,
    window: str = "hann",
) -> WelchResult:
    """Averaged modified periodogram of ``x`` sampled at ``fs`` Hz.

    Scaled so that ``sum(psd) * f_r`` approximates the mean square of ``x``.
    Real input gives a one-sided density, complex input a two-sided one. No
    detrending is applied, so a DC component counts toward the power.
    ``segment_len`` defaults to ``len(x) // 8``.
    """
    x = np.asarray(x)
    n = x.shape[0] if x.ndim == 1 else 0
    if n == 0:
        raise InvalidInputError("welch_psd needs a nonempty one-dimensional signal")
    if segment_len is None:
        segment_len = max(n // 8, 2)
    if not 2 <= segment_len <= n:
        raise InvalidInputError(f"segment_len={segment_len} must lie in [2, {n}]")
    if not 0 <= overlap_frac < 1:
        raise InvalidInputError(f"overlap_frac={overlap_frac} must lie in [0, 1)")
    noverlap = int(round(overlap_frac * segment_len))
    if noverlap >= segment_len:
        noverlap = segment_len - 1
    f, p = sps.welch(
        x,
        fs=fs,
        window=window,
        nperseg=segment_len,
        noverlap=noverlap,
        detrend=False,
        scaling="density",
        return_onesided=not np.iscomplexobj(x),
    )
    if np.iscomplexobj(x):
        # two-sided bins in [0, fs) instead of fftfreq's signed order
        f = np.mod(f, fs)
    return WelchResult(f, p, fs / segment_len)


def cps(psd, f_r: float) -> np.ndarray:
    """Running sum ``CPS[k] = sum_{i<=k} psd[i] * f_r``."""
    return np.cumsum(np.asarray(psd)) * f_r
