"""Signal containers, DFT helpers, multirate operators and excitation signals.

All numeric routines work on plain numpy arrays. ``Signal`` and ``Spectrum``
carry the rate tag and sampling time needed for file export and for checking
that a record matches its ``RateConfig``.

Random-phase multisines draw their phases from numpy's PCG64 generator
(``numpy.random.default_rng(seed)``), so a seed fully determines the signal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mrpfg.errors import InvalidInputError

FAST = "fast"
SLOW = "slow"


@dataclass(frozen=True)
class RateConfig:
    """Fast/slow sampling setup of a multirate experiment.

    Parameters
    ----------
    tsh : float
        Fast sampling time in seconds.
    fac : int
        Downsampling factor ``F`` between the fast and slow rate.
    n_fast : int
        Fast-rate record length ``N``; must be a multiple of ``fac``.
    """

    tsh: float
    fac: int
    n_fast: int

    def __post_init__(self):
        if not self.tsh > 0:
            raise InvalidInputError(f"tsh must be positive, got {self.tsh}")
        if int(self.fac) != self.fac or self.fac < 1:
            raise InvalidInputError(f"fac must be a positive integer, got {self.fac}")
        if int(self.n_fast) != self.n_fast or self.n_fast < 1:
            raise InvalidInputError(f"n_fast must be a positive integer, got {self.n_fast}")
        if self.n_fast % self.fac:
            raise InvalidInputError(
                f"n_fast={self.n_fast} is not divisible by fac={self.fac}"
            )
        object.__setattr__(self, "fac", int(self.fac))
        object.__setattr__(self, "n_fast", int(self.n_fast))

    @classmethod
    def from_frequencies(cls, fsh: float, fac: int, n_fast: int) -> "RateConfig":
        return cls(tsh=1.0 / fsh, fac=fac, n_fast=n_fast)

    @property
    def tsl(self) -> float:
        return self.fac * self.tsh

    @property
    def m_slow(self) -> int:
        return self.n_fast // self.fac

    @property
    def fsh(self) -> float:
        return 1.0 / self.tsh

    @property
    def fsl(self) -> float:
        return 1.0 / self.tsl

    @property
    def ws_fast(self) -> float:
        return 2 * np.pi / self.tsh

    @property
    def ws_slow(self) -> float:
        return self.ws_fast / self.fac

    def omega(self) -> np.ndarray:
        """Fast frequency grid ``2*pi*k/(N*tsh)`` in rad/s for k = 0..N-1."""
        return 2 * np.pi * np.arange(self.n_fast) / (self.n_fast * self.tsh)

    def freq_hz(self) -> np.ndarray:
        return np.arange(self.n_fast) / (self.n_fast * self.tsh)

    def slow_freq_hz(self) -> np.ndarray:
        return np.arange(self.m_slow) / (self.m_slow * self.tsl)

    def bin_of(self, omega_d: float, tol: float = 1e-9) -> int:
        """Grid index of ``omega_d`` (rad/s); raises if it is off the grid."""
        k = omega_d * self.n_fast * self.tsh / (2 * np.pi)
        kr = int(round(k))
        if abs(k - kr) > tol * max(1.0, abs(k)) or not 0 <= kr < self.n_fast:
            raise InvalidInputError(
                f"omega_d={omega_d} rad/s is not on the frequency grid "
                f"(fractional bin {k:.6g})"
            )
        return kr

    def length(self, rate: str) -> int:
        if rate == FAST:
            return self.n_fast
        if rate == SLOW:
            return self.m_slow
        raise InvalidInputError(f"unknown rate tag {rate!r}")


@dataclass(frozen=True)
class Signal:
    """Finite record of complex samples at the fast or slow rate."""

    samples: np.ndarray
    ts: float
    rate: str = FAST

    def __post_init__(self):
        if self.rate not in (FAST, SLOW):
            raise InvalidInputError(f"unknown rate tag {self.rate!r}")
        arr = np.asarray(self.samples)
        if arr.ndim != 1:
            raise InvalidInputError("signal samples must be one-dimensional")
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.shape[0]

    def check(self, cfg: RateConfig) -> "Signal":
        """Raise unless the length matches ``cfg`` for this signal's rate tag."""
        n = cfg.length(self.rate)
        if len(self) != n:
            raise InvalidInputError(
                f"{self.rate}-rate signal has {len(self)} samples, expected {n}"
            )
        return self

    def spectrum(self) -> "Spectrum":
        return Spectrum(dft(self.samples), ts=self.ts, rate=self.rate)


@dataclass(frozen=True)
class Spectrum:
    """DFT bins of a record, indexed by k on the grid ``k/(len*ts)`` Hz."""

    bins: np.ndarray
    ts: float
    rate: str = FAST

    def __len__(self):
        return self.bins.shape[0]

    def freq_hz(self) -> np.ndarray:
        n = len(self)
        return np.arange(n) / (n * self.ts)


def _as_nonempty(x, name="signal") -> np.ndarray:
    arr = np.asarray(x.samples if isinstance(x, Signal) else x)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    return arr


def dft(x) -> np.ndarray:
    """Unnormalized DFT ``X[k] = sum_n x[n] exp(-2j*pi*n*k/len)``."""
    return np.fft.fft(_as_nonempty(x))


def idft(X) -> np.ndarray:
    """Inverse of :func:`dft`."""
    return np.fft.ifft(_as_nonempty(X, "spectrum"))


def upsample(x, fac: int) -> np.ndarray:
    """Insert ``fac - 1`` zeros after every slow sample."""
    x = np.asarray(x)
    out = np.zeros(x.shape[0] * fac, dtype=np.result_type(x.dtype, float))
    out[::fac] = x
    return out


def downsample(x, fac: int) -> np.ndarray:
    """Keep every ``fac``-th sample, starting at index 0."""
    x = np.asarray(x)
    if x.shape[0] % fac:
        raise InvalidInputError(
            f"signal length {x.shape[0]} is not divisible by fac={fac}"
        )
    return x[::fac].copy()


def zoh_hold(x, fac: int) -> np.ndarray:
    """Zero-order hold interpolation: each slow sample repeated ``fac`` times.

    Equivalent to upsampling followed by the FIR filter ``sum_f q^-f``; no
    ``1/fac`` gain is applied.
    """
    return np.repeat(np.asarray(x), fac)


def zoh_frf(omega, tsh: float, fac: int):
    """Frequency response ``sum_{f<fac} exp(-j*omega*f*tsh)`` of the hold filter."""
    omega = np.asarray(omega, dtype=float)
    f = np.arange(fac)
    out = np.exp(-1j * np.multiply.outer(omega, f) * tsh).sum(axis=-1)
    return out[()] if out.ndim == 0 else out


def multisine(
    cfg: RateConfig,
    band: tuple[int, int] | None = None,
    amplitude: float = 1.0,
    seed: int | None = 0,
) -> np.ndarray:
    """Real random-phase multisine on the fast grid.

    Every bin ``k`` in ``band`` (inclusive) carries a cosine of amplitude
    ``amplitude`` with a phase drawn uniformly from [0, 2*pi), so
    ``|X[k]| = amplitude * N / 2`` on the band and zero elsewhere.
    """
    n = cfg.n_fast
    if band is None:
        band = (1, n // 2 - 1 if n % 2 == 0 else n // 2)
    k_min, k_max = int(band[0]), int(band[1])
    if k_max < k_min:
        raise InvalidInputError(f"empty excitation band {band}")
    if k_min < 1 or 2 * k_max >= n:
        raise InvalidInputError(
            f"band {band} must lie within [1, {(n - 1) // 2}] for a real signal"
        )
    rng = np.random.default_rng(seed)
    ks = np.arange(k_min, k_max + 1)
    phases = rng.uniform(0.0, 2 * np.pi, size=ks.size)
    X = np.zeros(n, dtype=complex)
    X[ks] = amplitude * n / 2 * np.exp(1j * phases)
    X[n - ks] = np.conj(X[ks])
    return np.fft.ifft(X).real


def single_sine(c: complex, omega_d: float, cfg: RateConfig) -> np.ndarray:
    """Complex exponential ``c * exp(j*omega_d*n*tsh)``; ``omega_d`` must be on the grid."""
    k = cfg.bin_of(omega_d)
    n = np.arange(cfg.n_fast)
    # exact grid phase avoids drift from a rounded omega_d
    return c * np.exp(2j * np.pi * k * n / cfg.n_fast)


def power_time(x) -> float:
    """Finite-record power ``sqrt(mean |x|^2)``."""
    x = _as_nonempty(x)
    return float(np.sqrt(np.mean(np.abs(x) ** 2)))


def power_freq(X) -> float:
    """Spectral power ``sqrt(sum |X|^2 / N)``; equals ``sqrt(N) * power_time(x)``."""
    X = _as_nonempty(X, "spectrum")
    return float(np.sqrt(np.sum(np.abs(X) ** 2) / X.shape[0]))
