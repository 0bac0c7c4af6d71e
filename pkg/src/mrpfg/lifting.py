"""Frequency lifting of spectra and the analytic lifted closed loop.

A spectrum ``X`` of length ``N`` is lifted to an ``(N, F)`` array whose row
``k`` holds ``X`` at bins ``k, k + M, ..., k + (F-1) M`` (mod ``N``), i.e. at
``omega_k`` shifted by multiples of ``ws_fast / F``. In lifted coordinates the
multirate loop acts as an LTI ``F x F`` map per bin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mrpfg.errors import InvalidInputError
from mrpfg.lti import MultirateLoop, frf_on_grid
from mrpfg.signals import zoh_frf


def lift_indices(n: int, fac: int) -> np.ndarray:
    """``(n, fac)`` array of bin indices ``(k + f*n/fac) mod n``."""
    if fac < 1 or n % fac:
        raise InvalidInputError(f"length {n} is not divisible by F={fac}")
    m = n // fac
    return (np.arange(n)[:, None] + m * np.arange(fac)[None, :]) % n


def lift(X, fac: int) -> np.ndarray:
    """Lift a length-``N`` spectrum to shape ``(N, F)``."""
    X = np.asarray(X)
    if X.ndim != 1:
        raise InvalidInputError("lift expects a one-dimensional spectrum")
    return X[lift_indices(X.shape[0], fac)]


def unlift(Xl) -> np.ndarray:
    """Inverse of :func:`lift`: the first lifted entry at every bin."""
    return np.asarray(Xl)[:, 0].copy()


@dataclass(frozen=True)
class LiftedFrf:
    """Per-bin lifted closed-loop estimate on the full fast grid.

    Attributes
    ----------
    mhat : ndarray, shape (N, F, F)
        Lifted closed-loop FRF. NaN on flagged bins.
    that : ndarray, shape (N, F)
        Lifted transient term at the window center.
    residual : ndarray, shape (N,)
        Root of the weighted least-squares cost.
    condition : ndarray, shape (N,)
        Condition number of the (column-scaled) regression matrix.
    flagged : ndarray of bool, shape (N,)
    tsh : float
    """

    mhat: np.ndarray
    that: np.ndarray
    residual: np.ndarray
    condition: np.ndarray
    flagged: np.ndarray
    tsh: float

    @property
    def n_bins(self) -> int:
        return self.mhat.shape[0]

    @property
    def fac(self) -> int:
        return self.mhat.shape[1]

    def freq_hz(self) -> np.ndarray:
        return np.arange(self.n_bins) / (self.n_bins * self.tsh)


@dataclass(frozen=True)
class LoopFrfs:
    """Block frequency responses of a loop sampled on the fast grid."""

    g11: np.ndarray
    g12: np.ndarray
    g21: np.ndarray
    g22: np.ndarray
    izoh: np.ndarray
    kd: np.ndarray  # controller at omega_k * tsl, period M in k
    fac: int

    @classmethod
    def of(cls, loop: MultirateLoop) -> "LoopFrfs":
        rate = loop.rate
        om = rate.omega()
        g = [frf_on_grid(b, om) for b in loop.plant.blocks()]
        return cls(*g, zoh_frf(om, rate.tsh, rate.fac), frf_on_grid(loop.controller, om), rate.fac)

    @property
    def n(self) -> int:
        return self.g11.shape[0]

    def g22_slow(self) -> np.ndarray:
        """Slow-rate ``sampler * G22 * hold`` at every fast bin: mean of aliased ``G22 * I``."""
        idx = lift_indices(self.n, self.fac)
        return (self.g22 * self.izoh)[idx].sum(axis=1) / self.fac

    def qd(self) -> np.ndarray:
        """``(1 - Kd G22,l)^-1 Kd`` per fast bin; inf/NaN where the return difference vanishes."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.kd / (1.0 - self.kd * self.g22_slow())


def analytic_lifted_m(loop: MultirateLoop, k: int | None = None, frfs: LoopFrfs | None = None):
    """True lifted closed loop built from block FRFs.

    Entry ``(i, j)`` at bin ``k`` is
    ``delta_ij G11(k_i) + G12(k_i) I(k_i) Qd(k) G21(k_j) / F`` where
    ``k_f = k + f M``. Bins where a block or the return difference cannot
    be evaluated come back as NaN.

    Returns an ``(F, F)`` matrix for integer ``k``, else ``(N, F, F)``.
    """
    frfs = frfs or LoopFrfs.of(loop)
    F = frfs.fac
    idx = lift_indices(frfs.n, F)
    qd = frfs.qd()
    with np.errstate(invalid="ignore", over="ignore"):
        left = (frfs.g12 * frfs.izoh)[idx] * (qd / F)[:, None]  # (N, F) rows
        right = frfs.g21[idx]  # (N, F) columns
        m = left[:, :, None] * right[:, None, :]
        diag = np.arange(F)
        m[:, diag, diag] += frfs.g11[idx]
    bad = ~np.all(np.isfinite(m.reshape(frfs.n, -1)), axis=1)
    m[bad] = np.nan
    if k is not None:
        if not 0 <= k < frfs.n:
            raise InvalidInputError(f"bin {k} outside [0, {frfs.n - 1}]")
        return m[k]
    return m


def analytic_lifted_frf(loop: MultirateLoop) -> LiftedFrf:
    """:func:`analytic_lifted_m` packaged as a ``LiftedFrf`` with NaN bins flagged."""
    m = analytic_lifted_m(loop)
    n, F = m.shape[:2]
    flagged = np.isnan(m[:, 0, 0])
    return LiftedFrf(
        mhat=m,
        that=np.zeros((n, F), dtype=complex),
        residual=np.zeros(n),
        condition=np.ones(n),
        flagged=flagged,
        tsh=loop.rate.tsh,
    )
