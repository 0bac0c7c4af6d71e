"""Local rational modeling of lifted frequency responses.

Around every bin ``k`` the lifted output is modeled over the window
``r = -wsize..wsize`` as

    D(r) Z(r) = N(r) W(r) + L(r),
    N(r) = Mhat + sum_{s=1..Rn} N_s r^s,
    L(r) = That + sum_{s=1..Rl} L_s r^s,
    D(r) = I + sum_{s=1..Rd} D_s r^s,

with complex matrix coefficients, and fitted by minimizing the D-weighted
residual, which is linear in the coefficients. With a full matrix
denominator the rows of the residual decouple, so all ``F`` output rows share
one regression matrix and one QR factorization per bin.

Polynomial columns use ``(r / wsize)^s`` and every column is normalized to
unit norm before factorization; the reported center values are unaffected by
either scaling.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from mrpfg.errors import InvalidInputError
from mrpfg.lifting import LiftedFrf, lift
from mrpfg.signals import dft

DENOMINATORS = ("full", "scalar", "identity")


@dataclass(frozen=True)
class LocalModelConfig:
    """Window and degrees of the local rational model.

    ``denominator`` selects a full ``F x F`` matrix polynomial (default), a
    scalar polynomial times identity (cheaper, an approximation for ``F > 1``),
    or ``identity``, which ignores ``degree_d`` and gives the local polynomial
    method. Bins whose excitation regressors have a condition number above
    ``cond_limit`` are flagged; singular values below ``rcond`` times the
    largest are discarded in the solve.
    """

    wsize: int = 60
    degree_n: int = 3
    degree_l: int = 3
    degree_d: int = 3
    denominator: str = "full"
    cond_limit: float = 1e8
    rcond: float = 1e-13
    chunk: int = 256

    def __post_init__(self):
        for name in ("wsize", "degree_n", "degree_l", "degree_d"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvalidInputError(f"{name} must be a nonnegative integer, got {v}")
        if self.denominator not in DENOMINATORS:
            raise InvalidInputError(
                f"denominator must be one of {DENOMINATORS}, got {self.denominator!r}"
            )
        if self.wsize < 1:
            raise InvalidInputError("wsize must be at least 1")

    @property
    def rd(self) -> int:
        return 0 if self.denominator == "identity" else self.degree_d

    def n_unknowns(self, fac: int) -> int:
        """Complex unknowns in one least-squares problem."""
        if self.denominator == "scalar":
            return fac * (fac * (self.degree_n + 1) + self.degree_l + 1) + self.rd
        return fac * (self.degree_n + 1) + self.degree_l + 1 + fac * self.rd

    def n_equations(self, fac: int) -> int:
        rows = 2 * self.wsize + 1
        return rows * fac if self.denominator == "scalar" else rows

    def check(self, fac: int, n_bins: int):
        if 2 * self.wsize + 1 > n_bins:
            raise InvalidInputError(
                f"window of {2 * self.wsize + 1} bins exceeds the {n_bins}-bin grid"
            )
        if self.n_equations(fac) < self.n_unknowns(fac):
            raise InvalidInputError(
                f"window 2*{self.wsize}+1 is too short for {self.n_unknowns(fac)} "
                f"unknowns per bin (F={fac})"
            )


@dataclass(frozen=True)
class LocalFit:
    """Result of one local solve."""

    mhat: np.ndarray
    that: np.ndarray
    residual: float
    condition: float
    flagged: bool


def _window(n_bins: int, ks: np.ndarray, wsize: int) -> np.ndarray:
    r = np.arange(-wsize, wsize + 1)
    return (ks[:, None] + r[None, :]) % n_bins


def _regressors(Ww: np.ndarray, Zw: np.ndarray, cfg: LocalModelConfig) -> np.ndarray:
    """Row-decoupled regression matrix, shape ``(B, 2*wsize+1, P)``.

    Column order: ``N_0 .. N_Rn`` (F columns each), ``L_0 .. L_Rl``,
    ``D_1 .. D_Rd`` (F columns each, entering with a minus sign).
    """
    B, R, F = Ww.shape
    t = np.arange(-cfg.wsize, cfg.wsize + 1) / cfg.wsize
    cols = [Ww * t[None, :, None] ** s for s in range(cfg.degree_n + 1)]
    cols += [np.broadcast_to((t**s)[None, :, None], (B, R, 1)) for s in range(cfg.degree_l + 1)]
    cols += [-Zw * t[None, :, None] ** s for s in range(1, cfg.rd + 1)]
    return np.concatenate(cols, axis=2).astype(complex)


def _qr_normalized(K: np.ndarray):
    """QR of the column-normalized matrix; returns Q, R, column scales and the condition of R."""
    scale = np.linalg.norm(K, axis=1)
    safe = np.where(scale > 0, scale, 1.0)
    Q, Rm = np.linalg.qr(K / safe[:, None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        sv = np.linalg.svd(Rm, compute_uv=False)
        cond = np.where(scale.min(axis=1) > 0, sv[:, 0] / sv[:, -1], np.inf)
    return Q, Rm, safe, cond


def _solve_r(Rm: np.ndarray, rhs: np.ndarray, rcond: float) -> np.ndarray:
    """Minimum-norm solution of ``Rm X = rhs`` discarding singular values below ``rcond * s_max``."""
    U, sv, Vh = np.linalg.svd(Rm)
    keep = sv > rcond * sv[:, :1]
    inv = np.where(keep, 1.0 / np.where(keep, sv, 1.0), 0.0)
    return np.conj(np.swapaxes(Vh, 1, 2)) @ (inv[:, :, None] * (np.conj(np.swapaxes(U, 1, 2)) @ rhs))


def _solve_full(Ww, Zw, cfg: LocalModelConfig):
    """Full matrix (or identity) denominator: all output rows share one regression."""
    F = Ww.shape[2]
    K = _regressors(Ww, Zw, cfg)
    Q, Rm, scale, _ = _qr_normalized(K)
    X = _solve_r(Rm, np.conj(np.swapaxes(Q, 1, 2)) @ Zw, cfg.rcond) / scale[:, :, None]
    res = np.linalg.norm(K @ X - Zw, axis=(1, 2))
    # X[:, j, i]: coefficient j of output row i
    return np.swapaxes(X[:, :F, :], 1, 2), X[:, F * (cfg.degree_n + 1), :], res


def _solve_scalar(Ww, Zw, cfg: LocalModelConfig):
    """Scalar denominator ``d(r) I`` by variable projection.

    The per-row numerator and transient coefficients are projected out, the
    shared ``d_1..d_Rd`` are solved from the stacked projected residuals, and
    the rows are then solved with ``d`` fixed.
    """
    B, R, F = Ww.shape
    own = _regressors(Ww, Zw, replace(cfg, denominator="identity"))
    Q, Rm, scale, _ = _qr_normalized(own)
    Qh = np.conj(np.swapaxes(Q, 1, 2))
    t = np.arange(-cfg.wsize, cfg.wsize + 1) / cfg.wsize

    def perp(V):
        return V - Q @ (Qh @ V)

    a = perp(Zw)  # (B, R, F)
    d = np.zeros((B, cfg.rd), dtype=complex)
    if cfg.rd:
        # a_i + sum_s d_s perp(t^s Z_i) -> min over all rows i jointly
        cols = np.stack([perp(Zw * t[None, :, None] ** s) for s in range(1, cfg.rd + 1)], axis=-1)
        A = cols.reshape(B, R * F, cfg.rd)
        Qd, Rd, sd, _ = _qr_normalized(A)
        rhs = np.conj(np.swapaxes(Qd, 1, 2)) @ a.reshape(B, R * F, 1)
        d = -(_solve_r(Rd, rhs, cfg.rcond) / sd[:, :, None])[:, :, 0]
    den = 1.0 + sum(d[:, s - 1, None, None] * t[None, :, None] ** s for s in range(1, cfg.rd + 1))
    target = den * Zw
    X = _solve_r(Rm, Qh @ target, cfg.rcond) / scale[:, :, None]
    res = np.linalg.norm(own @ X - target, axis=(1, 2))
    return np.swapaxes(X[:, :F, :], 1, 2), X[:, F * (cfg.degree_n + 1), :], res


def _excitation_condition(Ww: np.ndarray, cfg: LocalModelConfig) -> np.ndarray:
    """Condition number of the column-normalized numerator/transient regressors.

    Measures how rough the excitation is inside each window. The complete
    regression, including the ``-Z r^s`` denominator columns, is close to rank
    deficient for noiseless data because a local pole can cancel against a
    local zero; that direction does not move the center values and is
    handled by the truncated solve instead of by flagging.
    """
    K = _regressors(Ww, Ww[:, :, :0], replace(cfg, denominator="identity"))
    return _qr_normalized(K)[3]


def _solve_bins(Wl: np.ndarray, Zl: np.ndarray, ks: np.ndarray, cfg: LocalModelConfig):
    n_bins, F = Wl.shape
    idx = _window(n_bins, ks, cfg.wsize)
    Ww, Zw = Wl[idx], Zl[idx]
    cond = _excitation_condition(Ww, cfg)
    solver = _solve_scalar if cfg.denominator == "scalar" else _solve_full
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        mhat, that, res = solver(Ww, Zw, cfg)
    flagged = ~(cond <= cfg.cond_limit) | ~np.all(np.isfinite(mhat.reshape(len(ks), -1)), axis=1)
    mhat = np.where(flagged[:, None, None], np.nan, mhat)
    that = np.where(flagged[:, None], np.nan, that)
    return mhat, that, res, cond, flagged


def _check_lifted(Wl, Zl):
    Wl, Zl = np.asarray(Wl), np.asarray(Zl)
    if Wl.ndim != 2 or Wl.shape != Zl.shape:
        raise InvalidInputError(
            f"lifted W and Z must share shape (N, F), got {Wl.shape} and {Zl.shape}"
        )
    return Wl, Zl


def solve_local_bin(Wl, Zl, k: int, cfg: LocalModelConfig = LocalModelConfig()) -> LocalFit:
    """Fit the local rational model around bin ``k`` of lifted spectra ``(N, F)``.

    The window wraps around the ends of the grid. A rank-deficient or badly
    conditioned regression yields ``flagged=True`` and NaN estimates instead
    of an exception.
    """
    Wl, Zl = _check_lifted(Wl, Zl)
    n_bins, F = Wl.shape
    cfg.check(F, n_bins)
    if not 0 <= k < n_bins:
        raise InvalidInputError(f"bin {k} outside [0, {n_bins - 1}]")
    mhat, that, res, cond, flagged = _solve_bins(Wl, Zl, np.array([k]), cfg)
    return LocalFit(mhat[0], that[0], float(res[0]), float(cond[0]), bool(flagged[0]))


def fit_lifted(Wl, Zl, cfg: LocalModelConfig = LocalModelConfig(), tsh: float = 1.0) -> LiftedFrf:
    """Run :func:`solve_local_bin` for every bin of already lifted spectra."""
    Wl, Zl = _check_lifted(Wl, Zl)
    n_bins, F = Wl.shape
    cfg.check(F, n_bins)
    mhat = np.empty((n_bins, F, F), dtype=complex)
    that = np.empty((n_bins, F), dtype=complex)
    res = np.empty(n_bins)
    cond = np.empty(n_bins)
    flagged = np.empty(n_bins, dtype=bool)
    for start in range(0, n_bins, cfg.chunk):
        ks = np.arange(start, min(start + cfg.chunk, n_bins))
        out = _solve_bins(Wl, Zl, ks, cfg)
        mhat[ks], that[ks], res[ks], cond[ks], flagged[ks] = out
    return LiftedFrf(mhat, that, res, cond, flagged, tsh)


def identify_lifted_frf(w, z, fac: int, cfg: LocalModelConfig = LocalModelConfig(), tsh: float = 1.0) -> LiftedFrf:
    """Identify the lifted closed loop from one fast-rate record.

    DFT both records, lift them by ``fac`` and fit the local model at every
    bin of the fast grid.
    """
    w, z = np.asarray(w), np.asarray(z)
    if w.ndim != 1 or w.shape != z.shape:
        raise InvalidInputError(
            f"w and z must be equal-length 1-D records, got {w.shape} and {z.shape}"
        )
    if w.shape[0] % fac:
        raise InvalidInputError(f"record length {w.shape[0]} is not divisible by F={fac}")
    return fit_lifted(lift(dft(w), fac), lift(dft(z), fac), cfg, tsh)


def identify_direct_baseline(w, z, cfg: LocalModelConfig = LocalModelConfig(), tsh: float = 1.0):
    """Single-rate local rational estimate of ``w -> z`` that ignores aliasing.

    Returns
    -------
    frf : ndarray, shape (N,)
        Complex FRF estimate, NaN on flagged bins.
    flagged : ndarray of bool, shape (N,)
    """
    est = identify_lifted_frf(w, z, 1, cfg, tsh)
    return est.mhat[:, 0, 0], est.flagged
