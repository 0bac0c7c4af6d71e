"""Performance frequency gain: from lifted FRFs, analytic, and by simulation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mrpfg.errors import InvalidInputError
from mrpfg.lifting import LiftedFrf, LoopFrfs, lift_indices
from mrpfg.lti import MultirateLoop, simulate_multirate_loop
from mrpfg.signals import power_time, single_sine

PROVENANCES = ("identified", "analytic", "oracle", "baseline", "sensitivity")


@dataclass(frozen=True)
class PfgCurve:
    """Gain per frequency bin, NaN where ``flagged``."""

    values: np.ndarray
    freq_hz: np.ndarray
    provenance: str
    flagged: np.ndarray

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise InvalidInputError(f"unknown provenance {self.provenance!r}")
        values = np.asarray(self.values, dtype=float)
        flagged = np.asarray(self.flagged, dtype=bool) | ~np.isfinite(values)
        values = np.where(flagged, np.nan, values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "flagged", flagged)
        object.__setattr__(self, "freq_hz", np.asarray(self.freq_hz, dtype=float))

    def __len__(self):
        return self.values.shape[0]

    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20 * np.log10(self.values)


def pfg_from_lifted(frf: LiftedFrf, provenance: str = "identified") -> PfgCurve:
    """Root-sum-square of the first lifted column at every bin."""
    vals = np.sqrt(np.sum(np.abs(frf.mhat[:, :, 0]) ** 2, axis=1))
    return PfgCurve(vals, frf.freq_hz(), provenance, frf.flagged)


def pfg_from_column(frf: LiftedFrf, f: int, provenance: str = "identified") -> PfgCurve:
    """PFG from lifted column ``f``.

    Column ``f`` at bin ``k`` describes the input at bin ``k + f M``, so its
    norm is the gain at that shifted bin.
    """
    F = frf.fac
    if not 0 <= f < F:
        raise InvalidInputError(f"column {f} outside [0, {F - 1}]")
    n = frf.n_bins
    m = n // F
    src = (np.arange(n) - f * m) % n
    vals = np.sqrt(np.sum(np.abs(frf.mhat[src, :, f]) ** 2, axis=1))
    return PfgCurve(vals, frf.freq_hz(), provenance, frf.flagged[src])


def alias_coefficients(loop: MultirateLoop, frfs: LoopFrfs | None = None) -> np.ndarray:
    """Output coefficients ``c_f`` at ``omega_k + f ws/F`` for unit input at ``omega_k``.

    Shape ``(N, F)``. ``c_0`` contains the direct ``G11`` path; the others are
    purely aliased contributions routed through the controller.
    """
    frfs = frfs or LoopFrfs.of(loop)
    F = frfs.fac
    n = frfs.n
    shifted = lift_indices(n, F)
    qd = frfs.qd()
    gain = qd / F
    c = np.empty((n, F), dtype=complex)
    with np.errstate(invalid="ignore", over="ignore"):
        for f in range(F):
            kf = shifted[:, f]
            c[:, f] = (frfs.g12[kf] * frfs.izoh[kf]) * gain * frfs.g21
        c[:, 0] += frfs.g11
    return c


def pfg_analytic(loop: MultirateLoop) -> PfgCurve:
    """Exact PFG of the loop from its block FRFs on the fast grid."""
    c = alias_coefficients(loop)
    with np.errstate(invalid="ignore"):
        vals = np.sqrt(np.sum(np.abs(c) ** 2, axis=1))
    flagged = ~np.isfinite(vals)
    return PfgCurve(vals, loop.rate.freq_hz(), "analytic", flagged)


def slow_rate_sensitivity(loop: MultirateLoop) -> PfgCurve:
    """Magnitude of ``1 / (1 - Kd G22,l)`` on the slow grid ``[0, ws_slow)``.

    For the output-disturbance wiring ``G22 = -P`` this is the familiar
    ``1 / (1 + Kd P_l)``.
    """
    frfs = LoopFrfs.of(loop)
    m = loop.rate.m_slow
    with np.errstate(divide="ignore", invalid="ignore"):
        s = 1.0 / (1.0 - frfs.kd[:m] * frfs.g22_slow()[:m])
        vals = np.abs(s)
    return PfgCurve(vals, loop.rate.slow_freq_hz(), "sensitivity", ~np.isfinite(vals))


def pfg_time_oracle(
    loop: MultirateLoop,
    omega_d: float,
    c: complex = 1.0,
    n_settle_periods: int = 2,
) -> float:
    """PFG at ``omega_d`` from a steady-state simulation with a single complex sinusoid."""
    w = single_sine(c, omega_d, loop.rate)
    z = simulate_multirate_loop(loop, w, n_settle_periods)["z"]
    return power_time(z) / power_time(w)


@dataclass(frozen=True)
class CurveErrors:
    """Per-bin deviation of ``curve`` from ``reference`` on a shared grid.

    ``rel`` and ``db`` are NaN where either curve is flagged.
    """

    rel: np.ndarray
    db: np.ndarray
    flagged: np.ndarray

    @property
    def flagged_frac(self) -> float:
        return float(np.mean(self.flagged))

    def summary(self) -> dict[str, float]:
        ok = ~self.flagged
        if not ok.any():
            nan = float("nan")
            return {"median_rel": nan, "p95_rel": nan, "max_rel": nan,
                    "median_abs_db": nan, "max_abs_db": nan, "flagged_frac": 1.0}
        rel, adb = self.rel[ok], np.abs(self.db[ok])
        return {
            "median_rel": float(np.median(rel)),
            "p95_rel": float(np.percentile(rel, 95)),
            "max_rel": float(np.max(rel)),
            "median_abs_db": float(np.median(adb)),
            "max_abs_db": float(np.max(adb)),
            "flagged_frac": self.flagged_frac,
        }


def curve_errors(reference: PfgCurve, curve: PfgCurve, rtol: float = 1e-9) -> CurveErrors:
    """Compare two curves bin by bin.

    The grids must have the same resolution. ``curve`` may be shorter than
    ``reference`` (a slow-grid curve overlays the first bins of a fast one).
    """
    n = len(curve)
    if n > len(reference):
        raise InvalidInputError(f"curve has {n} bins, reference only {len(reference)}")
    if not np.allclose(curve.freq_hz, reference.freq_hz[:n], rtol=rtol, atol=0.0):
        raise InvalidInputError("curves are on incompatible frequency grids")
    ref = reference.values[:n]
    flagged = curve.flagged | reference.flagged[:n]
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(curve.values - ref) / ref
        db = 20 * np.log10(curve.values / ref)
    flagged = flagged | ~np.isfinite(rel) | ~np.isfinite(db)
    return CurveErrors(np.where(flagged, np.nan, rel), np.where(flagged, np.nan, db), flagged)
