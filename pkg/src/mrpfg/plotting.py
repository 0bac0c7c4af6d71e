"""Figures for the CLI reports, rendered off-screen to image files."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (7.0, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
    "legend.fontsize": 8,
    "font.size": 9,
    "savefig.bbox": "tight",
}

_COLORS = {
    "analytic": "k",
    "oracle": "0.4",
    "identified": "tab:blue",
    "baseline": "tab:red",
    "sensitivity": "tab:green",
}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_pfg(curves, path, sensitivity=None, nyquist_hz=None, labels=None):
    """Overlay PFG curves in dB against frequency.

    ``sensitivity`` is drawn on its own (slow) grid. ``nyquist_hz`` marks the
    slow Nyquist frequency with a dashed line.
    """
    labels = labels or [c.provenance for c in curves]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for c, lab in zip(curves, labels):
            ax.plot(c.freq_hz, c.db(), color=_COLORS.get(c.provenance), label=lab)
        if sensitivity is not None:
            ax.plot(sensitivity.freq_hz, sensitivity.db(), "--", color=_COLORS["sensitivity"],
                    label="slow-rate sensitivity")
        if nyquist_hz is not None:
            ax.axvline(nyquist_hz, color="0.5", ls=":", lw=0.8)
        top = max(c.freq_hz[-1] for c in curves) / 2
        ax.set_xlim(0, top)
        ax.set_xlabel("frequency [Hz]")
        ax.set_ylabel("PFG [dB]")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_cps(fast, slow, path, labels=("fast rate", "slow rate")):
    """Cumulative power spectra of the fast and slow outputs.

    ``fast`` and ``slow`` are ``(freq_hz, cps)`` pairs.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for (f, c), lab in zip((fast, slow), labels):
            ax.step(f, c, where="post", label=lab)
        ax.set_xlabel("frequency [Hz]")
        ax.set_ylabel("cumulative power")
        ax.set_ylim(bottom=0, top=1.05 * np.max(np.concatenate([fast[1], slow[1]])) or 1.0)
        ax.legend(loc="lower right")
        return _save(fig, path)
