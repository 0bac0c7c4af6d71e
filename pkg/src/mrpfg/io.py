"""CSV and text formats for records, spectra, lifted FRFs, gain curves and models.

Floats are written with 17 significant digits so files round-trip exactly and
identical inputs give byte-identical files.

State-space text grammar (one ``key: values`` entry per line, ``#`` starts a
comment, keys in any order)::

    rate: fast | slow
    ts: <sampling time in s>
    n: <state dimension>
    A: <n*n numbers, row-major>
    B: <n numbers>
    C: <n numbers>
    D: <one number>
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from mrpfg.errors import InvalidInputError
from mrpfg.lifting import LiftedFrf
from mrpfg.lti import StateSpaceModel
from mrpfg.pfg import PfgCurve

SIGNAL_HEADER = ["index", "real", "imag"]
SPECTRUM_HEADER = ["index", "freq_hz", "real", "imag"]
LIFTED_HEADER = ["k", "freq_hz", "row", "col", "real", "imag"]
TRANSIENT_HEADER = ["k", "row", "real", "imag"]
PFG_HEADER = ["k", "freq_hz", "value", "value_db", "provenance", "flag"]
DIAGNOSTICS_HEADER = ["k", "freq_hz", "condition", "flag"]
WELCH_HEADER = ["freq_hz", "psd", "cps"]


def fmt(x: float) -> str:
    return "nan" if np.isnan(x) else repr(float(x))


def write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty file") from None
        if got != header:
            raise InvalidInputError(f"{path}: expected header {header}, got {got}")
        return list(reader)


def write_signal_csv(path, x):
    x = np.asarray(x, dtype=complex)
    write_rows(path, SIGNAL_HEADER, ([n, fmt(v.real), fmt(v.imag)] for n, v in enumerate(x)))


def read_signal_csv(path) -> np.ndarray:
    """Samples of a signal CSV; real-valued when every imaginary part is zero."""
    rows = _read(path, SIGNAL_HEADER)
    x = np.array([complex(float(r[1]), float(r[2])) for r in rows])
    idx = [int(r[0]) for r in rows]
    if idx != list(range(len(rows))):
        raise InvalidInputError(f"{path}: indices are not 0..{len(rows) - 1}")
    return x.real.copy() if not np.any(x.imag) else x


def write_spectrum_csv(path, X, ts: float):
    X = np.asarray(X, dtype=complex)
    n = X.shape[0]
    write_rows(
        path,
        SPECTRUM_HEADER,
        ([k, fmt(k / (n * ts)), fmt(v.real), fmt(v.imag)] for k, v in enumerate(X)),
    )


def read_spectrum_csv(path) -> np.ndarray:
    rows = _read(path, SPECTRUM_HEADER)
    return np.array([complex(float(r[2]), float(r[3])) for r in rows])


def write_lifted_frf_csv(frf_path, transient_path, frf: LiftedFrf):
    """Matrix entries ``(k, row, col)`` and transient entries ``(k, row)``, rows/cols 0-based."""
    freq = frf.freq_hz()
    F = frf.fac

    def mrows():
        for k in range(frf.n_bins):
            for i in range(F):
                for j in range(F):
                    v = frf.mhat[k, i, j]
                    yield [k, fmt(freq[k]), i, j, fmt(v.real), fmt(v.imag)]

    def trows():
        for k in range(frf.n_bins):
            for i in range(F):
                v = frf.that[k, i]
                yield [k, i, fmt(v.real), fmt(v.imag)]

    write_rows(frf_path, LIFTED_HEADER, mrows())
    if transient_path is not None:
        write_rows(transient_path, TRANSIENT_HEADER, trows())


def read_lifted_frf_csv(frf_path, transient_path=None, tsh: float | None = None) -> LiftedFrf:
    """Rebuild a ``LiftedFrf``; bins with NaN entries are marked flagged."""
    rows = _read(frf_path, LIFTED_HEADER)
    k = np.array([int(r[0]) for r in rows])
    i = np.array([int(r[2]) for r in rows])
    j = np.array([int(r[3]) for r in rows])
    v = np.array([complex(float(r[4]), float(r[5])) for r in rows])
    n, F = k.max() + 1, i.max() + 1
    if len(rows) != n * F * F:
        raise InvalidInputError(f"{frf_path}: expected {n * F * F} rows, got {len(rows)}")
    mhat = np.empty((n, F, F), dtype=complex)
    mhat[k, i, j] = v
    that = np.zeros((n, F), dtype=complex)
    if transient_path is not None:
        trows = _read(transient_path, TRANSIENT_HEADER)
        tk = np.array([int(r[0]) for r in trows])
        ti = np.array([int(r[1]) for r in trows])
        that[tk, ti] = [complex(float(r[2]), float(r[3])) for r in trows]
    if tsh is None:
        freq1 = float(rows[F * F][1]) if n > 1 else 1.0
        tsh = 1.0 / (n * freq1)
    flagged = ~np.all(np.isfinite(mhat.reshape(n, -1)), axis=1)
    return LiftedFrf(mhat, that, np.zeros(n), np.full(n, np.nan), flagged, tsh)


def write_pfg_csv(path, curve: PfgCurve):
    db = curve.db()
    write_rows(
        path,
        PFG_HEADER,
        (
            [k, fmt(curve.freq_hz[k]), fmt(curve.values[k]), fmt(db[k]), curve.provenance, int(curve.flagged[k])]
            for k in range(len(curve))
        ),
    )


def read_pfg_csv(path) -> PfgCurve:
    rows = _read(path, PFG_HEADER)
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    prov = {r[4] for r in rows}
    if len(prov) != 1:
        raise InvalidInputError(f"{path}: mixed provenance {sorted(prov)}")
    return PfgCurve(
        values=np.array([float(r[2]) for r in rows]),
        freq_hz=np.array([float(r[1]) for r in rows]),
        provenance=prov.pop(),
        flagged=np.array([r[5] == "1" for r in rows]),
    )


def write_diagnostics_csv(path, frf: LiftedFrf):
    freq = frf.freq_hz()
    write_rows(
        path,
        DIAGNOSTICS_HEADER,
        ([k, fmt(freq[k]), fmt(frf.condition[k]), int(frf.flagged[k])] for k in range(frf.n_bins)),
    )


def write_welch_csv(path, freq_hz, psd, cps):
    write_rows(path, WELCH_HEADER, ([fmt(f), fmt(p), fmt(c)] for f, p, c in zip(freq_hz, psd, cps)))


def write_statespace(path, sys: StateSpaceModel):
    n = sys.order
    lines = [
        f"rate: {sys.rate}",
        f"ts: {fmt(sys.ts)}",
        f"n: {n}",
        "A: " + " ".join(fmt(v) for v in sys.A.ravel()),
        "B: " + " ".join(fmt(v) for v in sys.B.ravel()),
        "C: " + " ".join(fmt(v) for v in sys.C.ravel()),
        f"D: {fmt(sys.D[0, 0])}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_statespace(path) -> StateSpaceModel:
    """Parse the state-space text grammar; errors name the offending line."""
    entries = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition(":")
        key = key.strip()
        if not sep or key not in ("rate", "ts", "n", "A", "B", "C", "D"):
            raise InvalidInputError(f"{path}:{lineno}: expected 'key: values', got {raw!r}")
        if key in entries:
            raise InvalidInputError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = (lineno, val.split())
    missing = {"ts", "n", "D"} - entries.keys()
    if missing:
        raise InvalidInputError(f"{path}: missing keys {sorted(missing)}")

    def nums(key, count):
        lineno, vals = entries.get(key, (0, []))
        try:
            out = [float(v) for v in vals]
        except ValueError:
            raise InvalidInputError(f"{path}:{lineno}: non-numeric value in {key}") from None
        if len(out) != count:
            raise InvalidInputError(f"{path}:{lineno}: {key} needs {count} numbers, got {len(out)}")
        return np.array(out)

    n = int(nums("n", 1)[0])
    rate = entries.get("rate", (0, ["fast"]))[1]
    return StateSpaceModel(
        nums("A", n * n).reshape(n, n),
        nums("B", n).reshape(n, 1),
        nums("C", n).reshape(1, n),
        nums("D", 1).reshape(1, 1),
        ts=float(nums("ts", 1)[0]),
        rate=rate[0] if rate else "fast",
    )
