"""Command-line runner: simulate, identify, analytic, compare, cps and run.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure,
4 tolerance failure (``compare --assert``).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from mrpfg import io
from mrpfg.analysis import cps as cumulative
from mrpfg.analysis import welch_psd
from mrpfg.config import ExperimentConfig, Tolerances, load_config
from mrpfg.errors import EvaluationError, InstabilityError, InvalidInputError
from mrpfg.localmodel import identify_direct_baseline, identify_lifted_frf
from mrpfg.lti import simulate_multirate_loop
from mrpfg.pfg import PfgCurve, curve_errors, pfg_analytic, pfg_from_lifted, slow_rate_sensitivity
from mrpfg.signals import downsample, multisine

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_TOLERANCE = 4


class ToleranceFailure(Exception):
    pass


def _log(msg: str):
    print(msg, file=sys.stderr)


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> dict:
    """Excite the loop with the configured multisine and write the records."""
    rate, ex, sim = cfg.rate, cfg.excitation, cfg.simulation
    loop = cfg.build_loop()
    w = multisine(rate, ex.band, ex.amplitude, ex.seed)
    rec = simulate_multirate_loop(loop, w, sim.n_settle_periods, sim.divergence_threshold)
    out.mkdir(parents=True, exist_ok=True)
    io.write_signal_csv(out / "w.csv", w)
    for name in ("z", "u", "y"):
        io.write_signal_csv(out / f"{name}.csv", rec[name])
    io.write_statespace(out / "controller.ss", loop.controller)
    manifest = {
        "seed": ex.seed,
        "band": list(ex.band) if ex.band else None,
        "amplitude": ex.amplitude,
        "plant": cfg.plant_id(),
        "fsh": rate.fsh,
        "fsl": rate.fsl,
        "fac": rate.fac,
        "n_fast": rate.n_fast,
        "m_slow": rate.m_slow,
        "n_settle_periods": sim.n_settle_periods,
        "files": ["w.csv", "z.csv", "u.csv", "y.csv", "controller.ss"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _log(f"simulate: wrote {rate.n_fast}-sample records to {out}")
    return {"w": w, **rec}


def cmd_identify(cfg: ExperimentConfig, w_path, z_path, out: Path, baseline: bool = False):
    """Lifted local-model identification and its PFG, optionally with the single-rate baseline."""
    w = io.read_signal_csv(w_path)
    z = io.read_signal_csv(z_path)
    rate = cfg.rate
    if w.shape != z.shape:
        raise InvalidInputError(f"w has {w.shape[0]} samples but z has {z.shape[0]}")
    if w.shape[0] != rate.n_fast:
        raise InvalidInputError(f"records have {w.shape[0]} samples, config says n_fast={rate.n_fast}")
    frf = identify_lifted_frf(w, z, rate.fac, cfg.local_model, rate.tsh)
    pfg = pfg_from_lifted(frf)
    out.mkdir(parents=True, exist_ok=True)
    io.write_lifted_frf_csv(out / "lifted_frf.csv", out / "transient.csv", frf)
    io.write_diagnostics_csv(out / "diagnostics.csv", frf)
    io.write_pfg_csv(out / "pfg_identified.csv", pfg)
    _log(f"identify: {int(frf.flagged.sum())} of {frf.n_bins} bins flagged")
    result = {"frf": frf, "pfg": pfg}
    if baseline:
        est, flagged = identify_direct_baseline(w, z, cfg.local_model, rate.tsh)
        base = PfgCurve(np.abs(est), rate.freq_hz(), "baseline", flagged)
        io.write_pfg_csv(out / "pfg_baseline.csv", base)
        result["baseline"] = base
    return result


def cmd_analytic(cfg: ExperimentConfig, out: Path):
    """Exact PFG and slow-rate sensitivity of the configured loop."""
    loop = cfg.build_loop()
    pfg = pfg_analytic(loop)
    sens = slow_rate_sensitivity(loop)
    out.mkdir(parents=True, exist_ok=True)
    io.write_pfg_csv(out / "pfg_analytic.csv", pfg)
    io.write_pfg_csv(out / "sensitivity.csv", sens)
    return {"pfg": pfg, "sensitivity": sens}


def cmd_compare(
    reference: Path,
    others: list[Path],
    tol: Tolerances,
    out: Path | None = None,
    sensitivity: Path | None = None,
    check: bool = False,
    plot: bool = False,
    nyquist_hz: float | None = None,
):
    """Per-bin errors of each curve against ``reference``; returns the summary rows."""
    ref = io.read_pfg_csv(reference)
    curves = [io.read_pfg_csv(p) for p in others]
    sens = io.read_pfg_csv(sensitivity) if sensitivity else None
    rows, per_bin = [], []
    failed = []
    for path, c in zip(others, curves):
        if len(c) != len(ref):
            raise InvalidInputError(f"{path}: {len(c)} bins, reference has {len(ref)}")
        err = curve_errors(ref, c)
        s = err.summary()
        ok = (
            s["median_rel"] < tol.median_rel
            and s["p95_rel"] < tol.p95_rel
            and s["flagged_frac"] < tol.max_flagged_frac
        )
        if not ok:
            failed.append(str(path))
        rows.append({"curve": Path(path).name, "provenance": c.provenance, **s, "pass": ok})
        per_bin.append((Path(path).name, err))
    if sens is not None:
        # overlay only: the slow-rate sensitivity lives on the first M bins
        err = curve_errors(ref, sens)
        rows.append({"curve": Path(sensitivity).name, "provenance": sens.provenance,
                     **err.summary(), "pass": None})
    for r in rows:
        verdict = "-" if r["pass"] is None else ("PASS" if r["pass"] else "FAIL")
        _log(
            f"{r['curve']}: median {r['median_rel']:.3e} p95 {r['p95_rel']:.3e} "
            f"max {r['max_rel']:.3e} rel, median {r['median_abs_db']:.3e} dB, "
            f"max {r['max_abs_db']:.3e} dB, flagged {r['flagged_frac']:.4f} {verdict}"
        )
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        keys = ["curve", "provenance", "median_rel", "p95_rel", "max_rel",
                "median_abs_db", "max_abs_db", "flagged_frac", "pass"]
        io.write_rows(
            out / "compare_summary.csv",
            keys,
            ([r[k] if k in ("curve", "provenance") else
              ("" if r[k] is None else int(r[k])) if k == "pass" else io.fmt(r[k])
              for k in keys] for r in rows),
        )
        io.write_rows(
            out / "compare_errors.csv",
            ["k", "freq_hz", "curve", "rel_err", "db_err", "flag"],
            ([k, io.fmt(ref.freq_hz[k]), name, io.fmt(e.rel[k]), io.fmt(e.db[k]), int(e.flagged[k])]
             for name, e in per_bin for k in range(len(ref))),
        )
        if plot:
            from mrpfg.plotting import plot_pfg

            plot_pfg([ref, *curves], out / "compare.png", sens, nyquist_hz,
                     labels=[Path(p).stem for p in (reference, *others)])
    if check and failed:
        raise ToleranceFailure(f"tolerances exceeded for {', '.join(failed)}")
    return rows


def cmd_cps(cfg: ExperimentConfig, out: Path, plot: bool = False):
    """Fast- and slow-rate cumulative power spectra of ``z`` under a single cosine."""
    rate, sim, wc = cfg.rate, cfg.simulation, cfg.welch
    loop = cfg.build_loop()
    k = rate.bin_of(2 * np.pi * cfg.cps.excitation_hz)
    n = np.arange(rate.n_fast)
    w = cfg.cps.amplitude * np.cos(2 * np.pi * k * n / rate.n_fast)
    z = simulate_multirate_loop(loop, w, sim.n_settle_periods, sim.divergence_threshold)["z"]
    zl = downsample(z, rate.fac)
    seg_fast = wc.segment_len
    seg_slow = None if seg_fast is None else max(seg_fast // rate.fac, 2)
    fast = welch_psd(z, rate.fsh, seg_fast, wc.overlap_frac, wc.window)
    slow = welch_psd(zl, rate.fsl, seg_slow, wc.overlap_frac, wc.window)
    cf, cs = cumulative(fast.psd, fast.f_r), cumulative(slow.psd, slow.f_r)
    out.mkdir(parents=True, exist_ok=True)
    io.write_welch_csv(out / "cps_fast.csv", fast.freq_hz, fast.psd, cf)
    io.write_welch_csv(out / "cps_slow.csv", slow.freq_hz, slow.psd, cs)
    _log(f"cps: final fast {cf[-1]:.6g}, slow {cs[-1]:.6g} at {cfg.cps.excitation_hz:g} Hz")
    if plot:
        from mrpfg.plotting import plot_cps

        plot_cps((fast.freq_hz, cf), (slow.freq_hz, cs), out / "cps.png")
    return {"fast": (fast.freq_hz, cf), "slow": (slow.freq_hz, cs)}


def cmd_run(cfg: ExperimentConfig, out: Path, check: bool = False, plot: bool = False):
    """simulate, identify with baseline, analytic and compare in one go."""
    cmd_simulate(cfg, out / "records")
    cmd_identify(cfg, out / "records" / "w.csv", out / "records" / "z.csv", out / "identify", True)
    cmd_analytic(cfg, out / "analytic")
    return cmd_compare(
        out / "analytic" / "pfg_analytic.csv",
        [out / "identify" / "pfg_identified.csv"],
        cfg.tolerances,
        out / "compare",
        out / "analytic" / "sensitivity.csv",
        check,
        plot,
        cfg.rate.fsl / 2,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrpfg",
        description="Identify the performance frequency gain of multirate sampled-data loops.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="excite the loop and write w, z, u, y records")
    p.add_argument("config", type=Path)
    p.add_argument("-o", "--out", type=Path, default=Path("records"))

    p = sub.add_parser("identify", help="lifted identification from w and z records")
    p.add_argument("config", type=Path)
    p.add_argument("w", type=Path, help="excitation CSV")
    p.add_argument("z", type=Path, help="performance output CSV")
    p.add_argument("-o", "--out", type=Path, default=Path("identify"))
    p.add_argument("--baseline", action="store_true",
                   help="also write the single-rate estimate to pfg_baseline.csv")

    p = sub.add_parser("analytic", help="exact PFG and slow-rate sensitivity")
    p.add_argument("config", type=Path)
    p.add_argument("-o", "--out", type=Path, default=Path("analytic"))

    p = sub.add_parser("compare", help="errors of PFG curves against a reference curve")
    p.add_argument("reference", type=Path)
    p.add_argument("curves", type=Path, nargs="+")
    p.add_argument("--sensitivity", type=Path, help="slow-rate sensitivity CSV to overlay")
    p.add_argument("--config", type=Path, help="read tolerances from this config")
    p.add_argument("-o", "--out", type=Path, default=None)
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit with code 4 when a tolerance is exceeded")
    p.add_argument("--plot", action="store_true", help="write compare.png (needs --out)")

    p = sub.add_parser("cps", help="fast and slow cumulative power spectra under a cosine")
    p.add_argument("config", type=Path)
    p.add_argument("-o", "--out", type=Path, default=Path("cps"))
    p.add_argument("--plot", action="store_true")

    p = sub.add_parser("run", help="simulate, identify, analytic and compare")
    p.add_argument("config", type=Path)
    p.add_argument("-o", "--out", type=Path, default=Path("run"))
    p.add_argument("--assert", dest="check", action="store_true")
    p.add_argument("--plot", action="store_true")
    return parser


def _dispatch(args) -> None:
    if args.command == "compare":
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        nyq = cfg.rate.fsl / 2 if args.config else None
        if args.plot and args.out is None:
            raise InvalidInputError("--plot needs --out")
        cmd_compare(args.reference, args.curves, cfg.tolerances, args.out,
                    args.sensitivity, args.check, args.plot, nyq)
        return
    cfg = load_config(args.config)
    if args.command == "simulate":
        cmd_simulate(cfg, args.out)
    elif args.command == "identify":
        cmd_identify(cfg, args.w, args.z, args.out, args.baseline)
    elif args.command == "analytic":
        cmd_analytic(cfg, args.out)
    elif args.command == "cps":
        cmd_cps(cfg, args.out, args.plot)
    elif args.command == "run":
        cmd_run(cfg, args.out, args.check, args.plot)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except ToleranceFailure as exc:
        _log(f"error: {exc}")
        return EXIT_TOLERANCE
    except (InvalidInputError, FileNotFoundError) as exc:
        _log(f"error: {exc}")
        return EXIT_CONFIG
    except (EvaluationError, InstabilityError, np.linalg.LinAlgError) as exc:
        _log(f"numerical failure: {exc}")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
