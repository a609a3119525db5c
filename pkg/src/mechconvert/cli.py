"""Command-line front end.

Exit codes: 0 success, 1 usage, 2 infeasible design target, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .design import DesignTarget, solve
from .errors import FitError, InfeasibleError, ParameterError
from .estimation import fit_lorentzian, infer_bath
from .io import json_text, atomic_write_text, read_table, rows_to_columns, sha256_file, write_table
from .model import ConverterParams, DriveConfig, derive_rates, drive_for_cooperativity, load_device
from .noise import NoiseSpectrum, floor_from_noise_temperature, output_noise_spectrum, synthesize_spectrum
from .scattering import (
    SWEEP_COOPERATIVITY_COLUMNS,
    SWEEP_RATIO_COLUMNS,
    sweep_cooperativity,
    sweep_ratio,
    trace,
)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_DATA = 0, 1, 2, 3



class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _provenance(argv, device_path=None, **extra) -> dict:
    prov = {"tool": "mechconvert", "version": __version__, "command": list(argv)}
    if device_path is not None:
        prov["device_sha256"] = sha256_file(device_path)
    prov.update(extra)
    return prov


def _load_device(args) -> tuple[ConverterParams, DriveConfig | None]:
    try:
        params, drive = load_device(args.device)
    except FileNotFoundError:
        raise DataError(f"device file not found: {args.device}") from None
    except (json.JSONDecodeError, ParameterError, TypeError, ValueError) as exc:
        raise DataError(f"invalid device file {args.device}: {exc}") from None
    try:
        params = params.with_eta(getattr(args, "eta1", None), getattr(args, "eta2", None))
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    return params, drive


def _logspace(lo, hi, n, name):
    if n is None or n < 1:
        raise UsageError(f"--points must be >= 1 (empty {name} sweep)")
    if not (lo > 0 and hi >= lo):
        raise UsageError(f"need 0 < {name} min <= max, got {lo!r}, {hi!r}")
    return np.logspace(np.log10(lo), np.log10(hi), n) if n > 1 else np.array([lo])


def cmd_sweep(args, argv) -> int:
    params, _ = _load_device(args)
    out = Path(args.out)
    if args.mode == "cooperativity":
        grid = _logspace(args.c_total_min, args.c_total_max, args.points, "c-total")
        if args.c_total:
            if not all(c >= 0 for c in args.c_total):
                raise UsageError("--c-total values must be >= 0")
            grid = np.unique(np.concatenate([grid, args.c_total]))
        rows = sweep_cooperativity(params, grid)
        cols = rows_to_columns(rows, SWEEP_COOPERATIVITY_COLUMNS)
        extra = {"c_total_min": args.c_total_min, "c_total_max": args.c_total_max}
    elif args.mode == "ratio":
        if args.c1_fixed is None or not args.c1_fixed > 0:
            raise UsageError("--mode ratio needs --c1-fixed > 0")
        grid = _logspace(args.ratio_min, args.ratio_max, args.points, "ratio")
        rows = sweep_ratio(params, args.c1_fixed, grid)
        cols = rows_to_columns(rows, SWEEP_RATIO_COLUMNS)
        extra = {"c1_fixed": args.c1_fixed}
    else:
        if not args.c_total or len(args.c_total) != 1:
            raise UsageError("--mode detuning needs exactly one --c-total")
        if args.points is None or args.points < 2:
            raise UsageError("--mode detuning needs --points >= 2")
        ct = args.c_total[0]
        rates = derive_rates(params, drive_for_cooperativity(params, ct / 2, ct / 2))
        half = args.span if args.span is not None else 2.0 * rates.Gamma_total
        tr = trace(params, rates, -half, half, args.points)
        cols = tr.columns()
        extra = {"c_total": ct, "rates": rates.to_dict()}
    sidecar = {
        "mode": args.mode,
        "device": params.to_dict(),
        "provenance": _provenance(argv, args.device),
        **extra,
    }
    path, _ = write_table(out / f"sweep_{args.mode}.csv", cols, sidecar)
    print(f"wrote {path} ({len(next(iter(cols.values())))} rows)")
    return EXIT_OK


def cmd_spectrum(args, argv) -> int:
    params, _ = _load_device(args)
    if not args.c_total:
        raise UsageError("give at least one --c-total")
    if args.floor_quanta is not None and args.t_noise_k is not None:
        raise UsageError("--floor-quanta and --t-noise-k are exclusive")
    if args.synthesize and args.seed is None:
        raise UsageError("--synthesize requires --seed")
    if args.points is None or args.points < 8:
        raise UsageError("--points must be >= 8")
    cav = params.cavity(args.cavity)
    if args.floor_quanta is not None:
        floor = args.floor_quanta
    else:
        t_noise = args.t_noise_k if args.t_noise_k is not None else cav.t_noise
        floor = floor_from_noise_temperature(t_noise, cav.f_c) if t_noise is not None else 0.0
    n_th = args.n_th if args.n_th is not None else params.mech.n_th
    out = Path(args.out)
    for ct in args.c_total:
        if not ct >= 0:
            raise UsageError(f"--c-total must be >= 0, got {ct!r}")
        rates = derive_rates(params, drive_for_cooperativity(params, ct / 2, ct / 2))
        half = args.span if args.span is not None else 5.0 * rates.Gamma_total
        grid = np.linspace(-half, half, args.points)
        spec = output_noise_spectrum(params, rates, args.cavity, n_th, floor, grid)
        if args.synthesize:
            spec = synthesize_spectrum(spec, args.n_avg, args.seed)
        sidecar = {
            "c_total": ct,
            **spec.metadata(),
            "device": params.to_dict(),
            "provenance": _provenance(argv, args.device, seed=args.seed),
        }
        path, _ = write_table(out / f"spectrum_c{ct:g}.csv", {"delta_hz": spec.delta, "quanta": spec.quanta}, sidecar)
        print(f"wrote {path}  floor={floor:.4g} quanta  Gamma={rates.Gamma_total:.4g} Hz")
    return EXIT_OK


def cmd_fit(args, argv) -> int:
    out = Path(args.out)
    summary = []
    failed = 0
    for name in args.spectra:
        src = Path(name)
        try:
            cols, meta = read_table(src)
            spec = NoiseSpectrum.from_columns(cols["delta_hz"], cols["quanta"], meta)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                fit = fit_lorentzian(spec)
                record = {"source": src.name, "fit": fit.to_record()}
                if spec.rates is not None and spec.eta1 is not None and spec.which_cavity is not None:
                    bath = infer_bath(fit, spec.rates, spec.eta1, spec.eta2, spec.which_cavity)
                    record["bath"] = bath
                    summary.append(
                        {
                            "c_total": spec.rates.C1 + spec.rates.C2,
                            "fwhm_hz": fit.fwhm,
                            "peak": fit.peak,
                            "n_add": bath["n_add"],
                            "n_m": bath["n_m"],
                            "n_th": bath["n_th"],
                            "low_snr": fit.low_snr,
                        }
                    )
            record["warnings"] = [str(w.message) for w in caught]
        except (OSError, KeyError, ValueError, FitError) as exc:
            failed += 1
            print(f"error: {src}: {exc}", file=sys.stderr)
            continue
        record["provenance"] = _provenance(argv, None, input_sha256=sha256_file(src))
        dest = out / f"fit_{src.stem}.json"
        atomic_write_text(dest, json_text(record))
        print(f"wrote {dest}")
    if summary:
        summary.sort(key=lambda r: r["c_total"])
        cols = rows_to_columns(summary, ("c_total", "fwhm_hz", "peak", "n_add", "n_m", "n_th", "low_snr"))
        path, _ = write_table(out / "fit_summary.csv", cols, {"provenance": _provenance(argv)})
        print(f"wrote {path}")
    return EXIT_DATA if failed else EXIT_OK


def cmd_design(args, argv) -> int:
    params, _ = _load_device(args)
    if args.target is not None:
        try:
            d = json.loads(Path(args.target).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read target {args.target}: {exc}") from None
    else:
        d = {}
    for key in ("bandwidth_hz", "transmission_sq", "split_t_sq", "c1_fixed", "max_drive_photons", "eta1", "eta2"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    try:
        target = DesignTarget.from_dict(d)
    except (ParameterError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    base = {"target": target.to_dict(), "device": params.to_dict(), "provenance": _provenance(argv, args.device)}
    try:
        sols = solve(params, target)
    except InfeasibleError as exc:
        result = {**base, "feasible": False, "reason": str(exc), "max_achievable": exc.max_achievable}
        atomic_write_text(out / "design.json", json_text(result))
        print(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    result = {**base, "feasible": all(s.feasible for s in sols), "solutions": [s.to_dict() for s in sols]}
    atomic_write_text(out / "design.json", json_text(result))
    for s in sols:
        tag = f"[{s.label}] " if s.label else ""
        print(
            f"{tag}C1={s.rates.C1:.6g} C2={s.rates.C2:.6g} (C2/C1={s.rates.C2 / s.rates.C1 if s.rates.C1 else float('nan'):.6g})"
            f"  n1={s.drive.n1:.4g} n2={s.drive.n2:.4g}  |t|^2={s.t_sq:.4f} |r1|^2={s.r1_sq:.4f} |r2|^2={s.r2_sq:.4f}"
            f"  Gamma={s.gamma_total:.5g} Hz  P1={s.pump_power_w[0]:.3g} W P2={s.pump_power_w[1]:.3g} W"
        )
        for w in s.flags.get("warnings", []):
            print(f"  warning: {w}")
    print(json_text(result["solutions"]), end="")
    return EXIT_OK if result["feasible"] else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mechconvert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def device_opts(sp, eta=True):
        sp.add_argument("--device", required=True, help="device JSON (cavity1, cavity2, mech)")
        sp.add_argument("--out", default=".", help="output directory")
        if eta:
            sp.add_argument("--eta1", type=float, help="override cavity-1 coupling efficiency")
            sp.add_argument("--eta2", type=float, help="override cavity-2 coupling efficiency")

    s = sub.add_parser("sweep", help="on-resonance or detuning sweeps of the scattering parameters")
    device_opts(s)
    s.add_argument("--mode", choices=("cooperativity", "ratio", "detuning"), default="cooperativity")
    s.add_argument("--points", type=int, default=200, help="grid points")
    s.add_argument("--c-total-min", type=float, default=1.0, help="log grid start")
    s.add_argument("--c-total-max", type=float, default=3000.0, help="log grid end")
    s.add_argument("--c1-fixed", type=float, help="fixed C1 for --mode ratio")
    s.add_argument("--ratio-min", type=float, default=1e-3, help="C2/C1 log grid start")
    s.add_argument("--ratio-max", type=float, default=10.0, help="C2/C1 log grid end")
    s.add_argument("--c-total", type=float, action="append", help="extra grid point (cooperativity mode, repeatable) or the operating point (detuning mode)")
    s.add_argument("--span", type=float, help="half-width of the detuning grid [Hz]")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("spectrum", help="noise spectra emitted by one cavity")
    device_opts(s)
    s.add_argument("--c-total", type=float, action="append", help="total cooperativity, balanced (repeatable)")
    s.add_argument("--cavity", type=int, choices=(1, 2), default=1, help="emitting cavity")
    s.add_argument("--n-th", type=float, help="bath occupancy (default: device value)")
    s.add_argument("--floor-quanta", type=float, help="measurement noise floor [quanta]")
    s.add_argument("--t-noise-k", type=float, help="system noise temperature [K] converted to a floor (default: device value)")
    s.add_argument("--span", type=float, help="half-width of the grid [Hz] (default 5 Gamma)")
    s.add_argument("--points", type=int, default=4001, help="grid points")
    s.add_argument("--synthesize", action="store_true", help="add radiometer noise")
    s.add_argument("--n-avg", type=float, default=1e4, help="number of averaged traces; sets the scatter")
    s.add_argument("--seed", type=int, help="RNG seed, required with --synthesize")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("fit", help="Lorentzian fits and bath inference for spectrum CSVs")
    s.add_argument("spectra", nargs="+", help="spectrum CSV files (sidecar JSON read if present)")
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("design", help="solve for drives meeting a target")
    device_opts(s)
    s.add_argument("--target", help="DesignTarget JSON file")
    s.add_argument("--bandwidth-hz", type=float, help="target conversion bandwidth [Hz]")
    s.add_argument("--transmission-sq", type=float, help="target |t|^2 with balanced drives")
    s.add_argument("--split-t-sq", type=float, help="target |t|^2 at fixed C1 (beam splitter)")
    s.add_argument("--c1-fixed", type=float, help="cavity-1 cooperativity held fixed")
    s.add_argument("--max-drive-photons", type=float, help="cap on intracavity pump photons")
    s.set_defaults(func=cmd_design)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"mechconvert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"mechconvert: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParameterError as exc:
        print(f"mechconvert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
