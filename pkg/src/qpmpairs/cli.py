"""Command-line front end: one subcommand per service route.

Each command assembles a request from an optional JSON config file plus
flag overrides, sends it through the in-process service client (or a
remote ``--server``), and writes CSV/JSON outputs with a provenance
header (tool version, config hash, seed).  No command mutates its inputs,
and outputs are bit-identical across runs for a fixed seed.

Exit codes: 0 success, 1 validation error, 2 solver failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .client import IO, SOLVER, VALIDATION, ClientError, ServiceClient
from .entanglement import AngleSetting, CountRecord
from .formats import (
    FormatError,
    config_hash,
    load_crystal,
    read_count_records_csv,
    write_count_records_csv,
    write_curve_csv,
    write_json_report,
)
from .phasematching import TuningCurve

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_IO = 3


def _inline_crystal_doc(path: str) -> dict:
    """Read a crystal file and inline its Sellmeier references for the wire."""
    load_crystal(path)  # full validation with a path-specific message
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    base = Path(path).parent
    inlined = {}
    for axis, entry in doc.get("sellmeier", {}).items():
        if isinstance(entry, str):
            ref = Path(entry)
            if not ref.is_absolute():
                ref = base / ref
            inlined[axis] = json.loads(ref.read_text(encoding="utf-8"))
        else:
            inlined[axis] = entry
    doc["sellmeier"] = inlined
    return doc


def _load_config_section(config_path: str | None, section: str) -> dict:
    if not config_path:
        return {}
    try:
        doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{config_path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{config_path}: config must be a JSON object")
    sub = doc.get(section, doc)
    if not isinstance(sub, dict):
        raise FormatError(f"{config_path}: section {section!r} must be an object")
    return dict(sub)


def _provenance(command: str, payload: dict, seed: int | None = None) -> dict:
    prov = {
        "tool": f"qpmpairs {__version__}",
        "command": command,
        "config_sha256": config_hash(payload),
    }
    if seed is not None:
        prov["seed"] = seed
    return prov


def _curve_from_payload(doc: dict) -> TuningCurve:
    return TuningCurve(
        abscissa=np.array(doc["abscissa"], dtype=float),
        ordinate=np.array(doc["ordinate"], dtype=float),
        abscissa_label=doc["abscissa_label"],
        ordinate_label=doc["ordinate_label"],
        abscissa_unit=doc["abscissa_unit"],
        ordinate_unit=doc["ordinate_unit"],
        skipped=tuple(doc.get("skipped", [])),
    )


def _apply(payload: dict, key: str, value) -> None:
    if value is not None:
        payload[key] = value


# ---------------------------------------------------------------- commands


def cmd_pm_curve(args: argparse.Namespace, client: ServiceClient) -> int:
    payload = _load_config_section(args.config, "pm_curve")
    if args.crystal:
        payload["crystal"] = _inline_crystal_doc(args.crystal)
    _apply(payload, "fundamental_start_nm", args.start)
    _apply(payload, "fundamental_stop_nm", args.stop)
    _apply(payload, "step_nm", args.step)
    result = client.pm_curve(payload)
    curve = _curve_from_payload(result["curve"])
    out = Path(args.out or "pm_curve.csv")
    write_curve_csv(curve, out, provenance=_provenance("pm-curve", payload))
    print(f"pm-curve: {len(curve.abscissa)} rows -> {out}")
    if result.get("turning_point_nm") is not None:
        print(
            f"turning point: {result['turning_point_nm']:.1f} nm at "
            f"{result['turning_point_temperature_c']:.2f} C"
        )
    if curve.skipped:
        print(f"skipped (no in-bounds solution): {len(curve.skipped)} wavelengths")
    return EXIT_OK


def cmd_shg_sweep(args: argparse.Namespace, client: ServiceClient) -> int:
    payload = _load_config_section(args.config, "shg_sweep")
    if args.crystal:
        payload["crystal"] = _inline_crystal_doc(args.crystal)
    if args.fundamental:
        payload["fundamentals_nm"] = args.fundamental
    _apply(payload, "t_start_c", args.t_start)
    _apply(payload, "t_stop_c", args.t_stop)
    _apply(payload, "t_step_c", args.t_step)
    result = client.shg_sweep(payload)
    stem = Path(args.out or "shg_sweep")
    if stem.suffix == ".csv":
        stem = stem.with_suffix("")
    prov = _provenance("shg-sweep", payload)
    for curve_doc, summary in zip(result["curves"], result["summaries"]):
        curve = _curve_from_payload(curve_doc)
        fund = summary["fundamental_nm"]
        out = stem.with_name(f"{stem.name}_{fund:g}nm.csv")
        write_curve_csv(curve, out, provenance=prov)
        if summary["fwhm_c"] is not None:
            width = f"FWHM {summary['fwhm_c']:.1f} C"
        else:
            sides = []
            if summary["left_clamped"]:
                sides.append("left")
            if summary["right_clamped"]:
                sides.append("right")
            width = f"FWHM indeterminate ({'/'.join(sides)} half-max outside range)"
        print(
            f"shg-sweep {fund:g} nm: peak {summary['peak_value']:.4f} at "
            f"{summary['peak_temperature_c']:.2f} C, {width} -> {out}"
        )
    return EXIT_OK


def cmd_epm_find(args: argparse.Namespace, client: ServiceClient) -> int:
    payload = _load_config_section(args.config, "epm_find")
    if args.crystal:
        payload["crystal"] = _inline_crystal_doc(args.crystal)
    _apply(payload, "pump_scan_start_nm", args.scan_start)
    _apply(payload, "pump_scan_stop_nm", args.scan_stop)
    result = client.epm_find(payload)
    out = Path(args.out or "epm.json")
    write_json_report(result, out, provenance=_provenance("epm-find", payload))
    print(
        f"epm-find: pump {result['pump_wavelength_nm']:.3f} nm at "
        f"{result['temperature_c']:.2f} C -> {out}"
    )
    print(
        f"residuals: |dk| {abs(result['mismatch_rad_per_um']):.2e} rad/um, "
        f"group-index mismatch {abs(result['group_index_mismatch']):.2e}, "
        f"tuning slope {result['pm_curve_slope_c_per_nm']:.4f} C/nm"
    )
    return EXIT_OK


def cmd_bell_sim(args: argparse.Namespace, client: ServiceClient) -> int:
    payload = _load_config_section(args.config, "bell_sim")
    _apply(payload, "seed", args.seed)
    _apply(payload, "duration_s", args.duration)
    _apply(payload, "pump_power_mw", args.power)
    _apply(payload, "coherence", args.coherence)
    _apply(payload, "imbalance", args.imbalance)
    if args.power_sweep:
        payload["power_sweep_mw"] = [float(v) for v in args.power_sweep.split(",")]
    result = client.bell_sim(payload)
    base = Path(args.out or "bell_sim")
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    seed = payload.get("seed", 20120406)
    prov = _provenance("bell-sim", payload, seed=seed)
    records = [
        CountRecord(
            setting=AngleSetting(r["theta1_deg"], r["theta2_deg"]),
            coincidences=r["coincidences"],
            singles1_hz=r["singles1_hz"],
            singles2_hz=r["singles2_hz"],
            duration_s=r["duration_s"],
        )
        for r in result["records"]
    ]
    records_path = base.with_name(base.name + ".records.csv")
    analysis_path = base.with_name(base.name + ".analysis.json")
    write_count_records_csv(records, records_path, provenance=prov)
    analysis = result["analysis"]
    if result.get("power_sweep"):
        analysis = dict(analysis)
        analysis["power_sweep"] = result["power_sweep"]
    write_json_report(analysis, analysis_path, provenance=prov)
    raw = analysis["raw"]
    net = analysis["net_accidental"]
    print(f"bell-sim: {len(records)} records -> {records_path}")
    print(
        f"raw   |S| = {raw['S']:.4f} +/- {raw['sigma_S']:.4f} "
        f"({raw['significance']:.1f} sigma above 2)"
    )
    print(
        f"net   |S| = {net['S']:.4f} +/- {net['sigma_S']:.4f} "
        f"({net['significance']:.1f} sigma above 2) -> {analysis_path}"
    )
    if result.get("power_sweep"):
        print("power sweep (max/min fringe ratio):")
        for row in result["power_sweep"]:
            print(
                f"  {row['pump_power_mw']:8.1f} mW: rect {row['rect_max_min_ratio']:.2f}, "
                f"diag {row['diag_max_min_ratio']:.2f}"
            )
    return EXIT_OK


def cmd_chsh_analyze(args: argparse.Namespace, client: ServiceClient) -> int:
    payload = _load_config_section(args.config, "chsh_analyze")
    records = read_count_records_csv(args.records_csv)
    payload["records"] = [
        {
            "theta1_deg": r.setting.theta1_deg,
            "theta2_deg": r.setting.theta2_deg,
            "coincidences": r.coincidences,
            "duration_s": r.duration_s,
            "singles1_hz": r.singles1_hz,
            "singles2_hz": r.singles2_hz,
        }
        for r in records
    ]
    _apply(payload, "window_ns", args.window_ns)
    if (args.dark1 is None) != (args.dark2 is None):
        raise ValueError("--dark1 and --dark2 must be given together")
    if args.dark1 is not None and args.dark2 is not None:
        payload["dark_rates_hz"] = [args.dark1, args.dark2]
    result = client.chsh_analyze(payload)
    out = Path(args.out or "chsh_analysis.json")
    prov_payload = dict(payload)
    prov_payload["records"] = f"{len(records)} records from {args.records_csv}"
    write_json_report(result, out, provenance=_provenance("chsh-analyze", prov_payload))
    raw = result["raw"]
    print(
        f"chsh-analyze: |S| = {raw['S']:.4f} +/- {raw['sigma_S']:.4f} "
        f"({raw['significance']:.1f} sigma above 2) -> {out}"
    )
    return EXIT_OK


def cmd_rate_estimate(args: argparse.Namespace, client: ServiceClient) -> int:
    payload = _load_config_section(args.config, "rate_estimate")
    if args.crystal:
        payload["crystal"] = _inline_crystal_doc(args.crystal)
    _apply(payload, "detected_rate_hz", args.detected_hz)
    _apply(payload, "target_brightness_per_s_mw_nm", args.target_brightness)
    _apply(payload, "pump_power_mw", args.pump_power)
    _apply(payload, "bandwidth_nm", args.bandwidth)
    result = client.rate_estimate(payload)
    out = Path(args.out or "rate_estimate.json")
    write_json_report(result, out, provenance=_provenance("rate-estimate", payload))
    coll = result["collection_chain"]
    print(
        f"rate-estimate: collection path {coll['total_db']:.2f} dB "
        f"(transmission {coll['transmission']:.4f}) -> {out}"
    )
    if result.get("estimate"):
        print(f"brightness: {result['estimate']['rate_per_s_mw_nm']:.4g} / (s mW nm)")
    if result.get("variants"):
        print(f"accounting variants: {len(result['variants'])} rows in report")
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpmpairs",
        description="Photon-pair source toolkit: phase matching and Bell-test analysis.",
    )
    parser.add_argument("--version", action="version", version=f"qpmpairs {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (per-command section or flat)")
    common.add_argument("--out", help="output path (or stem for multi-file commands)")
    common.add_argument("--server", help="remote service URL (default: in-process)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pm-curve", parents=[common], help="phase-match temperature vs wavelength")
    p.add_argument("--crystal", help="crystal JSON file (default: bundled PPKTP)")
    p.add_argument("--start", type=float, help="fundamental range start, nm")
    p.add_argument("--stop", type=float, help="fundamental range stop, nm")
    p.add_argument("--step", type=float, help="grid step, nm")
    p.set_defaults(handler=cmd_pm_curve)

    p = sub.add_parser("shg-sweep", parents=[common], help="SHG power vs temperature curves")
    p.add_argument("--crystal", help="crystal JSON file")
    p.add_argument(
        "--fundamental", type=float, action="append", help="fundamental wavelength, nm (repeatable)"
    )
    p.add_argument("--t-start", type=float, help="temperature range start, C")
    p.add_argument("--t-stop", type=float, help="temperature range stop, C")
    p.add_argument("--t-step", type=float, help="temperature step, C")
    p.set_defaults(handler=cmd_shg_sweep)

    p = sub.add_parser("epm-find", parents=[common], help="locate the extended phase match point")
    p.add_argument("--crystal", help="crystal JSON file")
    p.add_argument("--scan-start", type=float, help="pump scan start, nm")
    p.add_argument("--scan-stop", type=float, help="pump scan stop, nm")
    p.set_defaults(handler=cmd_epm_find)

    p = sub.add_parser("bell-sim", parents=[common], help="simulate and analyze a Bell run")
    p.add_argument("--seed", type=int, help="Monte Carlo seed")
    p.add_argument("--duration", type=float, help="seconds per setting")
    p.add_argument("--power", type=float, help="pump power, mW")
    p.add_argument("--coherence", type=float, help="state coherence in [0, 1]")
    p.add_argument("--imbalance", type=float, help="population imbalance in [0, 1]")
    p.add_argument("--power-sweep", help="comma-separated pump powers for the ratio table, mW")
    p.set_defaults(handler=cmd_bell_sim)

    p = sub.add_parser("chsh-analyze", parents=[common], help="analyze an ingested count CSV")
    p.add_argument("records_csv", help="count-record CSV file")
    p.add_argument("--window-ns", type=float, help="coincidence gate window, ns")
    p.add_argument("--dark1", type=float, help="detector 1 dark rate, Hz")
    p.add_argument("--dark2", type=float, help="detector 2 dark rate, Hz")
    p.set_defaults(handler=cmd_chsh_analyze)

    p = sub.add_parser("rate-estimate", parents=[common], help="loss-chain brightness bookkeeping")
    p.add_argument("--crystal", help="crystal JSON file (for bandwidth default)")
    p.add_argument("--detected-hz", type=float, help="measured coincidence rate, Hz")
    p.add_argument(
        "--target-brightness", type=float, help="brightness to back-solve, per (s mW nm)"
    )
    p.add_argument("--pump-power", type=float, help="pump power, mW")
    p.add_argument("--bandwidth", type=float, help="bandwidth normalization, nm")
    p.set_defaults(handler=cmd_rate_estimate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with ServiceClient(server_url=args.server) as client:
            return args.handler(args, client)
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return {VALIDATION: EXIT_VALIDATION, SOLVER: EXIT_SOLVER, IO: EXIT_IO}[exc.category]
    except (FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
