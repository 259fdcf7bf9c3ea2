"""File formats: coefficient/crystal JSON, curve and count-record CSV, reports.

All readers tolerate ``#``-prefixed comment lines, all writers emit UTF-8,
and numeric fields are written with ``repr`` so a write/read cycle is
lossless.  Malformed documents raise :class:`FormatError` naming the
offending key so CLI diagnostics can point at the problem.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .budget import LossChain, LossElement
from .dispersion import Axis, SellmeierModel, ThermalTerm
from .entanglement import AngleSetting, CountRecord
from .phasematching import CrystalSpec, TuningCurve

__all__ = [
    "FormatError",
    "load_sellmeier_model",
    "sellmeier_model_from_dict",
    "load_crystal",
    "crystal_from_dict",
    "default_crystal",
    "packaged_data_path",
    "write_curve_csv",
    "read_curve_csv",
    "write_count_records_csv",
    "read_count_records_csv",
    "load_loss_chain",
    "write_json_report",
    "config_hash",
]


class FormatError(ValueError):
    """A document is syntactically or semantically malformed."""


def _require(doc: dict, key: str, context: str) -> Any:
    if key not in doc:
        raise FormatError(f"{context}: missing required key {key!r}")
    return doc[key]


def _pair(value: Any, key: str, context: str) -> tuple[float, float]:
    try:
        lo, hi = value
        return float(lo), float(hi)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{context}: key {key!r} must be a [lo, hi] pair") from exc


def sellmeier_model_from_dict(doc: dict, context: str = "sellmeier model") -> SellmeierModel:
    """Build a SellmeierModel from its JSON document form."""
    if not isinstance(doc, dict):
        raise FormatError(f"{context}: expected an object")
    axis_raw = _require(doc, "axis", context)
    try:
        axis = Axis(axis_raw)
    except ValueError:
        raise FormatError(f"{context}: key 'axis' must be 'y' or 'z', got {axis_raw!r}") from None
    coefficients = _require(doc, "coefficients", context)
    if not isinstance(coefficients, dict):
        raise FormatError(f"{context}: key 'coefficients' must be a name->number map")
    try:
        coefficients = {str(k): float(v) for k, v in coefficients.items()}
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{context}: key 'coefficients' holds a non-numeric value") from exc
    thermal_raw = doc.get("thermal", [])
    terms = []
    for i, t in enumerate(thermal_raw):
        try:
            terms.append(
                ThermalTerm(
                    lambda_power=int(t["lambda_power"]),
                    dT_power=int(t["dT_power"]),
                    value=float(t["value"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(
                f"{context}: key 'thermal'[{i}] needs lambda_power, dT_power, value"
            ) from exc
    try:
        return SellmeierModel(
            axis=axis,
            form_id=str(_require(doc, "form_id", context)),
            coefficients=coefficients,
            thermal=tuple(terms),
            reference_temperature_c=float(
                _require(doc, "reference_temperature_c", context)
            ),
            valid_lambda_um=_pair(
                _require(doc, "valid_lambda_um", context), "valid_lambda_um", context
            ),
            valid_temp_c=_pair(_require(doc, "valid_temp_c", context), "valid_temp_c", context),
            source_citation=str(doc.get("source_citation", "")),
        )
    except ValueError as exc:
        raise FormatError(f"{context}: {exc}") from exc


def load_sellmeier_model(path: Path | str) -> SellmeierModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    return sellmeier_model_from_dict(doc, context=str(path))


def crystal_from_dict(doc: dict, base_dir: Path | None = None, context: str = "crystal") -> CrystalSpec:
    """Build a CrystalSpec; 'sellmeier' entries may be file paths or inline objects."""
    if not isinstance(doc, dict):
        raise FormatError(f"{context}: expected an object")
    # Validate scalar keys before touching referenced files, so a malformed
    # document is reported by key name rather than by a dangling path.
    try:
        length_mm = float(_require(doc, "length_mm", context))
        poling_um = float(_require(doc, "poling_period_um", context))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{context}: length_mm/poling_period_um must be numbers") from exc
    bounds = _pair(
        _require(doc, "temperature_bounds_c", context), "temperature_bounds_c", context
    )
    axes_doc = _require(doc, "axes", context)
    axes = {}
    for role in ("pump", "signal", "idler"):
        raw = _require(axes_doc, role, f"{context}: key 'axes'")
        try:
            axes[role] = Axis(raw)
        except ValueError:
            raise FormatError(
                f"{context}: key 'axes.{role}' must be 'y' or 'z', got {raw!r}"
            ) from None
    sell_doc = _require(doc, "sellmeier", context)
    models: dict[Axis, SellmeierModel] = {}
    for axis_name, entry in sell_doc.items():
        try:
            axis = Axis(axis_name)
        except ValueError:
            raise FormatError(
                f"{context}: key 'sellmeier' has unknown axis {axis_name!r}"
            ) from None
        if isinstance(entry, str):
            ref = Path(entry)
            if not ref.is_absolute():
                if base_dir is None:
                    raise FormatError(
                        f"{context}: key 'sellmeier.{axis_name}' is a relative path "
                        f"but no base directory is known"
                    )
                ref = base_dir / ref
            model = load_sellmeier_model(ref)
        elif isinstance(entry, dict):
            model = sellmeier_model_from_dict(entry, context=f"{context}: sellmeier.{axis_name}")
        else:
            raise FormatError(
                f"{context}: key 'sellmeier.{axis_name}' must be a path or inline object"
            )
        if model.axis != axis:
            raise FormatError(
                f"{context}: key 'sellmeier.{axis_name}' points at a model for "
                f"axis {model.axis.value!r}"
            )
        models[axis] = model
    try:
        return CrystalSpec(
            length_mm=length_mm,
            poling_period_um=poling_um,
            pump_axis=axes["pump"],
            signal_axis=axes["signal"],
            idler_axis=axes["idler"],
            models=models,
            temperature_bounds_c=bounds,
        )
    except ValueError as exc:
        raise FormatError(f"{context}: {exc}") from exc


def load_crystal(path: Path | str) -> CrystalSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    return crystal_from_dict(doc, base_dir=path.parent, context=str(path))


def packaged_data_path(name: str) -> Path:
    """Filesystem path of a bundled data file."""
    return Path(str(resources.files("qpmpairs").joinpath("data", name)))


def default_crystal() -> CrystalSpec:
    """The bundled 10 mm / 46.2 um type-II PPKTP crystal."""
    return load_crystal(packaged_data_path("ppktp_type2_telecom.json"))


def _provenance_lines(provenance: dict | None) -> list[str]:
    if not provenance:
        return []
    return [f"# {key}: {value}" for key, value in provenance.items()]


def write_curve_csv(curve: TuningCurve, path: Path | str, provenance: dict | None = None) -> None:
    """Write a TuningCurve as `abscissa,ordinate` CSV with a units comment."""
    path = Path(path)
    lines = _provenance_lines(provenance)
    lines.append(f"# units: {curve.abscissa_unit},{curve.ordinate_unit}")
    lines.append(f"# labels: {curve.abscissa_label},{curve.ordinate_label}")
    if curve.skipped:
        lines.append("# skipped: " + ",".join(repr(v) for v in curve.skipped))
    lines.append("abscissa,ordinate")
    for a, o in zip(curve.abscissa, curve.ordinate):
        lines.append(f"{float(a)!r},{float(o)!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_curve_csv(path: Path | str) -> TuningCurve:
    path = Path(path)
    units = ["", ""]
    labels = ["abscissa", "ordinate"]
    skipped: tuple[float, ...] = ()
    rows: list[tuple[float, float]] = []
    header_seen = False
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("units:"):
                units = [u.strip() for u in body[len("units:"):].split(",", 1)]
            elif body.startswith("labels:"):
                labels = [u.strip() for u in body[len("labels:"):].split(",", 1)]
            elif body.startswith("skipped:"):
                skipped = tuple(float(v) for v in body[len("skipped:"):].split(",") if v.strip())
            continue
        if not header_seen:
            if line != "abscissa,ordinate":
                raise FormatError(f"{path}: expected header 'abscissa,ordinate', got {line!r}")
            header_seen = True
            continue
        try:
            a_str, o_str = line.split(",")
            rows.append((float(a_str), float(o_str)))
        except ValueError as exc:
            raise FormatError(f"{path}: bad data row {line!r}") from exc
    if not header_seen or not rows:
        raise FormatError(f"{path}: no curve data found")
    a, o = zip(*rows)
    return TuningCurve(
        abscissa=np.array(a),
        ordinate=np.array(o),
        abscissa_label=labels[0],
        ordinate_label=labels[1] if len(labels) > 1 else "ordinate",
        abscissa_unit=units[0],
        ordinate_unit=units[1] if len(units) > 1 else "",
        skipped=skipped,
    )


COUNT_CSV_HEADER = "theta1_deg,theta2_deg,coincidences,duration_s,singles1_hz,singles2_hz"


def write_count_records_csv(
    records: Sequence[CountRecord], path: Path | str, provenance: dict | None = None
) -> None:
    """Write count records in the canonical six-column CSV layout."""
    path = Path(path)
    lines = _provenance_lines(provenance)
    lines.append(COUNT_CSV_HEADER)
    for r in records:
        lines.append(
            f"{r.setting.theta1_deg!r},{r.setting.theta2_deg!r},"
            f"{r.coincidences!r},{r.duration_s!r},{r.singles1_hz!r},{r.singles2_hz!r}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_count_records_csv(path: Path | str) -> list[CountRecord]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    data_lines = [
        ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not data_lines:
        raise FormatError(f"{path}: empty count-record file")
    reader = csv.DictReader(io.StringIO("\n".join(data_lines)))
    expected = COUNT_CSV_HEADER.split(",")
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
        raise FormatError(
            f"{path}: expected header {COUNT_CSV_HEADER!r}, got {data_lines[0]!r}"
        )
    records = []
    for i, row in enumerate(reader):
        try:
            records.append(
                CountRecord(
                    setting=AngleSetting(float(row["theta1_deg"]), float(row["theta2_deg"])),
                    coincidences=float(row["coincidences"]),
                    duration_s=float(row["duration_s"]),
                    singles1_hz=float(row["singles1_hz"]),
                    singles2_hz=float(row["singles2_hz"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}: bad record on data row {i + 1}: {exc}") from exc
    return records


def load_loss_chain(path: Path | str) -> LossChain:
    """Read a loss chain: a JSON array of {"label", "loss_db"} objects."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise FormatError(f"{path}: expected a JSON array of loss elements")
    elements = []
    for i, entry in enumerate(doc):
        try:
            elements.append(LossElement(str(entry["label"]), float(entry["loss_db"])))
        except (TypeError, KeyError, ValueError) as exc:
            raise FormatError(f"{path}: element {i} needs 'label' and numeric 'loss_db'") from exc
    return LossChain(tuple(elements))


def write_json_report(report: dict, path: Path | str, provenance: dict | None = None) -> None:
    path = Path(path)
    doc = dict(report)
    if provenance:
        doc["provenance"] = provenance
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def config_hash(config: dict) -> str:
    """Stable sha256 of a JSON-serializable config, for provenance headers."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
