"""Tabular exports: per-sample traffic and utilization, plus reference diffing.

The traffic table has one row per snapshot and one column per vehicle
slot (Tr_A1..Tr_A5, Tr_G1..Tr_G3, Tr_MCC). A bundled reference table
for the golden scenario ships with the package; comparing a computed
table against it yields cell-level diffs, and known divergences carry an
explanatory note in the reference file itself.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from pathlib import Path
from typing import Optional

from .sim import Trace

_SLOTS = ["UAV1", "UAV2", "UAV3", "UAV4", "UAV5", "UGV1", "UGV2", "UGV3"]
_SHORT = {name: name[1] + name[3] for name in _SLOTS}  # UAV1 -> A1, UGV2 -> G2

TRAFFIC_COLUMNS = ["tc", "time"] + [f"Tr_{_SHORT[n]}" for n in _SLOTS] + ["Tr_MCC"]
UTILIZATION_COLUMNS = ["tc", "time"] + [f"U_{_SHORT[n]}" for n in _SLOTS]


def _time_cell(at) -> object:
    return int(at) if getattr(at, "denominator", 1) == 1 else float(at)


def traffic_rows(trace: Trace) -> list[dict]:
    rows = []
    for i, snap in enumerate(trace.snapshots(), start=1):
        traffic = snap.payload["traffic"]
        row = {"tc": i, "time": _time_cell(snap.at)}
        for name in _SLOTS:
            row[f"Tr_{_SHORT[name]}"] = int(traffic.get(name, 0))
        row["Tr_MCC"] = int(traffic.get("MCC", 0))
        rows.append(row)
    return rows


def utilization_rows(trace: Trace) -> list[dict]:
    rows = []
    for i, snap in enumerate(trace.snapshots(), start=1):
        utils = snap.payload["utilizations"]
        row = {"tc": i, "time": _time_cell(snap.at)}
        for name in _SLOTS:
            value = utils.get(name)
            row[f"U_{_SHORT[name]}"] = None if value is None else round(float(value), 3)
        rows.append(row)
    return rows


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row[k]) for k in columns})
    return out.getvalue()


def rows_from_csv(text: str, columns: list[str]) -> list[dict]:
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for key in columns:
            cell = raw.get(key, "")
            if cell == "" or cell is None:
                row[key] = None
            else:
                number = float(cell)
                row[key] = int(number) if number.is_integer() else number
        rows.append(row)
    return rows


def load_reference_traffic() -> dict:
    """The bundled reference table (rows plus annotated known divergences)."""
    text = resources.files("uvfsim").joinpath("data/reference_traffic.json").read_text()
    return json.loads(text)


def compare_traffic(rows: list[dict], reference: Optional[dict] = None) -> list[dict]:
    """Cell-level diffs against the reference, joined on (tc, time).

    Each diff carries computed and reference values; when the reference
    file annotates the cell, the note is attached.
    """
    if reference is None:
        reference = load_reference_traffic()
    annotations = {
        (a["tc"], a["column"]): a["note"] for a in reference.get("annotations", [])
    }
    by_key = {(r["tc"], r["time"]): r for r in reference["rows"]}
    diffs = []
    for row in rows:
        ref = by_key.get((row["tc"], row["time"]))
        if ref is None:
            continue
        for column in TRAFFIC_COLUMNS[2:]:
            if row[column] != ref[column]:
                diff = {
                    "tc": row["tc"],
                    "time": row["time"],
                    "column": column,
                    "computed": row[column],
                    "reference": ref[column],
                }
                note = annotations.get((row["tc"], column))
                if note is not None:
                    diff["note"] = note
                diffs.append(diff)
    return diffs


def export_metrics(trace: Trace, out_dir, fmt: str = "csv") -> dict[str, Path]:
    """Write traffic/utilization tables (and erratum diffs when comparable)."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    traffic = traffic_rows(trace)
    utilization = utilization_rows(trace)
    if fmt == "csv":
        written["traffic"] = out_dir / "traffic.csv"
        written["traffic"].write_text(rows_to_csv(traffic, TRAFFIC_COLUMNS))
        written["utilization"] = out_dir / "utilization.csv"
        written["utilization"].write_text(rows_to_csv(utilization, UTILIZATION_COLUMNS))
    else:
        written["traffic"] = out_dir / "traffic.json"
        written["traffic"].write_text(json.dumps(traffic, indent=2, sort_keys=True))
        written["utilization"] = out_dir / "utilization.json"
        written["utilization"].write_text(json.dumps(utilization, indent=2, sort_keys=True))

    diffs = compare_traffic(traffic)
    if diffs:
        written["erratum"] = out_dir / "erratum.json"
        written["erratum"].write_text(json.dumps(diffs, indent=2, sort_keys=True))
    return written
