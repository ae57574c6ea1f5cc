"""Audit report assembly, deterministic serialization and curve export.

Reports are JSON first: nested group/threshold/type cells plus input
digests and the configuration echo, serialized with sorted keys and
shortest round-trip float formatting so identical inputs and flags yield
byte-identical files. CSV is a flat, lossy convenience export of the
cell table.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from typing import Optional

from . import __version__
from .association import AGGREGATE_NAMES, TYPE_NAMES, AssociationReport, ReportCell
from .geodiversity import GeoReport
from .model import GroupKey, ValidationError
from .retrieval import RetrievalReport

TOOL_NAME = "fairaudit"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_report(
    indicator: str,
    inputs: dict,
    config: dict,
    payload: dict,
    created_at: Optional[str] = None,
) -> dict:
    """Assemble the envelope around an indicator payload.

    ``inputs`` maps a role name to a file path; each is digested. The
    timestamp is caller-supplied (normally via --timestamp) and defaults
    to null so reports stay byte-reproducible.
    """
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "indicator": indicator,
        "created_at": created_at,
        "inputs": {
            role: {"path": str(path), "sha256": file_digest(path)}
            for role, path in sorted(inputs.items())
        },
        "config": config,
        "payload": payload,
    }


def to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(to_json(report))


# ---------------------------------------------------------------- payloads

def association_payload(report: AssociationReport) -> dict:
    cells = []
    for group in report.groups():
        for type_name in TYPE_NAMES:
            for tau in report.thresholds:
                cell = report.cells[(group, type_name, tau)]
                cells.append(
                    {
                        "group": str(group),
                        "type": type_name,
                        "threshold": tau,
                        "hit_count": cell.hit_count,
                        "group_size": cell.group_size,
                        "rate": cell.rate,
                    }
                )
    return {
        "dataset": report.dataset,
        "thresholds": list(report.thresholds),
        "group_by": list(report.group_specs),
        "cells": cells,
    }


def association_report_from_payload(payload: dict) -> AssociationReport:
    report = AssociationReport(
        dataset=payload["dataset"],
        thresholds=tuple(payload["thresholds"]),
        group_specs=tuple(payload["group_by"]),
    )
    for c in payload["cells"]:
        key = (GroupKey.parse(c["group"]), c["type"], c["threshold"])
        report.cells[key] = ReportCell(c["hit_count"], c["group_size"])
    return report


def geo_payload(report: GeoReport) -> dict:
    cells = []
    for key in sorted(report.cells, key=str):
        cell = report.cells[key]
        cells.append(
            {
                "group": str(key),
                "mean_hit_rate": cell.mean_hit_rate,
                "household_count": cell.household_count,
                "ci_low": cell.ci_low,
                "ci_high": cell.ci_high,
            }
        )
    return {
        "group_by": list(report.group_specs),
        "cells": cells,
        "warnings": list(report.warnings),
    }


def retrieval_payload(report: RetrievalReport) -> dict:
    cells = []
    for key, k in sorted(report.cells, key=lambda gk: (str(gk[0]), gk[1])):
        cell = report.cells[(key, k)]
        cells.append(
            {
                "group": str(key),
                "k": k,
                "mean_precision": cell.mean_precision,
                "query_count": cell.query_count,
            }
        )
    return {
        "match_attribute": report.match_attribute,
        "ks": list(report.ks),
        "stratify_by": list(report.stratify_specs),
        "cells": cells,
        "excluded": [
            {"group": str(key), "query_count": report.excluded[key]}
            for key in sorted(report.excluded, key=str)
        ],
        "warnings": list(report.warnings),
    }


# ------------------------------------------------------------------ curves

@dataclass
class CurveSeries:
    group: GroupKey
    type_name: str
    points: list  # (tau, rate) sorted by tau


def emit_curves(report: AssociationReport) -> list:
    """One threshold-sweep series per (group, Harmful/NonHarmful).

    Requires at least two thresholds; groups without members are skipped
    (their rates are undefined at every threshold).
    """
    if len(report.thresholds) < 2:
        raise ValidationError("curve emission needs a report covering >= 2 thresholds")
    series = []
    for group in report.groups():
        for agg in AGGREGATE_NAMES:
            points = report.series(group, agg)
            if any(rate is None for _, rate in points):
                continue
            series.append(CurveSeries(group, agg, points))
    return series


def curves_to_csv(series: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group", "type", "tau", "rate"])
    for s in series:
        for tau, rate in s.points:
            writer.writerow([str(s.group), s.type_name, tau, rate])
    return buf.getvalue()


def curves_to_json(series: list) -> list:
    return [
        {"group": str(s.group), "type": s.type_name, "points": [[t, r] for t, r in s.points]}
        for s in series
    ]


# ------------------------------------------------------------- CSV exports

def _csv_table(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def payload_to_csv(indicator: str, payload: dict) -> str:
    """Flatten an indicator payload's cells to a delimited table."""
    cells = payload["cells"]
    if indicator == "indicator1":
        header = ["group", "type", "threshold", "hit_count", "group_size", "rate"]
    elif indicator == "indicator2":
        header = ["group", "mean_hit_rate", "household_count", "ci_low", "ci_high"]
    elif indicator == "indicator3":
        header = ["group", "k", "mean_precision", "query_count"]
    else:
        raise ValidationError(f"no CSV export for indicator {indicator!r}")
    rows = [[c[h] for h in header] for c in cells]
    return _csv_table(header, rows)
