"""Measurement record export: CSV rows, JSON documents and a JSON-lines event log."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ..radio import Indoor, Los, Nlos

CSV_COLUMNS = (
    "t", "x", "y", "fr2_rsrp", "fr2_sinr", "fr2_mcs", "fr2_bler",
    "fr1_mcs", "fr1_bler", "e2e_dl", "e2e_ul", "ssb", "csirs",
)
# appended after the fixed block so segment statistics survive a CSV round trip
EXTRA_COLUMNS = ("los", "degraded")

_INT_COLUMNS = {"fr2_mcs", "fr1_mcs", "ssb", "csirs"}


def los_label(los) -> str:
    if isinstance(los, Los):
        return "Los"
    if isinstance(los, Nlos):
        return f"Nlos{los.obstruction_count}"
    if isinstance(los, Indoor):
        return "Indoor"
    return str(los)


def _num(v) -> str:
    return "" if v is None else repr(v)


def record_row(rec) -> dict:
    return {
        "t": repr(rec.t),
        "x": repr(float(rec.position[0])),
        "y": repr(float(rec.position[1])),
        "fr2_rsrp": repr(rec.fr2.rsrp_dbm),
        "fr2_sinr": repr(rec.fr2.sinr_db),
        "fr2_mcs": str(rec.fr2.mcs),
        "fr2_bler": repr(rec.fr2.bler),
        "fr1_mcs": _num(rec.fr1.mcs if rec.fr1 else None),
        "fr1_bler": _num(rec.fr1.bler if rec.fr1 else None),
        "e2e_dl": repr(rec.e2e_dl_bps),
        "e2e_ul": repr(rec.e2e_ul_bps),
        "ssb": str(rec.fr2.serving_ssb),
        "csirs": str(rec.fr2.serving_csirs),
        "los": los_label(rec.fr2.los),
        "degraded": "1" if rec.degraded else "0",
    }


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS + EXTRA_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rec in records:
            w.writerow(record_row(rec))


def read_csv(path) -> list[dict]:
    """Rows as dicts of floats/ints (None for empty cells, strings for labels)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                if k == "los":
                    parsed[k] = v
                elif v == "" or v is None:
                    parsed[k] = None
                elif k in _INT_COLUMNS or k == "degraded":
                    parsed[k] = int(v)
                else:
                    parsed[k] = float(v)
            out.append(parsed)
    return out


def write_json(records, path, **meta) -> None:
    doc = {**meta, "records": [r.to_dict() for r in records]}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_json(path) -> list[dict]:
    """JSON records flattened to the CSV row shape."""
    doc = json.loads(Path(path).read_text())
    rows = []
    for r in doc["records"]:
        fr1 = r.get("fr1") or {}
        los = r["fr2"]["los"]
        label = los["kind"]
        if label == "Nlos":
            label = f"Nlos{los['obstruction_count']}"
        rows.append({
            "t": r["t"], "x": r["position"][0], "y": r["position"][1],
            "fr2_rsrp": r["fr2"]["rsrp_dbm"], "fr2_sinr": r["fr2"]["sinr_db"],
            "fr2_mcs": r["fr2"]["mcs"], "fr2_bler": r["fr2"]["bler"],
            "fr1_mcs": fr1.get("mcs"), "fr1_bler": fr1.get("bler"),
            "e2e_dl": r["e2e_dl_bps"], "e2e_ul": r["e2e_ul_bps"],
            "ssb": r["fr2"]["serving_ssb"], "csirs": r["fr2"]["serving_csirs"],
            "los": label, "degraded": int(r["degraded"]),
        })
    return rows


def write_events(events, path) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(json.dumps(e, sort_keys=True, default=str) + "\n")
