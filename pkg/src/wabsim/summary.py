"""Run summaries and calibration targets, computed from exported record rows.

Everything here works on the flat row dicts produced by
``engine.records.read_csv`` / ``read_json`` so a summary can always be
recomputed from the files on disk.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .engine.records import read_csv, read_json
from .errors import MissingOutput

PEAK_RSRP_DBM = -83.0
PEAK_RSRP_TOL_DB = 2.0
LOS_DL_BPS = 50e6
LOS_DL_TOL = 0.20
UL_RANGE_BPS = (0.3e6, 3e6)
MIN_CORRELATION = 0.6
DROP_FRACTION = 0.5
MIN_DROP_BLER = 0.2


@dataclass
class RunSummary:
    scenario: str
    kind: str
    n_records: int
    mean_dl_bps: float
    peak_dl_bps: float
    mean_ul_bps: float
    peak_ul_bps: float
    peak_fr2_rsrp_dbm: float
    ssb_switches: int
    csirs_switches: int
    los_mean_dl_bps: float | None
    mean_fr2_mcs: float
    mean_fr1_mcs: float | None
    outage_floor_dbm: float = -110.0
    se_table: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> RunSummary:
        return cls(**d)

    def table(self) -> str:
        lines = [
            f"scenario            {self.scenario} ({self.kind}, {self.n_records} ticks)",
            f"e2e DL mean / peak  {self.mean_dl_bps / 1e6:8.2f} / {self.peak_dl_bps / 1e6:8.2f} Mbit/s",
            f"e2e UL mean / peak  {self.mean_ul_bps / 1e6:8.2f} / {self.peak_ul_bps / 1e6:8.2f} Mbit/s",
            f"peak FR2 RSRP       {self.peak_fr2_rsrp_dbm:8.2f} dBm",
            f"beam switches       SSB {self.ssb_switches}, CSI-RS {self.csirs_switches}",
        ]
        if self.los_mean_dl_bps is not None:
            lines.append(f"LOS mean e2e DL     {self.los_mean_dl_bps / 1e6:8.2f} Mbit/s")
        if self.se_table:
            lines.append("case              DL SE    UL SE  (bit/s/Hz)")
            for row in self.se_table:
                lines.append(f"{row['case']:16} {row['dl_se']:7.3f} {row['ul_se']:8.4f}")
        return "\n".join(lines)


def switch_counts(rows) -> tuple[int, int]:
    ssb = csirs = 0
    for prev, cur in zip(rows, rows[1:]):
        if cur["ssb"] != prev["ssb"]:
            ssb += 1
        if (cur["ssb"], cur["csirs"]) != (prev["ssb"], prev["csirs"]):
            csirs += 1
    return ssb, csirs


def summarize(rows, name: str, kind: str = "vehicular", outage_floor_dbm: float = -110.0,
              se_table=()) -> RunSummary:
    if not rows:
        raise MissingOutput("no records to summarise")
    dl = np.array([r["e2e_dl"] for r in rows])
    ul = np.array([r["e2e_ul"] for r in rows])
    los_dl = [r["e2e_dl"] for r in rows if r["los"] == "Los"]
    fr1 = [r["fr1_mcs"] for r in rows if r["fr1_mcs"] is not None]
    ssb, csirs = switch_counts(rows)
    return RunSummary(
        scenario=name,
        kind=kind,
        n_records=len(rows),
        mean_dl_bps=float(dl.mean()),
        peak_dl_bps=float(dl.max()),
        mean_ul_bps=float(ul.mean()),
        peak_ul_bps=float(ul.max()),
        peak_fr2_rsrp_dbm=float(max(r["fr2_rsrp"] for r in rows)),
        ssb_switches=ssb,
        csirs_switches=csirs,
        los_mean_dl_bps=float(np.mean(los_dl)) if los_dl else None,
        mean_fr2_mcs=float(np.mean([r["fr2_mcs"] for r in rows])),
        mean_fr1_mcs=float(np.mean(fr1)) if fr1 else None,
        outage_floor_dbm=outage_floor_dbm,
        se_table=list(se_table),
    )


# targets ---------------------------------------------------------------------------


@dataclass
class TargetResult:
    name: str
    passed: bool
    value: object
    expected: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value} (expected {self.expected})"


def _deep_nlos(label: str) -> bool:
    return label.startswith("Nlos") and label[4:].isdigit() and int(label[4:]) >= 2


def first_drop_index(rows, los_mean: float) -> int | None:
    """First tick after the first LOS tick where e2e DL falls below half the LOS mean."""
    start = next((i for i, r in enumerate(rows) if r["los"] == "Los"), None)
    if start is None:
        return None
    for i in range(start, len(rows)):
        if rows[i]["e2e_dl"] < DROP_FRACTION * los_mean:
            return i
    return None


def vehicular_targets(rows, outage_floor_dbm: float = -110.0) -> list[TargetResult]:
    out = []
    peak = max(r["fr2_rsrp"] for r in rows)
    out.append(TargetResult("peak_fr2_rsrp_dbm", abs(peak - PEAK_RSRP_DBM) <= PEAK_RSRP_TOL_DB,
                            round(peak, 3), f"{PEAK_RSRP_DBM} +/- {PEAK_RSRP_TOL_DB}"))
    los = [r["e2e_dl"] for r in rows if r["los"] == "Los"]
    los_mean = float(np.mean(los)) if los else 0.0
    lo, hi = LOS_DL_BPS * (1 - LOS_DL_TOL), LOS_DL_BPS * (1 + LOS_DL_TOL)
    out.append(TargetResult("los_mean_dl_bps", bool(los) and lo <= los_mean <= hi,
                            round(los_mean, 1), f"[{lo:.0f}, {hi:.0f}]"))
    ul = float(np.mean([r["e2e_ul"] for r in rows]))
    out.append(TargetResult("mean_ul_bps", UL_RANGE_BPS[0] <= ul <= UL_RANGE_BPS[1],
                            round(ul, 1), f"[{UL_RANGE_BPS[0]:.0f}, {UL_RANGE_BPS[1]:.0f}]"))
    deep = [r["e2e_dl"] for r in rows if _deep_nlos(r["los"])]
    out.append(TargetResult("deep_nlos_dl_zero", bool(deep) and min(deep) == 0.0,
                            min(deep) if deep else None, "0 somewhere in deep NLOS"))
    rs = np.array([r["fr2_rsrp"] for r in rows])
    dl = np.array([r["e2e_dl"] for r in rows])
    r_val = float(np.corrcoef(rs, dl)[0, 1]) if dl.std() > 0 and rs.std() > 0 else math.nan
    out.append(TargetResult("rsrp_dl_correlation", r_val > MIN_CORRELATION, round(r_val, 4),
                            f"> {MIN_CORRELATION}"))
    i = first_drop_index(rows, los_mean) if los else None
    if i is None:
        out.append(TargetResult("bler_precedence", False, None, "a drop below half the LOS mean"))
    else:
        row = rows[i]
        ok = row["fr2_bler"] > MIN_DROP_BLER and row["fr2_rsrp"] > outage_floor_dbm
        out.append(TargetResult("bler_precedence", ok,
                                {"t": row["t"], "fr2_bler": round(row["fr2_bler"], 4),
                                 "fr2_rsrp": round(row["fr2_rsrp"], 2)},
                                f"BLER > {MIN_DROP_BLER} with RSRP > {outage_floor_dbm}"))
    return out


def o2i_targets(se_table) -> list[TargetResult]:
    se = {r["case"]: r for r in se_table}

    def get(label, key):
        return se[label][key] if label in se else None

    out = []
    for p in ("1", "2"):
        a, b = get(f"fr2_only@{p}", "dl_se"), get(f"wab1-ue{p}", "dl_se")
        out.append(TargetResult(f"fr2_dl_beats_wab_at_{p}", a is not None and b is not None and a > b,
                                {"fr2_only": a, "wab": b}, "fr2_only > wab"))
    for p in ("3", "5"):
        a, b = get(f"wab1-ue{p}", "ul_se"), get(f"fr2_only@{p}", "ul_se")
        out.append(TargetResult(f"wab_ul_matches_fr2_at_{p}", a is not None and b is not None and a >= b,
                                {"wab": a, "fr2_only": b}, "wab >= fr2_only"))
    for key in ("dl_se", "ul_se"):
        base = get("wab1-ue5", key)
        for p in ("2", "4"):
            moved = get(f"wab{p}-ue5", key)
            out.append(TargetResult(f"relocation_{p}_raises_{key}",
                                    base is not None and moved is not None and moved > base,
                                    {"wab1": base, f"wab{p}": moved}, "strictly higher"))
    return out


# output directory -------------------------------------------------------------------


def load_rows(out_dir) -> list[dict]:
    d = Path(out_dir)
    if (d / "records.csv").is_file():
        return read_csv(d / "records.csv")
    if (d / "records.json").is_file():
        return read_json(d / "records.json")
    raise MissingOutput(f"no records.csv or records.json in {d}")


def load_summary(out_dir) -> RunSummary:
    p = Path(out_dir) / "summary.json"
    if not p.is_file():
        raise MissingOutput(f"no summary.json in {out_dir}")
    return RunSummary.from_dict(json.loads(p.read_text()))


def calibrate_check(out_dir) -> list[TargetResult]:
    """Evaluate every applicable target and write ``calibration.json``."""
    summary = load_summary(out_dir)
    rows = load_rows(out_dir)
    if summary.kind == "o2i":
        results = o2i_targets(summary.se_table)
    else:
        results = vehicular_targets(rows, summary.outage_floor_dbm)
    doc = {
        "scenario": summary.scenario,
        "passed": all(r.passed for r in results),
        "targets": [asdict(r) for r in results],
    }
    (Path(out_dir) / "calibration.json").write_text(json.dumps(doc, indent=1, default=str) + "\n")
    return results
