"""Outdoor-to-indoor campaigns: FR2-only CPE versus WAB relay per indoor position.

An O2I scenario carries an ``o2i`` section::

    "o2i": {"positions": {"1": [x, y], ...},
            "case_duration_s": 10,
            "cases": [{"system": "fr2_only", "cpe": "1"},
                      {"system": "wab", "wab": "1", "ue": "3"}, ...]}

Each case reruns the base scenario with the nodes moved into place. Spectral
efficiency divides the mean e2e throughput by the bandwidth of the system
the UE actually uses: the FR2 carrier for the CPE, the FR1 carrier for WAB.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import InvalidScenario
from ..topology import NodeRole
from .scenario import Scenario
from .sim import MeasurementRecord, simulate


@dataclass(frozen=True)
class O2iCase:
    system: str  # "fr2_only" or "wab"
    ue_position: str
    wab_position: str | None = None

    @property
    def label(self) -> str:
        if self.system == "fr2_only":
            return f"fr2_only@{self.ue_position}"
        return f"wab{self.wab_position}-ue{self.ue_position}"


@dataclass(frozen=True)
class SeRow:
    case: O2iCase
    dl_bps: float
    ul_bps: float
    bandwidth_hz: float

    @property
    def dl_se(self) -> float:
        return self.dl_bps / self.bandwidth_hz

    @property
    def ul_se(self) -> float:
        return self.ul_bps / self.bandwidth_hz

    def to_dict(self) -> dict:
        return {
            "case": self.case.label,
            "system": self.case.system,
            "wab_position": self.case.wab_position,
            "ue_position": self.case.ue_position,
            "dl_bps": self.dl_bps,
            "ul_bps": self.ul_bps,
            "dl_se": self.dl_se,
            "ul_se": self.ul_se,
        }


def _section(scenario: Scenario) -> dict:
    sec = scenario.raw.get("o2i")
    if not isinstance(sec, dict):
        raise InvalidScenario("scenario has no o2i section", "o2i")
    return sec


def is_o2i(scenario: Scenario) -> bool:
    return isinstance(scenario.raw.get("o2i"), dict)


def positions(scenario: Scenario) -> dict[str, tuple[float, float]]:
    sec = _section(scenario)
    try:
        return {str(k): (float(v[0]), float(v[1])) for k, v in sec["positions"].items()}
    except (KeyError, TypeError, ValueError, IndexError):
        raise InvalidScenario("positions must map labels to [x, y]", "o2i.positions") from None


def cases(scenario: Scenario) -> list[O2iCase]:
    sec = _section(scenario)
    pos = positions(scenario)
    out = []
    for i, c in enumerate(sec.get("cases", [])):
        loc = f"o2i.cases[{i}]"
        system = c.get("system")
        if system == "fr2_only":
            case = O2iCase("fr2_only", str(c.get("cpe")))
        elif system == "wab":
            case = O2iCase("wab", str(c.get("ue")), str(c.get("wab")))
        else:
            raise InvalidScenario(f"unknown system {system!r}", f"{loc}.system")
        for p in (case.ue_position, case.wab_position):
            if p is not None and p not in pos:
                raise InvalidScenario(f"unknown position {p!r}", loc)
        out.append(case)
    return out


def case_scenario(scenario: Scenario, case: O2iCase) -> Scenario:
    """The base scenario with nodes placed for one case, and no mobility."""
    pos = positions(scenario)
    ue_xy = pos[case.ue_position]
    wab_xy = ue_xy if case.system == "fr2_only" else pos[case.wab_position]
    nodes = []
    for n in scenario.nodes:
        if n.role in (NodeRole.WAB_MT, NodeRole.WAB_GNB):
            n = replace(n, position=wab_xy)
        elif n.role is NodeRole.END_UE:
            n = replace(n, position=ue_xy)
        nodes.append(n)
    duration = float(_section(scenario).get("case_duration_s", scenario.duration_s))
    return replace(scenario, name=f"{scenario.name}:{case.label}", nodes=tuple(nodes), mobility={},
                   mode=case.system, duration_s=duration)


def run_case(scenario: Scenario, case: O2iCase) -> tuple[SeRow, list[MeasurementRecord]]:
    sc = case_scenario(scenario, case)
    records = simulate(sc).records
    bw = sc.fr2.bandwidth_hz if case.system == "fr2_only" else sc.fr1.bandwidth_hz
    dl = float(np.mean([r.e2e_dl_bps for r in records])) if records else 0.0
    ul = float(np.mean([r.e2e_ul_bps for r in records])) if records else 0.0
    return SeRow(case, dl, ul, bw), records


def run_campaign(scenario: Scenario) -> list[tuple[SeRow, list[MeasurementRecord]]]:
    return [run_case(scenario, c) for c in cases(scenario)]


def se_lookup(rows) -> dict[str, SeRow]:
    return {r.case.label: r for r in rows}
