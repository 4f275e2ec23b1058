"""Deterministic tick-driven simulation on top of a time-ordered event queue.

Every tick enqueues position updates, radio measurements, handover checks,
session signalling and a traffic sample. Events at the same instant are
handled in ``EventKind`` order, then by node id. All randomness comes from
one generator seeded by the scenario.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidScenario, NoSession, WabError
from ..radio import (
    BeamJitter,
    Direction,
    LinkState,
    Los,
    adapt,
    beam_gain,
    bearing,
    link_throughput,
    path_loss,
    rsrp,
    select_beam,
    sinr,
)
from ..topology import (
    NetworkState,
    Node,
    NodeRole,
    SessionState,
    WabNodeState,
    attach_ue,
    handover_wab_mt,
    integrate_wab_node,
    mark_backhaul_loss,
    restore_backhaul,
)
from .geometry import los_state
from .scenario import Follow, Scenario, Trace

log = logging.getLogger(__name__)

DL, UL = Direction.DL, Direction.UL


class EventKind(enum.IntEnum):
    TICK = 0
    POSITION_UPDATE = 1
    MEASUREMENT = 2
    HANDOVER_TRIGGER = 3
    SESSION_SIGNAL = 4
    TRAFFIC_SAMPLE = 5


@dataclass(order=True)
class Event:
    t: float
    kind: EventKind
    node: str
    seq: int
    payload: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class HandoverTrigger:
    mt: str
    target: str
    t: float
    margin_db: float


@dataclass
class MeasurementRecord:
    t: float
    position: tuple[float, float]
    fr2: LinkState
    fr1: LinkState | None
    e2e_dl_bps: float
    e2e_ul_bps: float
    ssb_switch: bool
    csirs_switch: bool
    fr2_ul: LinkState | None = None
    fr1_ul: LinkState | None = None
    fr2_dl_bps: float = 0.0
    fr2_ul_bps: float = 0.0
    fr1_dl_bps: float = 0.0
    fr1_ul_bps: float = 0.0
    serving_cell: str = ""
    degraded: bool = False

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "position": list(self.position),
            "fr2": self.fr2.to_dict(),
            "fr1": self.fr1.to_dict() if self.fr1 else None,
            "fr2_ul": self.fr2_ul.to_dict() if self.fr2_ul else None,
            "fr1_ul": self.fr1_ul.to_dict() if self.fr1_ul else None,
            "e2e_dl_bps": self.e2e_dl_bps,
            "e2e_ul_bps": self.e2e_ul_bps,
            "fr2_dl_bps": self.fr2_dl_bps,
            "fr2_ul_bps": self.fr2_ul_bps,
            "fr1_dl_bps": self.fr1_dl_bps,
            "fr1_ul_bps": self.fr1_ul_bps,
            "ssb_switch": self.ssb_switch,
            "csirs_switch": self.csirs_switch,
            "serving_cell": self.serving_cell,
            "degraded": self.degraded,
        }


@dataclass
class _LinkMemory:
    """Per-link SINR history feeding delayed CSI reports."""

    depth: int
    history: deque = field(default_factory=deque)

    def reported(self, current: float) -> float | None:
        if self.depth <= 0 or len(self.history) < self.depth:
            return None
        return self.history[-self.depth]

    def push(self, value: float) -> None:
        self.history.append(value)
        while len(self.history) > max(self.depth, 1):
            self.history.popleft()

    def reset(self) -> None:
        self.history.clear()


class World:
    """All mutable state of one run. Never shared between runs."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.rng = np.random.default_rng(scenario.seed)
        self.net = NetworkState()
        self.t = 0.0
        self.events: list[dict] = []
        self.records: list[MeasurementRecord] = []
        self.positions: dict[str, tuple[float, float]] = {}
        self.headings: dict[str, float] = {}
        # mt -> cell -> DL RSRP (dBm) of the latest measurement
        self.rsrp: dict[str, dict[str, float]] = {}
        self.rsrp_history: list[tuple[float, str, dict[str, float]]] = []
        self.a3_since: dict[tuple[str, str], float] = {}
        self.backhaul: dict[str, dict[Direction, float]] = {}
        self.access: dict[str, dict[Direction, float]] = {}
        self.links: dict[str, dict] = {}
        self._mem: dict[tuple[str, Direction], _LinkMemory] = {}
        self._queue: list[Event] = []
        self._seq = itertools.count()
        self._net_events_seen = 0
        self._build_network()

    # setup ---------------------------------------------------------------

    def _build_network(self) -> None:
        sc = self.scenario
        for spec in sc.nodes:
            radio = None
            if spec.role in (NodeRole.BH_GNB, NodeRole.WAB_MT):
                radio = "fr2"
            elif spec.role in (NodeRole.WAB_GNB, NodeRole.END_UE):
                radio = "fr1"
            self.net.add_node(Node(spec.id, spec.role, spec.chassis, spec.position, radio))
            self.positions[spec.id] = spec.position
        for a, b in sc.links:
            self.net.link(a, b)

    def cells(self) -> list[Node]:
        return [n for _, n in sorted(self.net.nodes.items()) if n.role is NodeRole.BH_GNB]

    def mts(self) -> list[Node]:
        return [n for _, n in sorted(self.net.nodes.items()) if n.role is NodeRole.WAB_MT]

    def ues(self) -> list[Node]:
        return [n for _, n in sorted(self.net.nodes.items()) if n.role is NodeRole.END_UE]

    def memory(self, key: str, direction: Direction) -> _LinkMemory:
        k = (key, direction)
        if k not in self._mem:
            self._mem[k] = _LinkMemory(self.scenario.channel.csi_delay_ticks)
        return self._mem[k]

    # event queue -----------------------------------------------------------

    def schedule(self, t: float, kind: EventKind, node: str = "", **payload) -> None:
        heapq.heappush(self._queue, Event(t, kind, node, next(self._seq), payload))

    def _drain_net_events(self) -> None:
        new = self.net.events[self._net_events_seen:]
        self._net_events_seen = len(self.net.events)
        for e in new:
            self.events.append({"source": "topology", **e})

    def step(self) -> None:
        ev = heapq.heappop(self._queue)
        self.t = ev.t
        self.net.now = ev.t
        entry = {"t": ev.t, "kind": ev.kind.name, "node": ev.node}
        if ev.payload:
            entry.update(ev.payload)
        self.events.append(entry)
        handler = _HANDLERS[ev.kind]
        handler(self, ev)
        self._drain_net_events()

    def run(self) -> list[MeasurementRecord]:
        sc = self.scenario
        for k in range(sc.n_ticks):
            self.schedule(round(k * sc.tick_s, 9), EventKind.TICK)
        while self._queue:
            self.step()
        return self.records

    # motion ------------------------------------------------------------------

    def _resolve_position(self, node_id: str, t: float, depth: int = 0) -> tuple[float, float]:
        mv = self.scenario.mobility.get(node_id)
        if isinstance(mv, Trace):
            return mv.position_at(t)
        if isinstance(mv, Follow):
            x, y = self._resolve_position(mv.target, t, depth + 1)
            return (x + mv.offset[0], y + mv.offset[1])
        return self.net.nodes[node_id].position

    def _trace_of(self, node_id: str) -> Trace | None:
        mv = self.scenario.mobility.get(node_id)
        while isinstance(mv, Follow):
            mv = self.scenario.mobility.get(mv.target)
        return mv if isinstance(mv, Trace) else None

    def pointing(self, mt: str, cell_pos) -> float:
        """Compass bearing the WAB-MT array faces."""
        pos = self.positions[mt]
        trace = self._trace_of(mt)
        ant = trace.antenna if trace else None
        if ant is None or ant.mode == "aligned":
            return bearing(pos, cell_pos)
        if ant.mode == "fixed":
            return ant.bearing_deg
        heading = trace.heading_at(self.t)
        if heading is None:
            heading = self.headings.get(mt, 0.0) - ant.offset_deg
        return (heading + ant.offset_deg) % 360.0

    # radio -------------------------------------------------------------------

    def measure_backhaul(self, mt: Node) -> None:
        sc = self.scenario
        ch = sc.channel
        pos = self.positions[mt.id]
        serving = self.net.donor_of(mt.id)
        out = {}
        for cell in self.cells():
            cpos = self.positions[cell.id]
            los = los_state(pos, cpos, sc.obstruction_map)
            dist = max(1.0, math.dist(pos, cpos))
            pl = path_loss(dist, sc.fr2.carrier_hz, los, sc.env_fr2)
            is_los = isinstance(los, Los)
            shadow = self.rng.normal(0.0, ch.shadow_sigma_los_db if is_los else ch.shadow_sigma_nlos_db)
            beams = sc.beams_for(sc.node(cell.id))
            brg = bearing(cpos, pos)
            jitter = BeamJitter.draw(
                self.rng, beams,
                ch.ssb_jitter_los_db if is_los else ch.ssb_jitter_nlos_db,
                ch.csirs_jitter_los_db if is_los else ch.csirs_jitter_nlos_db,
            )
            ssb, csirs = select_beam(beams, brg, jitter)
            g = beam_gain(beams, ssb, csirs, brg)
            penalty = sc.cpe.penalty(self.pointing(mt.id, cpos), bearing(pos, cpos))
            loss = pl + shadow + penalty
            out[cell.id] = {
                "los": los,
                "rsrp_dl": rsrp(sc.fr2, loss, g, DL),
                "rsrp_ul": rsrp(sc.fr2, loss, g, UL),
                "ssb": ssb,
                "csirs": csirs,
            }
        self.rsrp[mt.id] = {c: v["rsrp_dl"] for c, v in out.items()}
        self.rsrp_history.append((self.t, mt.id, dict(self.rsrp[mt.id])))
        if serving is None:
            serving = max(out, key=lambda c: (out[c]["rsrp_dl"], c)) if out else None
        self.links[mt.id] = {"cells": out, "serving": serving}

    def evaluate_backhaul(self, mt: Node) -> None:
        """Link adaptation and throughput on the serving FR2 cell."""
        sc = self.scenario
        info = self.links[mt.id]
        serving = self.net.donor_of(mt.id) or info["serving"]
        info["serving"] = serving
        m = info["cells"][serving]
        res = {}
        for direction, key in ((DL, "rsrp_dl"), (UL, "rsrp_ul")):
            s = sinr(sc.fr2, m[key], direction)
            mem = self.memory(mt.id, direction)
            mcs, b = adapt(sc.fr2, direction, s, mem.reported(s))
            mem.push(s)
            res[direction] = LinkState(m["rsrp_dl"] if direction is DL else m["rsrp_ul"], s, mcs, b,
                                       m["ssb"], m["csirs"], m["los"])
        info["state"] = res
        self.backhaul[mt.id] = {d: link_throughput(sc.fr2, res[d].mcs, res[d].bler, d) for d in (DL, UL)}

    def evaluate_access(self, ue: Node, gnb_id: str) -> None:
        sc = self.scenario
        upos, gpos = self.positions[ue.id], self.positions[gnb_id]
        los = los_state(upos, gpos, sc.obstruction_map)
        dist = max(1.0, math.dist(upos, gpos))
        pl = path_loss(dist, sc.fr1.carrier_hz, los, sc.env_fr1)
        res = {}
        for direction in (DL, UL):
            loss = pl + self.rng.normal(0.0, sc.channel.fr1_sigma_db)
            p = rsrp(sc.fr1, loss, 0.0, direction)
            s = sinr(sc.fr1, p, direction)
            mem = self.memory(ue.id, direction)
            mcs, b = adapt(sc.fr1, direction, s, mem.reported(s))
            mem.push(s)
            res[direction] = LinkState(p, s, mcs, b, 0, 0, los)
        self.links[ue.id] = {"state": res, "gnb": gnb_id}
        self.access[ue.id] = {d: link_throughput(sc.fr1, res[d].mcs, res[d].bler, d) for d in (DL, UL)}

    # composition ---------------------------------------------------------------

    def ue_session(self, ue: str):
        for _, s in sorted(self.net.ue_sessions.items()):
            if s.ue == ue and s.state is SessionState.ACTIVE:
                return s
        return None


# handlers ---------------------------------------------------------------------


def _on_tick(w: World, ev: Event) -> None:
    for node_id in sorted(w.scenario.mobility):
        w.schedule(ev.t, EventKind.POSITION_UPDATE, node_id)
    for mt in w.mts():
        w.schedule(ev.t, EventKind.MEASUREMENT, mt.id)
    w.schedule(ev.t, EventKind.TRAFFIC_SAMPLE, "")


def _on_position(w: World, ev: Event) -> None:
    pos = w._resolve_position(ev.node, ev.t)
    w.positions[ev.node] = pos
    w.net.nodes[ev.node].position = pos
    trace = w._trace_of(ev.node)
    if trace is not None:
        h = trace.heading_at(ev.t)
        if h is not None:
            w.headings[ev.node] = h


def _on_measurement(w: World, ev: Event) -> None:
    mt = w.net.nodes[ev.node]
    w.measure_backhaul(mt)
    chassis = mt.chassis
    state = w.net.states[chassis]
    if state is WabNodeState.OFF:
        target = w.scenario.node(mt.id).donor or w.links[mt.id]["serving"]
        if target is None:
            raise InvalidScenario("no BH-gNB to integrate with", f"nodes.{mt.id}")
        w.schedule(ev.t, EventKind.SESSION_SIGNAL, mt.id, action="integrate", donor=target)
        return
    trig = handover_scan(w, mt.id)
    if trig is not None:
        w.schedule(ev.t, EventKind.HANDOVER_TRIGGER, mt.id, target=trig.target, margin_db=round(trig.margin_db, 6))
    serving = w.net.donor_of(mt.id)
    if serving is not None:
        lost = w.rsrp[mt.id][serving] < w.scenario.outage_floor_dbm
        if lost and state is not WabNodeState.DEGRADED:
            w.schedule(ev.t, EventKind.SESSION_SIGNAL, mt.id, action="backhaul_loss")
        elif not lost and state is WabNodeState.DEGRADED:
            w.schedule(ev.t, EventKind.SESSION_SIGNAL, mt.id, action="backhaul_restore")


def _on_handover(w: World, ev: Event) -> None:
    outcome = handover_wab_mt(w.net, ev.node, ev.payload["target"])
    if outcome.completed:
        w.memory(ev.node, DL).reset()
        w.memory(ev.node, UL).reset()


def _on_session(w: World, ev: Event) -> None:
    action = ev.payload["action"]
    mt = w.net.nodes[ev.node]
    if action == "integrate":
        try:
            integrate_wab_node(w.net, mt.chassis, ev.payload["donor"])
        except WabError as e:
            raise InvalidScenario(f"integration failed: {e}", f"nodes.{mt.id}.donor") from e
        if w.scenario.mode == "wab":
            _, gnb = w.net.chassis_pair(mt.chassis)
            for ue in w.ues():
                serving = w.scenario.node(ue.id).serving or gnb.id
                if serving == gnb.id:
                    attach_ue(w.net, ue.id, gnb.id)
    elif action == "backhaul_loss":
        mark_backhaul_loss(w.net, mt.chassis)
    elif action == "backhaul_restore":
        restore_backhaul(w.net, mt.chassis)


def _on_traffic(w: World, ev: Event) -> None:
    sc = w.scenario
    for mt in w.mts():
        if w.net.states[mt.chassis] is WabNodeState.OFF:
            continue
        w.evaluate_backhaul(mt)
        info = w.links[mt.id]
        fr2, fr2_ul = info["state"][DL], info["state"][UL]
        fr1 = fr1_ul = None
        e2e = {DL: 0.0, UL: 0.0}
        access = {DL: 0.0, UL: 0.0}
        if sc.mode == "fr2_only":
            if w.net.states[mt.chassis] is not WabNodeState.DEGRADED:
                e2e = dict(w.backhaul[mt.id])
        else:
            ue_nodes = [u for u in w.ues() if (s := w.ue_session(u.id)) and w.net.nodes[s.serving_gnb].chassis == mt.chassis]
            if ue_nodes:
                ue = ue_nodes[0]
                s = w.ue_session(ue.id)
                w.evaluate_access(ue, s.serving_gnb)
                fr1, fr1_ul = w.links[ue.id]["state"][DL], w.links[ue.id]["state"][UL]
                access = w.access[ue.id]
                e2e = {d: e2e_throughput(w, ue.id, d) for d in (DL, UL)}
        for d, name in ((DL, "dl"), (UL, "ul")):
            if name not in sc.directions:
                e2e[d] = 0.0
        prev = w.records[-1] if w.records else None
        w.records.append(MeasurementRecord(
            t=ev.t,
            position=w.positions[mt.id],
            fr2=fr2,
            fr1=fr1,
            e2e_dl_bps=e2e[DL],
            e2e_ul_bps=e2e[UL],
            ssb_switch=prev is not None and prev.fr2.serving_ssb != fr2.serving_ssb,
            csirs_switch=prev is not None and (prev.fr2.serving_csirs, prev.fr2.serving_ssb) != (fr2.serving_csirs, fr2.serving_ssb),
            fr2_ul=fr2_ul,
            fr1_ul=fr1_ul,
            fr2_dl_bps=w.backhaul[mt.id][DL],
            fr2_ul_bps=w.backhaul[mt.id][UL],
            fr1_dl_bps=access[DL],
            fr1_ul_bps=access[UL],
            serving_cell=info["serving"],
            degraded=w.net.states[mt.chassis] is WabNodeState.DEGRADED,
        ))
        break  # one WAB node per scenario is recorded


_HANDLERS = {
    EventKind.TICK: _on_tick,
    EventKind.POSITION_UPDATE: _on_position,
    EventKind.MEASUREMENT: _on_measurement,
    EventKind.HANDOVER_TRIGGER: _on_handover,
    EventKind.SESSION_SIGNAL: _on_session,
    EventKind.TRAFFIC_SAMPLE: _on_traffic,
}


# public operations ----------------------------------------------------------------


def e2e_throughput(world: World, ue: str, direction: Direction) -> float:
    """UE goodput: the slower of access and tunnelled backhaul, 0 when degraded."""
    s = world.ue_session(ue)
    if s is None:
        raise NoSession(f"{ue!r} has no active PDU session")
    gnb = world.net.nodes[s.serving_gnb]
    if world.net.states[gnb.chassis] is not WabNodeState.OPERATIONAL:
        return 0.0
    mt, _ = world.net.chassis_pair(gnb.chassis)
    access = world.access[ue][direction]
    backhaul = world.backhaul[mt.id][direction] * world.scenario.encapsulation.efficiency()
    return min(access, backhaul)


def handover_scan(world: World, mt: str) -> HandoverTrigger | None:
    """A3 check: a BH-gNB beating the serving cell by the hysteresis for TTT.

    WAB-gNBs never qualify as candidates.
    """
    sc = world.scenario
    serving = world.net.donor_of(mt)
    meas = world.rsrp.get(mt, {})
    if serving is None or serving not in meas:
        return None
    best = None
    for cell, value in sorted(meas.items()):
        node = world.net.nodes.get(cell)
        if cell == serving or node is None or node.role is not NodeRole.BH_GNB:
            world.a3_since.pop((mt, cell), None)
            continue
        margin = value - meas[serving]
        if margin > sc.hysteresis_db:
            since = world.a3_since.setdefault((mt, cell), world.t)
            if world.t - since >= sc.time_to_trigger_s - 1e-9:
                if best is None or margin > best.margin_db:
                    best = HandoverTrigger(mt, cell, world.t, margin)
        else:
            world.a3_since.pop((mt, cell), None)
    if best is not None:
        for key in [k for k in world.a3_since if k[0] == mt]:
            del world.a3_since[key]
    return best


def simulate(scenario: Scenario) -> World:
    """Run a scenario and return the finished world (records + event log)."""
    if not scenario.by_role(NodeRole.WAB_MT):
        raise InvalidScenario("scenario has no WAB-MT", "nodes")
    if not scenario.by_role(NodeRole.BH_GNB):
        raise InvalidScenario("scenario has no BH-gNB", "nodes")
    w = World(scenario)
    w.run()
    log.info("%s: %d records, %d events", scenario.name, len(w.records), len(w.events))
    return w


def run(scenario: Scenario) -> list[MeasurementRecord]:
    return simulate(scenario).records
