"""Scenario model: nodes, traces, obstruction map and radio settings.

Scenarios are plain JSON. ``Scenario.from_dict`` validates and reports the
first defect as ``InvalidScenario`` with a dotted location.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..encap import EncapConfig
from ..errors import InvalidScenario, ParseError
from ..radio import Band, CpeAntenna, EnvParams, RadioConfig, default_config, default_env, sector_beams
from ..topology import NodeRole
from .geometry import Obstruction, ObstructionKind, ObstructionMap

KMH = 1 / 3.6


@dataclass(frozen=True)
class Antenna:
    """How the WAB-MT array is pointed.

    ``heading``: rigidly mounted, pointing ``offset_deg`` from the direction
    of travel. ``fixed``: constant compass bearing. ``aligned``: always
    on the serving cell.
    """

    mode: str = "aligned"
    offset_deg: float = 0.0
    bearing_deg: float = 0.0

    def __post_init__(self):
        if self.mode not in ("heading", "fixed", "aligned"):
            raise ValueError(f"unknown antenna mode {self.mode!r}")


@dataclass(frozen=True)
class Trace:
    waypoints: tuple[tuple[float, float, float], ...]
    max_speed_kmh: float = 30.0
    antenna: Antenna = Antenna()

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("trace has no waypoints")
        for (t0, x0, y0), (t1, x1, y1) in zip(self.waypoints, self.waypoints[1:]):
            if t1 <= t0:
                raise ValueError(f"timestamps not strictly increasing at t={t1}")
            speed = math.hypot(x1 - x0, y1 - y0) / (t1 - t0)
            if speed > self.max_speed_kmh * KMH + 1e-9:
                raise ValueError(f"speed {speed / KMH:.1f} km/h exceeds {self.max_speed_kmh} km/h at t={t0}")

    @property
    def times(self) -> list[float]:
        return [w[0] for w in self.waypoints]

    def _segment(self, t: float) -> int:
        i = bisect.bisect_right(self.times, t) - 1
        return min(max(i, 0), len(self.waypoints) - 2)

    def position_at(self, t: float) -> tuple[float, float]:
        if len(self.waypoints) == 1 or t <= self.waypoints[0][0]:
            return self.waypoints[0][1:]
        if t >= self.waypoints[-1][0]:
            return self.waypoints[-1][1:]
        i = self._segment(t)
        (t0, x0, y0), (t1, x1, y1) = self.waypoints[i], self.waypoints[i + 1]
        a = (t - t0) / (t1 - t0)
        return (x0 + a * (x1 - x0), y0 + a * (y1 - y0))

    def heading_at(self, t: float) -> float | None:
        """Direction of travel; None while stationary."""
        if len(self.waypoints) < 2:
            return None
        i = self._segment(t)
        (_, x0, y0), (_, x1, y1) = self.waypoints[i], self.waypoints[i + 1]
        if math.hypot(x1 - x0, y1 - y0) < 1e-9:
            return None
        return math.degrees(math.atan2(x1 - x0, y1 - y0)) % 360.0

    def spans(self, duration_s: float) -> bool:
        return self.waypoints[0][0] <= 0.0 and self.waypoints[-1][0] >= duration_s


@dataclass(frozen=True)
class Follow:
    """Rides along with another node at a fixed offset (same vehicle)."""

    target: str
    offset: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class NodeSpec:
    id: str
    role: NodeRole
    chassis: str | None = None
    position: tuple[float, float] = (0.0, 0.0)
    donor: str | None = None
    serving: str | None = None
    sector_azimuth_deg: float = 180.0


@dataclass(frozen=True)
class ChannelParams:
    """Seeded randomness applied every tick, in dB standard deviations."""

    shadow_sigma_los_db: float = 1.0
    shadow_sigma_nlos_db: float = 3.0
    fr1_sigma_db: float = 0.2
    ssb_jitter_los_db: float = 0.3
    ssb_jitter_nlos_db: float = 2.0
    csirs_jitter_los_db: float = 1.0
    csirs_jitter_nlos_db: float = 2.0
    csi_delay_ticks: int = 1

    def zero_beam_jitter(self) -> ChannelParams:
        return replace(self, ssb_jitter_los_db=0.0, ssb_jitter_nlos_db=0.0,
                       csirs_jitter_los_db=0.0, csirs_jitter_nlos_db=0.0)


@dataclass(frozen=True)
class Scenario:
    name: str
    duration_s: float
    nodes: tuple[NodeSpec, ...]
    tick_s: float = 0.1
    seed: int = 0
    mode: str = "wab"
    links: tuple[tuple[str, str], ...] = ()
    mobility: dict = field(default_factory=dict)
    obstruction_map: ObstructionMap = ObstructionMap()
    fr1: RadioConfig = field(default_factory=lambda: default_config(Band.FR1))
    fr2: RadioConfig = field(default_factory=lambda: default_config(Band.FR2))
    env_fr1: EnvParams = field(default_factory=lambda: default_env(Band.FR1))
    env_fr2: EnvParams = field(default_factory=lambda: default_env(Band.FR2))
    encapsulation: EncapConfig = EncapConfig()
    channel: ChannelParams = ChannelParams()
    cpe: CpeAntenna = CpeAntenna()
    hysteresis_db: float = 3.0
    time_to_trigger_s: float = 0.1
    outage_floor_dbm: float = -110.0
    directions: tuple[str, ...] = ("dl", "ul")
    full_buffer: bool = True
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration_s / self.tick_s))

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def by_role(self, role: NodeRole) -> list[NodeSpec]:
        return [n for n in self.nodes if n.role is role]

    def beams_for(self, cell: NodeSpec):
        return sector_beams(cell.sector_azimuth_deg)

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        return _parse(d)

    def to_dict(self) -> dict:
        return self.raw


def _err(loc: str, msg: str):
    raise InvalidScenario(msg, loc)


def _pair(v, loc) -> tuple[float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        _err(loc, "expected [x, y]")
    try:
        return (float(v[0]), float(v[1]))
    except (TypeError, ValueError):
        _err(loc, "coordinates must be numbers")


def _parse_radio(d: dict, band: Band, loc: str) -> tuple[RadioConfig, EnvParams]:
    cfg, env = default_config(band), default_env(band)
    d = dict(d or {})
    env_over = d.pop("env", None)
    try:
        cfg = cfg.with_overrides(d)
    except KeyError as e:
        _err(f"{loc}.{e.args[0]}", "unknown radio parameter")
    except ValueError as e:
        _err(loc, str(e))
    if env_over:
        try:
            env = env.with_overrides(env_over)
        except TypeError as e:
            _err(f"{loc}.env", str(e))
    return cfg, env


def _parse(d: dict) -> Scenario:
    if not isinstance(d, dict):
        _err("", "scenario must be a JSON object")
    for key in ("name", "duration_s", "nodes"):
        if key not in d:
            _err(key, "missing required field")
    try:
        duration = float(d["duration_s"])
        tick = float(d.get("tick_s", 0.1))
    except (TypeError, ValueError):
        _err("duration_s", "must be a number")
    if duration <= 0 or tick <= 0:
        _err("duration_s", "duration and tick must be positive")
    seed = d.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        _err("seed", "must be an unsigned 64-bit integer")
    mode = d.get("mode", "wab")
    if mode not in ("wab", "fr2_only"):
        _err("mode", f"unknown mode {mode!r}")

    nodes = []
    seen = set()
    for i, nd in enumerate(d["nodes"]):
        loc = f"nodes[{i}]"
        if not isinstance(nd, dict) or "id" not in nd or "role" not in nd:
            _err(loc, "node needs 'id' and 'role'")
        try:
            role = NodeRole(nd["role"])
        except ValueError:
            _err(f"{loc}.role", f"unknown role {nd['role']!r}")
        if nd["id"] in seen:
            _err(f"{loc}.id", f"duplicate node id {nd['id']!r}")
        seen.add(nd["id"])
        if role in (NodeRole.WAB_GNB, NodeRole.WAB_MT) and not nd.get("chassis"):
            _err(f"{loc}.chassis", "WAB nodes need a chassis id")
        nodes.append(NodeSpec(
            id=nd["id"],
            role=role,
            chassis=nd.get("chassis"),
            position=_pair(nd.get("position", [0, 0]), f"{loc}.position"),
            donor=nd.get("donor"),
            serving=nd.get("serving"),
            sector_azimuth_deg=float(nd.get("sector_azimuth_deg", 180.0)),
        ))
    for i, nd in enumerate(nodes):
        for ref in ("donor", "serving"):
            target = getattr(nd, ref)
            if target is not None and target not in seen:
                _err(f"nodes[{i}].{ref}", f"unknown node {target!r}")

    links = []
    for i, ln in enumerate(d.get("links", [])):
        if not isinstance(ln, (list, tuple)) or len(ln) != 2 or any(x not in seen for x in ln):
            _err(f"links[{i}]", "expected a pair of known node ids")
        links.append((ln[0], ln[1]))

    mobility = {}
    for i, m in enumerate(d.get("mobility", [])):
        loc = f"mobility[{i}]"
        if m.get("node") not in seen:
            _err(f"{loc}.node", "unknown node")
        if "follow" in m:
            if m["follow"] not in seen:
                _err(f"{loc}.follow", "unknown node")
            mobility[m["node"]] = Follow(m["follow"], _pair(m.get("offset", [0, 0]), f"{loc}.offset"))
            continue
        try:
            wps = tuple((float(t), float(x), float(y)) for t, x, y in m["waypoints"])
            ant = Antenna(**m.get("antenna", {}))
            tr = Trace(wps, float(m.get("max_speed_kmh", 30.0)), ant)
        except KeyError:
            _err(f"{loc}.waypoints", "missing")
        except (TypeError, ValueError) as e:
            _err(f"{loc}.waypoints", str(e))
        if not tr.spans(duration):
            _err(f"{loc}.waypoints", f"trace does not span 0-{duration:g} s")
        mobility[m["node"]] = tr
    for node_id, mv in mobility.items():
        seen_chain = {node_id}
        while isinstance(mv, Follow):
            if mv.target in seen_chain:
                _err("mobility", f"follow cycle through {node_id!r}")
            seen_chain.add(mv.target)
            mv = mobility.get(mv.target)

    obstructions = []
    for i, ob in enumerate(d.get("obstructions", [])):
        loc = f"obstructions[{i}]"
        try:
            kind = ObstructionKind(ob["kind"])
            poly = tuple(_pair(p, f"{loc}.polygon") for p in ob["polygon"])
            obstructions.append(Obstruction(kind, poly, bool(ob.get("tree", False))))
        except (KeyError, ValueError) as e:
            _err(loc, f"bad obstruction: {e}")
    bounds = d.get("bounds")
    if bounds is not None:
        if len(bounds) != 4 or bounds[0] >= bounds[2] or bounds[1] >= bounds[3]:
            _err("bounds", "expected [xmin, ymin, xmax, ymax]")
        bounds = tuple(float(b) for b in bounds)

    radio = d.get("radio", {})
    fr1, env1 = _parse_radio(radio.get("fr1"), Band.FR1, "radio.fr1")
    fr2, env2 = _parse_radio(radio.get("fr2"), Band.FR2, "radio.fr2")
    try:
        enc = EncapConfig.from_dict(d.get("encapsulation"))
    except Exception as e:  # any malformed layer definition
        _err("encapsulation", str(e))
    try:
        channel = ChannelParams(**d.get("channel", {}))
        cpe = CpeAntenna(**d.get("cpe_antenna", {}))
    except TypeError as e:
        _err("channel", str(e))
    ho = d.get("handover", {})
    traffic = d.get("traffic", {})
    directions = tuple(traffic.get("directions", ["dl", "ul"]))
    if not set(directions) <= {"dl", "ul"}:
        _err("traffic.directions", "only 'dl' and 'ul' are allowed")

    return Scenario(
        name=str(d["name"]),
        duration_s=duration,
        nodes=tuple(nodes),
        tick_s=tick,
        seed=seed,
        mode=mode,
        links=tuple(links),
        mobility=mobility,
        obstruction_map=ObstructionMap(tuple(obstructions), bounds),
        fr1=fr1,
        fr2=fr2,
        env_fr1=env1,
        env_fr2=env2,
        encapsulation=enc,
        channel=channel,
        cpe=cpe,
        hysteresis_db=float(ho.get("hysteresis_db", 3.0)),
        time_to_trigger_s=float(ho.get("time_to_trigger_s", 0.1)),
        outage_floor_dbm=float(d.get("outage_floor_dbm", -110.0)),
        directions=directions,
        full_buffer=bool(traffic.get("full_buffer", True)),
        raw=d,
    )


def load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from None


def load_scenario(path) -> Scenario:
    return Scenario.from_dict(load_json(path))
