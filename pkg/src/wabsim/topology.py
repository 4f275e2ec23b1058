"""WAB network graph, sessions and the procedures that mutate them.

A WAB node is a WAB-MT and a WAB-gNB sharing a chassis id. The MT attaches
to a BH-gNB like an ordinary UE, opens BH PDU sessions towards the BH-5GC and
only then does the WAB-gNB register with the core serving end users. UE
traffic rides the N3 BH PDU session.

Every function here takes the ``NetworkState`` it mutates as first argument.
Procedures either complete or raise before touching state.
"""

from __future__ import annotations

import copy
import enum
import json
from dataclasses import dataclass, field

from .errors import (
    CoreUnreachable,
    DuplicateInterface,
    IllegalTransition,
    NodeNotOperational,
    NoN3Session,
    NotRegistered,
    UnknownChassis,
    UnknownNode,
    WrongRole,
)

NodeId = str


class NodeRole(enum.Enum):
    WAB_GNB = "WabGnb"
    WAB_MT = "WabMt"
    BH_GNB = "BhGnb"
    BH_5GC = "Bh5gc"
    SERVING_CORE = "ServingCore"
    END_UE = "EndUe"


GNB_ROLES = frozenset({NodeRole.WAB_GNB, NodeRole.BH_GNB})
CORE_ROLES = frozenset({NodeRole.BH_5GC, NodeRole.SERVING_CORE})


class CarriedInterface(enum.Enum):
    N2 = "N2"
    N3 = "N3"
    XN = "Xn"


class SessionState(enum.Enum):
    REQUESTED = "Requested"
    ACTIVE = "Active"
    RELEASED = "Released"


class WabNodeState(enum.Enum):
    OFF = "Off"
    MT_REGISTERING = "MtRegistering"
    MT_REGISTERED = "MtRegistered"
    BH_SESSIONS_ESTABLISHING = "BhSessionsEstablishing"
    BH_SESSIONS_ACTIVE = "BhSessionsActive"
    GNB_REGISTERING = "GnbRegistering"
    OPERATIONAL = "Operational"
    DEGRADED = "Degraded"


INTEGRATION_ORDER = (
    WabNodeState.OFF,
    WabNodeState.MT_REGISTERING,
    WabNodeState.MT_REGISTERED,
    WabNodeState.BH_SESSIONS_ESTABLISHING,
    WabNodeState.BH_SESSIONS_ACTIVE,
    WabNodeState.GNB_REGISTERING,
    WabNodeState.OPERATIONAL,
)
_REGISTERED = frozenset(INTEGRATION_ORDER[2:]) | {WabNodeState.DEGRADED}

INTEGRATION_PHASES = ("MtRegistration", "BhSessionEstablishment", "GnbRegistration")


@dataclass
class Node:
    id: NodeId
    role: NodeRole
    chassis: str | None = None
    position: tuple[float, float] = (0.0, 0.0)
    radio: str | None = None

    def __post_init__(self):
        if self.role in (NodeRole.WAB_GNB, NodeRole.WAB_MT) and not self.chassis:
            raise ValueError(f"{self.role.value} node {self.id!r} needs a chassis id")
        if self.role in CORE_ROLES and self.radio is not None:
            raise ValueError(f"core node {self.id!r} has no radio")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "role": self.role.value,
            "chassis": self.chassis,
            "position": [float(self.position[0]), float(self.position[1])],
            "radio": self.radio,
        }


@dataclass(frozen=True)
class QosProfile:
    priority: int = 5
    guaranteed_rate: float | None = None

    def __post_init__(self):
        if self.priority < 0:
            raise ValueError("priority must be >= 0")


@dataclass
class BhPduSession:
    session_id: int
    owner_mt: NodeId
    anchor_core: NodeId
    carried: CarriedInterface
    qos: QosProfile = QosProfile()
    state: SessionState = SessionState.ACTIVE

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "owner_mt": self.owner_mt,
            "anchor_core": self.anchor_core,
            "carried": self.carried.value,
            "qos": {"priority": self.qos.priority, "guaranteed_rate": self.qos.guaranteed_rate},
            "state": self.state.value,
        }


@dataclass
class UePduSession:
    session_id: int
    ue: NodeId
    serving_gnb: NodeId
    drb_id: int
    n3_tunnel_id: int
    carried_by: int
    state: SessionState = SessionState.ACTIVE

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "ue": self.ue,
            "serving_gnb": self.serving_gnb,
            "drb_id": self.drb_id,
            "n3_tunnel_id": self.n3_tunnel_id,
            "carried_by": self.carried_by,
            "state": self.state.value,
        }


@dataclass(frozen=True)
class XnLink:
    endpoints: tuple[NodeId, NodeId]
    tunneled_via: int  # 0 = not tunneled

    def to_dict(self) -> dict:
        return {"endpoints": list(self.endpoints), "tunneled_via": self.tunneled_via}


class RejectReason(enum.Enum):
    FORBIDDEN_TARGET_KIND = "ForbiddenTargetKind"
    WRONG_TARGET_ROLE = "WrongTargetRole"
    UNKNOWN_TARGET = "UnknownTarget"
    CORE_UNREACHABLE = "CoreUnreachable"
    NOT_REGISTERED = "NotRegistered"


@dataclass(frozen=True)
class HandoverOutcome:
    completed: bool
    reason: RejectReason | None = None

    @classmethod
    def rejected(cls, reason: RejectReason) -> HandoverOutcome:
        return cls(False, reason)


COMPLETED = HandoverOutcome(True)


@dataclass
class NetworkState:
    """The mutable world of one simulation run."""

    nodes: dict[NodeId, Node] = field(default_factory=dict)
    links: set[frozenset] = field(default_factory=set)
    donors: dict[NodeId, list[NodeId]] = field(default_factory=dict)
    states: dict[str, WabNodeState] = field(default_factory=dict)
    gnb_core: dict[NodeId, NodeId] = field(default_factory=dict)
    bh_sessions: dict[int, BhPduSession] = field(default_factory=dict)
    ue_sessions: dict[int, UePduSession] = field(default_factory=dict)
    xn_links: list[XnLink] = field(default_factory=list)
    allow_parallel_sessions: bool = False
    events: list[dict] = field(default_factory=list)
    now: float = 0.0
    _next_session: int = 1
    _next_teid: dict[NodeId, int] = field(default_factory=dict)

    # construction -------------------------------------------------------

    def add_node(self, node: Node) -> Node:
        if node.id in self.nodes:
            raise ValueError(f"duplicate node id {node.id!r}")
        if node.role in (NodeRole.WAB_GNB, NodeRole.WAB_MT):
            for other in self.nodes.values():
                if other.chassis == node.chassis and other.role is node.role:
                    raise ValueError(f"chassis {node.chassis!r} already has a {node.role.value}")
            self.states.setdefault(node.chassis, WabNodeState.OFF)
        self.nodes[node.id] = node
        return node

    def link(self, a: NodeId, b: NodeId) -> None:
        """Wired link: BH-gNB to BH-5GC, or BH-5GC to the serving core (N6)."""
        self.node(a)
        self.node(b)
        self.links.add(frozenset((a, b)))

    def node(self, node_id: NodeId) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def log(self, kind: str, **fields) -> None:
        self.events.append({"t": self.now, "kind": kind, **fields})

    # queries ------------------------------------------------------------

    def neighbours(self, node_id: NodeId, role: NodeRole) -> list[NodeId]:
        out = []
        for edge in self.links:
            if node_id in edge:
                (other,) = edge - {node_id} or {node_id}
                if other in self.nodes and self.nodes[other].role is role:
                    out.append(other)
        return sorted(out)

    def chassis_pair(self, chassis: str) -> tuple[Node, Node]:
        mt = gnb = None
        for n in self.nodes.values():
            if n.chassis == chassis:
                if n.role is NodeRole.WAB_MT:
                    mt = n
                elif n.role is NodeRole.WAB_GNB:
                    gnb = n
        if mt is None or gnb is None:
            raise UnknownChassis(chassis)
        return mt, gnb

    def chassis_of(self, node_id: NodeId) -> str:
        n = self.node(node_id)
        if n.chassis is None:
            raise WrongRole(f"{node_id!r} ({n.role.value}) is not part of a WAB node")
        return n.chassis

    def state_of(self, node_id: NodeId) -> WabNodeState:
        return self.states[self.chassis_of(node_id)]

    def donor_of(self, mt: NodeId) -> NodeId | None:
        ds = self.donors.get(mt, [])
        return ds[0] if len(ds) == 1 else None

    def active_bh_sessions(self, mt: NodeId) -> list[BhPduSession]:
        return [
            s for _, s in sorted(self.bh_sessions.items())
            if s.owner_mt == mt and s.state is SessionState.ACTIVE
        ]

    def bh_session_for(self, mt: NodeId, carried: CarriedInterface) -> BhPduSession | None:
        for s in self.active_bh_sessions(mt):
            if s.carried is carried:
                return s
        return None

    def wab_chassis(self) -> list[str]:
        return sorted(self.states)

    # serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": [self.nodes[k].to_dict() for k in sorted(self.nodes)],
            "links": sorted(sorted(e) for e in self.links),
            "donors": {k: list(v) for k, v in sorted(self.donors.items())},
            "states": {k: v.value for k, v in sorted(self.states.items())},
            "gnb_core": dict(sorted(self.gnb_core.items())),
            "bh_sessions": [s.to_dict() for _, s in sorted(self.bh_sessions.items())],
            "ue_sessions": [s.to_dict() for _, s in sorted(self.ue_sessions.items())],
            "xn_links": [x.to_dict() for x in self.xn_links],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def copy(self) -> NetworkState:
        return copy.deepcopy(self)


def _set_state(net: NetworkState, chassis: str, new: WabNodeState) -> None:
    old = net.states[chassis]
    allowed = False
    if new is WabNodeState.DEGRADED:
        allowed = old in _REGISTERED
    elif old is WabNodeState.DEGRADED:
        allowed = new is WabNodeState.OPERATIONAL
    elif old in INTEGRATION_ORDER and new in INTEGRATION_ORDER:
        allowed = INTEGRATION_ORDER.index(new) == INTEGRATION_ORDER.index(old) + 1
    if not allowed:
        raise IllegalTransition(f"{chassis}: {old.value} -> {new.value}")
    net.states[chassis] = new
    net.log("StateChange", chassis=chassis, src=old.value, dst=new.value)


def _bh_core(net: NetworkState, bh_gnb: NodeId) -> NodeId:
    cores = net.neighbours(bh_gnb, NodeRole.BH_5GC)
    if not cores:
        raise CoreUnreachable(f"no BH-5GC linked to {bh_gnb!r}")
    return cores[0]


def _serving_core(net: NetworkState, bh_core: NodeId) -> NodeId:
    cores = net.neighbours(bh_core, NodeRole.SERVING_CORE)
    if not cores:
        raise CoreUnreachable(f"no serving core reachable over N6 from {bh_core!r}")
    return cores[0]


def _require_role(net: NetworkState, node_id: NodeId, *roles: NodeRole) -> Node:
    n = net.node(node_id)
    if n.role not in roles:
        want = "/".join(r.value for r in roles)
        raise WrongRole(f"{node_id!r} is {n.role.value}, expected {want}")
    return n


def integrate_wab_node(
    net: NetworkState,
    chassis: str,
    bh_gnb: NodeId,
    extra_sessions: tuple[tuple[CarriedInterface, QosProfile], ...] = (),
) -> WabNodeState:
    """Bring a WAB node from Off to Operational through ``bh_gnb``.

    Phases: MT registration, BH PDU sessions for N2 then N3 (plus any
    ``extra_sessions``), WAB-gNB registration with the serving core.
    Re-integrating an Operational node is a no-op.
    """
    mt, gnb = net.chassis_pair(chassis)
    state = net.states[chassis]
    if state is WabNodeState.OPERATIONAL:
        return state
    if state is not WabNodeState.OFF:
        raise IllegalTransition(f"{chassis} is {state.value}, integration needs Off")
    _require_role(net, bh_gnb, NodeRole.BH_GNB)
    bh_core = _bh_core(net, bh_gnb)
    serving = _serving_core(net, bh_core)

    _set_state(net, chassis, WabNodeState.MT_REGISTERING)
    net.donors[mt.id] = [bh_gnb]
    net.log("SessionSignal", chassis=chassis, phase="MtRegistration", donor=bh_gnb, core=bh_core)
    _set_state(net, chassis, WabNodeState.MT_REGISTERED)

    _set_state(net, chassis, WabNodeState.BH_SESSIONS_ESTABLISHING)
    establish_bh_pdu_session(net, mt.id, CarriedInterface.N2, QosProfile(priority=1))
    establish_bh_pdu_session(net, mt.id, CarriedInterface.N3, QosProfile(priority=2))
    for carried, qos in extra_sessions:
        establish_bh_pdu_session(net, mt.id, carried, qos)
    _set_state(net, chassis, WabNodeState.BH_SESSIONS_ACTIVE)

    _set_state(net, chassis, WabNodeState.GNB_REGISTERING)
    net.gnb_core[gnb.id] = serving
    net.log("SessionSignal", chassis=chassis, phase="GnbRegistration", gnb=gnb.id, core=serving)
    _set_state(net, chassis, WabNodeState.OPERATIONAL)
    return net.states[chassis]


def establish_bh_pdu_session(
    net: NetworkState, mt: NodeId, carried: CarriedInterface, qos: QosProfile = QosProfile()
) -> BhPduSession:
    _require_role(net, mt, NodeRole.WAB_MT)
    if net.state_of(mt) not in _REGISTERED:
        raise NotRegistered(f"{mt!r} has not completed MT registration")
    if not net.allow_parallel_sessions and net.bh_session_for(mt, carried) is not None:
        raise DuplicateInterface(f"{mt!r} already has an active {carried.value} BH PDU session")
    donor = net.donor_of(mt)
    if donor is None:
        raise NotRegistered(f"{mt!r} has no donor")
    session = BhPduSession(net._next_session, mt, _bh_core(net, donor), carried, qos)
    net._next_session += 1
    net.bh_sessions[session.session_id] = session
    net.log(
        "SessionSignal",
        chassis=net.chassis_of(mt),
        phase="BhSessionEstablishment",
        session_id=session.session_id,
        carried=carried.value,
    )
    return session


def release_bh_session(net: NetworkState, session_id: int) -> None:
    """Release a BH PDU session and everything riding on it."""
    s = net.bh_sessions[session_id]
    if s.state is SessionState.RELEASED:
        return
    s.state = SessionState.RELEASED
    net.log("SessionSignal", phase="BhSessionRelease", session_id=session_id)
    for ue_s in net.ue_sessions.values():
        if ue_s.carried_by == session_id and ue_s.state is SessionState.ACTIVE:
            ue_s.state = SessionState.RELEASED
            net.log("SessionSignal", phase="UeSessionRelease", session_id=ue_s.session_id)
    net.xn_links = [x for x in net.xn_links if x.tunneled_via != session_id]


def attach_ue(net: NetworkState, ue: NodeId, wab_gnb: NodeId) -> UePduSession:
    _require_role(net, ue, NodeRole.END_UE)
    gnb = _require_role(net, wab_gnb, NodeRole.WAB_GNB)
    if net.states[gnb.chassis] is not WabNodeState.OPERATIONAL:
        raise NodeNotOperational(f"{gnb.chassis} is {net.states[gnb.chassis].value}")
    mt, _ = net.chassis_pair(gnb.chassis)
    n3 = net.bh_session_for(mt.id, CarriedInterface.N3)
    if n3 is None:
        raise NoN3Session(f"{mt.id!r} has no active N3 BH PDU session")
    core = net.gnb_core[wab_gnb]
    teid = net._next_teid.get(core, 1)
    if teid >= 2**32:
        raise OverflowError("tunnel endpoint identifiers exhausted")
    net._next_teid[core] = teid + 1
    used = {s.drb_id for s in net.ue_sessions.values() if s.ue == ue and s.state is SessionState.ACTIVE}
    drb = next(i for i in range(1, 33) if i not in used)  # StopIteration past 32 DRBs
    session = UePduSession(net._next_session, ue, wab_gnb, drb, teid, n3.session_id)
    net._next_session += 1
    net.ue_sessions[session.session_id] = session
    net.log("SessionSignal", phase="UeAttach", ue=ue, gnb=wab_gnb, session_id=session.session_id, teid=teid)
    return session


def e2e_path(net: NetworkState, ue_session_id: int) -> list[NodeId]:
    """Node hops from UE to the serving core for an active UE PDU session."""
    s = net.ue_sessions[ue_session_id]
    bh = net.bh_sessions[s.carried_by]
    if s.state is not SessionState.ACTIVE or bh.state is not SessionState.ACTIVE:
        raise NoN3Session(f"session {ue_session_id} is not active")
    donor = net.donor_of(bh.owner_mt)
    return [s.ue, s.serving_gnb, bh.owner_mt, donor, bh.anchor_core, net.gnb_core[s.serving_gnb]]


def handover_wab_mt(net: NetworkState, mt: NodeId, target: NodeId) -> HandoverOutcome:
    """Move ``mt`` to a new donor. WAB-gNB targets are always refused."""
    if mt not in net.nodes or net.nodes[mt].role is not NodeRole.WAB_MT:
        return HandoverOutcome.rejected(RejectReason.NOT_REGISTERED)
    if net.state_of(mt) not in _REGISTERED:
        return HandoverOutcome.rejected(RejectReason.NOT_REGISTERED)
    if target not in net.nodes:
        reason = RejectReason.UNKNOWN_TARGET
    elif net.nodes[target].role is NodeRole.WAB_GNB:
        reason = RejectReason.FORBIDDEN_TARGET_KIND
    elif net.nodes[target].role is not NodeRole.BH_GNB:
        reason = RejectReason.WRONG_TARGET_ROLE
    elif not net.neighbours(target, NodeRole.BH_5GC):
        reason = RejectReason.CORE_UNREACHABLE
    else:
        reason = None
    if reason is not None:
        net.log("HandoverTrigger", mt=mt, target=target, outcome="Rejected", reason=reason.value)
        return HandoverOutcome.rejected(reason)
    if net.donor_of(mt) == target:
        return COMPLETED

    new_core = _bh_core(net, target)
    net.donors[mt] = [target]
    for s in net.active_bh_sessions(mt):
        s.anchor_core = new_core
    net.log("HandoverTrigger", mt=mt, target=target, outcome="Completed", core=new_core)
    return COMPLETED


def setup_xn(net: NetworkState, a: NodeId, b: NodeId) -> XnLink:
    """Xn between two gNBs; a WAB-gNB side tunnels it over its backhaul.

    When both ends are WAB-gNBs the initiator ``a`` carries the link.
    """
    ends = [_require_role(net, x, *GNB_ROLES) for x in (a, b)]
    via = 0
    for n in ends:
        if n.role is NodeRole.WAB_GNB:
            if net.states[n.chassis] is not WabNodeState.OPERATIONAL:
                raise NodeNotOperational(f"{n.chassis} is {net.states[n.chassis].value}")
    for n in ends:
        if n.role is NodeRole.WAB_GNB:
            mt, _ = net.chassis_pair(n.chassis)
            s = net.bh_session_for(mt.id, CarriedInterface.XN) or net.bh_session_for(mt.id, CarriedInterface.N3)
            if s is None:
                raise NoN3Session(f"{mt.id!r} has no session able to carry Xn")
            via = s.session_id
            break
    link = XnLink((a, b), via)
    net.xn_links.append(link)
    net.log("SessionSignal", phase="XnSetup", endpoints=[a, b], tunneled_via=via)
    return link


def mark_backhaul_loss(net: NetworkState, chassis: str) -> None:
    if net.states[chassis] is not WabNodeState.DEGRADED:
        _set_state(net, chassis, WabNodeState.DEGRADED)


def restore_backhaul(net: NetworkState, chassis: str) -> None:
    if net.states[chassis] is WabNodeState.DEGRADED:
        _set_state(net, chassis, WabNodeState.OPERATIONAL)


# validation -----------------------------------------------------------------


class ViolationKind(enum.Enum):
    DEPTH_EXCEEDED = "DepthExceeded"
    DONOR_COUNT = "DonorCount"
    INVALID_DONOR = "InvalidDonor"
    DANGLING_SESSION = "DanglingSession"
    ROLE_MISMATCH = "RoleMismatch"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    subject: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "subject": self.subject, "detail": self.detail}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> list[ViolationKind]:
        return [v.kind for v in self.violations]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def validate_topology(net: NetworkState) -> ValidationReport:
    """Check the single-hop star rule and session references."""
    report = ValidationReport()
    add = report.violations.append

    for node_id in sorted(net.nodes):
        n = net.nodes[node_id]
        if n.role is not NodeRole.WAB_MT:
            continue
        donors = net.donors.get(node_id, [])
        attached = net.states.get(n.chassis, WabNodeState.OFF) is not WabNodeState.OFF
        if (attached or donors) and len(donors) != 1:
            add(Violation(ViolationKind.DONOR_COUNT, node_id, f"{len(donors)} donors"))
        for d in donors:
            role = net.nodes[d].role if d in net.nodes else None
            if role is NodeRole.WAB_GNB:
                add(Violation(ViolationKind.DEPTH_EXCEEDED, node_id, f"donor {d} is a WAB-gNB"))
            elif role is not NodeRole.BH_GNB:
                add(Violation(ViolationKind.INVALID_DONOR, node_id, f"donor {d} is {role.value if role else 'missing'}"))

    for sid, s in sorted(net.bh_sessions.items()):
        owner = net.nodes.get(s.owner_mt)
        anchor = net.nodes.get(s.anchor_core)
        if owner is None or anchor is None:
            add(Violation(ViolationKind.DANGLING_SESSION, f"bh:{sid}", "unknown owner or anchor"))
        elif owner.role is not NodeRole.WAB_MT or anchor.role is not NodeRole.BH_5GC:
            add(Violation(ViolationKind.ROLE_MISMATCH, f"bh:{sid}", "owner/anchor roles"))

    for sid, s in sorted(net.ue_sessions.items()):
        gnb = net.nodes.get(s.serving_gnb)
        if gnb is None or gnb.role is not NodeRole.WAB_GNB:
            add(Violation(ViolationKind.ROLE_MISMATCH, f"ue:{sid}", "serving gNB is not a WAB-gNB"))
        if s.state is not SessionState.ACTIVE:
            continue
        bh = net.bh_sessions.get(s.carried_by)
        if bh is None or bh.state is not SessionState.ACTIVE or bh.carried is not CarriedInterface.N3:
            add(Violation(ViolationKind.DANGLING_SESSION, f"ue:{sid}", f"carried_by {s.carried_by}"))

    for x in net.xn_links:
        if x.tunneled_via:
            bh = net.bh_sessions.get(x.tunneled_via)
            if bh is None or bh.state is not SessionState.ACTIVE:
                add(Violation(ViolationKind.DANGLING_SESSION, "xn:" + "-".join(x.endpoints), f"via {x.tunneled_via}"))
    return report

