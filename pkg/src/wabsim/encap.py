"""Tunnel encapsulation bookkeeping.

Headers are opaque byte counts. A WAB user-plane packet travels inside three
tunnels: the UE's own N3 GTP-U tunnel (innermost), the VPN that carries N2/N3
between the WAB-gNB and the serving core, and the BH PDU session GTP-U tunnel
(outermost). Stacks are ordered innermost first, outermost last.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import EmptyStack, OverheadExceedsMtu, StackOverflow

# IPv4 (20) + UDP (8) + GTP-U (8)
GTPU_OVERHEAD = 36
VPN_OVERHEAD = 36
MAX_DEPTH = 4
MIN_MTU = 68


class LayerKind(enum.Enum):
    GTPU = "GtpU"
    VPN = "Vpn"
    INNER_GTPU = "InnerGtpU"


@dataclass(frozen=True)
class Layer:
    kind: LayerKind
    overhead_bytes: int
    tunnel_id: int | None = None

    def __post_init__(self):
        if self.overhead_bytes < 0:
            raise ValueError("overhead_bytes must be non-negative")
        if self.tunnel_id is not None and not 0 <= self.tunnel_id < 2**32:
            raise ValueError("tunnel_id must fit in 32 bits")

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "overhead_bytes": self.overhead_bytes}
        if self.tunnel_id is not None:
            d["tunnel_id"] = self.tunnel_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Layer:
        kind = LayerKind(d["kind"])
        default = VPN_OVERHEAD if kind is LayerKind.VPN else GTPU_OVERHEAD
        return cls(kind, int(d.get("overhead_bytes", default)), d.get("tunnel_id"))


def gtpu(tunnel_id: int = 0, overhead_bytes: int = GTPU_OVERHEAD) -> Layer:
    return Layer(LayerKind.GTPU, overhead_bytes, tunnel_id)


def inner_gtpu(tunnel_id: int = 0, overhead_bytes: int = GTPU_OVERHEAD) -> Layer:
    return Layer(LayerKind.INNER_GTPU, overhead_bytes, tunnel_id)


def vpn(overhead_bytes: int = VPN_OVERHEAD) -> Layer:
    return Layer(LayerKind.VPN, overhead_bytes)


def wab_stack(ue_teid: int = 0, bh_teid: int = 0) -> tuple[Layer, ...]:
    """The three-level user-plane stack, innermost first."""
    return (inner_gtpu(ue_teid), vpn(), gtpu(bh_teid))


@dataclass(frozen=True)
class Packet:
    payload_bytes: int
    layers: tuple[Layer, ...] = ()
    max_depth: int = field(default=MAX_DEPTH, compare=False)

    def __post_init__(self):
        if self.payload_bytes <= 0:
            raise ValueError("payload_bytes must be positive")
        if len(self.layers) > self.max_depth:
            raise StackOverflow(f"{len(self.layers)} layers exceed depth {self.max_depth}")

    @property
    def total_bytes(self) -> int:
        return self.payload_bytes + overhead(self.layers)


class Fragmentation(enum.Enum):
    FORBIDDEN = "Forbidden"
    ALLOWED = "Allowed"


@dataclass(frozen=True)
class MtuPolicy:
    outer_mtu: int = 1500
    fragmentation: Fragmentation = Fragmentation.FORBIDDEN

    def __post_init__(self):
        if self.outer_mtu < MIN_MTU:
            raise ValueError(f"outer_mtu must be >= {MIN_MTU}")


def overhead(layers) -> int:
    return sum(layer.overhead_bytes for layer in layers)


def encap(p: Packet, layer: Layer) -> Packet:
    if len(p.layers) + 1 > p.max_depth:
        raise StackOverflow(f"cannot push layer {len(p.layers) + 1} onto a {p.max_depth}-deep stack")
    return Packet(p.payload_bytes, p.layers + (layer,), p.max_depth)


def decap(p: Packet) -> tuple[Layer, Packet]:
    if not p.layers:
        raise EmptyStack("packet carries no encapsulation layers")
    return p.layers[-1], Packet(p.payload_bytes, p.layers[:-1], p.max_depth)


def effective_mtu(policy: MtuPolicy, layers) -> int:
    """Largest inner payload that crosses ``layers`` without fragmentation."""
    total = overhead(layers)
    if total >= policy.outer_mtu:
        raise OverheadExceedsMtu(f"overhead {total} B >= MTU {policy.outer_mtu} B")
    return policy.outer_mtu - total


def payload_efficiency(layers, inner_payload: int) -> float:
    if inner_payload <= 0:
        raise ValueError("inner_payload must be positive")
    return inner_payload / (inner_payload + overhead(layers))


def fits(policy: MtuPolicy, p: Packet) -> bool:
    return p.total_bytes <= policy.outer_mtu


def fragment_count(policy: MtuPolicy, p: Packet) -> int:
    """Number of outer frames needed for ``p``; 0 means dropped.

    With fragmentation forbidden an oversize packet is dropped.
    """
    if fits(policy, p):
        return 1
    if policy.fragmentation is Fragmentation.FORBIDDEN:
        return 0
    room = policy.outer_mtu - overhead(p.layers)
    if room <= 0:
        return 0
    return -(-p.payload_bytes // room)


@dataclass(frozen=True)
class EncapConfig:
    """Scenario-level encapsulation settings."""

    policy: MtuPolicy = MtuPolicy()
    inner_mtu: int = 1384
    layers: tuple[Layer, ...] = field(default_factory=wab_stack)

    def packet_payload(self) -> int:
        return min(self.inner_mtu, effective_mtu(self.policy, self.layers))

    def efficiency(self) -> float:
        return payload_efficiency(self.layers, self.packet_payload())

    @classmethod
    def from_dict(cls, d: dict | None) -> EncapConfig:
        if not d:
            return cls()
        policy = MtuPolicy(
            int(d.get("outer_mtu", 1500)),
            Fragmentation(d.get("fragmentation", "Forbidden")),
        )
        layers = tuple(Layer.from_dict(x) for x in d["layers"]) if "layers" in d else wab_stack()
        if len(layers) > MAX_DEPTH:
            raise StackOverflow(f"{len(layers)} layers exceed depth {MAX_DEPTH}")
        cfg = cls(policy, int(d.get("inner_mtu", 1384)), layers)
        cfg.efficiency()  # surfaces OverheadExceedsMtu at load time
        return cfg

    def to_dict(self) -> dict:
        return {
            "outer_mtu": self.policy.outer_mtu,
            "fragmentation": self.policy.fragmentation.value,
            "inner_mtu": self.inner_mtu,
            "layers": [layer.to_dict() for layer in self.layers],
        }
