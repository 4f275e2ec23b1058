"""2D obstruction map and line-of-sight classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from ..errors import OutOfBounds
from ..radio import Indoor, Los, LosState, Nlos

Point = tuple[float, float]
_EPS = 1e-12


class ObstructionKind(enum.Enum):
    BUILDING = "Building"
    GLASS_FACADE = "GlassFacade"
    INTERIOR_WALL = "InteriorWall"


@dataclass(frozen=True)
class Obstruction:
    kind: ObstructionKind
    polygon: tuple[Point, ...]
    tree: bool = False  # foliage: a Building with the lighter tree penetration loss

    def __post_init__(self):
        if len(self.polygon) < 3:
            raise ValueError("polygon needs at least 3 vertices")

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "polygon": [list(p) for p in self.polygon]}
        if self.tree:
            d["tree"] = True
        return d


@dataclass(frozen=True)
class ObstructionMap:
    obstructions: tuple[Obstruction, ...] = ()
    bounds: tuple[float, float, float, float] | None = None  # xmin, ymin, xmax, ymax

    def check(self, p: Point) -> None:
        if self.bounds is None:
            return
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin <= p[0] <= xmax and ymin <= p[1] <= ymax):
            raise OutOfBounds(f"({p[0]:.1f}, {p[1]:.1f}) outside map bounds {self.bounds}")


def point_in_polygon(p: Point, poly) -> bool:
    """Even-odd ray cast; points on an edge count as inside."""
    x, y = p
    inside = False
    n = len(poly)
    for i in range(n):
        (x1, y1), (x2, y2) = poly[i], poly[(i + 1) % n]
        if _on_segment(p, (x1, y1), (x2, y2)):
            return True
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _on_segment(p, a, b) -> bool:
    if abs(_cross(a, b, p)) > 1e-9 * max(1.0, math.dist(a, b)):
        return False
    return min(a[0], b[0]) - 1e-9 <= p[0] <= max(a[0], b[0]) + 1e-9 and \
        min(a[1], b[1]) - 1e-9 <= p[1] <= max(a[1], b[1]) + 1e-9


def _segment_hit(p, q, a, b) -> float | None:
    """Smallest parameter s in [0, 1] where p + s(q - p) touches segment ab."""
    r = (q[0] - p[0], q[1] - p[1])
    e = (b[0] - a[0], b[1] - a[1])
    denom = r[0] * e[1] - r[1] * e[0]
    ap = (a[0] - p[0], a[1] - p[1])
    if abs(denom) < _EPS:
        if abs(ap[0] * r[1] - ap[1] * r[0]) > _EPS:
            return None  # parallel, not collinear
        rr = r[0] ** 2 + r[1] ** 2
        if rr < _EPS:
            return 0.0 if _on_segment(p, a, b) else None
        s0 = (ap[0] * r[0] + ap[1] * r[1]) / rr
        s1 = ((b[0] - p[0]) * r[0] + (b[1] - p[1]) * r[1]) / rr
        lo, hi = min(s0, s1), max(s0, s1)
        if hi < 0 or lo > 1:
            return None
        return max(lo, 0.0)
    s = (ap[0] * e[1] - ap[1] * e[0]) / denom
    u = (ap[0] * r[1] - ap[1] * r[0]) / denom
    if -_EPS <= s <= 1 + _EPS and -_EPS <= u <= 1 + _EPS:
        return min(max(s, 0.0), 1.0)
    return None


def first_contact(p: Point, q: Point, poly) -> float | None:
    """Parameter along p->q where the segment first meets ``poly``, or None."""
    if point_in_polygon(p, poly):
        return 0.0
    best = None
    n = len(poly)
    for i in range(n):
        s = _segment_hit(p, q, poly[i], poly[(i + 1) % n])
        if s is not None and (best is None or s < best):
            best = s
    if best is None and point_in_polygon(q, poly):
        best = 1.0
    return best


def los_state(position: Point, bs_position: Point, obstruction_map: ObstructionMap) -> LosState:
    """Classify the path from ``bs_position`` (transmitter) to ``position``.

    Any glass-facade or interior-wall crossing makes the result ``Indoor``;
    otherwise crossed buildings give ``Nlos``. Indoor wins when both occur.
    """
    obstruction_map.check(position)
    obstruction_map.check(bs_position)
    d = math.dist(position, bs_position)
    buildings = trees = walls = 0
    glass = False
    first_building = first_wall = None
    depth = 0.0
    for ob in obstruction_map.obstructions:
        if ob.kind is ObstructionKind.GLASS_FACADE:
            tx_in = point_in_polygon(bs_position, ob.polygon)
            rx_in = point_in_polygon(position, ob.polygon)
            if rx_in and not tx_in:
                glass = True
                s = first_contact(bs_position, position, ob.polygon)
                depth = max(depth, (1.0 - s) * d)
            elif tx_in and not rx_in:
                glass = True
            elif not tx_in and first_contact(bs_position, position, ob.polygon) is not None:
                glass = True  # passes through the building
            continue
        s = first_contact(bs_position, position, ob.polygon)
        if s is None:
            continue
        if ob.kind is ObstructionKind.INTERIOR_WALL:
            walls += 1
            first_wall = s if first_wall is None else min(first_wall, s)
        else:
            buildings += 1
            trees += ob.tree
            first_building = s if first_building is None else min(first_building, s)
    if glass or walls:
        excess = max(1.0, first_wall * d) if first_wall is not None else 1.0
        return Indoor(glass, walls, depth, excess)
    if buildings:
        return Nlos(buildings, trees, max(1.0, first_building * d))
    return Los()
