"""Geodesy and 2.5D site geometry.

Coordinates come in as WGS84 latitude/longitude and are projected into a
local east/north/up (ENU) tangent frame with a small-area equirectangular
projection. Scenario extents are a few kilometres, where the projection
error is negligible and results are bit-reproducible.

Buildings are modelled as extruded footprints (flat roof, vertical walls);
line-of-sight between two antennas is decided by an exact 2.5D test against
those prisms, optionally accelerated by a uniform grid index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 position with antenna height above local ground."""

    latitude_deg: float
    longitude_deg: float
    height_m: float = 0.0

    def __post_init__(self) -> None:
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude_deg}")
        if not -180.0 <= self.longitude_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude_deg}")
        if self.height_m < 0.0:
            raise ValueError(f"negative height: {self.height_m}")


@dataclass(frozen=True)
class EnuPoint:
    """Metres east/north/up in a local tangent frame anchored at an origin."""

    east_m: float
    north_m: float
    up_m: float

    def __post_init__(self) -> None:
        for v in (self.east_m, self.north_m, self.up_m):
            if not math.isfinite(v):
                raise ValueError("non-finite ENU component")


@dataclass(frozen=True)
class Building:
    """Extruded footprint: simple polygon of ENU vertices plus roof height.

    The polygon lives in the horizontal plane (east/north pairs); ``height_m``
    is the roof height above local ground.
    """

    id: str
    footprint: tuple[tuple[float, float], ...]
    height_m: float

    def __post_init__(self) -> None:
        if len(self.footprint) < 3:
            raise ValueError(f"building {self.id}: footprint needs >= 3 vertices")
        if self.height_m <= 0.0:
            raise ValueError(f"building {self.id}: non-positive height")
        if _self_intersects(self.footprint):
            raise ValueError(f"building {self.id}: footprint self-intersects")

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.footprint]
        ys = [p[1] for p in self.footprint]
        return min(xs), min(ys), max(xs), max(ys)


def to_enu(origin: GeoPoint, p: GeoPoint) -> EnuPoint:
    """Project ``p`` into the tangent frame anchored at ``origin``.

    Equirectangular small-area projection:
    north = R * dlat, east = R * dlon * cos(lat_origin), up = dheight.
    """
    dlat = math.radians(p.latitude_deg - origin.latitude_deg)
    dlon = math.radians(p.longitude_deg - origin.longitude_deg)
    north = EARTH_RADIUS_M * dlat
    east = EARTH_RADIUS_M * dlon * math.cos(math.radians(origin.latitude_deg))
    return EnuPoint(east, north, p.height_m - origin.height_m)


def from_enu(origin: GeoPoint, p: EnuPoint) -> GeoPoint:
    """Inverse of :func:`to_enu` within the scenario extent."""
    lat = origin.latitude_deg + math.degrees(p.north_m / EARTH_RADIUS_M)
    lon = origin.longitude_deg + math.degrees(
        p.east_m / (EARTH_RADIUS_M * math.cos(math.radians(origin.latitude_deg)))
    )
    return GeoPoint(lat, lon, origin.height_m + p.up_m)


def distance_2d(a: EnuPoint, b: EnuPoint) -> float:
    return math.hypot(b.east_m - a.east_m, b.north_m - a.north_m)


def distance_3d(a: EnuPoint, b: EnuPoint) -> float:
    return math.sqrt(
        (b.east_m - a.east_m) ** 2
        + (b.north_m - a.north_m) ** 2
        + (b.up_m - a.up_m) ** 2
    )


def wrap_angle_deg(angle: float) -> float:
    """Wrap an angle difference into [-180, 180)."""
    return (angle + 180.0) % 360.0 - 180.0


def angles_between(from_p: EnuPoint, to_p: EnuPoint) -> tuple[float, float]:
    """Azimuth/elevation of the direction ``from_p`` -> ``to_p``.

    Azimuth is degrees clockwise from north in [0, 360); elevation is in
    [-90, 90], positive when the target sits above the observer.
    """
    de = to_p.east_m - from_p.east_m
    dn = to_p.north_m - from_p.north_m
    du = to_p.up_m - from_p.up_m
    horiz = math.hypot(de, dn)
    if horiz == 0.0 and du == 0.0:
        raise ValueError("degenerate direction: coincident points")
    azimuth = math.degrees(math.atan2(de, dn)) % 360.0
    elevation = math.degrees(math.atan2(du, horiz))
    return azimuth, elevation


def _segments(ring: Sequence[tuple[float, float]]):
    n = len(ring)
    for i in range(n):
        yield ring[i], ring[(i + 1) % n]


def _self_intersects(ring: Sequence[tuple[float, float]]) -> bool:
    # O(n^2) check is fine at footprint scale (rings of a few dozen vertices).
    segs = list(_segments(ring))
    n = len(segs)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex by construction
            if _segments_cross(segs[i], segs[j]):
                return True
    return False


def _segments_cross(s1, s2) -> bool:
    (a, b), (c, d) = s1, s2

    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def point_in_polygon(x: float, y: float, ring: Sequence[tuple[float, float]]) -> bool:
    """Even-odd rule; points on the boundary count as inside."""
    inside = False
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        # On-edge check keeps the blocking test conservative at boundaries.
        if _on_segment(x, y, x1, y1, x2, y2):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def _on_segment(px, py, x1, y1, x2, y2, eps: float = 1e-9) -> bool:
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    seg_len = math.hypot(x2 - x1, y2 - y1)
    if seg_len == 0.0:
        return math.hypot(px - x1, py - y1) <= eps
    if abs(cross) / seg_len > eps:
        return False
    dot = (px - x1) * (x2 - x1) + (py - y1) * (y2 - y1)
    return -eps <= dot <= seg_len * seg_len + eps


def _crossing_params(
    p0: tuple[float, float], p1: tuple[float, float], ring: Sequence[tuple[float, float]]
) -> list[float]:
    """Parameters t in [0, 1] where segment p0->p1 meets the ring boundary."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    out: list[float] = []
    for (ax, ay), (bx, by) in _segments(ring):
        ex, ey = bx - ax, by - ay
        denom = dx * ey - dy * ex
        if denom == 0.0:
            # Parallel or collinear: project edge endpoints onto the segment.
            seg_len2 = dx * dx + dy * dy
            if seg_len2 == 0.0:
                continue
            for qx, qy in ((ax, ay), (bx, by)):
                t = ((qx - p0[0]) * dx + (qy - p0[1]) * dy) / seg_len2
                if 0.0 <= t <= 1.0 and _on_segment(
                    p0[0] + t * dx, p0[1] + t * dy, ax, ay, bx, by
                ):
                    out.append(t)
            continue
        t = ((ax - p0[0]) * ey - (ay - p0[1]) * ex) / denom
        u = ((ax - p0[0]) * dy - (ay - p0[1]) * dx) / denom
        if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
            out.append(t)
    return out


def _blocking_intervals(
    p0: tuple[float, float], p1: tuple[float, float], ring: Sequence[tuple[float, float]]
) -> list[tuple[float, float]]:
    """Sub-intervals of [0, 1] where the segment runs inside the footprint."""
    ts = sorted({0.0, 1.0, *(_crossing_params(p0, p1, ring))})
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    intervals: list[tuple[float, float]] = []
    for ta, tb in zip(ts, ts[1:]):
        if tb - ta < 1e-12:
            continue
        tm = 0.5 * (ta + tb)
        if point_in_polygon(p0[0] + tm * dx, p0[1] + tm * dy, ring):
            if intervals and abs(intervals[-1][1] - ta) < 1e-12:
                intervals[-1] = (intervals[-1][0], tb)
            else:
                intervals.append((ta, tb))
    return intervals


def _building_blocks(tx: EnuPoint, rx: EnuPoint, building: Building) -> bool:
    """2.5D occlusion: inside-footprint sub-segment dips below the roof.

    The segment height is linear in t, so the minimum over each inside
    interval is attained at an interval endpoint.
    """
    p0 = (tx.east_m, tx.north_m)
    p1 = (rx.east_m, rx.north_m)
    # A building hosting either antenna does not block its own link endpoint.
    if point_in_polygon(*p0, building.footprint) or point_in_polygon(
        *p1, building.footprint
    ):
        return False
    for ta, tb in _blocking_intervals(p0, p1, building.footprint):
        h_a = tx.up_m + ta * (rx.up_m - tx.up_m)
        h_b = tx.up_m + tb * (rx.up_m - tx.up_m)
        if min(h_a, h_b) < building.height_m:
            return True
    return False


@dataclass
class SpatialIndex:
    """Uniform grid over the buildings' bounding box.

    Each building is registered in every cell its footprint bounding box
    overlaps, so a query along a segment returns a superset of the true
    intersectors. Cell size only affects pruning, never correctness.
    """

    cell_size_m: float = 100.0
    _min_x: float = field(default=0.0, repr=False)
    _min_y: float = field(default=0.0, repr=False)
    _nx: int = field(default=0, repr=False)
    _ny: int = field(default=0, repr=False)
    _cells: dict[tuple[int, int], list[str]] = field(default_factory=dict, repr=False)
    _by_id: dict[str, Building] = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, buildings: Iterable[Building], cell_size_m: float = 100.0) -> "SpatialIndex":
        idx = cls(cell_size_m=cell_size_m)
        blds = list(buildings)
        idx._by_id = {b.id: b for b in blds}
        if not blds:
            return idx
        boxes = [b.bbox() for b in blds]
        idx._min_x = min(b[0] for b in boxes)
        idx._min_y = min(b[1] for b in boxes)
        max_x = max(b[2] for b in boxes)
        max_y = max(b[3] for b in boxes)
        idx._nx = max(1, int(math.ceil((max_x - idx._min_x) / cell_size_m)))
        idx._ny = max(1, int(math.ceil((max_y - idx._min_y) / cell_size_m)))
        for b, (x0, y0, x1, y1) in zip(blds, boxes):
            for ci in range(idx._cell_ix(x0), idx._cell_ix(x1) + 1):
                for cj in range(idx._cell_iy(y0), idx._cell_iy(y1) + 1):
                    idx._cells.setdefault((ci, cj), []).append(b.id)
        return idx

    def _cell_ix(self, x: float) -> int:
        return min(max(int((x - self._min_x) // self.cell_size_m), 0), self._nx - 1)

    def _cell_iy(self, y: float) -> int:
        return min(max(int((y - self._min_y) // self.cell_size_m), 0), self._ny - 1)

    def query_segment(self, a: EnuPoint, b: EnuPoint) -> list[Building]:
        """Buildings registered in any grid cell the 2D segment passes through."""
        if not self._by_id:
            return []
        ids: set[str] = set()
        for ci, cj in self._cells_on_segment(
            (a.east_m, a.north_m), (b.east_m, b.north_m)
        ):
            ids.update(self._cells.get((ci, cj), ()))
        return [self._by_id[i] for i in sorted(ids)]

    def _cells_on_segment(self, p0, p1):
        span_x = self._min_x + self._nx * self.cell_size_m
        span_y = self._min_y + self._ny * self.cell_size_m
        clipped = _clip_segment_to_box(p0, p1, self._min_x, self._min_y, span_x, span_y)
        if clipped is None:
            return
        (x0, y0), (x1, y1) = clipped
        dx, dy = x1 - x0, y1 - y0
        # Break the segment at every gridline crossing and take the cell of
        # each midpoint; exact and robust for arbitrary directions.
        ts = {0.0, 1.0}
        if dx != 0.0:
            for ci in range(self._nx + 1):
                t = (self._min_x + ci * self.cell_size_m - x0) / dx
                if 0.0 < t < 1.0:
                    ts.add(t)
        if dy != 0.0:
            for cj in range(self._ny + 1):
                t = (self._min_y + cj * self.cell_size_m - y0) / dy
                if 0.0 < t < 1.0:
                    ts.add(t)
        ordered = sorted(ts)
        for ta, tb in zip(ordered, ordered[1:]):
            tm = 0.5 * (ta + tb)
            yield self._cell_ix(x0 + tm * dx), self._cell_iy(y0 + tm * dy)
        if len(ordered) == 1:  # degenerate point segment
            yield self._cell_ix(x0), self._cell_iy(y0)


def _clip_segment_to_box(p0, p1, min_x, min_y, max_x, max_y):
    """Liang-Barsky clip of segment p0->p1 against an axis-aligned box."""
    x0, y0 = p0
    dx, dy = p1[0] - x0, p1[1] - y0
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, x0 - min_x),
        (dx, max_x - x0),
        (-dy, y0 - min_y),
        (dy, max_y - y0),
    ):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        r = q / p
        if p < 0.0:
            if r > t1:
                return None
            t0 = max(t0, r)
        else:
            if r < t0:
                return None
            t1 = min(t1, r)
    return (x0 + t0 * dx, y0 + t0 * dy), (x0 + t1 * dx, y0 + t1 * dy)


def is_los(
    tx: EnuPoint,
    rx: EnuPoint,
    buildings: Sequence[Building],
    index: SpatialIndex | None = None,
) -> bool:
    """True when no building occludes the tx->rx segment.

    With ``index`` the candidate set is pruned through the grid; without it
    every building is scanned. Both paths apply the identical occlusion test,
    so results never depend on the index or its cell size.
    """
    if (tx.east_m, tx.north_m, tx.up_m) == (rx.east_m, rx.north_m, rx.up_m):
        raise ValueError("degenerate direction: coincident points")
    candidates: Iterable[Building]
    if index is not None:
        candidates = index.query_segment(tx, rx)
    else:
        candidates = buildings
    for b in candidates:
        if _building_blocks(tx, rx, b):
            return False
    return True
