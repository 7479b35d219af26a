"""Planar domains: simple polygons and squares punctured by disks."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

DISK_CAP = 1_000_000
TIE_ROTATION = 1e-12


class GeometryError(ValueError):
    pass


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and \
            ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0:
        return True

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    return ((d1 == 0 and on_seg(q1, q2, p1)) or (d2 == 0 and on_seg(q1, q2, p2))
            or (d3 == 0 and on_seg(p1, p2, q1)) or (d4 == 0 and on_seg(p1, p2, q2)))


@dataclass(frozen=True)
class Polygon2D:
    """Simple polygon with counterclockwise vertex order."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError("polygon needs at least 3 (x, y) vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("polygon vertices must be finite")
        if np.any(np.all(v == np.roll(v, -1, axis=0), axis=1)):
            raise GeometryError("consecutive vertices must be distinct")
        object.__setattr__(self, "vertices", v)
        if _signed_area(v) <= 0:
            raise GeometryError("polygon must be counterclockwise with positive area")
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise GeometryError(f"polygon is not simple: edges {i} and {j} intersect")

    @classmethod
    def ccw(cls, points):
        """Build from points in either orientation."""
        v = np.asarray(points, dtype=float)
        if _signed_area(v) < 0:
            v = v[::-1]
        return cls(v)

    @classmethod
    def square(cls, side=1.0, origin=(0.0, 0.0)):
        x0, y0 = origin
        return cls([[x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side]])

    @classmethod
    def regular(cls, n, radius=1.0, phase=0.0):
        a = phase + 2 * np.pi * np.arange(n) / n
        return cls(np.column_stack([radius * np.cos(a), radius * np.sin(a)]))

    @property
    def edges(self):
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def contains(self, points, tol=1e-9):
        """Closed point-in-polygon test; points within ``tol`` of an edge count as inside."""
        return _contains(self.vertices, np.atleast_2d(points), tol)


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _contains(v, pts, tol):
    a = v[None, :, :]
    b = np.roll(v, -1, axis=0)[None, :, :]
    p = pts[:, None, :]
    # crossing number with half-open rule
    cond = (a[..., 1] > p[..., 1]) != (b[..., 1] > p[..., 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[..., 0] + (p[..., 1] - a[..., 1]) * (b[..., 0] - a[..., 0]) / (b[..., 1] - a[..., 1])
    inside = (np.sum(cond & (p[..., 0] < xint), axis=1) % 2) == 1
    # distance to edges for boundary points
    e = b - a
    t = np.clip(np.sum((p - a) * e, axis=-1) / np.sum(e * e, axis=-1), 0.0, 1.0)
    d = np.linalg.norm(p - (a + t[..., None] * e), axis=-1).min(axis=1)
    return inside | (d <= tol)


def polygon_area(p: Polygon2D) -> float:
    """Shoelace area."""
    area = _signed_area(p.vertices)
    if area <= 0:
        raise GeometryError("degenerate polygon")
    return area


def polygon_perimeter(p: Polygon2D) -> float:
    return float(np.linalg.norm(p.edges, axis=1).sum())


def _unit(direction):
    d = np.asarray(direction, dtype=float).reshape(2)
    n = np.linalg.norm(d)
    if not np.isfinite(n) or n == 0:
        raise ValueError("direction must be a nonzero finite 2-vector")
    return d / n


def projection_identity_defect(p: Polygon2D, direction) -> float:
    """Sum over edges of length * cos(angle between the edge's upward
    direction and the inward horizontal direction).

    ``direction`` is the horizontal axis; "up" is its counterclockwise
    normal. For a closed boundary the sum is the oriented projection of
    the boundary on the axis, hence zero up to rounding.
    """
    d = _unit(direction)
    up = np.array([-d[1], d[0]])
    total = 0.0
    for e in p.edges:
        length = math.hypot(e[0], e[1])
        rise = float(e @ up)
        inward = np.array([-e[1], e[0]]) / length
        beta = d if inward @ d >= 0 else -d
        if rise == 0.0:
            # horizontal edge: limit of a slightly tilted edge
            total += -float(e @ d)
            continue
        alpha = e / length if rise > 0 else -e / length
        total += length * float(alpha @ beta)
    return total


@dataclass(frozen=True)
class EmptyabilityReport:
    emptyable: bool
    perturbed: bool
    lowest_vertex: int
    sinks: tuple = field(default=())


def emptyability(p: Polygon2D, direction=(0.0, 1.0)) -> EmptyabilityReport:
    """Decide whether the polygon drains through its lowest vertex when
    ``direction`` points up.

    A simple polygon is emptyable iff its only convex vertex with both
    neighbours strictly higher (a local minimum of the ordinate on the set)
    is the global minimum. Ties in ordinate are broken by a fixed tiny
    rotation of the direction, which is reported.
    """
    d = _unit(direction)
    v = p.vertices
    scale = float(np.ptp(v, axis=0).max())
    perturbed = False
    y = v @ d
    if _has_ties(y, scale):
        ang = TIE_ROTATION
        rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
        d = rot @ d
        y = v @ d
        perturbed = True
        log.info("ordinate tie broken by a %.0e rad rotation", ang)
    low = int(np.argmin(y))
    if np.sum(y - y[low] <= 1e-14 * scale) > 1:
        raise GeometryError("lowest vertex is not unique after tie-breaking rotation")
    prev_y, next_y = np.roll(y, 1), np.roll(y, -1)
    e_in = v - np.roll(v, 1, axis=0)
    e_out = np.roll(v, -1, axis=0) - v
    convex = (e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]) > 0
    sinks = np.flatnonzero((prev_y > y) & (next_y > y) & convex)
    return EmptyabilityReport(bool(sinks.size == 1 and sinks[0] == low), perturbed, low,
                              tuple(int(i) for i in sinks))


def _has_ties(y, scale):
    ys = np.sort(y)
    return bool(np.any(np.diff(ys) <= 1e-14 * scale))


def is_emptyable(p: Polygon2D, direction=(0.0, 1.0)) -> bool:
    return emptyability(p, direction).emptyable


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(x) for x in self.center)
        if len(c) != 2 or not all(math.isfinite(x) for x in c):
            raise GeometryError("disk center must be a finite (x, y) pair")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GeometryError("disk radius must be > 0")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def polygonize(self, n=64):
        """Vertex ring for drawing; functionals always use the exact disk."""
        a = 2 * np.pi * np.arange(n) / n
        return np.column_stack([self.center[0] + self.radius * np.cos(a),
                                self.center[1] + self.radius * np.sin(a)])


def _seg_distance(v, c):
    a = v
    e = np.roll(v, -1, axis=0) - v
    t = np.clip(np.sum((c - a) * e, axis=1) / np.sum(e * e, axis=1), 0.0, 1.0)
    return float(np.linalg.norm(c - (a + t[:, None] * e), axis=1).min())


@dataclass(frozen=True)
class CompositeRegion2D:
    """Polygon with disjoint open disks removed."""

    outer: Polygon2D
    disks: tuple = ()

    def __post_init__(self):
        disks = tuple(self.disks)
        object.__setattr__(self, "disks", disks)
        v = self.outer.vertices
        for i, dk in enumerate(disks):
            c = np.array(dk.center)
            if not self.outer.contains(c[None, :], tol=0.0)[0] or _seg_distance(v, c) <= dk.radius:
                raise GeometryError(f"disk {i} is not strictly inside the outer polygon")
        if len(disks) > 1:
            C = np.array([dk.center for dk in disks])
            R = np.array([dk.radius for dk in disks])
            order = np.argsort(C[:, 0] - R)
            # sweep on x extents keeps the pairwise check near-linear for carpets
            for a_i, i in enumerate(order):
                for j in order[a_i + 1:]:
                    if C[j, 0] - R[j] >= C[i, 0] + R[i]:
                        break
                    if np.hypot(*(C[i] - C[j])) <= R[i] + R[j]:
                        raise GeometryError(f"disks {i} and {j} overlap")
        if np.pi * sum(dk.radius ** 2 for dk in disks) >= polygon_area(self.outer):
            raise GeometryError("disks cover the outer polygon")

    def contains(self, points, tol=1e-9):
        pts = np.atleast_2d(points)
        mask = self.outer.contains(pts, tol)
        for dk in self.disks:
            mask &= np.hypot(pts[:, 0] - dk.center[0], pts[:, 1] - dk.center[1]) >= dk.radius - tol
        return mask


@dataclass(frozen=True)
class GeometrySummary2D:
    """Area, boundary functional (perimeter or outer Minkowski content) and
    number of connected components."""

    area: float
    boundary_length: float
    components: int = 1

    def __post_init__(self):
        if self.area < 0 or self.boundary_length < 0 or self.components < 1:
            raise GeometryError("summary needs area >= 0, boundary >= 0, components >= 1")

    @classmethod
    def square(cls, side):
        return cls(side * side, 4.0 * side, 1)


def polygon_summary(p: Polygon2D) -> GeometrySummary2D:
    return GeometrySummary2D(polygon_area(p), polygon_perimeter(p), 1)


def composite_summary(c: CompositeRegion2D) -> GeometrySummary2D:
    r = np.array([dk.radius for dk in c.disks])
    return GeometrySummary2D(
        polygon_area(c.outer) - math.pi * float(np.sum(r * r)),
        polygon_perimeter(c.outer) + 2 * math.pi * float(np.sum(r)),
        1,
    )


def summarize(region) -> GeometrySummary2D:
    if isinstance(region, CompositeRegion2D):
        return composite_summary(region)
    if isinstance(region, Polygon2D):
        return polygon_summary(region)
    if isinstance(region, GeometrySummary2D):
        return region
    raise TypeError(f"unsupported 2D region {type(region).__name__}")


def sierpinski_counts(levels):
    """Per-level disk counts 8^(k-1) and radii 3^(-k)/2 for k = 1..levels."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    k = np.arange(1, levels + 1)
    return 8.0 ** (k - 1), 0.5 * 3.0 ** (-k.astype(float))


def sierpinski_radii(levels, cap=DISK_CAP):
    """Radii of the carpet disks, largest first, one entry per disk."""
    counts, radii = sierpinski_counts(levels)
    if counts.sum() > cap:
        raise ValueError(f"{int(counts.sum())} disks exceed the cap of {cap}")
    return np.repeat(radii, counts.astype(int))


def sierpinski_disks(levels, cap=DISK_CAP):
    """Disks inscribed in the central ninth of each carpet square inside [0, 1]^2,
    level by level."""
    counts, _ = sierpinski_counts(levels)
    if counts.sum() > cap:
        raise ValueError(f"{int(counts.sum())} disks exceed the cap of {cap}")
    out = []
    squares = np.array([[0.0, 0.0]])
    side = 1.0
    offsets = np.array([(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1)], float)
    for _ in range(levels):
        centers = squares + side / 2
        out.extend(Disk((x, y), side / 6) for x, y in centers)
        side /= 3
        squares = (squares[:, None, :] + side * offsets[None, :, :]).reshape(-1, 2)
    return out


def sierpinski_partial_sums(levels):
    """Cumulative sum of r and of r^2 after each level, from per-level counts
    (no enumeration, so any depth is allowed)."""
    counts, radii = sierpinski_counts(levels)
    return np.cumsum(counts * radii), np.cumsum(counts * radii ** 2)
