"""Convex polyhedra: volume, surface area, dihedral angles and caliper diameter."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .gauss import INV_SQRT_2PI, half_plane_integral
from .geom2d import GeometryError

CONVEX_TOL = 1e-9


def _newell(pts):
    nxt = np.roll(pts, -1, axis=0)
    return 0.5 * np.sum(np.cross(pts, nxt), axis=0)


@dataclass(frozen=True)
class Polyhedron3D:
    """Closed convex polyhedron; faces are vertex-index cycles ordered
    counterclockwise seen from outside."""

    vertices: np.ndarray
    faces: tuple

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or len(v) < 4:
            raise GeometryError("polyhedron needs at least 4 (x, y, z) vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("vertices must be finite")
        faces = tuple(tuple(int(i) for i in f) for f in self.faces)
        for k, f in enumerate(faces):
            if len(f) < 3 or len(set(f)) != len(f):
                raise GeometryError(f"face {k} is degenerate")
            if min(f) < 0 or max(f) >= len(v):
                raise GeometryError(f"face {k} references a missing vertex")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", faces)

    @classmethod
    def box(cls, a=1.0, b=1.0, c=1.0):
        v = [[0, 0, 0], [a, 0, 0], [a, b, 0], [0, b, 0],
             [0, 0, c], [a, 0, c], [a, b, c], [0, b, c]]
        f = [(0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)]
        return cls(np.array(v, float), f)

    @classmethod
    def cube(cls, side=1.0):
        return cls.box(side, side, side)

    @classmethod
    def regular_tetrahedron(cls, edge=1.0):
        v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
        v *= edge / (2 * math.sqrt(2))
        return cls.from_points(v)

    @classmethod
    def from_points(cls, points):
        """Convex hull of a point cloud, coplanar hull triangles merged into polygons."""
        pts = np.asarray(points, dtype=float)
        hull = ConvexHull(pts)
        scale = float(np.ptp(pts, axis=0).max())
        eq = hull.equations
        # union-find over neighbouring facets that share a plane
        root = list(range(len(eq)))

        def find(i):
            while root[i] != i:
                root[i] = root[root[i]]
                i = root[i]
            return i

        for i, nbrs in enumerate(hull.neighbors):
            for j in nbrs:
                if (np.allclose(eq[i, :3], eq[j, :3], atol=1e-9)
                        and abs(eq[i, 3] - eq[j, 3]) <= 1e-9 * scale):
                    root[find(i)] = find(j)
        groups = {}
        for i, simplex in enumerate(hull.simplices):
            groups.setdefault(find(i), set()).update(int(v) for v in simplex)
        planes = [(eq[k, :3], eq[k, 3]) for k in groups]
        members = list(groups.values())
        used = sorted(set().union(*members))
        remap = {old: new for new, old in enumerate(used)}
        faces = []
        for (n, _), m in zip(planes, members):
            ids = np.array(sorted(m))
            q = pts[ids] - pts[ids].mean(axis=0)
            e1 = q[0] / np.linalg.norm(q[0])
            e2 = np.cross(n, e1)
            order = np.argsort(np.arctan2(q @ e2, q @ e1))
            faces.append(tuple(remap[int(i)] for i in ids[order]))
        return cls(pts[used], faces)

    def rotated(self, R):
        return Polyhedron3D(self.vertices @ np.asarray(R).T, self.faces)

    def scaled(self, s):
        return Polyhedron3D(self.vertices * s, self.faces)

    def face_geometry(self):
        """(area vectors, centroids) per face; area vector = area * outward normal."""
        av = np.array([_newell(self.vertices[list(f)]) for f in self.faces])
        ctr = np.array([self.vertices[list(f)].mean(axis=0) for f in self.faces])
        return av, ctr

    def edge_map(self):
        """Map from undirected edge (i, j), i < j, to the two faces sharing it.

        The first face traverses the edge as i -> j.
        """
        seen = {}
        for k, f in enumerate(self.faces):
            for a, b in zip(f, f[1:] + f[:1]):
                if (a, b) in seen:
                    raise GeometryError(f"edge ({a}, {b}) traversed twice in the same direction (face {k})")
                seen[(a, b)] = k
        edges = {}
        for (a, b), k in seen.items():
            if (b, a) not in seen:
                raise GeometryError(f"open mesh: edge ({a}, {b}) of face {k} has no twin")
            if a < b:
                edges[(a, b)] = (k, seen[(b, a)])
        return edges

    def validate(self):
        edges = self.edge_map()
        av, _ = self.face_geometry()
        areas = np.linalg.norm(av, axis=1)
        bad = np.flatnonzero(areas <= 0)
        if bad.size:
            raise GeometryError(f"face {bad[0]} has zero area")
        normals = av / areas[:, None]
        diam = float(np.ptp(self.vertices, axis=0).max())
        for k, f in enumerate(self.faces):
            off = normals[k] @ self.vertices[f[0]]
            dev = self.vertices @ normals[k] - off
            if dev.max() > CONVEX_TOL * diam:
                raise GeometryError(f"not convex at face {k} (vertex {int(dev.argmax())} "
                                    f"lies {dev.max():.3g} outside)")
            planar = np.abs(self.vertices[list(f)] @ normals[k] - off).max()
            if planar > CONVEX_TOL * diam:
                raise GeometryError(f"face {k} is not planar")
        if _volume(self) <= 0:
            raise GeometryError("faces are not outward oriented")
        return edges


def _volume(p):
    ctr = p.vertices.mean(axis=0)
    vol = 0.0
    for f in p.faces:
        a = p.vertices[f[0]] - ctr
        for j in range(1, len(f) - 1):
            b = p.vertices[f[j]] - ctr
            c = p.vertices[f[j + 1]] - ctr
            vol += a @ np.cross(b, c)
    return vol / 6.0


@dataclass(frozen=True)
class GeometrySummary3D:
    volume: float
    surface_area: float
    caliper: float
    edges: tuple = ()  # (length, interior dihedral angle)

    def __post_init__(self):
        if self.volume < 0 or self.surface_area < 0 or self.caliper < 0:
            raise GeometryError("summary functionals must be >= 0")


def polyhedron_summary(p: Polyhedron3D) -> GeometrySummary3D:
    """Volume, surface area, edge dihedrals and caliper diameter
    sum(length * (pi - dihedral)) / (4 pi)."""
    edges = p.validate()
    av, _ = p.face_geometry()
    areas = np.linalg.norm(av, axis=1)
    normals = av / areas[:, None]
    rows = []
    for (i, j), (f1, f2) in sorted(edges.items()):
        length = float(np.linalg.norm(p.vertices[j] - p.vertices[i]))
        cosang = float(np.clip(normals[f1] @ normals[f2], -1.0, 1.0))
        rows.append((length, math.pi - math.acos(cosang)))
    caliper = sum(l * (math.pi - th) for l, th in rows) / (4 * math.pi)
    return GeometrySummary3D(_volume(p), float(areas.sum()), caliper, tuple(rows))


def face_projection_defect(p: Polyhedron3D, axis) -> float:
    """Sum of face area times the signed cosine between outward normal and
    ``axis``; vanishes for a closed surface."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    av, _ = p.face_geometry()
    return float(np.sum(av @ a))


@dataclass(frozen=True)
class EdgeTrihedron:
    length: float
    theta1: float
    theta2: float
    theta3: float


def edge_trihedra(p: Polyhedron3D, up):
    """Per-edge angles for a given vertical direction.

    theta1 (theta2) is the angle between the upward edge direction and the
    horizontal direction entering the first (second) adjacent face; theta3
    is the interior dihedral angle. Requires ``up`` generic: no horizontal
    edge and no horizontal face.
    """
    z = np.asarray(up, dtype=float)
    z = z / np.linalg.norm(z)
    edges = p.validate()
    av, ctr = p.face_geometry()
    normals = av / np.linalg.norm(av, axis=1)[:, None]
    out = []
    for (i, j), faces in sorted(edges.items()):
        e = p.vertices[j] - p.vertices[i]
        length = float(np.linalg.norm(e))
        eta = e / length
        if abs(eta @ z) < 1e-12:
            raise GeometryError(f"edge ({i}, {j}) is horizontal for this direction")
        if eta @ z < 0:
            eta = -eta
        mid = 0.5 * (p.vertices[i] + p.vertices[j])
        into, cos_t = [], []
        for f in faces:
            a = np.cross(normals[f], eta)
            if a @ (ctr[f] - mid) < 0:
                a = -a
            into.append(a)
            h = (eta @ z) * a - (a @ z) * eta
            cos_t.append(float(h @ eta / np.linalg.norm(h)))
        t3 = math.acos(float(np.clip(into[0] @ into[1], -1.0, 1.0)))
        out.append(EdgeTrihedron(length, math.acos(cos_t[0]), math.acos(cos_t[1]), t3))
    return out


def trihedral_correction_sum(p: Polyhedron3D, up) -> float:
    """Sum over edges of length * [cos t2 G(m2) + cos t1 G(m1)] / sqrt(2 pi),
    G(m) = 1/4 + arctan(m)/(2 pi); vanishes for a convex polyhedron."""
    total = 0.0
    for e in edge_trihedra(p, up):
        c1, c2, c3 = math.cos(e.theta1), math.cos(e.theta2), math.cos(e.theta3)
        s1, s2, s3 = math.sin(e.theta1), math.sin(e.theta2), math.sin(e.theta3)
        m2 = (-s2 * c1 / s1 + c3 * c2) / s3
        m1 = (-s1 * c2 / s2 + c3 * c1) / s3
        total += e.length * (c2 * half_plane_integral(m2) + c1 * half_plane_integral(m1))
    return total * INV_SQRT_2PI


def contains(p: Polyhedron3D, points, tol=1e-9):
    """Closed point-in-convex-polyhedron test."""
    av, _ = p.face_geometry()
    normals = av / np.linalg.norm(av, axis=1)[:, None]
    offs = np.array([normals[k] @ p.vertices[f[0]] for k, f in enumerate(p.faces)])
    pts = np.atleast_2d(points)
    return np.all(pts @ normals.T - offs <= tol, axis=1)
