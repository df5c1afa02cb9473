"""Planar geometric primitives.

Clipping of segments and polylines to disks and boxes, circumdisks, chord
lengths of (rho, theta)-parameterized lines, the coverage radius of a point
set over a disk, and grid-sampled union-of-disks area.  Everything here is a
pure function over immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ._kernels import clipped_length_in_disk, union_disk_cover_count

Point2 = tuple[float, float]


class GeometryError(ValueError):
    """Raised on invalid geometric input (degenerate or out of contract)."""


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise GeometryError("non-finite coordinate")


@dataclass(frozen=True)
class Disk:
    """Closed disk of positive radius."""

    center: Point2
    radius: float

    def __post_init__(self) -> None:
        _check_finite(self.center[0], self.center[1], self.radius)
        if self.radius <= 0:
            raise GeometryError("disk radius must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    def contains(self, points: np.ndarray, atol: float = 0.0) -> np.ndarray:
        d = np.hypot(points[:, 0] - self.center[0], points[:, 1] - self.center[1])
        return d <= self.radius + atol


@dataclass(frozen=True)
class BoxRegion:
    """Closed axis-aligned square of side ``side`` centered at ``center``."""

    center: Point2
    side: float

    def __post_init__(self) -> None:
        _check_finite(self.center[0], self.center[1], self.side)
        if self.side <= 0:
            raise GeometryError("box side must be positive")

    @property
    def area(self) -> float:
        return self.side ** 2

    def bounds(self) -> tuple[float, float, float, float]:
        h = self.side / 2.0
        return (self.center[0] - h, self.center[0] + h,
                self.center[1] - h, self.center[1] + h)

    def contains(self, points: np.ndarray, atol: float = 0.0) -> np.ndarray:
        x0, x1, y0, y1 = self.bounds()
        return ((points[:, 0] >= x0 - atol) & (points[:, 0] <= x1 + atol)
                & (points[:, 1] >= y0 - atol) & (points[:, 1] <= y1 + atol))


@dataclass(frozen=True)
class Annulus:
    """Closed annulus r_inner <= |x - center| <= r_outer."""

    center: Point2
    r_inner: float
    r_outer: float

    def __post_init__(self) -> None:
        _check_finite(self.center[0], self.center[1], self.r_inner, self.r_outer)
        if not 0 <= self.r_inner < self.r_outer:
            raise GeometryError("need 0 <= r_inner < r_outer")

    @property
    def area(self) -> float:
        return math.pi * (self.r_outer ** 2 - self.r_inner ** 2)

    def contains(self, points: np.ndarray, atol: float = 0.0) -> np.ndarray:
        d = np.hypot(points[:, 0] - self.center[0], points[:, 1] - self.center[1])
        return (d >= self.r_inner - atol) & (d <= self.r_outer + atol)


Region = Union[Disk, BoxRegion, Annulus]


def region_area(region: Region) -> float:
    return region.area


@dataclass(frozen=True)
class Segment:
    a: Point2
    b: Point2

    def __post_init__(self) -> None:
        _check_finite(self.a[0], self.a[1], self.b[0], self.b[1])

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


@dataclass(frozen=True)
class Polyline:
    """Piecewise-linear curve with a recorded construction tolerance.

    ``tolerance`` is the maximum Hausdorff deviation from the true curve the
    construction guarantees.
    """

    vertices: np.ndarray
    tolerance: float

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", v)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise GeometryError("polyline needs >= 2 planar vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("non-finite polyline vertex")
        if np.any(np.all(v[1:] == v[:-1], axis=1)):
            raise GeometryError("consecutive polyline vertices must differ")
        if not (self.tolerance > 0 and math.isfinite(self.tolerance)):
            raise GeometryError("polyline tolerance must be positive")
        v.setflags(write=False)

    @property
    def length(self) -> float:
        d = np.diff(self.vertices, axis=0)
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


@dataclass(frozen=True)
class LineRT:
    """Line {x : x1 cos(theta) + x2 sin(theta) = rho}, theta in [0, pi)."""

    rho: float
    theta: float

    def __post_init__(self) -> None:
        _check_finite(self.rho, self.theta)
        if not 0 <= self.theta < math.pi:
            raise GeometryError("theta must lie in [0, pi)")


# ---------------------------------------------------------------------------
# clipping


def _clip_params_to_disk(ax: float, ay: float, bx: float, by: float,
                         d: Disk) -> Optional[tuple[float, float]]:
    """Parameter interval [t0, t1] of a(1-t)+bt inside the closed disk."""
    ux, uy = bx - ax, by - ay
    qx, qy = ax - d.center[0], ay - d.center[1]
    aa = ux * ux + uy * uy
    if aa == 0.0:
        return None
    bb = qx * ux + qy * uy
    cc = qx * qx + qy * qy - d.radius * d.radius
    disc = bb * bb - aa * cc
    if disc <= 0.0:
        return None
    sd = math.sqrt(disc)
    t0 = max((-bb - sd) / aa, 0.0)
    t1 = min((-bb + sd) / aa, 1.0)
    if t1 <= t0:
        return None
    return t0, t1


def clip_segment_to_disk(s: Segment, d: Disk) -> Optional[Segment]:
    """Intersection of a segment with a closed disk, or None if empty.

    Degenerate (single-point) intersections are reported as None.
    """
    params = _clip_params_to_disk(s.a[0], s.a[1], s.b[0], s.b[1], d)
    if params is None:
        return None
    t0, t1 = params
    ax, ay = s.a
    ux, uy = s.b[0] - ax, s.b[1] - ay
    return Segment((ax + t0 * ux, ay + t0 * uy), (ax + t1 * ux, ay + t1 * uy))


def clip_segment_to_box(s: Segment, box: BoxRegion) -> Optional[Segment]:
    """Liang-Barsky clip of a segment against a closed box."""
    x0, x1, y0, y1 = box.bounds()
    ax, ay = s.a
    ux, uy = s.b[0] - ax, s.b[1] - ay
    t0, t1 = 0.0, 1.0
    for p, q in ((-ux, ax - x0), (ux, x1 - ax), (-uy, ay - y0), (uy, y1 - ay)):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        t = q / p
        if p < 0.0:
            if t > t1:
                return None
            if t > t0:
                t0 = t
        else:
            if t < t0:
                return None
            if t < t1:
                t1 = t
    if t1 <= t0:
        return None
    return Segment((ax + t0 * ux, ay + t0 * uy), (ax + t1 * ux, ay + t1 * uy))


def clip_segment_to_convex_polygon(s: Segment, polygon: np.ndarray) -> Optional[Segment]:
    """Clip a segment to a convex polygon given as CCW vertices (n, 2)."""
    ax, ay = s.a
    ux, uy = s.b[0] - ax, s.b[1] - ay
    t0, t1 = 0.0, 1.0
    n = len(polygon)
    for i in range(n):
        px, py = polygon[i]
        qx, qy = polygon[(i + 1) % n]
        # inside test: cross(q - p, x - p) >= 0 for CCW polygons
        ex, ey = qx - px, qy - py
        p = -(ex * uy - ey * ux)
        q = ex * (ay - py) - ey * (ax - px)
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        t = q / p
        if p < 0.0:
            if t > t1:
                return None
            if t > t0:
                t0 = t
        else:
            if t < t0:
                return None
            if t < t1:
                t1 = t
    if t1 <= t0:
        return None
    return Segment((ax + t0 * ux, ay + t0 * uy), (ax + t1 * ux, ay + t1 * uy))


def chord_length(line: LineRT, d: Disk) -> float:
    """Chord length of a line through a disk centered at the origin."""
    if d.center != (0.0, 0.0):
        raise GeometryError("chord_length expects an origin-centered disk")
    if abs(line.rho) > d.radius:
        return 0.0
    return 2.0 * math.sqrt(d.radius ** 2 - line.rho ** 2)


def line_rt_clip_to_disk(line: LineRT, d: Disk) -> Optional[Segment]:
    """Chord of a (rho, theta) line through an arbitrary closed disk."""
    ct, st = math.cos(line.theta), math.sin(line.theta)
    # foot of the perpendicular from the origin, direction along the line
    fx, fy = line.rho * ct, line.rho * st
    dx, dy = -st, ct
    # signed offset of the disk center projected on the line
    s = (d.center[0] - fx) * dx + (d.center[1] - fy) * dy
    dist2 = (fx + s * dx - d.center[0]) ** 2 + (fy + s * dy - d.center[1]) ** 2
    h2 = d.radius ** 2 - dist2
    if h2 <= 0.0:
        return None
    h = math.sqrt(h2)
    return Segment((fx + (s - h) * dx, fy + (s - h) * dy),
                   (fx + (s + h) * dx, fy + (s + h) * dy))


def polyline_length_in_disk(p: Polyline, d: Disk) -> float:
    """Length of the polyline inside the closed disk (sum of clipped pieces)."""
    v = p.vertices
    return clipped_length_in_disk(
        np.ascontiguousarray(v[:-1, 0]), np.ascontiguousarray(v[:-1, 1]),
        np.ascontiguousarray(v[1:, 0]), np.ascontiguousarray(v[1:, 1]),
        d.center[0], d.center[1], d.radius)


def polyline_length_in_box(p: Polyline, box: BoxRegion) -> float:
    total = 0.0
    v = p.vertices
    for i in range(len(v) - 1):
        c = clip_segment_to_box(Segment(tuple(v[i]), tuple(v[i + 1])), box)
        if c is not None:
            total += c.length
    return total


def segments_length_in_disk(a: np.ndarray, b: np.ndarray, d: Disk) -> float:
    """Batch total clipped length; a, b are (n, 2) endpoint arrays."""
    if len(a) == 0:
        return 0.0
    return clipped_length_in_disk(
        np.ascontiguousarray(a[:, 0]), np.ascontiguousarray(a[:, 1]),
        np.ascontiguousarray(b[:, 0]), np.ascontiguousarray(b[:, 1]),
        d.center[0], d.center[1], d.radius)


def segments_distance_to_point(a: np.ndarray, b: np.ndarray, p: Point2) -> np.ndarray:
    """Distances from a fixed point to each segment; a, b are (n, 2) arrays."""
    u = b - a
    denom = np.sum(u * u, axis=1)
    q = np.asarray(p, dtype=float) - a
    t = np.clip(np.sum(q * u, axis=1) / np.where(denom == 0, 1.0, denom), 0.0, 1.0)
    proj = a + t[:, None] * u
    return np.hypot(p[0] - proj[:, 0], p[1] - proj[:, 1])


def point_segment_distance(p: Point2, s: Segment) -> float:
    ax, ay = s.a
    ux, uy = s.b[0] - ax, s.b[1] - ay
    aa = ux * ux + uy * uy
    if aa == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * ux + (p[1] - ay) * uy) / aa
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * ux), p[1] - (ay + t * uy))


def segment_intersects_disk(s: Segment, d: Disk) -> bool:
    return point_segment_distance(d.center, s) <= d.radius


def segment_intersects_box(s: Segment, box: BoxRegion) -> bool:
    if clip_segment_to_box(s, box) is not None:
        return True
    # zero-length clip still counts when an endpoint touches the boundary
    x0, x1, y0, y1 = box.bounds()
    for px, py in (s.a, s.b):
        if x0 <= px <= x1 and y0 <= py <= y1:
            return True
    return False


def rect_intersects_disk(x0: float, x1: float, y0: float, y1: float, d: Disk) -> bool:
    cx = min(max(d.center[0], x0), x1)
    cy = min(max(d.center[1], y0), y1)
    return math.hypot(cx - d.center[0], cy - d.center[1]) <= d.radius


def rect_intersects_box(x0: float, x1: float, y0: float, y1: float, box: BoxRegion) -> bool:
    bx0, bx1, by0, by1 = box.bounds()
    return x0 <= bx1 and bx0 <= x1 and y0 <= by1 and by0 <= y1


def convex_polygon_intersects_region(polygon: np.ndarray, region: Region) -> bool:
    """Closed convex polygon vs closed disk/box intersection test."""
    if isinstance(region, Disk):
        c = region.center
        # center inside polygon?
        if _point_in_convex(polygon, c):
            return True
        n = len(polygon)
        for i in range(n):
            s = Segment(tuple(polygon[i]), tuple(polygon[(i + 1) % n]))
            if point_segment_distance(c, s) <= region.radius:
                return True
        return False
    if isinstance(region, BoxRegion):
        x0, x1, y0, y1 = region.bounds()
        if np.any((polygon[:, 0] >= x0) & (polygon[:, 0] <= x1)
                  & (polygon[:, 1] >= y0) & (polygon[:, 1] <= y1)):
            return True
        if _point_in_convex(polygon, region.center):
            return True
        n = len(polygon)
        for i in range(n):
            if segment_intersects_box(Segment(tuple(polygon[i]), tuple(polygon[(i + 1) % n])), region):
                return True
        return False
    raise GeometryError(f"unsupported region {type(region).__name__}")


def _point_in_convex(polygon: np.ndarray, p: Point2) -> bool:
    n = len(polygon)
    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        if (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) < 0:
            return False
    return True


# ---------------------------------------------------------------------------
# circumdisks and coverage


def circumdisk(p: Point2, q: Point2, r: Point2) -> Disk:
    """Unique disk through three non-collinear points."""
    ax, ay = p
    bx, by = q
    cx, cy = r
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    scale = max(abs(bx - ax), abs(by - ay), abs(cx - ax), abs(cy - ay), 1e-300)
    if abs(d) <= 1e-12 * scale * scale:
        raise GeometryError("degenerate triangle")
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    return Disk((ux, uy), math.hypot(ax - ux, ay - uy))


def circumcenter_radius(pts: np.ndarray, tri: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized circumcenters/radii for an (m, 3) triangle index array."""
    a = pts[tri[:, 0]]
    b = pts[tri[:, 1]]
    c = pts[tri[:, 2]]
    d = 2.0 * (a[:, 0] * (b[:, 1] - c[:, 1]) + b[:, 0] * (c[:, 1] - a[:, 1])
               + c[:, 0] * (a[:, 1] - b[:, 1]))
    a2 = np.sum(a * a, axis=1)
    b2 = np.sum(b * b, axis=1)
    c2 = np.sum(c * c, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = (a2 * (b[:, 1] - c[:, 1]) + b2 * (c[:, 1] - a[:, 1]) + c2 * (a[:, 1] - b[:, 1])) / d
        uy = (a2 * (c[:, 0] - b[:, 0]) + b2 * (a[:, 0] - c[:, 0]) + c2 * (b[:, 0] - a[:, 0])) / d
    centers = np.column_stack([ux, uy])
    radii = np.hypot(a[:, 0] - ux, a[:, 1] - uy)
    return centers, radii


def _as_points(pattern) -> np.ndarray:
    pts = getattr(pattern, "points", pattern)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError("expected an (n, 2) point array")
    return pts


def _pairs_and_vertices(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor pairs and Voronoi vertices; brute path for tiny/degenerate sets."""
    n = len(pts)
    if n >= 4:
        try:
            from scipy.spatial import Voronoi

            vor = Voronoi(pts)
            return np.asarray(vor.ridge_points), vor.vertices
        except Exception:
            if n > 200:
                raise
    pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)], dtype=int)
    verts = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                try:
                    dd = circumdisk(tuple(pts[i]), tuple(pts[j]), tuple(pts[k]))
                except GeometryError:
                    continue
                verts.append(dd.center)
    verts_arr = np.asarray(verts, dtype=float) if verts else np.empty((0, 2))
    return pairs, verts_arr


def coverage_radius(pattern, d: Disk,
                    pairs: Optional[np.ndarray] = None,
                    vertices: Optional[np.ndarray] = None) -> float:
    """Max over x in the disk of the distance to the nearest pattern point.

    Exact: the maximizer is a Voronoi vertex inside the disk, a Voronoi-edge
    crossing of the boundary circle, or the farthest circle point within a
    single cell; all three candidate families are enumerated.  Precomputed
    neighbor ``pairs`` / Voronoi ``vertices`` may be supplied to avoid a
    second Voronoi construction.
    """
    pts = _as_points(pattern)
    n = len(pts)
    if n == 0:
        raise GeometryError("no points")
    cx, cy = d.center
    a = d.radius
    if pairs is None or vertices is None:
        if n == 1:
            pairs, vertices = np.empty((0, 2), dtype=int), np.empty((0, 2))
        else:
            pairs, vertices = _pairs_and_vertices(pts)

    cands = []
    # farthest boundary point per pattern point (antipode of its direction)
    diff = pts - [cx, cy]
    norms = np.hypot(diff[:, 0], diff[:, 1])
    safe = norms > 0
    anti = np.empty_like(pts)
    anti[safe] = [cx, cy] - a * diff[safe] / norms[safe, None]
    anti[~safe] = [cx + a, cy]
    cands.append(anti)
    # Voronoi vertices inside the closed disk
    if len(vertices):
        keep = np.hypot(vertices[:, 0] - cx, vertices[:, 1] - cy) <= a
        if np.any(keep):
            cands.append(vertices[keep])
    # bisector/boundary-circle crossings per neighbor pair
    if len(pairs):
        p = pts[pairs[:, 0]]
        q = pts[pairs[:, 1]]
        mid = (p + q) / 2.0
        t = q - p
        tn = np.hypot(t[:, 0], t[:, 1])
        ok = tn > 0
        dvec = np.column_stack([-t[ok, 1], t[ok, 0]]) / tn[ok, None]
        m = mid[ok]
        mc = m - [cx, cy]
        bb = np.sum(mc * dvec, axis=1)
        ccoef = np.sum(mc * mc, axis=1) - a * a
        disc = bb * bb - ccoef
        hit = disc >= 0
        if np.any(hit):
            sd = np.sqrt(disc[hit])
            for sign in (-1.0, 1.0):
                troot = -bb[hit] + sign * sd
                cands.append(m[hit] + troot[:, None] * dvec[hit])
    cand = np.vstack(cands)
    # evaluate the nearest-point distance at every candidate
    if n * len(cand) <= 2_000_000:
        dmat = np.hypot(cand[:, 0, None] - pts[None, :, 0],
                        cand[:, 1, None] - pts[None, :, 1])
        dmin = dmat.min(axis=1)
    else:
        from scipy.spatial import cKDTree

        dmin, _ = cKDTree(pts).query(cand)
    return float(dmin.max())


def union_of_disks_area(centers: Sequence[Point2] | np.ndarray, r: float,
                        resolution: float) -> float:
    """Grid-sampled area of a union of equal disks.

    Deterministic for fixed inputs; absolute error is bounded by roughly
    (total perimeter) * resolution.
    """
    if resolution <= 0:
        raise GeometryError("resolution must be positive")
    pts = np.asarray(centers, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return 0.0
    if r <= 0:
        raise GeometryError("disk radius must be positive")
    x0 = float(pts[:, 0].min() - r)
    y0 = float(pts[:, 1].min() - r)
    x1 = float(pts[:, 0].max() + r)
    y1 = float(pts[:, 1].max() + r)
    nx = int(math.ceil((x1 - x0) / resolution)) + 1
    ny = int(math.ceil((y1 - y0) / resolution)) + 1
    count = union_disk_cover_count(
        np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
        r, x0, y0, resolution, nx, ny)
    return count * resolution * resolution
