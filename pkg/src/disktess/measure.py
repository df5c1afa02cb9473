"""Functionals of a tessellation realization.

Total edge length inside a disk or box, count of edges meeting the region,
count of cells meeting the region, nearest-point radii (Euclidean and
additively weighted), the integer grid-occupancy radius, and the Delaunay
degree of the origin under the Palm version of a Poisson process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import geom
from .geom import BoxRegion, Disk, Polyline, Region, Segment
from .pointproc import (MarkedPointPattern, PointPattern, origin_index)
from .tess import (Tessellation, TessellationError, _delaunay_pairs,
                   occupancy_radius_from_points)


class MeasureError(ValueError):
    """Raised when a functional is requested outside its contract."""


CSV_COLUMNS = ["seed", "stream", "kind", "a", "length", "W", "V", "W_inf",
               "R", "R_prime", "disc_R", "palm_degree", "certified"]


@dataclass
class Functionals:
    """One CSV row of per-realization functionals (column order above)."""

    seed: int
    stream: int
    kind: str
    a: float
    length: float
    W: Optional[int] = None
    V: Optional[int] = None
    W_inf: Optional[int] = None
    R: Optional[float] = None
    R_prime: Optional[float] = None
    disc_R: Optional[int] = None
    palm_degree: Optional[int] = None
    certified: bool = False

    def row(self) -> list:
        return [getattr(self, c) if getattr(self, c) is not None else ""
                for c in CSV_COLUMNS]


def _region_inside(inner: Region, outer: Region) -> bool:
    if isinstance(inner, Disk) and isinstance(outer, Disk):
        return (math.hypot(inner.center[0] - outer.center[0],
                           inner.center[1] - outer.center[1])
                + inner.radius <= outer.radius + 1e-9)
    if isinstance(inner, BoxRegion) and isinstance(outer, BoxRegion):
        ix0, ix1, iy0, iy1 = inner.bounds()
        ox0, ox1, oy0, oy1 = outer.bounds()
        return (ix0 >= ox0 - 1e-9 and ix1 <= ox1 + 1e-9
                and iy0 >= oy0 - 1e-9 and iy1 <= oy1 + 1e-9)
    if isinstance(inner, BoxRegion) and isinstance(outer, Disk):
        x0, x1, y0, y1 = inner.bounds()
        corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
        d = np.hypot(corners[:, 0] - outer.center[0], corners[:, 1] - outer.center[1])
        return bool(np.all(d <= outer.radius + 1e-9))
    if isinstance(inner, Disk) and isinstance(outer, BoxRegion):
        x0, x1, y0, y1 = outer.bounds()
        return (inner.center[0] - inner.radius >= x0 - 1e-9
                and inner.center[0] + inner.radius <= x1 + 1e-9
                and inner.center[1] - inner.radius >= y0 - 1e-9
                and inner.center[1] + inner.radius <= y1 + 1e-9)
    return False


def _check_reach(t: Tessellation, region: Region) -> None:
    if t.target is not None and not _region_inside(region, t.target):
        raise MeasureError("uncertified overreach: measurement region exceeds "
                           "the construction target")


def total_edge_length(t: Tessellation, region: Region) -> float:
    """Total one-dimensional measure of the edge set inside the closed region."""
    _check_reach(t, region)
    seg_a = []
    seg_b = []
    total = 0.0
    for e in t.edges:
        g = e.geometry
        if isinstance(g, Segment):
            seg_a.append(g.a)
            seg_b.append(g.b)
        elif isinstance(g, Polyline):
            if isinstance(region, Disk):
                total += geom.polyline_length_in_disk(g, region)
            else:
                total += geom.polyline_length_in_box(g, region)
        else:
            raise MeasureError(f"unsupported edge geometry {type(g).__name__}")
    if seg_a:
        a_arr = np.asarray(seg_a, dtype=float)
        b_arr = np.asarray(seg_b, dtype=float)
        if isinstance(region, Disk):
            total += geom.segments_length_in_disk(a_arr, b_arr, region)
        else:
            for p, q in zip(a_arr, b_arr):
                c = geom.clip_segment_to_box(Segment(tuple(p), tuple(q)), region)
                if c is not None:
                    total += c.length
    return total


def _edge_meets(e, region: Region) -> bool:
    g = e.geometry
    if isinstance(g, Segment):
        if isinstance(region, Disk):
            return geom.segment_intersects_disk(g, region)
        return geom.segment_intersects_box(g, region)
    v = g.vertices
    for k in range(len(v) - 1):
        s = Segment(tuple(v[k]), tuple(v[k + 1]))
        if isinstance(region, Disk):
            if geom.segment_intersects_disk(s, region):
                return True
        elif geom.segment_intersects_box(s, region):
            return True
    return False


def count_edges(t: Tessellation, region: Region) -> int:
    """Number of distinct edges meeting the closed region.

    Edge identity follows the generating pair where one exists (a Voronoi
    1-face is one edge regardless of how its clipped pieces are stored).  For
    Manhattan grids this is the number of grid lines crossing the region;
    line tessellations are rejected (their edge count is line-dominated, use
    ``count_lines``).
    """
    _check_reach(t, region)
    if t.kind == "LT":
        raise MeasureError("edge counts are undefined for line tessellations; "
                           "use count_lines")
    if t.kind == "MG":
        n = 0
        for e in t.edges:
            axis, coord = e.tag
            if isinstance(region, Disk):
                ok = (abs(coord - (region.center[0] if axis == "v" else region.center[1]))
                      <= region.radius)
            else:
                x0, x1, y0, y1 = region.bounds()
                ok = x0 <= coord <= x1 if axis == "v" else y0 <= coord <= y1
            if ok and _edge_meets(e, region):
                n += 1
        return n
    if t.kind == "NESTED":
        raise MeasureError("edge counts are not defined for nested tessellations")
    seen = set()
    anon = 0
    for e in t.edges:
        if _edge_meets(e, region):
            if e.pair is not None:
                seen.add(e.pair)
            else:
                anon += 1
    return len(seen) + anon


def count_lines(t: Tessellation, region: Region) -> int:
    """Number of infinite lines of a line tessellation meeting the region."""
    if t.kind != "LT":
        raise MeasureError("count_lines applies to line tessellations only")
    _check_reach(t, region)
    if not isinstance(region, Disk):
        raise MeasureError("line counts are measured on disks")
    sample = t.generator
    n = 0
    for rho, theta in sample.lines:
        d = abs(rho - (region.center[0] * math.cos(theta)
                       + region.center[1] * math.sin(theta)))
        if d <= region.radius:
            n += 1
    return n


def count_cells(t: Tessellation, region: Region) -> int:
    """Number of distinct cells meeting the closed region (1 when no edge does)."""
    _check_reach(t, region)
    if t.kind == "VT":
        ids = set()
        for e in t.edges:
            if _edge_meets(e, region):
                ids.update(e.pair)
        if not ids:
            return 1
        return len(ids)
    if t.kind in ("DT", "MG", "NESTED"):
        if t.cells is None:
            raise MeasureError(f"no cell geometry stored for {t.kind}")
        n = 0
        kind = t.meta.get("cells_kind")
        for c in t.cells:
            if kind == "rect":
                x0, x1, y0, y1 = c
                hit = (geom.rect_intersects_disk(x0, x1, y0, y1, region)
                       if isinstance(region, Disk)
                       else geom.rect_intersects_box(x0, x1, y0, y1, region))
            else:
                hit = geom.convex_polygon_intersects_region(np.asarray(c), region)
            if hit:
                n += 1
        return max(n, 1) if t.kind != "DT" else n
    if t.kind == "JMT":
        lab = t.meta["node_labels"]
        xs = t.meta["node_xs"]
        ys = t.meta["node_ys"]
        GX, GY = np.meshgrid(xs, ys, indexing="ij")
        if isinstance(region, Disk):
            inside = (np.hypot(GX - region.center[0], GY - region.center[1])
                      <= region.radius)
        else:
            x0, x1, y0, y1 = region.bounds()
            inside = (GX >= x0) & (GX <= x1) & (GY >= y0) & (GY <= y1)
        labs = np.unique(lab[inside])
        return max(len(labs), 1)
    raise MeasureError(f"cell counts unsupported for kind {t.kind!r}")


# ---------------------------------------------------------------------------
# radii


def nearest_point_distance(pattern: Union[PointPattern, np.ndarray]) -> float:
    """Distance from the origin to the nearest pattern point."""
    pts = getattr(pattern, "points", pattern)
    if len(pts) == 0:
        raise MeasureError("empty pattern")
    return float(np.min(np.hypot(pts[:, 0], pts[:, 1])))


def jm_nearest_distance(marked: MarkedPointPattern) -> float:
    """Weighted distance |x| + mark from the space-time origin to the nearest site."""
    if marked.n == 0:
        raise MeasureError("empty pattern")
    pts = marked.points
    return float(np.min(np.hypot(pts[:, 0], pts[:, 1]) + marked.marks))


def grid_occupancy_radius(pattern: Union[PointPattern, np.ndarray], a: float) -> int:
    """Smallest integer r >= 2a such that every box Q_r(rz), ||z||_inf = 2,
    contains a point; errors when the pattern window cannot decide it."""
    pts = getattr(pattern, "points", pattern)
    if len(pts) == 0:
        raise MeasureError("empty pattern")
    window = getattr(pattern, "window", None)
    if window is None:
        half = float(np.max(np.abs(pts)))
    elif isinstance(window, BoxRegion):
        half = window.side / 2.0
    elif isinstance(window, Disk):
        half = window.radius / math.sqrt(2.0)  # inscribed box half-side
    else:
        raise MeasureError("unsupported window for occupancy radius")
    r = occupancy_radius_from_points(np.asarray(pts, dtype=float), a, half)
    if r is None:
        raise MeasureError("window too small")
    return r


# ---------------------------------------------------------------------------
# Palm Delaunay degree


def palm_delaunay_degree(pattern: Union[PointPattern, np.ndarray]) -> int:
    """Delaunay degree of the origin; certified against the pattern window.

    Every triangle incident to the origin must have its circumdisk inside the
    window, otherwise unseen points could alter the incident edges.
    """
    pts = np.asarray(getattr(pattern, "points", pattern), dtype=float)
    o = origin_index(pts)
    if len(pts) == 1:
        return 0
    pairs, simplices = _delaunay_pairs(pts)
    window = getattr(pattern, "window", None)
    if window is not None and len(simplices):
        inc = simplices[np.any(simplices == o, axis=1)]
        if len(inc):
            centers, radii = geom.circumcenter_radius(pts, inc)
            if isinstance(window, Disk):
                lim = window.radius
                ok = np.hypot(centers[:, 0] - window.center[0],
                              centers[:, 1] - window.center[1]) + radii <= lim - 1e-9
            elif isinstance(window, BoxRegion):
                x0, x1, y0, y1 = window.bounds()
                ok = ((centers[:, 0] - radii >= x0 + 1e-9)
                      & (centers[:, 0] + radii <= x1 - 1e-9)
                      & (centers[:, 1] - radii >= y0 + 1e-9)
                      & (centers[:, 1] + radii <= y1 - 1e-9))
            else:
                raise MeasureError("unsupported window for degree certification")
            if not np.all(ok):
                raise MeasureError("degree uncertified: an incident circumdisk "
                                   "leaves the window")
    return int(np.sum(np.any(pairs == o, axis=1)))


def sample_palm_delaunay_degree(intensity: float, seed: int, stream: int,
                                max_window_factor: float = 512.0) -> int:
    """Adaptive-window Delaunay degree of the origin for a Palm Poisson pattern."""
    from .pointproc import PalmPoissonModel, growable_disk_sampler

    grower = growable_disk_sampler(PalmPoissonModel(intensity), seed, stream)
    M = 4.0
    while True:
        grower.extend_to(M)
        try:
            return palm_delaunay_degree(grower.pattern())
        except MeasureError:
            if M >= max_window_factor:
                raise
            M *= 2.0
