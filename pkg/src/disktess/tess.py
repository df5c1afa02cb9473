"""Tessellation construction restricted to a target region.

Voronoi and Delaunay diagrams come with stabilization certificates: the
sampling window grows until no point outside it can influence the diagram
inside the target disk, so the returned restriction provably equals the
infinite-volume one.  Johnson-Mehl diagrams are extracted as labeled
polylines from the additively-weighted nearest-site field on a grid.  Line
tessellations, Manhattan grids and nested (two-layer) tessellations are
built directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.spatial import Delaunay as _SciDelaunay
from scipy.spatial import Voronoi as _SciVoronoi
from scipy.spatial import QhullError

from . import geom, pointproc
from ._kernels import jm_nearest_field
from .geom import (Annulus, BoxRegion, Disk, Polyline, Region, Segment,
                   circumcenter_radius, coverage_radius)
from .pointproc import (AxisSample, LineProcessSample, MarkedPointPattern,
                        Model, PointPattern, derive_seed, growable_box_sampler,
                        growable_disk_sampler, sample_axis_poisson,
                        sample_line_process)

# certificate slack on closed inequalities, for float safety
_CERT_SLACK = 1e-9


class TessellationError(RuntimeError):
    """Raised when a build precondition fails or a window cap is exceeded."""


@dataclass
class Edge:
    """One tessellation edge: a segment or polyline with stable identity.

    ``pair`` holds the generating pair of point indices where that notion
    exists (Delaunay endpoints, the Voronoi/Johnson-Mehl dual pair).  ``tag``
    carries kind-specific data: ('v'|'h', coord) for grid lines, ('rho', r)
    for line-tessellation chords, ('cell', id) for second-layer pieces.
    """

    id: int
    geometry: Union[Segment, Polyline]
    pair: Optional[tuple[int, int]] = None
    tag: Optional[tuple] = None


@dataclass
class Tessellation:
    kind: str  # 'VT' | 'DT' | 'JMT' | 'LT' | 'MG' | 'NESTED'
    edges: list[Edge]
    cells: Optional[list] = None
    generator: object = None
    certified: bool = False
    window_radius_used: float = math.nan
    target: Optional[Region] = None
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Voronoi / Delaunay primitives


def _collinear_rank(pts: np.ndarray) -> bool:
    if len(pts) < 3:
        return True
    centered = pts - pts.mean(axis=0)
    return np.linalg.matrix_rank(centered, tol=1e-12 * max(1.0, np.abs(centered).max())) < 2


def _collinear_bisectors(pts: np.ndarray, far: float) -> list[tuple[tuple[int, int], Segment]]:
    d = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(d, full_matrices=False)
    axis = vt[0]
    order = np.argsort(pts @ axis)
    out = []
    for k in range(len(order) - 1):
        i, j = int(order[k]), int(order[k + 1])
        if np.all(pts[i] == pts[j]):
            continue
        mid = (pts[i] + pts[j]) / 2.0
        t = pts[j] - pts[i]
        n = np.array([-t[1], t[0]]) / np.hypot(t[0], t[1])
        ln = far + float(np.hypot(mid[0], mid[1]))
        out.append(((i, j), Segment(tuple(mid - ln * n), tuple(mid + ln * n))))
    return out


def _voronoi_edge_arrays(pts: np.ndarray, far: float):
    """Voronoi 1-faces as endpoint arrays.

    Returns (pairs (m,2), A (m,2), B (m,2), vertices).  Rays are extended far
    enough that the stored segment contains the full intersection of the true
    unbounded edge with any disk of radius ``far`` around the origin.
    """
    n = len(pts)
    empty = (np.empty((0, 2), dtype=int), np.empty((0, 2)), np.empty((0, 2)),
             np.empty((0, 2)))
    if n <= 1:
        return empty
    if n == 2 or (n <= 50 and _collinear_rank(pts)):
        edges = _collinear_bisectors(pts, far)
        if not edges:
            return empty
        pairs = np.array([p for p, _ in edges], dtype=int)
        A = np.array([s.a for _, s in edges])
        B = np.array([s.b for _, s in edges])
        return pairs, A, B, np.empty((0, 2))
    if n == 3:
        try:
            dd = geom.circumdisk(tuple(pts[0]), tuple(pts[1]), tuple(pts[2]))
        except geom.GeometryError:
            edges = _collinear_bisectors(pts, far)
            pairs = np.array([p for p, _ in edges], dtype=int)
            A = np.array([s.a for _, s in edges])
            B = np.array([s.b for _, s in edges])
            return pairs, A, B, np.empty((0, 2))
        c = np.array(dd.center)
        pairs, A, B = [], [], []
        for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            t = pts[j] - pts[i]
            u = np.array([-t[1], t[0]]) / np.hypot(t[0], t[1])
            if np.dot(u, pts[i] - pts[k]) < 0:
                u = -u
            ln = far + float(np.hypot(c[0], c[1]))
            pairs.append((i, j))
            A.append(c)
            B.append(c + ln * u)
        return (np.array(pairs, dtype=int), np.array(A), np.array(B),
                c.reshape(1, 2))
    try:
        vor = _SciVoronoi(pts)
    except QhullError:
        edges = _collinear_bisectors(pts, far)
        if not edges:
            return empty
        pairs = np.array([p for p, _ in edges], dtype=int)
        A = np.array([s.a for _, s in edges])
        B = np.array([s.b for _, s in edges])
        return pairs, A, B, np.empty((0, 2))
    rp = np.asarray(vor.ridge_points, dtype=int)
    rv = np.asarray(vor.ridge_vertices, dtype=int)
    verts = vor.vertices
    m = len(rp)
    A = np.empty((m, 2))
    B = np.empty((m, 2))
    finite = (rv[:, 0] >= 0) & (rv[:, 1] >= 0)
    A[finite] = verts[rv[finite, 0]]
    B[finite] = verts[rv[finite, 1]]
    inf_idx = np.nonzero(~finite)[0]
    if len(inf_idx):
        center = pts.mean(axis=0)
        for k in inf_idx:
            i, j = rp[k]
            t = pts[j] - pts[i]
            t = t / np.hypot(t[0], t[1])
            u = np.array([-t[1], t[0]])
            mid = (pts[i] + pts[j]) / 2.0
            v0, v1 = rv[k]
            if v0 < 0 and v1 < 0:
                # unbounded line (degenerate layout): store the full bisector
                ln = far + float(np.hypot(mid[0], mid[1]))
                A[k] = mid - ln * u
                B[k] = mid + ln * u
                continue
            v = verts[v1 if v0 < 0 else v0]
            if np.dot(mid - center, u) < 0:
                u = -u
            ln = far + float(np.hypot(v[0], v[1]))
            A[k] = v
            B[k] = v + ln * u
    keep = np.any(A != B, axis=1)
    return rp[keep], A[keep], B[keep], verts


def _voronoi_edges(pts: np.ndarray, far: float):
    """Voronoi 1-faces as ((i, j) dual pair, Segment) plus diagram data."""
    pairs, A, B, verts = _voronoi_edge_arrays(pts, far)
    edges = [((int(i), int(j)), Segment(tuple(a), tuple(b)))
             for (i, j), a, b in zip(pairs, A, B)]
    return edges, pairs, verts


def _collinear_chain(pts: np.ndarray) -> np.ndarray:
    d = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(d, full_matrices=False)
    order = np.argsort(pts @ vt[0])
    pairs = np.column_stack([order[:-1], order[1:]])
    return np.sort(pairs, axis=1)


def _delaunay_simplices(pts: np.ndarray) -> Optional[np.ndarray]:
    """Delaunay simplices; None when the input is degenerate (collinear)."""
    if len(pts) < 3:
        return None
    if len(pts) <= 50 and _collinear_rank(pts):
        return None
    try:
        return _SciDelaunay(pts).simplices
    except QhullError:
        return None


def _unique_pairs(simplices: np.ndarray) -> np.ndarray:
    pairs = np.vstack([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [0, 2]]])
    pairs = np.sort(pairs, axis=1)
    # lexicographic dedup via a scalar key (indices are small nonneg ints)
    key = pairs[:, 0].astype(np.int64) * (pairs.max() + 1) + pairs[:, 1]
    _, idx = np.unique(key, return_index=True)
    return pairs[np.sort(idx)]


def _delaunay_pairs(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Delaunay edge pairs and simplices, with a collinear-chain fallback."""
    n = len(pts)
    if n < 2:
        return np.empty((0, 2), dtype=int), np.empty((0, 3), dtype=int)
    if n == 2:
        return np.array([[0, 1]]), np.empty((0, 3), dtype=int)
    s = _delaunay_simplices(pts)
    if s is None:
        return _collinear_chain(pts), np.empty((0, 3), dtype=int)
    return _unique_pairs(s), s


def build_delaunay(pattern: PointPattern) -> Tessellation:
    """Delaunay triangulation of the whole pattern (no restriction)."""
    pts = pattern.points
    pairs, simplices = _delaunay_pairs(pts)
    edges = [Edge(k, Segment(tuple(pts[i]), tuple(pts[j])), pair=(int(i), int(j)))
             for k, (i, j) in enumerate(pairs)]
    cells = [pts[s] for s in simplices]
    return Tessellation("DT", edges, cells=cells, generator=pattern,
                        certified=False, meta={"cells_kind": "triangle"})


def build_voronoi(pattern: PointPattern) -> Tessellation:
    """Voronoi diagram of the whole pattern; rays clipped far beyond the window."""
    pts = pattern.points
    w = pattern.window
    if isinstance(w, Disk):
        extent = w.radius + math.hypot(*w.center)
    elif isinstance(w, BoxRegion):
        extent = w.side * math.sqrt(2) / 2 + math.hypot(*w.center)
    else:
        extent = w.r_outer + math.hypot(*w.center)
    raw, _, _ = _voronoi_edges(pts, far=2.0 * max(extent, 1.0))
    edges = [Edge(k, seg, pair=pair) for k, (pair, seg) in enumerate(raw)]
    return Tessellation("VT", edges, generator=pattern, certified=False)


# ---------------------------------------------------------------------------
# certified Voronoi restriction


def restrict_voronoi_certified(model: Model, target: Disk, seed: int, stream: int,
                               max_window_factor: float = 512.0,
                               extra_doublings: int = 0) -> Tessellation:
    """Voronoi edges meeting the target disk, equal to the infinite-volume ones.

    Windows double from 4a until the coverage radius of the sample over the
    target is at most (window - a): then no unseen point can be nearest to
    any point of the target, so the returned edge set is exact.  Models with
    a bounded window (Gibbs) or a hit cap yield ``certified=False``.
    """
    a = target.radius
    shift = np.asarray(target.center, dtype=float)
    grower = growable_disk_sampler(model, seed, stream)
    M = 4.0 * a
    certified = False
    pts = np.empty((0, 2))
    epairs = np.empty((0, 2), dtype=int)
    ea = eb = np.empty((0, 2))
    reached = 0.0
    while True:
        grower.extend_to(M)
        reached = grower.radius
        pts = grower.points
        if len(pts) >= 1:
            epairs, ea, eb, verts = _voronoi_edge_arrays(pts, far=4.0 * max(reached, a))
            cov = coverage_radius(pts, Disk((0.0, 0.0), a), pairs=epairs, vertices=verts)
            if cov + _CERT_SLACK <= reached - a:
                certified = True
                break
        if reached < M or M >= max_window_factor * a:
            break
        M *= 2.0
    for _ in range(extra_doublings if certified else 0):
        # window-stability hook: reveal the same realization further
        M *= 2.0
        grower.extend_to(M)
        reached = grower.radius
        pts = grower.points
        epairs, ea, eb, _ = _voronoi_edge_arrays(pts, far=4.0 * max(reached, a))
    edges = []
    if len(epairs):
        near = geom.segments_distance_to_point(ea, eb, (0.0, 0.0)) <= a
        if shift.any():
            ea = ea + shift
            eb = eb + shift
        for k, idx in enumerate(np.nonzero(near)[0]):
            i, j = epairs[idx]
            edges.append(Edge(k, Segment(tuple(ea[idx]), tuple(eb[idx])),
                              pair=(int(i), int(j))))
    gen = grower.pattern()
    meta = {"nearest_radius": float(np.hypot(pts[:, 0], pts[:, 1]).min()) if len(pts) else math.inf}
    if shift.any():
        gen = PointPattern(gen.points + shift, Disk(tuple(shift), max(reached, 1e-300)),
                           gen.intensity_hint, seed, stream)
    return Tessellation("VT", edges, generator=gen, certified=certified,
                        window_radius_used=reached, target=target, meta=meta)


# ---------------------------------------------------------------------------
# certified Delaunay restriction


def occupancy_radius_from_points(pts: np.ndarray, a: float,
                                 window_half: float) -> Optional[int]:
    """Smallest integer r >= 2a with every box of side r centered at r*z,
    ||z||_inf = 2, occupied; None when undecidable within the sampled window."""
    r = max(int(math.ceil(2.0 * a)), 1)
    zs = [(zx, zy) for zx in range(-2, 3) for zy in range(-2, 3)
          if max(abs(zx), abs(zy)) == 2]
    while 2.5 * r <= window_half + 1e-12:
        ok = True
        for zx, zy in zs:
            cx, cy = r * zx, r * zy
            inside = ((np.abs(pts[:, 0] - cx) <= r / 2.0)
                      & (np.abs(pts[:, 1] - cy) <= r / 2.0))
            if not np.any(inside):
                ok = False
                break
        if ok:
            return r
        r += 1
    return None


def _triangles_meeting_disk(pts: np.ndarray, simplices: np.ndarray, a: float) -> np.ndarray:
    """Boolean mask of simplices whose closed triangle meets the closed disk B_a."""
    if len(simplices) == 0:
        return np.zeros(0, dtype=bool)
    tri = pts[simplices]  # (m, 3, 2)
    vert_in = np.any(np.hypot(tri[:, :, 0], tri[:, :, 1]) <= a, axis=1)
    # origin inside triangle (sign test)
    def _cross_sign(p, q):
        return p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]
    d0 = _cross_sign(tri[:, 1] - tri[:, 0], -tri[:, 0])
    d1 = _cross_sign(tri[:, 2] - tri[:, 1], -tri[:, 1])
    d2 = _cross_sign(tri[:, 0] - tri[:, 2], -tri[:, 2])
    contains = ((d0 >= 0) & (d1 >= 0) & (d2 >= 0)) | ((d0 <= 0) & (d1 <= 0) & (d2 <= 0))
    # any edge within distance a of the origin
    near_edge = np.zeros(len(simplices), dtype=bool)
    for e0, e1 in ((0, 1), (1, 2), (2, 0)):
        p = tri[:, e0]
        q = tri[:, e1]
        u = q - p
        denom = np.sum(u * u, axis=1)
        t = np.clip(-np.sum(p * u, axis=1) / np.where(denom == 0, 1.0, denom), 0.0, 1.0)
        proj = p + t[:, None] * u
        near_edge |= np.hypot(proj[:, 0], proj[:, 1]) <= a
    return vert_in | contains | near_edge


def restrict_delaunay_certified(model: Model, target: Disk, seed: int, stream: int,
                                max_window_factor: float = 512.0,
                                extra_doublings: int = 0) -> Tessellation:
    """Delaunay edges meeting the target disk with per-edge emptiness certificates.

    The sampling box starts at twice the 6r occupancy scale and doubles until
    every triangle meeting the target has its circumdisk strictly inside the
    window; such circumdisks are provably point-free for the infinite pattern,
    so the restriction is exact.
    """
    if target.center != (0.0, 0.0):
        raise TessellationError("Delaunay restriction expects an origin-centered target")
    a = target.radius
    grower = growable_box_sampler(model, seed, stream)
    cap_side = 12.0 * max_window_factor * a
    L = 5.0 * (math.ceil(2 * a) + 3)
    disc_r = None
    while disc_r is None:
        grower.extend_to(L)
        disc_r = occupancy_radius_from_points(grower.points, a, L / 2.0)
        if disc_r is None:
            if L >= cap_side:
                break
            L = min(2 * L, cap_side)
    certified = False
    kept = np.empty((0, 3), dtype=int)
    pts = grower.points
    if disc_r is not None:
        L = max(L, 12.0 * disc_r)
        while True:
            grower.extend_to(L)
            pts = grower.points
            simplices = _delaunay_simplices(pts)
            if simplices is None:
                break
            meet = _triangles_meeting_disk(pts, simplices, a)
            kept = simplices[meet]
            if len(kept):
                centers, radii = circumcenter_radius(pts, kept)
                half = L / 2.0
                inside = ((np.abs(centers[:, 0]) + radii < half - _CERT_SLACK)
                          & (np.abs(centers[:, 1]) + radii < half - _CERT_SLACK))
                if np.all(inside):
                    certified = True
                    break
            else:
                break  # no triangles meet the target (degenerate sparse sample)
            if L >= cap_side:
                break
            L = min(2 * L, cap_side)
    for _ in range(extra_doublings if certified else 0):
        # window-stability hook: reveal the same realization further
        L *= 2.0
        grower.extend_to(L)
        pts = grower.points
        simplices = _delaunay_simplices(pts)
        meet = _triangles_meeting_disk(pts, simplices, a)
        kept = simplices[meet]
    pairs = _unique_pairs(kept) if len(kept) else np.empty((0, 2), dtype=int)
    origin_disk = Disk((0.0, 0.0), a)
    edges = []
    k = 0
    for i, j in pairs:
        seg = Segment(tuple(pts[i]), tuple(pts[j]))
        if geom.segment_intersects_disk(seg, origin_disk):
            edges.append(Edge(k, seg, pair=(int(i), int(j))))
            k += 1
    cells = [pts[s] for s in kept]
    gen = grower.pattern()
    return Tessellation("DT", edges, cells=cells, generator=gen, certified=certified,
                        window_radius_used=grower.side / 2.0, target=target,
                        meta={"disc_R": disc_r, "window_side": grower.side,
                              "cells_kind": "triangle"})


# ---------------------------------------------------------------------------
# Johnson-Mehl construction


def _bisection_crossings(A, B, pi, ti, pj, tj, iters: int = 48):
    """Vectorized bisection for the weighted-bisector crossing on segments A-B.

    f(t) = d_i(P(t)) - d_j(P(t)) with f(0) <= 0 <= f(1); returns points."""
    lo = np.zeros(len(A))
    hi = np.ones(len(A))
    U = B - A
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        P = A + mid[:, None] * U
        f = (np.hypot(P[:, 0] - pi[:, 0], P[:, 1] - pi[:, 1]) + ti
             - np.hypot(P[:, 0] - pj[:, 0], P[:, 1] - pj[:, 1]) - tj)
        neg = f <= 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    t = (lo + hi) / 2.0
    return A + t[:, None] * U


def _resolve_crossings(pts: np.ndarray, marks: np.ndarray, A: np.ndarray,
                       B: np.ndarray, li: np.ndarray, lj: np.ndarray,
                       side_ids: np.ndarray, max_depth: int = 4):
    """Polish bisector crossings on grid links, recovering hidden thin cells.

    Each (A, B) bracket carries the nearest-site labels of its endpoints.  A
    polished point whose global nearest site k differs from both labels lies
    inside a cell thinner than the link; the bracket is split at that point
    into (A, P) with labels (li, k) and (P, B) with labels (k, lj) and solved
    again, so the thin cell's boundary is still extracted.  Returns
    (points, sorted pairs, owning link ids) of the on-bisector crossings.
    """
    px = np.ascontiguousarray(pts[:, 0])
    py = np.ascontiguousarray(pts[:, 1])
    mk = np.ascontiguousarray(marks)
    out_p, out_pair, out_side = [], [], []
    for _ in range(max_depth):
        if len(A) == 0:
            break
        P = _bisection_crossings(A, B, pts[li], marks[li], pts[lj], marks[lj])
        kidx, dmin = jm_nearest_field(px, py, mk,
                                      np.ascontiguousarray(P[:, 0]),
                                      np.ascontiguousarray(P[:, 1]))
        dpair = np.hypot(P[:, 0] - pts[li, 0], P[:, 1] - pts[li, 1]) + marks[li]
        valid = dpair - dmin <= 1e-9 * (1.0 + np.abs(dmin))
        if np.any(valid):
            out_p.append(P[valid])
            pairs = np.column_stack([np.minimum(li, lj), np.maximum(li, lj)])
            out_pair.append(pairs[valid])
            out_side.append(side_ids[valid])
        bad = ~valid
        if not np.any(bad):
            break
        k = kidx[bad]
        A, B, li, lj, side_ids = (np.vstack([A[bad], P[bad]]),
                                  np.vstack([P[bad], B[bad]]),
                                  np.concatenate([li[bad], k]),
                                  np.concatenate([k, lj[bad]]),
                                  np.concatenate([side_ids[bad], side_ids[bad]]))
    if out_p:
        return (np.vstack(out_p), np.vstack(out_pair).astype(np.int64),
                np.concatenate(out_side))
    return (np.empty((0, 2)), np.empty((0, 2), dtype=np.int64),
            np.empty(0, dtype=np.int64))


def _chain_polylines(segments: list[tuple[tuple, tuple]]) -> list[np.ndarray]:
    """Chain mini-segments sharing endpoints into maximal vertex paths."""
    def key(p):
        return (round(p[0] * 1e9), round(p[1] * 1e9))

    adj: dict[tuple, list[tuple[int, int]]] = {}
    for idx, (p, q) in enumerate(segments):
        adj.setdefault(key(p), []).append((idx, 0))
        adj.setdefault(key(q), []).append((idx, 1))
    used = [False] * len(segments)
    chains = []

    def walk(start_idx: int, start_end: int) -> list[tuple]:
        used[start_idx] = True
        seg = segments[start_idx]
        path = [seg[start_end], seg[1 - start_end]]
        while True:
            k = key(path[-1])
            nxt = next(((i, e) for i, e in adj.get(k, []) if not used[i]), None)
            if nxt is None:
                return path
            i, e = nxt
            used[i] = True
            path.append(segments[i][1 - e])

    # open chains first (endpoints of degree 1), then leftover cycles
    for k, entries in adj.items():
        if len(entries) == 1:
            i, e = entries[0]
            if not used[i]:
                chains.append(walk(i, e))
    for i in range(len(segments)):
        if not used[i]:
            chains.append(walk(i, 0))
    out = []
    for path in chains:
        arr = np.asarray(path, dtype=float)
        keep = np.ones(len(arr), dtype=bool)
        keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
        arr = arr[keep]
        if len(arr) >= 2:
            out.append(arr)
    return out


def build_jmt_in_disk(marked_model: Model, target: Disk, grid_step: float,
                      seed: int, stream: int,
                      max_window_factor: float = 512.0,
                      extra_doublings: int = 0) -> Tessellation:
    """Johnson-Mehl tessellation inside the target disk.

    The sampling disk grows until the nearest weighted distance r' to the
    space-time origin is witnessed inside the window, then extends to
    r' + 3a, which determines every nearest-site identity over the target.
    Edges are zero-crossings of the two-nearest-site margin extracted on a
    grid of pitch ``grid_step`` and polished by bisection, grouped into one
    polyline set per generating pair.
    """
    if target.center != (0.0, 0.0):
        raise TessellationError("Johnson-Mehl construction expects an origin-centered target")
    if grid_step <= 0:
        raise TessellationError("grid_step must be positive")
    a = target.radius
    grower = growable_disk_sampler(marked_model, seed, stream)
    if not hasattr(grower, "marked_pattern"):
        raise TessellationError("Johnson-Mehl construction needs a marked model")
    M = max(2.0 * a, 1.0)
    r_prime = math.inf
    while True:
        grower.extend_to(M)
        pts = grower.points
        if len(pts):
            r_prime = float(np.min(np.hypot(pts[:, 0], pts[:, 1]) + grower.marks))
            if r_prime <= M:
                break
        if M >= max_window_factor * a:
            raise TessellationError("empty sample: window cap exceeded while "
                                    "searching for the nearest weighted site")
        M *= 2.0
    M_final = max(M, r_prime + 3.0 * a)
    grower.extend_to(M_final)
    for _ in range(extra_doublings):
        # window-stability hook: reveal the same realization further
        M_final *= 2.0
        grower.extend_to(M_final)
    pts = grower.points
    marks = np.asarray(grower.marks)

    h = float(grid_step)
    half = a + h
    n_side = int(math.ceil(2.0 * half / h)) + 1
    xs = -half + h * np.arange(n_side)
    ys = -half + h * np.arange(n_side)
    GX, GY = np.meshgrid(xs, ys, indexing="ij")
    labels, _ = jm_nearest_field(np.ascontiguousarray(pts[:, 0]),
                                 np.ascontiguousarray(pts[:, 1]),
                                 np.ascontiguousarray(marks),
                                 np.ascontiguousarray(GX.ravel()),
                                 np.ascontiguousarray(GY.ravel()))
    lab = labels.reshape(n_side, n_side)

    # crossings on grid links where the nearest-site label changes
    seg_a = []
    seg_b = []
    seg_li = []
    seg_lj = []
    cross_side = []  # (axis, i, j) of the owning link
    for axis in (0, 1):
        if axis == 0:
            la, lb = lab[:-1, :], lab[1:, :]
        else:
            la, lb = lab[:, :-1], lab[:, 1:]
        ii, jj = np.nonzero(la != lb)
        if len(ii) == 0:
            continue
        if axis == 0:
            seg_a.append(np.column_stack([xs[ii], ys[jj]]))
            seg_b.append(np.column_stack([xs[ii + 1], ys[jj]]))
            seg_li.append(lab[ii, jj])
            seg_lj.append(lab[ii + 1, jj])
        else:
            seg_a.append(np.column_stack([xs[ii], ys[jj]]))
            seg_b.append(np.column_stack([xs[ii], ys[jj + 1]]))
            seg_li.append(lab[ii, jj])
            seg_lj.append(lab[ii, jj + 1])
        cross_side.extend([(axis, int(i), int(j)) for i, j in zip(ii, jj)])
    P, pr, side_ids = _resolve_crossings(
        pts, marks,
        np.vstack(seg_a) if seg_a else np.empty((0, 2)),
        np.vstack(seg_b) if seg_b else np.empty((0, 2)),
        np.concatenate(seg_li).astype(np.int64) if seg_li else np.empty(0, dtype=np.int64),
        np.concatenate(seg_lj).astype(np.int64) if seg_lj else np.empty(0, dtype=np.int64),
        np.arange(len(cross_side), dtype=np.int64))

    # group crossings by grid square and emit mini-segments
    by_square: dict[tuple[int, int], list[int]] = {}
    for idx in range(len(P)):
        axis, i, j = cross_side[int(side_ids[idx])]
        if axis == 0:  # link (i,j)-(i+1,j): bottom side of square (i,j), top of (i,j-1)
            squares = ((i, j), (i, j - 1))
        else:  # link (i,j)-(i,j+1): left side of square (i,j), right of (i-1,j)
            squares = ((i, j), (i - 1, j))
        for sq in squares:
            if 0 <= sq[0] < n_side - 1 and 0 <= sq[1] < n_side - 1:
                by_square.setdefault(sq, []).append(idx)

    segs_by_pair: dict[tuple[int, int], list[tuple[tuple, tuple]]] = {}
    for sq, idxs in by_square.items():
        groups: dict[tuple[int, int], list[int]] = {}
        for idx in idxs:
            groups.setdefault((int(pr[idx, 0]), int(pr[idx, 1])), []).append(idx)
        multi = len(groups) > 1 or any(len(g) != 2 for g in groups.values())
        if multi and len(idxs) > 1:
            centroid = tuple(P[idxs].mean(axis=0))
            for idx in idxs:
                p = tuple(P[idx])
                if p != centroid:
                    segs_by_pair.setdefault((int(pr[idx, 0]), int(pr[idx, 1])), []) \
                        .append((p, centroid))
        else:
            for pair_key, g in groups.items():
                if len(g) == 2:
                    p, q = tuple(P[g[0]]), tuple(P[g[1]])
                    if p != q:
                        segs_by_pair.setdefault(pair_key, []).append((p, q))

    edges = []
    k = 0
    for pair_key in sorted(segs_by_pair):
        for chain in _chain_polylines(segs_by_pair[pair_key]):
            edges.append(Edge(k, Polyline(chain, tolerance=h), pair=pair_key))
            k += 1

    meta = {"r_prime": r_prime, "grid_step": h, "node_labels": lab,
            "node_xs": xs, "node_ys": ys,
            "cross_points": P, "cross_pairs": pr,
            "approx_cells": h > 1e-3, "cells_kind": None}
    return Tessellation("JMT", edges, generator=grower.marked_pattern(),
                        certified=True, window_radius_used=M_final, target=target,
                        meta=meta)


# ---------------------------------------------------------------------------
# line tessellation and Manhattan grid


def build_lt_in_disk(lines: LineProcessSample, target: Disk) -> Tessellation:
    """Chords of the sampled lines through the target disk."""
    need = target.radius + math.hypot(*target.center)
    if lines.rho_max < need - 1e-12:
        raise TessellationError("uncovered target: line sample strip too narrow")
    edges = []
    k = 0
    w_inf = 0
    for rho, theta in lines.lines:
        seg = geom.line_rt_clip_to_disk(geom.LineRT(float(rho), float(theta)), target)
        dist_to_center = abs(rho - (target.center[0] * math.cos(theta)
                                    + target.center[1] * math.sin(theta)))
        if dist_to_center <= target.radius:
            w_inf += 1
        if seg is not None:
            edges.append(Edge(k, seg, tag=("rho", float(rho))))
            k += 1
    return Tessellation("LT", edges, generator=lines, certified=True,
                        window_radius_used=lines.rho_max, target=target,
                        meta={"w_inf": w_inf})


def build_mg(yv: AxisSample, yh: AxisSample, window: BoxRegion) -> Tessellation:
    """Manhattan grid: vertical lines at yv, horizontal at yh, clipped to the window."""
    x0, x1, y0, y1 = window.bounds()
    if yv.interval[0] > x0 + 1e-12 or yv.interval[1] < x1 - 1e-12:
        raise TessellationError("window not covered by the vertical axis sample")
    if yh.interval[0] > y0 + 1e-12 or yh.interval[1] < y1 - 1e-12:
        raise TessellationError("window not covered by the horizontal axis sample")
    vcoords = yv.coords[(yv.coords > x0) & (yv.coords < x1)]
    hcoords = yh.coords[(yh.coords > y0) & (yh.coords < y1)]
    edges = []
    k = 0
    for x in vcoords:
        edges.append(Edge(k, Segment((float(x), y0), (float(x), y1)), tag=("v", float(x))))
        k += 1
    for y in hcoords:
        edges.append(Edge(k, Segment((x0, float(y)), (x1, float(y))), tag=("h", float(y))))
        k += 1
    xs = np.concatenate([[x0], vcoords, [x1]])
    ys = np.concatenate([[y0], hcoords, [y1]])
    cells = [(float(xs[i]), float(xs[i + 1]), float(ys[j]), float(ys[j + 1]))
             for i in range(len(xs) - 1) for j in range(len(ys) - 1)]
    return Tessellation("MG", edges, cells=cells, generator=(yv, yh), certified=True,
                        window_radius_used=window.side / 2.0, target=window,
                        meta={"n_v": len(vcoords), "n_h": len(hcoords),
                              "cells_kind": "rect"})


# ---------------------------------------------------------------------------
# nested tessellations


@dataclass(frozen=True)
class VoronoiLayer:
    model: Model


@dataclass(frozen=True)
class MgLayer:
    lam_v: float
    lam_h: float


@dataclass(frozen=True)
class LineLayer:
    intensity: float


LayerSpec = Union[VoronoiLayer, MgLayer, LineLayer]


def voronoi_cell_polygon(pts: np.ndarray, i: int, neighbors: np.ndarray,
                         half: float) -> np.ndarray:
    """Convex polygon of cell i: a big box cut by each neighbor bisector."""
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    poly = poly + pts[i]
    for j in neighbors:
        mid = (pts[i] + pts[j]) / 2.0
        nrm = pts[j] - pts[i]  # keep (x - mid) . nrm <= 0
        out = []
        n = len(poly)
        if n == 0:
            break
        vals = (poly - mid) @ nrm
        for k in range(n):
            cur, nxt = poly[k], poly[(k + 1) % n]
            vc, vn = vals[k], vals[(k + 1) % n]
            if vc <= 0:
                out.append(cur)
            if (vc < 0 < vn) or (vn < 0 < vc):
                t = vc / (vc - vn)
                out.append(cur + t * (nxt - cur))
        poly = np.asarray(out) if out else np.empty((0, 2))
        vals = None
    return poly


def _voronoi_cells_meeting(tess: Tessellation, region: Region) -> list[tuple[int, np.ndarray]]:
    """(generator index, polygon) for first-layer Voronoi cells meeting the region."""
    pattern = tess.generator
    pts = pattern.points
    if len(pts) == 1:
        ids = {0}
    else:
        ids = set()
        for e in tess.edges:
            ids.update(e.pair)
        # the cell containing the region center
        center = region.center
        d = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1])
        ids.add(int(np.argmin(d)))
    neighbor_map: dict[int, list[int]] = {}
    if len(pts) > 1:
        pairs, _ = geom._pairs_and_vertices(pts)
        for i, j in pairs:
            neighbor_map.setdefault(int(i), []).append(int(j))
            neighbor_map.setdefault(int(j), []).append(int(i))
    half = 2.0 * max(tess.window_radius_used, 1.0)
    out = []
    for i in sorted(ids):
        poly = voronoi_cell_polygon(pts, i, neighbor_map.get(i, []), half)
        if len(poly) >= 3 and geom.convex_polygon_intersects_region(poly, region):
            out.append((i, poly))
    return out


def _region_enclosing_disk(region: Region) -> Disk:
    if isinstance(region, Disk):
        return region
    if isinstance(region, BoxRegion):
        return Disk(region.center, region.side * math.sqrt(2.0) / 2.0)
    raise TessellationError("nested target must be a disk or a box")


def _polygon_enclosing_disk(poly: np.ndarray) -> Disk:
    c = poly.mean(axis=0)
    r = float(np.max(np.hypot(poly[:, 0] - c[0], poly[:, 1] - c[1])))
    return Disk((float(c[0]), float(c[1])), max(r, 1e-12))


def _second_layer_edges(second: LayerSpec, poly: np.ndarray, cell_id: int,
                        sub_seed: int, max_window_factor: float) -> tuple[list[Edge], dict]:
    """Second-layer tessellation clipped to a convex first-layer cell."""
    record: dict = {"cell_id": cell_id}
    segs: list[Segment] = []
    if isinstance(second, MgLayer):
        x0, y0 = poly.min(axis=0)
        x1, y1 = poly.max(axis=0)
        yv = sample_axis_poisson(second.lam_v, (float(x0), float(x1)), sub_seed, 0)
        yh = sample_axis_poisson(second.lam_h, (float(y0), float(y1)),
                                 derive_seed(sub_seed, 1), 0)
        record["v_coords"] = yv.coords
        record["h_coords"] = yh.coords
        big = max(x1 - x0, y1 - y0) * 2.0 + 1.0
        for x in yv.coords:
            segs.append(Segment((float(x), float(y0) - big), (float(x), float(y1) + big)))
        for y in yh.coords:
            segs.append(Segment((float(x0) - big, float(y)), (float(x1) + big, float(y))))
    elif isinstance(second, VoronoiLayer):
        disk = _polygon_enclosing_disk(poly)
        sub = restrict_voronoi_certified(second.model, disk, sub_seed, 0,
                                         max_window_factor=max_window_factor)
        if not sub.certified:
            raise TessellationError("second layer uncertified")
        segs.extend(e.geometry for e in sub.edges)
    elif isinstance(second, LineLayer):
        disk = _polygon_enclosing_disk(poly)
        rho_max = math.hypot(*disk.center) + disk.radius + 1.0
        sample = sample_line_process(second.intensity, rho_max, sub_seed, 0)
        for rho, theta in sample.lines:
            seg = geom.line_rt_clip_to_disk(geom.LineRT(float(rho), float(theta)), disk)
            if seg is not None:
                segs.append(seg)
    else:
        raise TessellationError(f"unsupported second layer {type(second).__name__}")
    out = []
    for seg in segs:
        c = geom.clip_segment_to_convex_polygon(seg, poly)
        if c is not None and c.length > 0:
            out.append(Edge(-1, c, tag=("cell", cell_id)))
    return out, record


def build_nested(first: LayerSpec, second: LayerSpec, target: Region,
                 seed: int, stream: int, max_window_factor: float = 512.0) -> Tessellation:
    """First-layer tessellation with an independent second layer inside each cell.

    Second-layer samples use fresh streams derived from (seed, cell id), so
    they are mutually independent and independent of the first layer.
    """
    if isinstance(first, MgLayer):
        if isinstance(target, BoxRegion):
            window = target
        else:
            window = BoxRegion(target.center, 2.0 * target.radius)
        x0, x1, y0, y1 = window.bounds()
        yv = sample_axis_poisson(first.lam_v, (x0, x1), seed, stream)
        yh = sample_axis_poisson(first.lam_h, (y0, y1), derive_seed(seed, 3), stream)
        t1 = build_mg(yv, yh, window)
        cells = []
        for idx, (cx0, cx1, cy0, cy1) in enumerate(t1.cells):
            if isinstance(target, Disk) and not geom.rect_intersects_disk(cx0, cx1, cy0, cy1, target):
                continue
            if isinstance(target, BoxRegion) and not geom.rect_intersects_box(cx0, cx1, cy0, cy1, target):
                continue
            poly = np.array([[cx0, cy0], [cx1, cy0], [cx1, cy1], [cx0, cy1]], dtype=float)
            cells.append((idx, poly))
        first_cells_kind = "rect"
        first_cells = t1.cells
    elif isinstance(first, VoronoiLayer):
        disk = _region_enclosing_disk(target)
        t1 = restrict_voronoi_certified(first.model, disk, seed, stream,
                                        max_window_factor=max_window_factor)
        if not t1.certified:
            raise TessellationError("first layer uncertified")
        cells = _voronoi_cells_meeting(t1, target)
        first_cells_kind = "polygon"
        first_cells = [poly for _, poly in cells]
    else:
        raise TessellationError(f"unsupported first layer {type(first).__name__}")

    edges = list(t1.edges)
    records = []
    next_id = len(edges)
    for cell_id, poly in cells:
        sub_seed = derive_seed(seed, 0xCE11, stream, cell_id)
        sub_edges, record = _second_layer_edges(second, poly, cell_id, sub_seed,
                                                max_window_factor)
        record["polygon"] = poly
        records.append(record)
        for e in sub_edges:
            e.id = next_id
            next_id += 1
            edges.append(e)
    meta = {"nested": records, "first": type(first).__name__,
            "second": type(second).__name__, "cells_kind": first_cells_kind}
    if isinstance(first, MgLayer):
        meta["n_v"] = t1.meta["n_v"]
        meta["n_h"] = t1.meta["n_h"]
        meta["first_window"] = t1.target
    return Tessellation("NESTED", edges, cells=first_cells, generator=t1.generator,
                        certified=t1.certified, window_radius_used=t1.window_radius_used,
                        target=target, meta=meta)


# ---------------------------------------------------------------------------
# JSON interchange (schema "disktess/tessellation/1")


def _window_to_json(w: Region) -> dict:
    if isinstance(w, Disk):
        return {"kind": "disk", "center": list(w.center), "radius": w.radius}
    if isinstance(w, BoxRegion):
        return {"kind": "box", "center": list(w.center), "side": w.side}
    if isinstance(w, Annulus):
        return {"kind": "annulus", "center": list(w.center),
                "r_inner": w.r_inner, "r_outer": w.r_outer}
    raise TessellationError(f"unsupported region {type(w).__name__}")


def _window_from_json(d: dict) -> Region:
    if d["kind"] == "disk":
        return Disk(tuple(d["center"]), d["radius"])
    if d["kind"] == "box":
        return BoxRegion(tuple(d["center"]), d["side"])
    if d["kind"] == "annulus":
        return Annulus(tuple(d["center"]), d["r_inner"], d["r_outer"])
    raise TessellationError(f"unknown window kind {d['kind']!r}")


def tessellation_to_json(t: Tessellation) -> dict:
    """Portable dict form: edges as vertex lists, cells, certificate metadata."""
    edges = []
    for e in t.edges:
        if isinstance(e.geometry, Segment):
            verts = [list(e.geometry.a), list(e.geometry.b)]
            gkind = "segment"
            tol = None
        else:
            verts = e.geometry.vertices.tolist()
            gkind = "polyline"
            tol = e.geometry.tolerance
        edges.append({"id": e.id, "kind": gkind, "vertices": verts,
                      "pair": list(e.pair) if e.pair else None,
                      "tag": list(e.tag) if e.tag else None,
                      "tolerance": tol})
    cells = None
    ck = t.meta.get("cells_kind")
    if t.cells is not None:
        if ck == "rect":
            cells = [list(c) for c in t.cells]
        else:
            cells = [np.asarray(c).tolist() for c in t.cells]
    gen = None
    g = t.generator
    if isinstance(g, MarkedPointPattern):
        gen = {"kind": "marked_points", "points": g.points.tolist(),
               "marks": g.marks.tolist(), "window": _window_to_json(g.base.window),
               "seed": g.base.seed, "stream": g.base.stream,
               "intensity": g.base.intensity_hint}
    elif isinstance(g, PointPattern):
        gen = {"kind": "points", "points": g.points.tolist(),
               "window": _window_to_json(g.window), "seed": g.seed,
               "stream": g.stream, "intensity": g.intensity_hint}
    elif isinstance(g, LineProcessSample):
        gen = {"kind": "lines", "lines": g.lines.tolist(), "rho_max": g.rho_max,
               "intensity": g.intensity}
    meta = {k: v for k, v in t.meta.items()
            if k in ("r_prime", "disc_R", "grid_step", "w_inf", "n_v", "n_h",
                     "nearest_radius", "window_side", "cells_kind")
            and v is not None and (not isinstance(v, float) or math.isfinite(v))}
    return {"schema": "disktess/tessellation/1", "kind": t.kind, "edges": edges,
            "cells": cells, "certified": t.certified,
            "window_radius_used": t.window_radius_used,
            "target": _window_to_json(t.target) if t.target is not None else None,
            "generator": gen, "meta": meta}


def tessellation_from_json(d: dict) -> Tessellation:
    if d.get("schema") != "disktess/tessellation/1":
        raise TessellationError(f"unsupported schema {d.get('schema')!r}")
    edges = []
    for e in d["edges"]:
        verts = e["vertices"]
        if e["kind"] == "segment":
            geo: Union[Segment, Polyline] = Segment(tuple(verts[0]), tuple(verts[1]))
        else:
            geo = Polyline(np.asarray(verts, dtype=float), tolerance=e["tolerance"] or 1e-4)
        edges.append(Edge(e["id"], geo,
                          pair=tuple(e["pair"]) if e.get("pair") else None,
                          tag=tuple(e["tag"]) if e.get("tag") else None))
    cells = None
    meta = dict(d.get("meta") or {})
    if d.get("cells") is not None:
        if meta.get("cells_kind") == "rect":
            cells = [tuple(c) for c in d["cells"]]
        else:
            cells = [np.asarray(c, dtype=float) for c in d["cells"]]
    gen = None
    gj = d.get("generator")
    if gj is not None:
        if gj["kind"] == "points":
            gen = PointPattern(np.asarray(gj["points"], dtype=float).reshape(-1, 2),
                               _window_from_json(gj["window"]), gj["intensity"],
                               gj["seed"], gj["stream"])
        elif gj["kind"] == "marked_points":
            base = PointPattern(np.asarray(gj["points"], dtype=float).reshape(-1, 2),
                                _window_from_json(gj["window"]), gj["intensity"],
                                gj["seed"], gj["stream"])
            gen = MarkedPointPattern(base, np.asarray(gj["marks"], dtype=float),
                                     pointproc.UniformMarks(max(1e-300, float(np.max(gj["marks"], initial=0.0)) or 1.0)))
        elif gj["kind"] == "lines":
            gen = LineProcessSample(np.asarray(gj["lines"], dtype=float).reshape(-1, 2),
                                    gj["rho_max"], gj["intensity"])
    target = _window_from_json(d["target"]) if d.get("target") else None
    return Tessellation(d["kind"], edges, cells=cells, generator=gen,
                        certified=d["certified"],
                        window_radius_used=d.get("window_radius_used", math.nan),
                        target=target, meta=meta)
