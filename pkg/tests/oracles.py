"""Independent oracles used by the tests.

These deliberately avoid the production code paths they are checking:
brute-force enumeration, dense-grid maximization, analytic formulas,
point-sampled rasterization, and explicit Markov-chain enumeration.
"""

from __future__ import annotations

import math

import numpy as np


def brute_delaunay_pairs(pts: np.ndarray) -> set[tuple[int, int]]:
    """All pairs with an empty circumdisk witness over all point triples.

    An edge (i, j) belongs to the Delaunay graph iff some disk through both
    points contains no other point; for points in general position (n >= 3)
    it suffices to scan all triples (i, j, k) for an empty circumdisk.
    O(n^4); n = 2 is the single trivial edge.
    """
    n = len(pts)
    if n < 2:
        return set()
    if n == 2:
        return {(0, 1)}
    edges: set[tuple[int, int]] = set()
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                if k == i or k == j:
                    continue
                ax, ay = pts[i]
                bx, by = pts[j]
                cx, cy = pts[k]
                d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
                if abs(d) < 1e-14:
                    continue
                a2 = ax * ax + ay * ay
                b2 = bx * bx + by * by
                c2 = cx * cx + cy * cy
                ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
                uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
                r = math.hypot(ax - ux, ay - uy)
                dists = np.hypot(pts[:, 0] - ux, pts[:, 1] - uy)
                mask = np.ones(n, dtype=bool)
                mask[[i, j, k]] = False
                if not np.any(dists[mask] < r * (1.0 - 1e-12)):
                    edges.add((i, j))
                    break
    return edges


def grid_coverage_radius(pts: np.ndarray, center, radius: float,
                         step: float = 1e-3) -> float:
    """Dense-grid maximization of the nearest-point distance over a disk."""
    xs = np.arange(center[0] - radius, center[0] + radius + step, step)
    ys = np.arange(center[1] - radius, center[1] + radius + step, step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    inside = np.hypot(gx - center[0], gy - center[1]) <= radius
    gx = gx[inside]
    gy = gy[inside]
    best = 0.0
    chunk = 200000 // max(len(pts), 1) + 1
    for lo in range(0, len(gx), chunk):
        hi = min(len(gx), lo + chunk)
        d = np.hypot(gx[lo:hi, None] - pts[None, :, 0],
                     gy[lo:hi, None] - pts[None, :, 1]).min(axis=1)
        best = max(best, float(d.max()))
    return best


def two_disk_union_area(distance: float, r: float) -> float:
    """Analytic area of the union of two radius-r disks at a given distance."""
    if distance >= 2 * r:
        return 2 * math.pi * r * r
    lens = 2 * r * r * math.acos(distance / (2 * r)) \
        - (distance / 2.0) * math.sqrt(4 * r * r - distance * distance)
    return 2 * math.pi * r * r - lens


def rasterized_length_in_disk(edges, center, radius: float, step: float = 1e-3) -> float:
    """Point-sampled edge length inside a closed disk.

    Walks each edge at arc-length spacing ``step`` and counts samples inside
    the disk.  Independent of the analytic clipping code path.
    """
    total = 0
    for a, b in edges:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        ln = float(np.hypot(*(b - a)))
        if ln == 0:
            continue
        m = max(int(ln / step), 1)
        t = (np.arange(m) + 0.5) / m
        pts = a[None, :] + t[:, None] * (b - a)[None, :]
        inside = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1]) <= radius
        total += int(inside.sum()) * (ln / m)
    return total


def poisson_count_mgf(beta: float, intensity: float, area: float) -> float:
    """Closed-form E[exp(beta N)] for N Poisson with mean intensity * area."""
    return math.exp((math.exp(beta) - 1.0) * intensity * area)


def two_state_birth_death_stationary(lam: float, gamma: float, disk_area: float,
                                     window_area: float) -> float:
    """Stationary probability ratio P(n=1)/P(n=0) of the two-state truncation.

    States: empty and one fixed disk of area ``disk_area``.  Enumerates the
    birth-death Metropolis transition probabilities and solves the two-state
    chain; the answer is the Boltzmann ratio lam * |W| * exp(-gamma * A).
    """
    p01 = 0.5 * min(1.0, lam * window_area * math.exp(-gamma * disk_area))
    p10 = 0.5 * min(1.0, math.exp(gamma * disk_area) / (lam * window_area))
    # stationary distribution of a two-state chain: pi1/pi0 = p01/p10
    return p01 / p10
