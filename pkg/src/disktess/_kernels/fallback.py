"""Pure-numpy kernels, used when the compiled extension is unavailable.

Mirrors ``_core.pyx`` function by function.  The per-element arithmetic is
written with the same formulas so both backends agree (exactly for the
integer-valued kernels, to float rounding for the summations).
"""

from __future__ import annotations

import math

import numpy as np

# Node chunk size for the distance-field kernel; bounds peak memory at
# roughly chunk * n_sites * 8 bytes.
_CHUNK = 16384


def jm_nearest_field(px, py, marks, gx, gy):
    n_query = gx.shape[0]
    idx = np.empty(n_query, dtype=np.int64)
    dist = np.empty(n_query, dtype=np.float64)
    n_sites = px.shape[0]
    step = max(1, _CHUNK // max(1, n_sites))
    for lo in range(0, n_query, step):
        hi = min(n_query, lo + step)
        dx = gx[lo:hi, None] - px[None, :]
        dy = gy[lo:hi, None] - py[None, :]
        d = np.sqrt(dx * dx + dy * dy) + marks[None, :]
        k = np.argmin(d, axis=1)
        idx[lo:hi] = k
        dist[lo:hi] = d[np.arange(hi - lo), k]
    return idx, dist


def union_disk_cover_count(cx, cy, r, x0, y0, step, nx, ny):
    n = cx.shape[0]
    if n == 0 or nx <= 0 or ny <= 0:
        return 0
    mask = np.zeros((nx, ny), dtype=bool)
    rr = r * r
    for k in range(n):
        i0 = max(0, int(math.floor((cx[k] - r - x0) / step - 0.5)) - 1)
        i1 = min(nx - 1, int(math.floor((cx[k] + r - x0) / step - 0.5)) + 2)
        j0 = max(0, int(math.floor((cy[k] - r - y0) / step - 0.5)) - 1)
        j1 = min(ny - 1, int(math.floor((cy[k] + r - y0) / step - 0.5)) + 2)
        if i0 > i1 or j0 > j1:
            continue
        xs = x0 + (np.arange(i0, i1 + 1) + 0.5) * step
        ys = y0 + (np.arange(j0, j1 + 1) + 0.5) * step
        dx = xs - cx[k]
        dy = ys - cy[k]
        inside = dx[:, None] * dx[:, None] + dy[None, :] * dy[None, :] <= rr
        mask[i0:i1 + 1, j0:j1 + 1] |= inside
    return int(mask.sum())


def _delta_area(bx, by, r, gx0, gy0, hres, xs, ys, skip):
    i0 = int(math.floor((bx - r - gx0) / hres - 0.5)) - 1
    i1 = int(math.floor((bx + r - gx0) / hres - 0.5)) + 2
    j0 = int(math.floor((by - r - gy0) / hres - 0.5)) - 1
    j1 = int(math.floor((by + r - gy0) / hres - 0.5)) + 2
    px = gx0 + (np.arange(i0, i1 + 1) + 0.5) * hres
    py = gy0 + (np.arange(j0, j1 + 1) + 0.5) * hres
    rr = r * r
    dx = px[:, None] - bx
    dy = py[None, :] - by
    in_new = dx * dx + dy * dy <= rr
    covered = np.zeros_like(in_new)
    for k in range(len(xs)):
        if k == skip:
            continue
        if (xs[k] - bx) ** 2 + (ys[k] - by) ** 2 > (2 * r + 2 * hres) ** 2:
            continue
        ddx = px[:, None] - xs[k]
        ddy = py[None, :] - ys[k]
        covered |= ddx * ddx + ddy * ddy <= rr
    cnt = int(np.count_nonzero(in_new & ~covered))
    return cnt * hres * hres


def wr_birth_death_chain(lam, gamma, r, wx0, wx1, wy0, wy1, hres,
                         u_type, u_x, u_y, u_pick, u_acc):
    moves = u_type.shape[0]
    area = (wx1 - wx0) * (wy1 - wy0)
    gx0 = wx0 - r
    gy0 = wy0 - r
    xs: list[float] = []
    ys: list[float] = []
    counts = np.empty(moves, dtype=np.int64)
    for m in range(moves):
        n = len(xs)
        if u_type[m] < 0.5:
            bx = wx0 + u_x[m] * (wx1 - wx0)
            by = wy0 + u_y[m] * (wy1 - wy0)
            da = 0.0 if gamma == 0.0 else \
                _delta_area(bx, by, r, gx0, gy0, hres, xs, ys, -1)
            acc = lam * area / (n + 1) * math.exp(-gamma * da)
            if u_acc[m] < acc:
                xs.append(bx)
                ys.append(by)
        else:
            if n == 0:
                counts[m] = 0
                continue
            pick = min(int(u_pick[m] * n), n - 1)
            da = 0.0 if gamma == 0.0 else \
                _delta_area(xs[pick], ys[pick], r, gx0, gy0, hres, xs, ys, pick)
            acc = n * math.exp(gamma * da) / (lam * area)
            if u_acc[m] < acc:
                del xs[pick]
                del ys[pick]
        counts[m] = len(xs)
    pts = np.column_stack([np.asarray(xs), np.asarray(ys)]) if xs else np.empty((0, 2))
    return pts, counts


def clipped_length_in_disk(ax, ay, bx, by, cx, cy, rad):
    ux = bx - ax
    uy = by - ay
    qx = ax - cx
    qy = ay - cy
    aa = ux * ux + uy * uy
    bb = qx * ux + qy * uy
    cc = qx * qx + qy * qy - rad * rad
    disc = bb * bb - aa * cc
    ok = (aa > 0.0) & (disc > 0.0)
    if not np.any(ok):
        return 0.0
    sd = np.sqrt(disc[ok])
    a_ok = aa[ok]
    t0 = np.maximum((-bb[ok] - sd) / a_ok, 0.0)
    t1 = np.minimum((-bb[ok] + sd) / a_ok, 1.0)
    span = np.maximum(t1 - t0, 0.0)
    return float(np.sum(span * np.sqrt(a_ok)))
