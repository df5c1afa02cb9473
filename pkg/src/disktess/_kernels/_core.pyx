# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Each function here has a pure-numpy twin in ``fallback.py`` with the same
signature and the same arithmetic, so results do not depend on which backend
is selected.  Keep the two files in sync.
"""

from libc.math cimport sqrt, exp, floor

import numpy as np


def jm_nearest_field(const double[::1] px, const double[::1] py,
                     const double[::1] marks,
                     const double[::1] gx, const double[::1] gy):
    """Nearest additively-weighted site per query point.

    Distance of site i to query q is ``|q - p_i| + marks[i]``.  Returns
    (index, distance) arrays; ties resolve to the lowest site index.
    """
    cdef Py_ssize_t n_sites = px.shape[0]
    cdef Py_ssize_t n_query = gx.shape[0]
    idx_arr = np.empty(n_query, dtype=np.int64)
    dist_arr = np.empty(n_query, dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t i, j
    cdef double best, d, dx, dy
    cdef long long bi
    for j in range(n_query):
        best = 1e308
        bi = -1
        for i in range(n_sites):
            dx = gx[j] - px[i]
            dy = gy[j] - py[i]
            d = sqrt(dx * dx + dy * dy) + marks[i]
            if d < best:
                best = d
                bi = i
        idx[j] = bi
        dist[j] = best
    return idx_arr, dist_arr


def union_disk_cover_count(const double[::1] cx, const double[::1] cy, double r,
                           double x0, double y0, double step,
                           Py_ssize_t nx, Py_ssize_t ny):
    """Count grid-cell centers covered by the union of disks of radius r.

    Cell center (i, j) sits at ``(x0 + (i + 0.5) step, y0 + (j + 0.5) step)``.
    """
    cdef Py_ssize_t n = cx.shape[0]
    if n == 0 or nx <= 0 or ny <= 0:
        return 0
    mask_arr = np.zeros(nx * ny, dtype=np.uint8)
    cdef unsigned char[::1] mask = mask_arr
    cdef Py_ssize_t k, i, j, i0, i1, j0, j1
    cdef double x, y, dx, dy, rr = r * r
    for k in range(n):
        i0 = <Py_ssize_t> floor((cx[k] - r - x0) / step - 0.5) - 1
        i1 = <Py_ssize_t> floor((cx[k] + r - x0) / step - 0.5) + 2
        j0 = <Py_ssize_t> floor((cy[k] - r - y0) / step - 0.5) - 1
        j1 = <Py_ssize_t> floor((cy[k] + r - y0) / step - 0.5) + 2
        if i0 < 0:
            i0 = 0
        if j0 < 0:
            j0 = 0
        if i1 > nx - 1:
            i1 = nx - 1
        if j1 > ny - 1:
            j1 = ny - 1
        for i in range(i0, i1 + 1):
            x = x0 + (i + 0.5) * step
            dx = x - cx[k]
            for j in range(j0, j1 + 1):
                y = y0 + (j + 0.5) * step
                dy = y - cy[k]
                if dx * dx + dy * dy <= rr:
                    mask[i * ny + j] = 1
    cdef long long total = 0
    cdef Py_ssize_t m
    for m in range(nx * ny):
        if mask[m]:
            total += 1
    return int(total)


cdef double _delta_area(double bx, double by, double r, double gx0, double gy0,
                        double hres, double[::1] x, double[::1] y,
                        Py_ssize_t n, Py_ssize_t skip) nogil:
    # Grid area of B_r(b) not covered by any listed disk (index `skip` excluded).
    cdef Py_ssize_t i0 = <Py_ssize_t> floor((bx - r - gx0) / hres - 0.5) - 1
    cdef Py_ssize_t i1 = <Py_ssize_t> floor((bx + r - gx0) / hres - 0.5) + 2
    cdef Py_ssize_t j0 = <Py_ssize_t> floor((by - r - gy0) / hres - 0.5) - 1
    cdef Py_ssize_t j1 = <Py_ssize_t> floor((by + r - gy0) / hres - 0.5) + 2
    cdef Py_ssize_t i, j, k
    cdef double px, py, dx, dy, rr = r * r
    cdef long long cnt = 0
    cdef bint covered
    for i in range(i0, i1 + 1):
        px = gx0 + (i + 0.5) * hres
        dx = px - bx
        for j in range(j0, j1 + 1):
            py = gy0 + (j + 0.5) * hres
            dy = py - by
            if dx * dx + dy * dy <= rr:
                covered = False
                for k in range(n):
                    if k == skip:
                        continue
                    if (px - x[k]) * (px - x[k]) + (py - y[k]) * (py - y[k]) <= rr:
                        covered = True
                        break
                if not covered:
                    cnt += 1
    return cnt * hres * hres


def wr_birth_death_chain(double lam, double gamma, double r,
                         double wx0, double wx1, double wy0, double wy1,
                         double hres,
                         const double[::1] u_type, const double[::1] u_x,
                         const double[::1] u_y, const double[::1] u_pick,
                         const double[::1] u_acc):
    """Run a birth-death Metropolis chain for the area-interaction density.

    Target density w.r.t. the unit-rate Poisson process on the window:
    ``lam^n * exp(-gamma * A(X))`` with A the union-of-disks area measured on
    a fixed grid of pitch ``hres`` anchored at (wx0 - r, wy0 - r).
    Returns the final configuration as an (n, 2) array.
    """
    cdef Py_ssize_t moves = u_type.shape[0]
    cdef double area = (wx1 - wx0) * (wy1 - wy0)
    cdef double gx0 = wx0 - r
    cdef double gy0 = wy0 - r
    cdef Py_ssize_t cap = moves + 1
    xs_arr = np.empty(cap, dtype=np.float64)
    ys_arr = np.empty(cap, dtype=np.float64)
    counts_arr = np.empty(moves, dtype=np.int64)
    cdef double[::1] xs = xs_arr
    cdef double[::1] ys = ys_arr
    cdef long long[::1] counts = counts_arr
    cdef Py_ssize_t n = 0
    cdef Py_ssize_t m, pick, t
    cdef double bx, by, da, acc
    for m in range(moves):
        if u_type[m] < 0.5:
            # birth
            bx = wx0 + u_x[m] * (wx1 - wx0)
            by = wy0 + u_y[m] * (wy1 - wy0)
            da = 0.0 if gamma == 0.0 else \
                _delta_area(bx, by, r, gx0, gy0, hres, xs, ys, n, -1)
            acc = lam * area / (n + 1) * exp(-gamma * da)
            if u_acc[m] < acc:
                xs[n] = bx
                ys[n] = by
                n += 1
        else:
            # death
            if n == 0:
                counts[m] = 0
                continue
            pick = <Py_ssize_t> (u_pick[m] * n)
            if pick > n - 1:
                pick = n - 1
            da = 0.0 if gamma == 0.0 else \
                _delta_area(xs[pick], ys[pick], r, gx0, gy0, hres, xs, ys, n, pick)
            acc = n * exp(gamma * da) / (lam * area)
            if u_acc[m] < acc:
                for t in range(pick, n - 1):
                    xs[t] = xs[t + 1]
                    ys[t] = ys[t + 1]
                n -= 1
        counts[m] = n
    out = np.empty((n, 2), dtype=np.float64)
    cdef Py_ssize_t q
    for q in range(n):
        out[q, 0] = xs[q]
        out[q, 1] = ys[q]
    return out, counts_arr


def clipped_length_in_disk(const double[::1] ax, const double[::1] ay,
                           const double[::1] bx, const double[::1] by,
                           double cx, double cy, double rad):
    """Total length of segment-batch intersections with the closed disk."""
    cdef Py_ssize_t n = ax.shape[0]
    cdef Py_ssize_t i
    cdef double ux, uy, qx, qy, aa, bb, cc, disc, sd, t0, t1, total = 0.0
    for i in range(n):
        ux = bx[i] - ax[i]
        uy = by[i] - ay[i]
        qx = ax[i] - cx
        qy = ay[i] - cy
        aa = ux * ux + uy * uy
        if aa == 0.0:
            continue
        bb = qx * ux + qy * uy
        cc = qx * qx + qy * qy - rad * rad
        disc = bb * bb - aa * cc
        if disc <= 0.0:
            continue
        sd = sqrt(disc)
        t0 = (-bb - sd) / aa
        t1 = (-bb + sd) / aa
        if t0 < 0.0:
            t0 = 0.0
        if t1 > 1.0:
            t1 = 1.0
        if t1 > t0:
            total += (t1 - t0) * sqrt(aa)
    return total
