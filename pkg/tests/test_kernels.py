"""Backend parity: the compiled kernels and the numpy fallback must agree."""

import math

import numpy as np
import pytest

from disktess import _kernels
from disktess._kernels import fallback

compiled = pytest.importorskip("disktess._kernels._core",
                               reason="compiled kernels unavailable")


def rng():
    return np.random.default_rng(12345)


class TestJmNearestField:
    def test_matches_fallback_and_brute(self):
        r = rng()
        px, py = r.uniform(-3, 3, (2, 40))
        marks = r.uniform(0, 2, 40)
        gx, gy = r.uniform(-2, 2, (2, 500))
        ic, dc = compiled.jm_nearest_field(px, py, marks, gx, gy)
        iff, df = fallback.jm_nearest_field(px, py, marks, gx, gy)
        assert np.array_equal(ic, iff)
        assert np.array_equal(dc, df)
        # brute reference
        d = np.sqrt((gx[:, None] - px) ** 2 + (gy[:, None] - py) ** 2) + marks
        assert np.array_equal(ic, np.argmin(d, axis=1))

    def test_tie_breaks_to_first_index(self):
        px = np.array([1.0, -1.0])
        py = np.array([0.0, 0.0])
        marks = np.zeros(2)
        idx, _ = compiled.jm_nearest_field(px, py, marks,
                                           np.array([0.0]), np.array([0.0]))
        assert idx[0] == 0


class TestUnionCoverCount:
    def test_matches_fallback(self):
        r = rng()
        cx, cy = r.uniform(-1, 1, (2, 8))
        args = (cx, cy, 0.6, -2.0, -2.0, 0.01, 400, 400)
        assert compiled.union_disk_cover_count(*args) == \
            fallback.union_disk_cover_count(*args)

    def test_matches_full_scan(self):
        r = rng()
        cx, cy = r.uniform(-1, 1, (2, 5))
        x0 = y0 = -2.0
        step = 0.02
        nx = ny = 200
        got = compiled.union_disk_cover_count(cx, cy, 0.5, x0, y0, step, nx, ny)
        xs = x0 + (np.arange(nx) + 0.5) * step
        ys = y0 + (np.arange(ny) + 0.5) * step
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        covered = np.zeros((nx, ny), dtype=bool)
        for k in range(5):
            covered |= (gx - cx[k]) ** 2 + (gy - cy[k]) ** 2 <= 0.25
        assert got == int(covered.sum())

    def test_empty(self):
        assert compiled.union_disk_cover_count(np.empty(0), np.empty(0), 1.0,
                                               0.0, 0.0, 0.1, 10, 10) == 0


class TestWrChain:
    @pytest.mark.parametrize("gamma", [0.0, 1.5])
    def test_matches_fallback(self, gamma):
        r = rng()
        moves = 400
        u = r.random((5, moves))
        args = (1.5, gamma, 0.4, -1.5, 1.5, -1.5, 1.5, 0.02,
                u[0].copy(), u[1].copy(), u[2].copy(), u[3].copy(), u[4].copy())
        pc, cc = compiled.wr_birth_death_chain(*args)
        pf, cf = fallback.wr_birth_death_chain(*args)
        assert np.array_equal(pc, pf)
        assert np.array_equal(cc, cf)
        assert cc[-1] == len(pc)


class TestClippedLength:
    def test_matches_fallback(self):
        r = rng()
        a = r.uniform(-3, 3, (200, 2))
        b = r.uniform(-3, 3, (200, 2))
        lc = compiled.clipped_length_in_disk(a[:, 0].copy(), a[:, 1].copy(),
                                             b[:, 0].copy(), b[:, 1].copy(),
                                             0.0, 0.0, 1.0)
        lf = fallback.clipped_length_in_disk(a[:, 0].copy(), a[:, 1].copy(),
                                             b[:, 0].copy(), b[:, 1].copy(),
                                             0.0, 0.0, 1.0)
        assert lc == pytest.approx(lf, rel=1e-12)

    def test_simple_values(self):
        ax = np.array([-2.0])
        ay = np.array([0.0])
        bx = np.array([2.0])
        by = np.array([0.0])
        assert compiled.clipped_length_in_disk(ax, ay, bx, by, 0.0, 0.0, 1.0) \
            == pytest.approx(2.0)


def test_backend_reported():
    assert _kernels.BACKEND in ("compiled", "fallback")
