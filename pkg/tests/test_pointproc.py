import math

import numpy as np
import pytest

from disktess.geom import BoxRegion, Disk
from disktess import pointproc as pp

from oracles import poisson_count_mgf, two_state_birth_death_stationary

UNIT = Disk((0.0, 0.0), 1.0)


def empirical_mgf(counts, beta):
    return float(np.mean(np.exp(beta * np.asarray(counts, dtype=float))))


def batch_se(values):
    parts = np.array_split(np.asarray(values, dtype=float), 20)
    means = np.array([p.mean() for p in parts])
    return float(np.std(means, ddof=1) / math.sqrt(len(means)))


class TestPoisson:
    def test_zero_intensity_empty(self):
        assert pp.sample_ppp(0.0, UNIT, 1, 0).n == 0

    def test_negative_intensity_rejected(self):
        with pytest.raises(pp.SamplingError):
            pp.sample_ppp(-1.0, UNIT, 1, 0)

    def test_reproducible(self):
        a = pp.sample_ppp(2.0, UNIT, 42, 3)
        b = pp.sample_ppp(2.0, UNIT, 42, 3)
        assert np.array_equal(a.points, b.points)
        c = pp.sample_ppp(2.0, UNIT, 42, 4)
        assert not np.array_equal(a.points, c.points)

    def test_mean_count(self):
        counts = [pp.sample_ppp(1.0, UNIT, 7, s).n for s in range(20000)]
        se = batch_se(counts)
        assert abs(np.mean(counts) - math.pi) <= 3 * se

    def test_void_probability(self):
        counts = np.array([pp.sample_ppp(1.0, UNIT, 8, s).n for s in range(20000)])
        voids = (counts == 0).astype(float)
        se = batch_se(voids)
        assert abs(voids.mean() - math.exp(-math.pi)) <= 3 * max(se, 1e-4)

    def test_count_mgf_matches_laplace_transform(self):
        counts = np.array([pp.sample_ppp(1.0, UNIT, 9, s).n for s in range(20000)],
                          dtype=float)
        for beta in (0.2, 0.5):
            vals = np.exp(beta * counts)
            se = batch_se(vals)
            assert abs(vals.mean() - poisson_count_mgf(beta, 1.0, math.pi)) <= 3 * se

    def test_points_in_window(self):
        for window in (UNIT, BoxRegion((1.0, -2.0), 3.0),
                       pp.Annulus((0.0, 0.0), 1.0, 2.0)) if hasattr(pp, "Annulus") \
                else (UNIT,):
            pat = pp.sample_ppp(3.0, window, 5, 0)
            assert np.all(window.contains(pat.points, atol=1e-12))


class TestMarkedPoisson:
    def test_zero_tau_all_zero_marks(self):
        mp = pp.sample_marked_ppp(1.0, UNIT, pp.UniformMarks(0.0), 3, 0)
        assert np.all(mp.marks == 0.0)

    def test_exponential_mark_mean(self):
        rng_marks = []
        for s in range(300):
            mp = pp.sample_marked_ppp(2.0, Disk((0, 0), 3.0), pp.ExponentialMarks(1.0), 11, s)
            rng_marks.extend(mp.marks.tolist())
        arr = np.asarray(rng_marks)
        se = arr.std(ddof=1) / math.sqrt(len(arr))
        assert abs(arr.mean() - 1.0) <= 3 * se

    def test_count_distribution_unchanged_by_marking(self):
        plain = [pp.sample_ppp(1.5, UNIT, 13, s).n for s in range(4000)]
        marked = [pp.sample_marked_ppp(1.5, UNIT, pp.UniformMarks(1.0), 14, s).n
                  for s in range(4000)]
        for beta in (0.2, 0.5):
            mp, mm = empirical_mgf(plain, beta), empirical_mgf(marked, beta)
            se = batch_se(np.exp(beta * np.asarray(plain, dtype=float)))
            assert abs(mp - mm) <= 6 * se

    def test_invalid_mark_law(self):
        with pytest.raises(pp.SamplingError):
            pp.ExponentialMarks(0.0)
        with pytest.raises(pp.SamplingError):
            pp.UniformMarks(-1.0)


class TestCox:
    def test_degenerate_modulation_is_poisson(self):
        model = pp.ModulatedCox(1.0, 1.0, 0.5, pp.fixed_radius(0.5))
        counts = np.array([pp.sample_cox(model, UNIT, 17, s).n for s in range(6000)],
                          dtype=float)
        for beta in (0.2, 0.5):
            vals = np.exp(beta * counts)
            se = batch_se(vals)
            assert abs(vals.mean() - poisson_count_mgf(beta, 1.0, math.pi)) <= 3.5 * se

    def test_zero_field_empty(self):
        model = pp.ModulatedCox(2.0, 0.0, 0.0, pp.fixed_radius(0.5))
        assert pp.sample_cox(model, UNIT, 18, 0).n == 0

    def test_shotnoise_campbell_mean(self):
        model = pp.ShotNoiseCox(germ_intensity=1.0, kernel_height=0.8, kernel_radius=0.6)
        counts = [pp.sample_cox(model, UNIT, 19, s).n for s in range(6000)]
        expect = 1.0 * 0.8 * math.pi * 0.6 ** 2 * math.pi
        se = batch_se(counts)
        assert abs(np.mean(counts) - expect) <= 3.5 * se

    def test_reproducible(self):
        model = pp.ShotNoiseCox(1.0, 0.5, 0.5)
        a = pp.sample_cox(model, UNIT, 20, 1)
        b = pp.sample_cox(model, UNIT, 20, 1)
        assert np.array_equal(a.points, b.points)


class TestWidomRowlinson:
    def test_zero_interaction_targets_poisson(self):
        params = pp.GibbsParams(lam=1.0, gamma=0.0, r=0.5, sweeps=1500, burn_in=500)
        w = BoxRegion((0.0, 0.0), 3.0)
        counts = [pp.sample_wr_gibbs(params, w, 23, s).n for s in range(500)]
        se = batch_se(counts)
        # burn-in leaves some autocorrelation with the empty start; allow 4 SE
        assert abs(np.mean(counts) - 9.0) <= max(4 * se, 0.5)

    def test_repulsion_lowers_mean_count(self):
        w = BoxRegion((0.0, 0.0), 3.0)
        p0 = pp.GibbsParams(lam=1.0, gamma=0.0, r=0.5, sweeps=1200, burn_in=400)
        p5 = pp.GibbsParams(lam=1.0, gamma=5.0, r=0.5, sweeps=1200, burn_in=400)
        c0 = np.array([pp.sample_wr_gibbs(p0, w, 29, s).n for s in range(150)], dtype=float)
        c5 = np.array([pp.sample_wr_gibbs(p5, w, 31, s).n for s in range(150)], dtype=float)
        pooled = math.sqrt(c0.var(ddof=1) / len(c0) + c5.var(ddof=1) / len(c5))
        assert c5.mean() < c0.mean() - 3 * pooled

    def test_two_state_detailed_balance(self):
        # P(n=1)/P(n=0) of the stationary law equals the Boltzmann ratio
        # lam |W| exp(-gamma pi r^2); the two-state enumeration oracle gives the
        # same value, and the chain's occupancy time-average must match it.
        lam, gamma, r = 0.3, 1.0, 0.2
        w = BoxRegion((0.0, 0.0), 1.0)
        target = two_state_birth_death_stationary(lam, gamma, math.pi * r * r, 1.0)
        assert target == pytest.approx(lam * math.exp(-gamma * math.pi * r * r),
                                       rel=1e-12)
        params = pp.GibbsParams(lam=lam, gamma=gamma, r=r,
                                sweeps=300000, burn_in=20000)
        counts = pp.wr_gibbs_occupancy(params, w, 37, 0, area_resolution=r / 50.0)
        counts = counts[params.burn_in:]
        ratio = np.mean(counts == 1) / np.mean(counts == 0)
        assert abs(ratio - target) <= 1e-2

    def test_parameter_validation(self):
        with pytest.raises(pp.SamplingError):
            pp.GibbsParams(lam=1.0, gamma=0.0, r=0.5, sweeps=10, burn_in=10)


class TestLineProcess:
    def test_zero_intensity(self):
        assert pp.sample_line_process(0.0, 2.0, 1, 0).n == 0

    def test_strip_count_mean(self):
        hits = []
        for s in range(20000):
            ls = pp.sample_line_process(1.0, 2.0, 43, s)
            hits.append(int(np.sum(np.abs(ls.lines[:, 0]) <= 1.0)))
        se = batch_se(hits)
        assert abs(np.mean(hits) - 2 * math.pi) <= 3 * se

    def test_theta_range(self):
        ls = pp.sample_line_process(5.0, 2.0, 44, 0)
        assert np.all((ls.lines[:, 1] >= 0) & (ls.lines[:, 1] < math.pi))

    def test_rho_max_validation(self):
        with pytest.raises(pp.SamplingError):
            pp.sample_line_process(1.0, 0.5, 1, 0)


class TestAxisProcess:
    def test_zero_intensity(self):
        assert pp.sample_axis_poisson(0.0, (-1, 1), 1, 0).n == 0

    def test_sorted(self):
        ax = pp.sample_axis_poisson(10.0, (-3, 3), 2, 0)
        assert np.all(np.diff(ax.coords) >= 0)

    def test_count_mgf(self):
        counts = np.array([pp.sample_axis_poisson(1.0, (-2, 2), 3, s).n
                           for s in range(20000)], dtype=float)
        vals = np.exp(0.5 * counts)
        se = batch_se(vals)
        assert abs(vals.mean() - poisson_count_mgf(0.5, 1.0, 4.0)) <= 3 * se


class TestPalm:
    def test_zero_intensity_gives_origin_only(self):
        pat = pp.palmify(pp.PoissonModel(0.0), UNIT, 5, 0)
        assert pat.n == 1
        assert pp.origin_index(pat.points) == 0

    def test_always_contains_origin(self):
        for s in range(20):
            pat = pp.palmify(pp.PoissonModel(1.0), UNIT, 5, s)
            pp.origin_index(pat.points)  # raises when absent

    def test_count_is_one_plus_poisson(self):
        counts = [pp.palmify(pp.PoissonModel(1.0), UNIT, 6, s).n for s in range(20000)]
        se = batch_se(counts)
        assert abs(np.mean(counts) - (1.0 + math.pi)) <= 3 * se

    def test_marked_palm_draws_origin_mark(self):
        mp = pp.palmify(pp.MarkedPoissonModel(1.0, pp.UniformMarks(2.0)), UNIT, 7, 0)
        assert mp.n == mp.base.n
        assert len(mp.marks) == mp.n

    def test_non_poisson_rejected(self):
        model = pp.ModulatedCox(1.0, 1.0, 1.0, pp.fixed_radius(0.5))
        with pytest.raises(pp.SamplingError, match="Palm"):
            pp.palmify(model, UNIT, 1, 0)

    def test_palm_line_process(self):
        base = pp.sample_line_process(1.0, 2.0, 9, 4)
        palm = pp.palm_line_process(1.0, 2.0, 9, 4)
        assert np.any(palm.lines[:, 0] == 0.0)
        assert np.array_equal(palm.lines[:-1], base.lines)  # base unchanged
        phis = [pp.palm_line_process(1.0, 2.0, 10, s).lines[-1, 1] for s in range(4000)]
        se = np.std(phis, ddof=1) / math.sqrt(len(phis))
        assert abs(np.mean(phis) - math.pi / 2) <= 3 * se

    def test_palm_mg_symmetric(self):
        picks = [pp.palm_mg(1.0, 1.0, (-1, 1), 11, s)[2] for s in range(20000)]
        frac = np.mean([p == "h" for p in picks])
        assert abs(frac - 0.5) <= 3 * 0.5 / math.sqrt(len(picks))

    def test_palm_mg_weighted(self):
        picks = [pp.palm_mg(1.0, 3.0, (-1, 1), 12, s)[2] for s in range(20000)]
        frac = np.mean([p == "h" for p in picks])
        se = math.sqrt(0.75 * 0.25 / len(picks))
        assert abs(frac - 0.75) <= 3 * se

    def test_palm_mg_origin_in_exactly_one_axis(self):
        for s in range(50):
            yv, yh, which = pp.palm_mg(2.0, 1.0, (-1, 1), 13, s)
            v_has = np.any(yv.coords == 0.0)
            h_has = np.any(yh.coords == 0.0)
            assert v_has != h_has
            assert (which == "v") == v_has


class TestGrowable:
    def test_extension_preserves_prefix(self):
        g = pp.growable_disk_sampler(pp.PoissonModel(1.0), 50, 0)
        g.extend_to(2.0)
        first = g.points.copy()
        g.extend_to(4.0)
        assert np.array_equal(g.points[:len(first)], first)
        assert np.all(np.hypot(*g.points[len(first):].T) >= 2.0 - 1e-12)

    def test_box_growth_prefix(self):
        g = pp.growable_box_sampler(pp.PoissonModel(1.0), 51, 0)
        g.extend_to(4.0)
        first = g.points.copy()
        g.extend_to(8.0)
        assert np.array_equal(g.points[:len(first)], first)

    def test_cox_growth_consistency(self):
        model = pp.ShotNoiseCox(1.0, 0.6, 0.5)
        g = pp.growable_disk_sampler(model, 52, 0)
        g.extend_to(2.0)
        first = g.points.copy()
        g.extend_to(4.0)
        assert np.array_equal(g.points[:len(first)], first)
