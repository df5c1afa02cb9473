import math

import numpy as np
import pytest

from disktess import mc, pointproc as pp

from oracles import poisson_count_mgf


class TestEstimateMgf:
    def test_alpha_zero_is_exactly_one(self):
        spec = mc.SimulationSpec("count", intensity=1.0)
        est = mc.estimate_mgf(spec, "length", [0.0], 200, 1)[0]
        assert est.mean == 1.0
        assert est.ci_low == 1.0 and est.ci_high == 1.0

    def test_monotone_in_alpha_on_shared_sample(self):
        spec = mc.SimulationSpec("count", intensity=1.0)
        values = mc.replicate(spec, "length", 400, 2)
        alphas = [0.0, 0.1, 0.3, 0.5, 1.0]
        ests = mc.estimate_mgf(spec, "length", alphas, 400, 2, values=values)
        means = [e.mean for e in ests]
        assert all(m1 <= m2 for m1, m2 in zip(means, means[1:]))

    def test_count_calibration(self):
        spec = mc.SimulationSpec("count", intensity=1.0)
        values = mc.replicate(spec, "length", 20000, 3)
        for beta in (0.2, 0.5):
            est = mc.mgf_from_samples(values, beta)
            exact = poisson_count_mgf(beta, 1.0, math.pi)
            half = (est.ci_high - est.ci_low) / 2.0
            assert abs(est.mean - exact) <= 1.5 * max(half, 1e-9) * (3.0 / 1.96)

    def test_needs_enough_replications(self):
        spec = mc.SimulationSpec("count", intensity=1.0)
        with pytest.raises(ValueError):
            mc.estimate_mgf(spec, "length", [0.0], 50, 1)

    def test_voronoi_functional_runs(self):
        spec = mc.SimulationSpec("voronoi", intensity=1.0)
        ests = mc.estimate_mgf(spec, "length", [0.0, 0.5], 120, 4)
        assert ests[0].mean == 1.0
        assert math.isfinite(ests[1].mean)

    def test_retry_then_error_on_uncertifiable(self):
        spec = mc.SimulationSpec("voronoi", intensity=1e-5, max_window_factor=4.0)
        with pytest.raises(mc.CertificationError):
            mc.replicate(spec, "length", 2, 5)


class TestDeterminism:
    def test_worker_count_invariance(self):
        spec = mc.SimulationSpec("voronoi", intensity=1.0)
        v1 = mc.replicate(spec, "length", 60, 6, workers=1)
        v2 = mc.replicate(spec, "length", 60, 6, workers=2)
        assert np.array_equal(v1, v2)

    def test_seed_changes_values(self):
        spec = mc.SimulationSpec("count", intensity=1.0)
        v1 = mc.replicate(spec, "length", 50, 7)
        v2 = mc.replicate(spec, "length", 50, 8)
        assert not np.array_equal(v1, v2)


class TestTail:
    def test_threshold_extremes(self):
        spec = mc.SimulationSpec("count", intensity=1.0)
        values = mc.replicate(spec, "length", 400, 9)
        tails = mc.estimate_tail(spec, "length", [0.0, math.inf], 400, 9, values=values)
        assert tails[0].probability == 1.0
        assert tails[1].probability == 0.0

    def test_survival_decreasing(self):
        spec = mc.SimulationSpec("voronoi", intensity=1.0)
        values = mc.replicate(spec, "length", 400, 10)
        tails = mc.estimate_tail(spec, "length", [2.0, 5.0, 8.0, 11.0], 400, 10,
                                 values=values)
        probs = [t.probability for t in tails]
        assert all(p1 >= p2 for p1, p2 in zip(probs, probs[1:]))


class TestProbeAssumptions:
    def test_poisson_void_rate(self):
        rows = mc.probe_assumptions(pp.PoissonModel(1.0), [1.0], 4000, 11)
        r = rows[0]
        assert not r.void_is_bound
        # -log p_hat / |B_1| concentrates near the intensity
        assert abs(r.void_rate - 1.0) < 0.15
        assert r.exact_void_rate == 1.0

    def test_zero_voids_reported_as_bound(self):
        rows = mc.probe_assumptions(pp.PoissonModel(4.0), [2.0], 50, 12)
        assert rows[0].void_is_bound
        assert rows[0].void_fraction == 0.0

    def test_degenerate_cox_matches_poisson(self):
        ppp = mc.probe_assumptions(pp.PoissonModel(1.0), [1.0], 2000, 13)[0]
        cox = mc.probe_assumptions(
            pp.ModulatedCox(1.0, 1.0, 0.5, pp.fixed_radius(0.5)), [1.0], 2000, 13)[0]
        assert abs(ppp.void_rate - cox.void_rate) < 0.25
        assert abs(ppp.mgf_rate_beta1 - cox.mgf_rate_beta1) < 0.25

    def test_marked_model_uses_weighted_balls(self):
        model = pp.MarkedPoissonModel(1.0, pp.UniformMarks(1.0))
        rows = mc.probe_assumptions(model, [2.0], 1000, 14)
        assert rows[0].norm_inner > 0
        assert rows[0].exact_void_rate == 1.0
        assert abs(rows[0].void_rate - 1.0) < 0.4


class TestScaling:
    def test_identity_at_ratio_one(self):
        rep = mc.scaling_test(1.0, 1.0, 150, 15)
        assert rep.statistic == 0.0
        assert rep.pvalue == 1.0

    def test_ks_calibration(self):
        # null KS runs on identically distributed synthetic inputs: the
        # false-positive rate at level 0.05 must sit near 0.05
        from scipy.stats import ks_2samp
        rng = np.random.default_rng(16)
        rejections = 0
        runs = 200
        for _ in range(runs):
            a = rng.exponential(1.0, 400)
            b = rng.exponential(1.0, 400)
            if ks_2samp(a, b, method="asymp").pvalue < 0.05:
                rejections += 1
        assert abs(rejections / runs - 0.05) <= 0.05

    def test_nontrivial_ratio(self):
        rep = mc.scaling_test(1.0, 2.0, 250, 17)
        assert rep.pvalue > 0.01


class TestSeries:
    def test_first_term(self):
        rep = mc.mg_divergence_series(1.0, 1.0, 10)
        assert rep.log_terms[0] == pytest.approx(math.e - 1.0, abs=1e-12)

    def test_divergence_index(self):
        rep = mc.mg_divergence_series(1.0, 1.0, 10)
        assert rep.diverged_at is not None
        assert rep.diverged_at <= 3

    def test_alpha_to_zero_limit(self):
        rep = mc.mg_divergence_series(1e-12, 1.0, 60)
        assert rep.partial_sums[-1] == pytest.approx(1.0, abs=1e-9)

    def test_terms_eventually_increasing(self):
        rep = mc.mg_divergence_series(0.5, 1.0, 30)
        diffs = np.diff(rep.log_terms)
        k0 = np.argmax(diffs > 0)
        assert np.all(diffs[k0:] > 0)

    def test_k_max_validation(self):
        with pytest.raises(ValueError):
            mc.mg_divergence_series(1.0, 1.0, 3)


class TestEmpiricalCellMgf:
    def test_negative_alpha_stable(self):
        est, diag = mc.empirical_mg_cell_mgf(-1.0, 1.0, 20000, 18)
        assert est <= 1.0
        assert diag.dominance_ratio < 0.05

    def test_cell_count_formula(self):
        # V' = (1 + vertical crossings)(1 + horizontal crossings) per realization
        from disktess.geom import BoxRegion
        from disktess import measure, tess
        rng = np.random.default_rng(19)
        for _ in range(20):
            nv, nh = rng.integers(0, 4, 2)
            yv = pp.AxisSample(np.sort(rng.uniform(-0.5, 0.5, nv)), (-1, 1), 1.0)
            yh = pp.AxisSample(np.sort(rng.uniform(-0.5, 0.5, nh)), (-1, 1), 1.0)
            t = tess.build_mg(yv, yh, BoxRegion((0.0, 0.0), 1.0))
            assert measure.count_cells(t, BoxRegion((0.0, 0.0), 1.0)) == (nv + 1) * (nh + 1)

    def test_positive_alpha_heavy_tailed(self):
        est, diag = mc.empirical_mg_cell_mgf(1.0, 1.0, 20000, 20)
        assert est > 1e3  # far above any stabilized value
        assert diag.dominance_ratio > 0.05
        # running means keep jumping by orders of magnitude: non-stabilizing
        rm = diag.log_running_means
        assert rm[-1] - rm[len(rm) // 10] > 1.0
