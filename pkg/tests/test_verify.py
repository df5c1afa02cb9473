import numpy as np
import pytest

from disktess.geom import BoxRegion, Disk, Segment
from disktess import measure, pointproc as pp, tess, verify

UNIT = Disk((0.0, 0.0), 1.0)


class TestVoronoiEdgeBound:
    def test_single_origin_point(self):
        t = tess.restrict_voronoi_certified(pp.PalmPoissonModel(0.0), UNIT, 1, 0)
        res = verify.check_voronoi_edge_bound(t, 1.0, 1.0)
        assert res.ok and not res.vacuous
        assert res.margin == 3.0  # W=0 vs 3*1

    def test_vacuous_when_ball_empty(self):
        t = tess.restrict_voronoi_certified(pp.PoissonModel(0.05), UNIT, 2, 1)
        pts = t.generator.points
        if not np.any(np.hypot(pts[:, 0], pts[:, 1]) <= 1.0):
            assert verify.check_voronoi_edge_bound(t, 1.0, 1.0).vacuous

    def test_uncertified_rejected(self):
        t = tess.restrict_voronoi_certified(pp.PoissonModel(1e-5), UNIT, 3, 0,
                                            max_window_factor=4.0)
        with pytest.raises(verify.VerifyError):
            verify.check_voronoi_edge_bound(t, 1.0, 1.0)

    def test_violation_detected_on_corrupted_input(self):
        t = tess.restrict_voronoi_certified(pp.PoissonModel(1.0), UNIT, 4, 2)
        bogus = [tess.Edge(1000 + k, Segment((0.0, 0.0), (0.1, 0.1)), pair=(900 + k, 901 + k))
                 for k in range(200)]
        t.edges.extend(bogus)
        res = verify.check_voronoi_edge_bound(t, 1.0, 1.0)
        assert not res.ok
        assert res.detail is not None


class TestEulerBound:
    def test_triangle(self):
        assert verify.check_euler_bound(3, 3).ok

    def test_single_edge(self):
        assert verify.check_euler_bound(2, 1).margin == 5.0

    def test_violation(self):
        assert not verify.check_euler_bound(2, 7).ok


class TestVBound:
    def test_two_point_pattern(self):
        base = pp.PointPattern(np.array([[-1.0, 0.0], [1.0, 0.0]]),
                               BoxRegion((0.0, 0.0), 100.0), 1.0, 0, 0)
        t = tess.build_voronoi(base)
        res = verify.check_v_bound(t, UNIT)
        assert res.ok
        assert res.margin == 1.0  # V=2, W=1 -> 2W+1-V = 1


class TestLtChordCriterion:
    def test_random_lines(self):
        for s in range(50):
            lines = pp.sample_line_process(1.0, 2.0, 11, s)
            res = verify.check_lt_chord_criterion(lines, UNIT)
            assert res.ok

    def test_requires_origin_center(self):
        lines = pp.sample_line_process(1.0, 2.0, 11, 0)
        with pytest.raises(verify.VerifyError):
            verify.check_lt_chord_criterion(lines, Disk((1.0, 0.0), 1.0))


class TestNestedDecomposition:
    def test_empty_second_layer(self):
        t = tess.build_nested(tess.MgLayer(2.0, 2.0), tess.MgLayer(0.0, 0.0),
                              BoxRegion((0.0, 0.0), 1.0), 21, 0)
        assert verify.check_nested_mg_decomposition(t).ok

    def test_empty_first_layer(self):
        t = tess.build_nested(tess.MgLayer(0.0, 0.0), tess.MgLayer(2.0, 2.0),
                              BoxRegion((0.0, 0.0), 1.0), 22, 0)
        assert verify.check_nested_mg_decomposition(t).ok

    def test_violation_on_tampered_edges(self):
        t = tess.build_nested(tess.MgLayer(2.0, 2.0), tess.MgLayer(2.0, 2.0),
                              BoxRegion((0.0, 0.0), 1.0), 23, 0)
        t.edges.append(tess.Edge(9999, Segment((-0.4, -0.4), (0.4, 0.4)),
                                 tag=("cell", 0)))
        assert not verify.check_nested_mg_decomposition(t).ok


class TestPalmDomination:
    def test_origin_only(self):
        t = tess.restrict_voronoi_certified(pp.PalmPoissonModel(0.0), UNIT, 31, 0)
        res = verify.check_palm_domination(t)
        assert res.ok

    def test_requires_origin(self):
        t = tess.restrict_voronoi_certified(pp.PoissonModel(1.0), UNIT, 32, 0)
        pts = t.generator.points
        if not np.any((pts[:, 0] == 0) & (pts[:, 1] == 0)):
            with pytest.raises(verify.VerifyError):
                verify.check_palm_domination(t)

    def test_random_palm_patterns(self):
        for s in range(50):
            t = tess.restrict_voronoi_certified(pp.PalmPoissonModel(1.0), UNIT, 33, s)
            assert verify.check_palm_domination(t).ok


class TestAggregation:
    def test_report_counts(self):
        results = [verify.CheckResult(True), verify.CheckResult(True, vacuous=True),
                   verify.CheckResult(False, margin=-1.0, detail="boom")]
        rep = verify.aggregate("demo", results)
        assert rep.realizations == 3
        assert rep.violations == 1
        assert rep.vacuous == 1
        assert rep.worst_margin == -1.0
        assert rep.first_violation == "boom"
        assert not rep.passed

    def test_suite_shapes(self):
        reports, certified = verify.run_vt_suite(1.0, 30, 41)
        assert certified == 30
        assert set(reports) == {"voronoi_edge_bound", "v_bound"}
        reports, _ = verify.run_vt_suite(1.0, 20, 42, palm=True)
        assert set(reports) == {"palm_domination", "v_bound"}
        reports, _ = verify.run_jm_suite(1.0, 5, 43)
        assert set(reports) == {"jm_locality", "jm_edge_bound", "v_bound"}

    def test_worker_invariance(self):
        r1, c1 = verify.run_lt_suite(1.0, 40, 44, workers=1)
        r2, c2 = verify.run_lt_suite(1.0, 40, 44, workers=2)
        assert c1 == c2
        assert r1["lt_chord_criterion"].worst_margin == r2["lt_chord_criterion"].worst_margin


class TestFileChecks:
    def test_vt_file_checks_pass(self):
        t = tess.restrict_voronoi_certified(pp.PoissonModel(1.0), UNIT, 51, 0)
        doc = tess.tessellation_to_json(t)
        t2 = tess.tessellation_from_json(doc)
        reports = verify.check_tessellation(t2, 1.0)
        assert reports and all(r.violations == 0 for r in reports)

    def test_forced_violation(self):
        t = tess.restrict_voronoi_certified(pp.PoissonModel(1.0), UNIT, 52, 0)
        doc = tess.tessellation_to_json(t)
        for k in range(200):
            doc["edges"].append({"id": 5000 + k, "kind": "segment",
                                 "vertices": [[0.0, 0.0], [0.05, 0.05]],
                                 "pair": [700 + k, 800 + k], "tag": None,
                                 "tolerance": None})
        t2 = tess.tessellation_from_json(doc)
        reports = verify.check_tessellation(t2, 1.0)
        assert any(r.violations > 0 for r in reports)
