"""Deterministic per-realization checks and seeded check suites.

Each check is a universally quantified assertion about one realization; a
suite runs it over many seeded realizations and reports violations, vacuous
passes (precondition unmet) and the worst margin.  Lemma-class suites demand
zero violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import geom, measure, tess
from ._kernels import jm_nearest_field
from .geom import BoxRegion, Disk
from .mc import parallel_map
from .pointproc import (MarkedPoissonModel, PalmPoissonModel, PoissonModel,
                        UniformMarks, derive_seed, sample_line_process)
from .tess import MgLayer, Tessellation

_SLACK = 1e-9


class VerifyError(RuntimeError):
    """Raised when a check is fed input outside its contract."""


@dataclass
class CheckResult:
    ok: bool
    vacuous: bool = False
    margin: float = math.inf
    detail: Optional[str] = None


@dataclass
class CheckReport:
    check_name: str
    realizations: int
    violations: int
    vacuous: int
    worst_margin: float
    first_violation: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def aggregate(check_name: str, results: Sequence[CheckResult]) -> CheckReport:
    violations = 0
    vacuous = 0
    worst = math.inf
    first = None
    for r in results:
        if r.vacuous:
            vacuous += 1
            continue
        worst = min(worst, r.margin)
        if not r.ok:
            violations += 1
            if first is None:
                first = r.detail or "violated"
    return CheckReport(check_name, len(results), violations, vacuous, worst, first)


# ---------------------------------------------------------------------------
# per-realization checks


def check_voronoi_edge_bound(t: Tessellation, a: float = 1.0, b: float = 1.0) -> CheckResult:
    """Edges meeting B_a are at most 3x the points in B_{b+3a}, given a point in B_b."""
    if not t.certified:
        raise VerifyError("uncertified input")
    pts = t.generator.points
    radial = np.hypot(pts[:, 0], pts[:, 1])
    if not np.any(radial <= b):
        return CheckResult(True, vacuous=True)
    w = measure.count_edges(t, Disk((0.0, 0.0), a))
    bound = 3 * int(np.sum(radial <= b + 3.0 * a))
    margin = float(bound - w)
    return CheckResult(w <= bound, margin=margin,
                       detail=None if w <= bound else f"W={w} > 3#points={bound}")


def check_jm_locality(t: Tessellation, a: float, b: float,
                      probe_count: int = 50) -> CheckResult:
    """Nearest weighted sites at edge points in B_a lie in the weighted ball b+3a.

    Probes are actual extracted crossing points (they sit on the weighted
    bisector up to root-polishing accuracy), taken evenly along the list.
    """
    if t.kind != "JMT":
        raise VerifyError("Johnson-Mehl realization required")
    gen = t.generator
    pts = gen.points
    marks = gen.marks
    r_prime = t.meta.get("r_prime", math.inf)
    if r_prime > b:
        return CheckResult(True, vacuous=True)
    cross = t.meta.get("cross_points")
    if cross is None or len(cross) == 0:
        return CheckResult(True)
    inside = np.hypot(cross[:, 0], cross[:, 1]) <= a
    probes = cross[inside]
    if len(probes) == 0:
        return CheckResult(True)
    if len(probes) > probe_count:
        sel = np.linspace(0, len(probes) - 1, probe_count).astype(int)
        probes = probes[sel]
    idx, _ = jm_nearest_field(np.ascontiguousarray(pts[:, 0]),
                              np.ascontiguousarray(pts[:, 1]),
                              np.ascontiguousarray(marks),
                              np.ascontiguousarray(probes[:, 0]),
                              np.ascontiguousarray(probes[:, 1]))
    site_dist = np.hypot(pts[idx, 0], pts[idx, 1]) + marks[idx]
    margin = float(b + 3.0 * a - site_dist.max())
    ok = bool(site_dist.max() <= b + 3.0 * a + _SLACK)
    return CheckResult(ok, margin=margin,
                       detail=None if ok else
                       f"arg-min site at weighted distance {site_dist.max():.6f} "
                       f"> {b + 3 * a}")


def check_jm_edge_bound(t: Tessellation, a: float, b: float) -> CheckResult:
    """Weighted analogue of the edge bound: witnessed pairs vs 3x ball count."""
    if t.kind != "JMT":
        raise VerifyError("Johnson-Mehl realization required")
    gen = t.generator
    pts = gen.points
    marks = gen.marks
    weighted = np.hypot(pts[:, 0], pts[:, 1]) + marks
    if not np.any(weighted <= b):
        return CheckResult(True, vacuous=True)
    cross = t.meta.get("cross_points")
    pairs = t.meta.get("cross_pairs")
    if cross is None or len(cross) == 0:
        return CheckResult(True)
    inside = np.hypot(cross[:, 0], cross[:, 1]) <= a
    w = len({(int(i), int(j)) for i, j in pairs[inside]})
    bound = 3 * int(np.sum(weighted <= b + 3.0 * a))
    ok = w <= bound
    return CheckResult(ok, margin=float(bound - w),
                       detail=None if ok else f"W={w} > 3#sites={bound}")


def check_euler_bound(n_vertices: int, n_edges: int) -> CheckResult:
    """Planar simple graph: edges at most 3x vertices."""
    ok = n_edges <= 3 * n_vertices
    return CheckResult(ok, margin=float(3 * n_vertices - n_edges),
                       detail=None if ok else f"E={n_edges} > 3V={3 * n_vertices}")


def check_v_bound(t: Tessellation, region) -> CheckResult:
    """Cells meeting the region at most 2W + 1; W = 0 forces V = 1."""
    if t.kind == "JMT":
        cross = t.meta.get("cross_points")
        pairs = t.meta.get("cross_pairs")
        if cross is not None and len(cross) and isinstance(region, Disk):
            inside = (np.hypot(cross[:, 0] - region.center[0],
                               cross[:, 1] - region.center[1]) <= region.radius)
            w = len({(int(i), int(j)) for i, j in pairs[inside]})
        else:
            w = 0
        v = measure.count_cells(t, region)
    else:
        w = measure.count_edges(t, region)
        v = measure.count_cells(t, region)
    ok = v <= 2 * w + 1 and (w > 0 or v == 1)
    return CheckResult(ok, margin=float(2 * w + 1 - v),
                       detail=None if ok else f"V={v}, W={w}")


def check_lt_chord_criterion(lines, d: Disk) -> CheckResult:
    """Geometric line-disk intersection count equals the |rho| <= radius count.

    The geometric route builds each chord as a long segment and tests
    segment-disk intersection; chords never exceed the diameter.
    """
    if d.center != (0.0, 0.0):
        raise VerifyError("criterion stated for origin-centered disks")
    by_criterion = int(np.sum(np.abs(lines.lines[:, 0]) <= d.radius))
    geometric = 0
    worst = math.inf
    for rho, theta in lines.lines:
        line = geom.LineRT(float(rho), float(theta))
        far = abs(rho) + 4.0 * d.radius + 1.0
        ct, st = math.cos(theta), math.sin(theta)
        p0 = (rho * ct, rho * st)
        seg = geom.Segment((p0[0] + far * st, p0[1] - far * ct),
                           (p0[0] - far * st, p0[1] + far * ct))
        if geom.segment_intersects_disk(seg, d):
            geometric += 1
            chord = geom.chord_length(line, d)
            worst = min(worst, 2.0 * d.radius - chord)
            if chord > 2.0 * d.radius + _SLACK:
                return CheckResult(False, margin=2.0 * d.radius - chord,
                                   detail=f"chord {chord} exceeds the diameter")
    ok = geometric == by_criterion
    return CheckResult(ok, margin=worst if ok else 0.0,
                       detail=None if ok else
                       f"geometric count {geometric} != criterion count {by_criterion}")


def check_delaunay_box_bound(t: Tessellation, a: float = 1.0) -> CheckResult:
    """Delaunay edges meeting B_a at most 3x the points in the 6R box."""
    if not t.certified:
        raise VerifyError("uncertified input")
    r = t.meta.get("disc_R")
    if r is None:
        raise VerifyError("window too small: occupancy radius undetermined")
    pts = t.generator.points
    w = measure.count_edges(t, Disk((0.0, 0.0), a))
    half = 3.0 * r  # box Q_{6R} has half-side 3R
    inside = int(np.sum((np.abs(pts[:, 0]) <= half) & (np.abs(pts[:, 1]) <= half)))
    bound = 3 * inside
    ok = w <= bound
    return CheckResult(ok, margin=float(bound - w),
                       detail=None if ok else f"W={w} > 3#points={bound} at R={r}")


def check_nested_mg_decomposition(t: Tessellation, rel_tol: float = 1e-9) -> CheckResult:
    """Exact length decomposition of a grid-in-grid nested tessellation.

    Measured total length over the target box equals first-layer length plus,
    per cell, (cell height) x (second-layer vertical count) + (cell width) x
    (second-layer horizontal count).
    """
    if t.kind != "NESTED" or t.meta.get("first") != "MgLayer" \
            or t.meta.get("second") != "MgLayer":
        raise VerifyError("grid-in-grid nested realization required")
    box = t.target
    if not isinstance(box, BoxRegion):
        raise VerifyError("box target required")
    lhs = measure.total_edge_length(t, box)
    first_len = 0.0
    for e in t.edges:
        if e.tag and e.tag[0] in ("v", "h"):
            c = geom.clip_segment_to_box(e.geometry, box)
            if c is not None:
                first_len += c.length
    rhs = first_len
    for rec in t.meta["nested"]:
        poly = rec["polygon"]
        x0, y0 = poly.min(axis=0)
        x1, y1 = poly.max(axis=0)
        rhs += len(rec["v_coords"]) * (y1 - y0) + len(rec["h_coords"]) * (x1 - x0)
    err = abs(lhs - rhs)
    tol = rel_tol * max(1.0, abs(lhs))
    ok = err <= tol
    return CheckResult(ok, margin=float(tol - err),
                       detail=None if ok else f"|{lhs} - {rhs}| = {err}")


def check_palm_domination(t: Tessellation) -> CheckResult:
    """Palm Voronoi chain: W <= 3#(pattern in B_4) and length in B_1 <= 2W."""
    pts = t.generator.points
    radial = np.hypot(pts[:, 0], pts[:, 1])
    if not np.any(radial == 0.0):
        raise VerifyError("Palm realization must contain the origin")
    disk = Disk((0.0, 0.0), 1.0)
    w = measure.count_edges(t, disk)
    length = measure.total_edge_length(t, disk)
    bound = 3 * int(np.sum(radial <= 4.0))
    ok = w <= bound and length <= 2.0 * w + _SLACK
    margin = float(min(bound - w, 2.0 * w - length))
    return CheckResult(ok, margin=margin,
                       detail=None if ok else f"W={w}, bound={bound}, length={length}")


# ---------------------------------------------------------------------------
# seeded suites


@dataclass(frozen=True)
class _VtTask:
    lam: float
    seed: int
    stream: int
    a: float
    b: float
    palm: bool
    max_window_factor: float


def _vt_one(task: _VtTask) -> dict:
    model = PalmPoissonModel(task.lam) if task.palm else PoissonModel(task.lam)
    t = tess.restrict_voronoi_certified(model, Disk((0.0, 0.0), task.a),
                                        task.seed, task.stream,
                                        max_window_factor=task.max_window_factor)
    out = {"certified": t.certified}
    if not t.certified:
        return out
    if task.palm:
        out["palm_domination"] = check_palm_domination(t)
    else:
        out["voronoi_edge_bound"] = check_voronoi_edge_bound(t, task.a, task.b)
    out["v_bound"] = check_v_bound(t, Disk((0.0, 0.0), task.a))
    return out


@dataclass(frozen=True)
class _DtTask:
    lam: float
    seed: int
    stream: int
    a: float
    max_window_factor: float


def _dt_one(task: _DtTask) -> dict:
    t = tess.restrict_delaunay_certified(PoissonModel(task.lam),
                                         Disk((0.0, 0.0), task.a),
                                         task.seed, task.stream,
                                         max_window_factor=task.max_window_factor)
    out = {"certified": t.certified}
    if not t.certified:
        return out
    out["delaunay_box_bound"] = check_delaunay_box_bound(t, task.a)
    verts = {i for e in t.edges for i in e.pair}
    out["euler_bound"] = check_euler_bound(max(len(verts), 1), len(t.edges))
    out["v_bound"] = check_v_bound(t, Disk((0.0, 0.0), task.a))
    return out


@dataclass(frozen=True)
class _JmTask:
    lam: float
    seed: int
    stream: int
    a: float
    b: float
    grid_step: float
    probes: int
    max_window_factor: float


def _jm_one(task: _JmTask) -> dict:
    model = MarkedPoissonModel(task.lam, UniformMarks(1.0))
    t = tess.build_jmt_in_disk(model, Disk((0.0, 0.0), task.a), task.grid_step,
                               task.seed, task.stream,
                               max_window_factor=task.max_window_factor)
    return {"certified": t.certified,
            "jm_locality": check_jm_locality(t, task.a, task.b, task.probes),
            "jm_edge_bound": check_jm_edge_bound(t, task.a, task.b),
            "v_bound": check_v_bound(t, Disk((0.0, 0.0), task.a))}


@dataclass(frozen=True)
class _LtTask:
    lam: float
    seed: int
    stream: int
    radius: float


def _lt_one(task: _LtTask) -> dict:
    lines = sample_line_process(task.lam, max(2.0 * task.radius, 1.0),
                                task.seed, task.stream)
    return {"certified": True,
            "lt_chord_criterion": check_lt_chord_criterion(
                lines, Disk((0.0, 0.0), task.radius))}


@dataclass(frozen=True)
class _NestedTask:
    lam: float
    seed: int
    stream: int


def _nested_one(task: _NestedTask) -> dict:
    t = tess.build_nested(MgLayer(task.lam, task.lam), MgLayer(task.lam, task.lam),
                          BoxRegion((0.0, 0.0), 1.0), task.seed, task.stream)
    return {"certified": True,
            "nested_mg_decomposition": check_nested_mg_decomposition(t)}


_SUITES = {
    "vt": (_VtTask, _vt_one),
    "dt": (_DtTask, _dt_one),
    "jm": (_JmTask, _jm_one),
    "lt": (_LtTask, _lt_one),
    "nested": (_NestedTask, _nested_one),
}


def _fold(dicts: list[dict]) -> tuple[dict[str, CheckReport], int]:
    names: dict[str, list[CheckResult]] = {}
    certified = 0
    for d in dicts:
        certified += bool(d.get("certified"))
        for k, v in d.items():
            if isinstance(v, CheckResult):
                names.setdefault(k, []).append(v)
    return {k: aggregate(k, v) for k, v in names.items()}, certified


def run_vt_suite(lam: float, n: int, seed: int, a: float = 1.0, b: float = 1.0,
                 palm: bool = False, workers: int = 1,
                 max_window_factor: float = 512.0) -> tuple[dict[str, CheckReport], int]:
    tasks = [_VtTask(lam, seed, s, a, b, palm, max_window_factor) for s in range(n)]
    return _fold(parallel_map(_vt_one, tasks, workers=workers))


def run_dt_suite(lam: float, n: int, seed: int, a: float = 1.0, workers: int = 1,
                 max_window_factor: float = 512.0) -> tuple[dict[str, CheckReport], int]:
    tasks = [_DtTask(lam, seed, s, a, max_window_factor) for s in range(n)]
    return _fold(parallel_map(_dt_one, tasks, workers=workers))


def run_jm_suite(lam: float, n: int, seed: int, a: float = 1.0, b: float = 2.0,
                 grid_step: float = 0.02, probes: int = 50, workers: int = 1,
                 max_window_factor: float = 512.0) -> tuple[dict[str, CheckReport], int]:
    tasks = [_JmTask(lam, seed, s, a, b, grid_step, probes, max_window_factor)
             for s in range(n)]
    return _fold(parallel_map(_jm_one, tasks, workers=workers))


def run_lt_suite(lam: float, n: int, seed: int, radius: float = 1.0,
                 workers: int = 1) -> tuple[dict[str, CheckReport], int]:
    tasks = [_LtTask(lam, seed, s, radius) for s in range(n)]
    return _fold(parallel_map(_lt_one, tasks, workers=workers))


def run_nested_suite(lam: float, n: int, seed: int,
                     workers: int = 1) -> tuple[dict[str, CheckReport], int]:
    tasks = [_NestedTask(lam, seed, s) for s in range(n)]
    return _fold(parallel_map(_nested_one, tasks, workers=workers))


def run_lemma_suites(lams: Sequence[float], n: int, seed: int, n_jm: Optional[int] = None,
                     workers: int = 1) -> list[CheckReport]:
    """Every lemma-class suite at every intensity, merged into one report per check."""
    n_jm = n_jm if n_jm is not None else max(n // 10, 1)
    buckets: dict[str, list[CheckReport]] = {}

    def merge(reports: dict[str, CheckReport]) -> None:
        for k, rep in reports.items():
            buckets.setdefault(k, []).append(rep)

    for i, lam in enumerate(lams):
        s = derive_seed(seed, 100 + i)
        merge(run_vt_suite(lam, n, s, workers=workers)[0])
        merge(run_vt_suite(lam, n, derive_seed(s, 1), palm=True, workers=workers)[0])
        merge(run_dt_suite(lam, n, derive_seed(s, 2), workers=workers)[0])
        merge(run_jm_suite(lam, n_jm, derive_seed(s, 3), workers=workers)[0])
        merge(run_lt_suite(lam, n, derive_seed(s, 4), workers=workers)[0])
        merge(run_nested_suite(lam, n, derive_seed(s, 5), workers=workers)[0])
    out = []
    for name, reps in sorted(buckets.items()):
        out.append(CheckReport(
            name,
            realizations=sum(r.realizations for r in reps),
            violations=sum(r.violations for r in reps),
            vacuous=sum(r.vacuous for r in reps),
            worst_margin=min(r.worst_margin for r in reps),
            first_violation=next((r.first_violation for r in reps
                                  if r.first_violation), None)))
    return out


# ---------------------------------------------------------------------------
# file-based checks (JSON interchange)


def check_tessellation(t: Tessellation, a: float = 1.0) -> list[CheckReport]:
    """Applicable per-realization checks for a (possibly deserialized) tessellation."""
    results: list[tuple[str, CheckResult]] = []
    if t.kind == "VT":
        pts = t.generator.points
        palm = bool(np.any((pts[:, 0] == 0.0) & (pts[:, 1] == 0.0)))
        results.append(("voronoi_edge_bound", check_voronoi_edge_bound(t, a, a)))
        results.append(("v_bound", check_v_bound(t, Disk((0.0, 0.0), a))))
        if palm:
            results.append(("palm_domination", check_palm_domination(t)))
    elif t.kind == "DT":
        results.append(("delaunay_box_bound", check_delaunay_box_bound(t, a)))
        verts = {i for e in t.edges for i in e.pair}
        results.append(("euler_bound", check_euler_bound(max(len(verts), 1), len(t.edges))))
        results.append(("v_bound", check_v_bound(t, Disk((0.0, 0.0), a))))
    elif t.kind == "JMT":
        results.append(("jm_locality", _jm_locality_from_edges(t, a)))
    elif t.kind == "LT":
        results.append(("lt_chord_criterion",
                        check_lt_chord_criterion(t.generator, Disk((0.0, 0.0), a))))
    elif t.kind == "MG":
        # counts are consistent by construction; nothing lemma-shaped to check
        pass
    else:
        raise VerifyError(f"no file checks for kind {t.kind!r}")
    return [aggregate(name, [res]) for name, res in results]


def _jm_locality_from_edges(t: Tessellation, a: float) -> CheckResult:
    """Locality probe from serialized polyline vertices (crossing points)."""
    gen = t.generator
    r_prime = t.meta.get("r_prime")
    if r_prime is None:
        r_prime = measure.jm_nearest_distance(gen)
    b = max(r_prime, 1.0)
    verts = [v for e in t.edges for v in np.asarray(e.geometry.vertices)]
    if not verts:
        return CheckResult(True)
    cross = np.asarray(verts)
    inside = np.hypot(cross[:, 0], cross[:, 1]) <= a
    if not np.any(inside):
        return CheckResult(True)
    probes = cross[inside]
    pts = gen.points
    marks = gen.marks
    idx, _ = jm_nearest_field(np.ascontiguousarray(pts[:, 0]),
                              np.ascontiguousarray(pts[:, 1]),
                              np.ascontiguousarray(marks),
                              np.ascontiguousarray(probes[:, 0]),
                              np.ascontiguousarray(probes[:, 1]))
    site_dist = np.hypot(pts[idx, 0], pts[idx, 1]) + marks[idx]
    bound = b + 3.0 * a
    ok = bool(site_dist.max() <= bound + _SLACK)
    return CheckResult(ok, margin=float(bound - site_dist.max()),
                       detail=None if ok else "locality violated")
