"""Replicated Monte Carlo estimation of exponential moments and friends.

Replications are independent streams keyed by (seed, stream); aggregation is
a deterministic fold in stream order, so results are bit-identical for any
worker count.  Exponential moments are accumulated in log space and shared
across evaluation points, which keeps the estimate exactly 1 at alpha = 0 and
monotone in alpha sample-wise.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import ks_2samp
from scipy.stats import t as t_dist

from . import measure, tess
from .geom import Annulus, BoxRegion, Disk
from .pointproc import (GibbsModel, MarkedPoissonModel, MarkLaw, Model,
                        ModulatedCox, PalmMarkedPoissonModel, PalmPoissonModel,
                        PoissonModel, SamplingError, ShotNoiseCox, UniformMarks,
                        derive_seed, palm_line_process, sample_axis_poisson,
                        sample_cox, sample_line_process, sample_marked_ppp,
                        sample_ppp, sample_wr_gibbs, substream)
from .tess import TessellationError


class CertificationError(RuntimeError):
    """A replication could not be certified within its window cap."""


# ---------------------------------------------------------------------------
# replication engine


def parallel_map(fn: Callable, items: Sequence, workers: int = 1, chunk: int = 64):
    """Order-preserving map, optionally over a process pool.

    The output is identical for every worker count: items are evaluated
    independently and reassembled in input order.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    chunks = [items[i:i + chunk] for i in range(0, len(items), chunk)]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for part in ex.map(_apply_chunk, [(fn, c) for c in chunks]):
            out.extend(part)
    return out


def _apply_chunk(arg):
    fn, chunk = arg
    return [fn(it) for it in chunk]


@dataclass(frozen=True)
class SimulationSpec:
    """What to simulate per replication: a model plus a tessellation target."""

    kind: str  # 'voronoi' | 'delaunay' | 'jm' | 'line' | 'manhattan' | 'count'
    intensity: float = 1.0
    a: float = 1.0
    mark_law: Optional[MarkLaw] = None
    lam_v: Optional[float] = None
    lam_h: Optional[float] = None
    grid_step: float = 0.02
    palm: bool = False
    max_window_factor: float = 512.0
    model: Optional[Model] = None  # overrides the Poisson default (Cox, Gibbs)

    def __post_init__(self) -> None:
        if self.kind not in ("voronoi", "delaunay", "jm", "line", "manhattan", "count"):
            raise ValueError(f"unknown simulation kind {self.kind!r}")


def _point_model(spec: SimulationSpec) -> Model:
    if spec.model is not None:
        return spec.model
    if spec.kind == "jm":
        law = spec.mark_law if spec.mark_law is not None else UniformMarks(1.0)
        return (PalmMarkedPoissonModel(spec.intensity, law) if spec.palm
                else MarkedPoissonModel(spec.intensity, law))
    return PalmPoissonModel(spec.intensity) if spec.palm else PoissonModel(spec.intensity)


def simulate_functional(spec: SimulationSpec, functional: str,
                        seed: int, stream: int) -> float:
    """One replication of a functional ('length', 'W', 'V', 'W_inf')."""
    disk = Disk((0.0, 0.0), spec.a)
    if spec.kind == "count":
        return float(sample_ppp(spec.intensity, disk, seed, stream).n)
    if spec.kind == "voronoi":
        t = tess.restrict_voronoi_certified(_point_model(spec), disk, seed, stream,
                                            max_window_factor=spec.max_window_factor)
        if not t.certified:
            raise CertificationError("Voronoi restriction uncertified")
    elif spec.kind == "delaunay":
        t = tess.restrict_delaunay_certified(_point_model(spec), disk, seed, stream,
                                             max_window_factor=spec.max_window_factor)
        if not t.certified:
            raise CertificationError("Delaunay restriction uncertified")
    elif spec.kind == "jm":
        t = tess.build_jmt_in_disk(_point_model(spec), disk, spec.grid_step,
                                   seed, stream,
                                   max_window_factor=spec.max_window_factor)
    elif spec.kind == "line":
        rho_max = max(spec.a, 1.0)
        lines = (palm_line_process(spec.intensity, rho_max, seed, stream)
                 if spec.palm else
                 sample_line_process(spec.intensity, rho_max, seed, stream))
        t = tess.build_lt_in_disk(lines, disk)
    elif spec.kind == "manhattan":
        lam_v = spec.lam_v if spec.lam_v is not None else spec.intensity
        lam_h = spec.lam_h if spec.lam_h is not None else spec.intensity
        interval = (-spec.a, spec.a)
        yv = sample_axis_poisson(lam_v, interval, seed, stream)
        yh = sample_axis_poisson(lam_h, interval, derive_seed(seed, 1), stream)
        t = tess.build_mg(yv, yh, BoxRegion((0.0, 0.0), 2.0 * spec.a))
    else:  # pragma: no cover
        raise ValueError(spec.kind)
    if functional == "length":
        return measure.total_edge_length(t, disk)
    if functional == "W":
        return float(measure.count_edges(t, disk))
    if functional == "V":
        return float(measure.count_cells(t, disk))
    if functional == "W_inf":
        return float(measure.count_lines(t, disk))
    raise ValueError(f"unknown functional {functional!r}")


@dataclass(frozen=True)
class _RepTask:
    spec: SimulationSpec
    functional: str
    seed: int
    stream: int


def _run_replication(task: _RepTask) -> float:
    try:
        return simulate_functional(task.spec, task.functional, task.seed, task.stream)
    except (CertificationError, TessellationError):
        retry = replace(task.spec, max_window_factor=2.0 * task.spec.max_window_factor)
        return simulate_functional(retry, task.functional, task.seed, task.stream)


def replicate(spec: SimulationSpec, functional: str, n: int, seed: int,
              workers: int = 1) -> np.ndarray:
    """n independent replications on streams 0..n-1, in stream order."""
    tasks = [_RepTask(spec, functional, seed, s) for s in range(n)]
    return np.asarray(parallel_map(_run_replication, tasks, workers=workers), dtype=float)


# ---------------------------------------------------------------------------
# exponential-moment estimation


@dataclass
class MgfEstimate:
    alpha: float
    mean: float
    ci_low: float
    ci_high: float
    n: int
    batches: int


def _batch_log_means(log_values: np.ndarray, batches: int) -> np.ndarray:
    parts = np.array_split(log_values, batches)
    return np.array([logsumexp(p) - math.log(len(p)) for p in parts])


def mgf_from_samples(values: np.ndarray, alpha: float, batches: int = 20) -> MgfEstimate:
    """Batch-means estimate of E[exp(alpha * value)] from shared samples."""
    n = len(values)
    if n < batches:
        raise ValueError("need at least one value per batch")
    log_y = alpha * values
    log_mean = float(logsumexp(log_y) - math.log(n))
    blm = _batch_log_means(log_y, batches)
    bm = np.exp(blm)
    mean = float(math.exp(log_mean)) if log_mean < 700 else math.inf
    if np.all(np.isfinite(bm)):
        s = float(np.std(bm, ddof=1))
        half = float(t_dist.ppf(0.975, batches - 1)) * s / math.sqrt(batches)
        return MgfEstimate(alpha, mean, mean - half, mean + half, n, batches)
    return MgfEstimate(alpha, mean, -math.inf, math.inf, n, batches)


def estimate_mgf(spec: SimulationSpec, functional: str, alphas: Sequence[float],
                 n: int, seed: int, workers: int = 1, batches: int = 20,
                 values: Optional[np.ndarray] = None) -> list[MgfEstimate]:
    """Exponential moments at several alphas from one shared replication set."""
    if n < 100:
        raise ValueError("need n >= 100 replications")
    if values is None:
        values = replicate(spec, functional, n, seed, workers=workers)
    return [mgf_from_samples(values, float(a), batches=batches) for a in alphas]


@dataclass
class TailEstimate:
    threshold: float
    probability: float
    ci_low: float
    ci_high: float
    n: int


def estimate_tail(spec: SimulationSpec, functional: str, thresholds: Sequence[float],
                  n: int, seed: int, workers: int = 1, batches: int = 20,
                  values: Optional[np.ndarray] = None) -> list[TailEstimate]:
    """Empirical exceedance probabilities P(value >= threshold) with batch CIs."""
    if values is None:
        values = replicate(spec, functional, n, seed, workers=workers)
    out = []
    for thr in thresholds:
        ind = (values >= thr).astype(float)
        p = float(ind.mean())
        parts = np.array_split(ind, batches)
        bm = np.array([q.mean() for q in parts])
        s = float(np.std(bm, ddof=1))
        half = float(t_dist.ppf(0.975, batches - 1)) * s / math.sqrt(batches)
        out.append(TailEstimate(float(thr), p, p - half, p + half, len(values)))
    return out


# ---------------------------------------------------------------------------
# assumption probes


@dataclass
class ProbeRow:
    """One finite-n surrogate row of the void/annulus moment conditions."""

    n: float
    reps: int
    void_fraction: float
    void_is_bound: bool          # no void observed; fraction reported as < 1/reps
    void_rate: float             # -log(void fraction or bound) / normalizer
    mgf_rate_beta1: float        # log empirical MGF of the annulus count / area
    mgf_rate_beta2: float
    norm_inner: float
    norm_annulus: float
    exact_void_rate: Optional[float] = None
    exact_mgf_rate_beta1: Optional[float] = None
    exact_mgf_rate_beta2: Optional[float] = None


@dataclass(frozen=True)
class _ProbeTask:
    model: Model
    n: float
    seed: int
    stream: int
    jm_balls: bool


def _probe_counts(task: _ProbeTask) -> tuple[int, int]:
    """(count inside B_n, count in the annulus B_{n+4} \\ B_n) for one replication."""
    model = task.model
    n = task.n
    outer = Disk((0.0, 0.0), n + 4.0)
    if isinstance(model, PoissonModel):
        pts = sample_ppp(model.intensity, outer, task.seed, task.stream).points
        radial = np.hypot(pts[:, 0], pts[:, 1]) if len(pts) else np.empty(0)
    elif isinstance(model, (ModulatedCox, ShotNoiseCox)):
        pts = sample_cox(model, outer, task.seed, task.stream).points
        radial = np.hypot(pts[:, 0], pts[:, 1]) if len(pts) else np.empty(0)
    elif isinstance(model, GibbsModel):
        half = model.window.side / 2.0
        if half < (n + 4.0) * math.sqrt(2.0):
            raise SamplingError("Gibbs window too small for the probe annulus")
        pts = sample_wr_gibbs(model.params, model.window, task.seed, task.stream,
                              model.area_resolution).points
        radial = np.hypot(pts[:, 0], pts[:, 1]) if len(pts) else np.empty(0)
    elif isinstance(model, MarkedPoissonModel):
        mp = sample_marked_ppp(model.intensity, outer, model.mark_law,
                               task.seed, task.stream)
        radial = (np.hypot(mp.points[:, 0], mp.points[:, 1]) + mp.marks
                  if mp.n else np.empty(0))
    else:
        raise SamplingError(f"probe unsupported for {type(model).__name__}")
    inner = int(np.sum(radial <= n))
    ann = int(np.sum((radial > n) & (radial <= n + 4.0)))
    return inner, ann


def _jm_ball_mean_measure(intensity: float, law: MarkLaw, r: float) -> float:
    """Expected number of marked points with |x| + mark <= r."""
    from scipy.integrate import quad

    val, _ = quad(lambda s: s * law.mass_below(r - s), 0.0, r, limit=200)
    return intensity * 2.0 * math.pi * val


def probe_assumptions(model: Model, n_values: Sequence[float], reps: int, seed: int,
                      workers: int = 1, betas: tuple[float, float] = (1.0, 2.0)) -> list[ProbeRow]:
    """Empirical void-probability and annulus count-MGF rates at several scales.

    For the homogeneous Poisson model the exact rates are attached for
    comparison.  A zero observed void count is reported as a '< 1/reps'
    bound rather than an error.
    """
    jm = isinstance(model, MarkedPoissonModel)
    rows = []
    for idx, n in enumerate(n_values):
        tasks = [_ProbeTask(model, float(n), derive_seed(seed, 10 + idx), s, jm)
                 for s in range(reps)]
        counts = parallel_map(_probe_counts, tasks, workers=workers)
        inner = np.array([c[0] for c in counts], dtype=float)
        ann = np.array([c[1] for c in counts], dtype=float)
        if jm:
            norm_in = _jm_ball_mean_measure(model.intensity, model.mark_law, float(n))
            norm_ann = (_jm_ball_mean_measure(model.intensity, model.mark_law, float(n) + 4.0)
                        - norm_in)
            lam_unit = 1.0  # rates normalized by mean measure, target rate 1
        else:
            norm_in = math.pi * float(n) ** 2
            norm_ann = math.pi * ((float(n) + 4.0) ** 2 - float(n) ** 2)
            lam_unit = getattr(model, "intensity", None)
        void_frac = float(np.mean(inner == 0))
        bound = void_frac == 0.0
        eff = max(void_frac, 1.0 / reps)
        void_rate = -math.log(eff) / norm_in
        m1 = float(logsumexp(betas[0] * ann) - math.log(reps)) / norm_ann
        m2 = float(logsumexp(betas[1] * ann) - math.log(reps)) / norm_ann
        row = ProbeRow(float(n), reps, void_frac, bound, void_rate, m1, m2,
                       norm_in, norm_ann)
        if isinstance(model, PoissonModel):
            row.exact_void_rate = model.intensity
            row.exact_mgf_rate_beta1 = (math.exp(betas[0]) - 1.0) * model.intensity
            row.exact_mgf_rate_beta2 = (math.exp(betas[1]) - 1.0) * model.intensity
        elif jm:
            row.exact_void_rate = 1.0  # mean-measure normalization
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# distributional scaling test


@dataclass
class ScalingReport:
    statistic: float
    pvalue: float
    n: int


def _float_key(x: float) -> int:
    return int.from_bytes(np.float64(x).tobytes(), "little")


def scaling_test(lam: float, r: float, n: int, seed: int, workers: int = 1,
                 max_window_factor: float = 512.0) -> ScalingReport:
    """Two-sample KS test of the Delaunay length scaling identity.

    Compares samples of the total Delaunay edge length in the unit disk at
    intensity lam against 1/r times the length in the radius-r disk at
    intensity lam / r^2.  Per-side seeds depend only on (seed, intensity,
    radius), so the r = 1 case reproduces identical samples.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    spec_a = SimulationSpec("delaunay", intensity=lam, a=1.0,
                            max_window_factor=max_window_factor)
    spec_b = SimulationSpec("delaunay", intensity=lam / r ** 2, a=r,
                            max_window_factor=max_window_factor)
    seed_a = derive_seed(seed, _float_key(lam), _float_key(1.0))
    seed_b = derive_seed(seed, _float_key(lam / r ** 2), _float_key(r))
    va = replicate(spec_a, "length", n, seed_a, workers=workers)
    vb = replicate(spec_b, "length", n, seed_b, workers=workers) / r
    res = ks_2samp(va, vb, method="asymp")
    return ScalingReport(float(res.statistic), float(res.pvalue), n)


# ---------------------------------------------------------------------------
# the exact divergent series for the Manhattan-grid cell count


@dataclass
class SeriesReport:
    """Log-space partial sums of e^(a-2L) sum_k exp(a k + L e^(a(k+1))) L^k / k!."""

    alpha: float
    lam: float
    log_terms: list[float]
    log_partial_sums: list[float]
    diverged_at: Optional[int]

    @property
    def partial_sums(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(self.log_partial_sums))


def mg_divergence_series(alpha: float, lam: float, k_max: int,
                         blowup: float = 1e6) -> SeriesReport:
    """Exact partial sums of the cell-count moment series for a Poisson grid.

    Terms are accumulated in log space; ``diverged_at`` is the first index
    where the partial sum exceeds ``blowup``.
    """
    if k_max < 5:
        raise ValueError("k_max must be at least 5")
    if lam <= 0:
        raise ValueError("lam must be positive")
    ks = np.arange(k_max + 1, dtype=float)
    log_terms = (alpha - 2.0 * lam + alpha * ks + lam * np.exp(alpha * (ks + 1.0))
                 + ks * math.log(lam) - gammaln(ks + 1.0))
    log_sums = np.logaddexp.accumulate(log_terms)
    over = np.nonzero(log_sums > math.log(blowup))[0]
    diverged_at = int(over[0]) if len(over) else None
    return SeriesReport(alpha, lam, [float(x) for x in log_terms],
                        [float(x) for x in log_sums], diverged_at)


@dataclass
class CellMgfDiagnostic:
    capped: int                  # replications whose exponent exceeded the cap
    dominance_ratio: float       # largest term's share of the total mass
    log_running_means: np.ndarray


def empirical_mg_cell_mgf(alpha: float, lam: float, n: int, seed: int,
                          cap: float = 700.0) -> tuple[float, CellMgfDiagnostic]:
    """Empirical mean of exp(alpha * V') for the Poisson Manhattan grid.

    V' = (1 + #vertical lines)(1 + #horizontal lines) crossing the unit box.
    The estimate blows up for alpha > 0 (heavy tail); the diagnostic records
    how many exponents exceeded ``cap`` and how dominant the largest term is.
    """
    rng = substream(seed, 0, 42)
    xv = rng.poisson(lam, size=n)
    xh = rng.poisson(lam, size=n)
    vprime = (xv + 1.0) * (xh + 1.0)
    log_y = alpha * vprime
    log_mean = float(logsumexp(log_y) - math.log(n))
    estimate = math.exp(log_mean) if log_mean < 700 else math.inf
    running = np.logaddexp.accumulate(log_y) - np.log(np.arange(1, n + 1))
    dominance = float(math.exp(log_y.max() - logsumexp(log_y)))
    diag = CellMgfDiagnostic(int(np.sum(log_y > cap)), dominance, running)
    return estimate, diag
