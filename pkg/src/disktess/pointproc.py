"""Seeded samplers for every point-process model used by the engine.

Homogeneous Poisson (plain, marked, Palm), Cox processes (modulated by a
Boolean set, shot-noise), the Widom-Rowlinson area-interaction Gibbs process
via a birth-death Metropolis chain, and the one-dimensional line / axis
processes behind line tessellations and Manhattan grids.

All randomness flows through a counter-based generator (Philox) keyed by
(seed, stream, purpose...), so replications are independent streams and
results never depend on scheduling or worker counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import geom
from ._kernels import wr_birth_death_chain
from .geom import Annulus, BoxRegion, Disk, Region


class SamplingError(ValueError):
    """Raised on invalid sampler parameters or model misuse."""


# substream purpose codes (fixed; part of the reproducibility contract)
_P_POINTS = 0
_P_MARKS = 1
_P_GERMS = 2
_P_CHAIN = 3
_P_ANGLE = 4
_P_MIX = 5


def substream(seed: int, stream: int, *path: int) -> np.random.Generator:
    """Independent Philox generator keyed by (seed, stream, purpose path)."""
    if seed < 0 or stream < 0:
        raise SamplingError("seed and stream must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(int(stream),) + tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """Stable derived 64-bit seed for independent sub-experiments."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# pattern containers


@dataclass(frozen=True)
class PointPattern:
    """Finite planar point set with its sampling window and seed provenance."""

    points: np.ndarray
    window: Region
    intensity_hint: float
    seed: int
    stream: int

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        if not np.all(np.isfinite(pts)):
            raise SamplingError("non-finite point coordinates")
        if len(pts) and not np.all(self.window.contains(pts, atol=1e-9)):
            raise SamplingError("points outside the declared window")
        pts.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class MarkedPointPattern:
    """Point pattern with i.i.d. nonnegative marks."""

    base: PointPattern
    marks: np.ndarray
    mark_law: "MarkLaw"

    def __post_init__(self) -> None:
        m = np.asarray(self.marks, dtype=float).reshape(-1)
        object.__setattr__(self, "marks", m)
        if len(m) != self.base.n:
            raise SamplingError("one mark per point required")
        if len(m) and (not np.all(np.isfinite(m)) or np.any(m < 0)):
            raise SamplingError("marks must be finite and nonnegative")
        m.setflags(write=False)

    @property
    def points(self) -> np.ndarray:
        return self.base.points

    @property
    def n(self) -> int:
        return self.base.n


@dataclass(frozen=True)
class LineProcessSample:
    """Lines (rho, theta) with |rho| <= rho_max, theta in [0, pi)."""

    lines: np.ndarray
    rho_max: float
    intensity: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.lines, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "lines", arr)
        if len(arr):
            if np.any(np.abs(arr[:, 0]) > self.rho_max + 1e-12):
                raise SamplingError("line rho outside the sampled strip")
            if np.any((arr[:, 1] < 0) | (arr[:, 1] >= math.pi)):
                raise SamplingError("line theta outside [0, pi)")
        arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.lines)


@dataclass(frozen=True)
class AxisSample:
    """Sorted one-dimensional point sample on an interval."""

    coords: np.ndarray
    interval: tuple[float, float]
    intensity: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.coords, dtype=float).reshape(-1)
        object.__setattr__(self, "coords", arr)
        lo, hi = self.interval
        if lo >= hi:
            raise SamplingError("empty axis interval")
        if len(arr):
            if np.any(np.diff(arr) < 0):
                raise SamplingError("axis coordinates must be sorted")
            if arr[0] < lo - 1e-12 or arr[-1] > hi + 1e-12:
                raise SamplingError("axis coordinates outside interval")
        arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.coords)


# ---------------------------------------------------------------------------
# mark laws


@dataclass(frozen=True)
class UniformMarks:
    """Uniform marks on [0, tau]; tau = 0 degenerates to all-zero marks."""

    tau: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise SamplingError("uniform mark bound must be finite and >= 0")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.tau == 0:
            return np.zeros(n)
        return rng.uniform(0.0, self.tau, size=n)

    def mass_below(self, m: float) -> float:
        if self.tau == 0:
            return 1.0 if m >= 0 else 0.0
        return min(max(m, 0.0), self.tau) / self.tau


@dataclass(frozen=True)
class ExponentialMarks:
    """Exponential marks with mean ``scale``."""

    scale: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise SamplingError("exponential mark scale must be positive")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.exponential(self.scale, size=n)

    def mass_below(self, m: float) -> float:
        return 1.0 - math.exp(-max(m, 0.0) / self.scale) if m > 0 else 0.0


@dataclass(frozen=True)
class ConstantMarks:
    """All marks equal to ``value`` (a point mass, useful for degeneration checks)."""

    value: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and self.value >= 0):
            raise SamplingError("constant mark must be finite and >= 0")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.value)

    def mass_below(self, m: float) -> float:
        return 1.0 if m >= self.value else 0.0


MarkLaw = Union[UniformMarks, ExponentialMarks, ConstantMarks]


# ---------------------------------------------------------------------------
# model descriptors


@dataclass(frozen=True)
class PoissonModel:
    intensity: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.intensity) and self.intensity >= 0):
            raise SamplingError("intensity must be finite and >= 0")


@dataclass(frozen=True)
class MarkedPoissonModel:
    intensity: float
    mark_law: MarkLaw

    def __post_init__(self) -> None:
        if not (math.isfinite(self.intensity) and self.intensity >= 0):
            raise SamplingError("intensity must be finite and >= 0")


@dataclass(frozen=True)
class PalmPoissonModel:
    """Poisson model seen from a typical point: an extra point at the origin."""

    intensity: float


@dataclass(frozen=True)
class PalmMarkedPoissonModel:
    intensity: float
    mark_law: MarkLaw


@dataclass(frozen=True)
class RadiusLaw:
    """Boolean-model germ radius law: fixed value or uniform on [lo, hi]."""

    kind: str
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "uniform"):
            raise SamplingError("radius law kind must be 'fixed' or 'uniform'")
        if not (0 < self.lo <= self.hi and math.isfinite(self.hi)):
            raise SamplingError("radius law needs 0 < lo <= hi < inf")

    @property
    def max_radius(self) -> float:
        return self.hi

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(n, self.hi)
        return rng.uniform(self.lo, self.hi, size=n)


def fixed_radius(r: float) -> RadiusLaw:
    return RadiusLaw("fixed", r, r)


@dataclass(frozen=True)
class ModulatedCox:
    """Cox process whose intensity is lam_inside on a Boolean set, lam_outside off it."""

    lam_inside: float
    lam_outside: float
    germ_intensity: float
    radius_law: RadiusLaw

    def __post_init__(self) -> None:
        for v in (self.lam_inside, self.lam_outside, self.germ_intensity):
            if not (math.isfinite(v) and v >= 0):
                raise SamplingError("Cox intensities must be finite and >= 0")

    @property
    def reach(self) -> float:
        return self.radius_law.max_radius


@dataclass(frozen=True)
class ShotNoiseCox:
    """Cox process with intensity sum_i kappa(x - G_i), kappa a bounded disk kernel."""

    germ_intensity: float
    kernel_height: float
    kernel_radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kernel_height) and self.kernel_height > 0):
            raise SamplingError("kernel must be bounded")
        if not (math.isfinite(self.kernel_radius) and self.kernel_radius > 0):
            raise SamplingError("kernel support radius must be finite and positive")
        if not (math.isfinite(self.germ_intensity) and self.germ_intensity >= 0):
            raise SamplingError("germ intensity must be finite and >= 0")

    @property
    def reach(self) -> float:
        return self.kernel_radius


@dataclass(frozen=True)
class GibbsParams:
    lam: float
    gamma: float
    r: float
    sweeps: int
    burn_in: int

    def __post_init__(self) -> None:
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise SamplingError("lambda must be positive")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise SamplingError("interaction radius must be positive")
        if not (self.sweeps > self.burn_in >= 0):
            raise SamplingError("need sweeps > burn_in >= 0")


@dataclass(frozen=True)
class GibbsModel:
    """Widom-Rowlinson model on a fixed box window with free boundary."""

    params: GibbsParams
    window: BoxRegion
    area_resolution: Optional[float] = None


CoxModel = Union[ModulatedCox, ShotNoiseCox]
Model = Union[PoissonModel, MarkedPoissonModel, PalmPoissonModel,
              PalmMarkedPoissonModel, ModulatedCox, ShotNoiseCox, GibbsModel]


# ---------------------------------------------------------------------------
# elementary sampling


def _uniform_in(window: Region, n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 0:
        return np.empty((0, 2))
    if isinstance(window, Disk):
        r = window.radius * np.sqrt(rng.random(n))
        th = rng.uniform(0.0, 2.0 * math.pi, n)
        return np.column_stack([window.center[0] + r * np.cos(th),
                                window.center[1] + r * np.sin(th)])
    if isinstance(window, BoxRegion):
        x0, x1, y0, y1 = window.bounds()
        return np.column_stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])
    if isinstance(window, Annulus):
        r = np.sqrt(rng.uniform(window.r_inner ** 2, window.r_outer ** 2, n))
        th = rng.uniform(0.0, 2.0 * math.pi, n)
        return np.column_stack([window.center[0] + r * np.cos(th),
                                window.center[1] + r * np.sin(th)])
    raise SamplingError(f"unsupported window {type(window).__name__}")


def _ppp_in(intensity: float, window: Region, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(intensity * window.area)
    return _uniform_in(window, n, rng)


def sample_ppp(intensity: float, window: Region, seed: int, stream: int) -> PointPattern:
    """Homogeneous Poisson pattern; zero intensity gives an empty pattern."""
    if intensity < 0 or not math.isfinite(intensity):
        raise SamplingError("intensity must be finite and >= 0")
    rng = substream(seed, stream, _P_POINTS)
    pts = _ppp_in(intensity, window, rng)
    return PointPattern(pts, window, intensity, seed, stream)


def sample_marked_ppp(intensity: float, window: Region, mark_law: MarkLaw,
                      seed: int, stream: int) -> MarkedPointPattern:
    base = sample_ppp(intensity, window, seed, stream)
    marks = mark_law.sample(substream(seed, stream, _P_MARKS), base.n)
    return MarkedPointPattern(base, marks, mark_law)


def sample_axis_poisson(intensity: float, interval: tuple[float, float],
                        seed: int, stream: int) -> AxisSample:
    if intensity < 0 or not math.isfinite(intensity):
        raise SamplingError("intensity must be finite and >= 0")
    lo, hi = interval
    if lo >= hi:
        raise SamplingError("empty axis interval")
    rng = substream(seed, stream, _P_POINTS)
    n = rng.poisson(intensity * (hi - lo))
    coords = np.sort(rng.uniform(lo, hi, n))
    return AxisSample(coords, (lo, hi), intensity)


def sample_line_process(intensity: float, rho_max: float, seed: int, stream: int) -> LineProcessSample:
    """Poisson line process on the strip [-rho_max, rho_max] x [0, pi)."""
    if intensity < 0 or not math.isfinite(intensity):
        raise SamplingError("intensity must be finite and >= 0")
    if rho_max < 1:
        raise SamplingError("rho_max must be >= 1")
    rng = substream(seed, stream, _P_POINTS)
    n = rng.poisson(intensity * 2.0 * rho_max * math.pi)
    rho = rng.uniform(-rho_max, rho_max, n)
    theta = rng.uniform(0.0, math.pi, n)
    return LineProcessSample(np.column_stack([rho, theta]), rho_max, intensity)


# ---------------------------------------------------------------------------
# Cox sampling (thinning of a dominating Poisson process)


def _sample_germs(reach_window: Region, germ_intensity: float,
                  rng: np.random.Generator) -> np.ndarray:
    return _ppp_in(germ_intensity, reach_window, rng)


def _enlarged(window: Region, pad: float) -> Region:
    if isinstance(window, Disk):
        return Disk(window.center, window.radius + pad)
    if isinstance(window, BoxRegion):
        half_diag = window.side * math.sqrt(2.0) / 2.0
        return Disk(window.center, half_diag + pad)
    if isinstance(window, Annulus):
        inner = max(window.r_inner - pad, 0.0)
        if inner == 0.0:
            return Disk(window.center, window.r_outer + pad)
        return Annulus(window.center, inner, window.r_outer + pad)
    raise SamplingError(f"unsupported window {type(window).__name__}")


def _modulated_field(pts: np.ndarray, germs: np.ndarray, radii: np.ndarray,
                     model: ModulatedCox) -> np.ndarray:
    if len(germs) == 0:
        return np.full(len(pts), model.lam_outside)
    d2 = ((pts[:, None, :] - germs[None, :, :]) ** 2).sum(axis=2)
    covered = np.any(d2 <= (radii[None, :] ** 2), axis=1)
    return np.where(covered, model.lam_inside, model.lam_outside)


def _shotnoise_field(pts: np.ndarray, germs: np.ndarray, model: ShotNoiseCox) -> np.ndarray:
    if len(germs) == 0 or len(pts) == 0:
        return np.zeros(len(pts))
    d2 = ((pts[:, None, :] - germs[None, :, :]) ** 2).sum(axis=2)
    counts = np.sum(d2 <= model.kernel_radius ** 2, axis=1)
    return model.kernel_height * counts


def _sample_modulated_points(model: ModulatedCox, window: Region,
                             germs: np.ndarray, radii: np.ndarray,
                             rng: np.random.Generator) -> np.ndarray:
    lam_max = max(model.lam_inside, model.lam_outside)
    if lam_max == 0:
        return np.empty((0, 2))
    cand = _ppp_in(lam_max, window, rng)
    if len(cand) == 0:
        return cand
    lam = _modulated_field(cand, germs, radii, model)
    u = rng.random(len(cand))
    return cand[u * lam_max < lam]


def _sample_shotnoise_points(model: ShotNoiseCox, window: Region,
                             germs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Thinning with a per-cell dominating bound (cells of side kernel_radius)."""
    rho = model.kernel_radius
    if isinstance(window, (Disk, Annulus)):
        cx, cy = window.center
        ro = window.radius if isinstance(window, Disk) else window.r_outer
        x0g, x1g, y0g, y1g = cx - ro, cx + ro, cy - ro, cy + ro
    else:
        x0g, x1g, y0g, y1g = window.bounds()
    nx = int(math.ceil((x1g - x0g) / rho))
    ny = int(math.ceil((y1g - y0g) / rho))
    out = []
    half_diag = rho * math.sqrt(2.0) / 2.0
    for i in range(nx):
        for j in range(ny):
            ccx = x0g + (i + 0.5) * rho
            ccy = y0g + (j + 0.5) * rho
            if len(germs):
                gd = np.hypot(germs[:, 0] - ccx, germs[:, 1] - ccy)
                n_near = int(np.sum(gd <= rho + half_diag))
            else:
                n_near = 0
            bound = model.kernel_height * n_near
            if bound == 0:
                continue
            n = rng.poisson(bound * rho * rho)
            if n == 0:
                continue
            cand = np.column_stack([rng.uniform(ccx - rho / 2, ccx + rho / 2, n),
                                    rng.uniform(ccy - rho / 2, ccy + rho / 2, n)])
            u = rng.random(n)
            keep = window.contains(cand) & (u * bound < _shotnoise_field(cand, germs, model))
            if np.any(keep):
                out.append(cand[keep])
    return np.vstack(out) if out else np.empty((0, 2))


def sample_cox(model: CoxModel, window: Region, seed: int, stream: int) -> PointPattern:
    """Cox pattern: conditionally Poisson given the realized intensity field."""
    germ_rng = substream(seed, stream, _P_GERMS)
    point_rng = substream(seed, stream, _P_POINTS)
    if isinstance(model, ModulatedCox):
        germ_window = _enlarged(window, model.reach)
        germs = _sample_germs(germ_window, model.germ_intensity, germ_rng)
        radii = model.radius_law.sample(germ_rng, len(germs))
        pts = _sample_modulated_points(model, window, germs, radii, point_rng)
        hint = max(model.lam_inside, model.lam_outside)
    elif isinstance(model, ShotNoiseCox):
        germ_window = _enlarged(window, model.reach)
        germs = _sample_germs(germ_window, model.germ_intensity, germ_rng)
        pts = _sample_shotnoise_points(model, window, germs, point_rng)
        hint = model.germ_intensity * model.kernel_height * math.pi * model.kernel_radius ** 2
    else:
        raise SamplingError("sample_cox needs a Cox model descriptor")
    return PointPattern(pts, window, hint, seed, stream)


# ---------------------------------------------------------------------------
# Widom-Rowlinson Gibbs sampling


def sample_wr_gibbs(params: GibbsParams, window: BoxRegion, seed: int, stream: int,
                    area_resolution: Optional[float] = None) -> PointPattern:
    """Final state of a birth-death Metropolis chain after burn_in + sweeps moves.

    The target density w.r.t. the unit-rate Poisson process is
    lam^n exp(-gamma * A(X)) with A the union-of-disks area evaluated on a
    fixed grid (pitch ``area_resolution``, default r/50) anchored to the
    window, so the chain is exactly reversible for that discretized energy.
    """
    if not isinstance(window, BoxRegion):
        raise SamplingError("Gibbs sampling needs a box window")
    res = area_resolution if area_resolution is not None else params.r / 50.0
    if res <= 0:
        raise SamplingError("area resolution must be positive")
    pts, _ = _run_wr_chain(params, window, seed, stream, res)
    return PointPattern(pts, window, params.lam, seed, stream)


def wr_gibbs_occupancy(params: GibbsParams, window: BoxRegion, seed: int, stream: int,
                       area_resolution: Optional[float] = None) -> np.ndarray:
    """Per-move point counts of the birth-death chain (burn-in included)."""
    res = area_resolution if area_resolution is not None else params.r / 50.0
    _, counts = _run_wr_chain(params, window, seed, stream, res)
    return counts


def _run_wr_chain(params: GibbsParams, window: BoxRegion, seed: int, stream: int,
                  res: float) -> tuple[np.ndarray, np.ndarray]:
    moves = params.burn_in + params.sweeps
    rng = substream(seed, stream, _P_CHAIN)
    u = rng.random((5, moves))
    x0, x1, y0, y1 = window.bounds()
    return wr_birth_death_chain(params.lam, params.gamma, params.r,
                                x0, x1, y0, y1, res,
                                np.ascontiguousarray(u[0]), np.ascontiguousarray(u[1]),
                                np.ascontiguousarray(u[2]), np.ascontiguousarray(u[3]),
                                np.ascontiguousarray(u[4]))


# ---------------------------------------------------------------------------
# Palm versions


def origin_index(points: np.ndarray) -> int:
    idx = np.flatnonzero((points[:, 0] == 0.0) & (points[:, 1] == 0.0))
    if len(idx) == 0:
        raise SamplingError("pattern does not contain the origin")
    return int(idx[0])


def palmify(model: Union[PoissonModel, MarkedPoissonModel], window: Region,
            seed: int, stream: int) -> Union[PointPattern, MarkedPointPattern]:
    """Palm version of a Poisson model: the model plus a point at the origin."""
    if isinstance(model, PoissonModel):
        base = sample_ppp(model.intensity, window, seed, stream)
        pts = np.vstack([base.points, [[0.0, 0.0]]])
        return PointPattern(pts, window, model.intensity, seed, stream)
    if isinstance(model, MarkedPoissonModel):
        mp = sample_marked_ppp(model.intensity, window, model.mark_law, seed, stream)
        pts = np.vstack([mp.points, [[0.0, 0.0]]])
        origin_mark = model.mark_law.sample(substream(seed, stream, _P_MARKS, 1), 1)
        marks = np.concatenate([mp.marks, origin_mark])
        base = PointPattern(pts, window, model.intensity, seed, stream)
        return MarkedPointPattern(base, marks, model.mark_law)
    raise SamplingError("Palm sampling only for PPP")


def palm_line_process(intensity: float, rho_max: float, seed: int, stream: int) -> LineProcessSample:
    """Line process plus a line through the origin at an independent uniform angle."""
    base = sample_line_process(intensity, rho_max, seed, stream)
    phi = substream(seed, stream, _P_ANGLE).uniform(0.0, math.pi)
    lines = np.vstack([base.lines, [[0.0, phi]]])
    return LineProcessSample(lines, rho_max, intensity)


def palm_mg(lam_v: float, lam_h: float, interval: tuple[float, float],
            seed: int, stream: int) -> tuple[AxisSample, AxisSample, str]:
    """Palm version of the Manhattan grid pair of axis processes.

    With probability lam_h / (lam_h + lam_v) the horizontal process receives
    the extra point at 0, otherwise the vertical one.  Returns
    (vertical, horizontal, which-axis-was-palmed).
    """
    if lam_v <= 0 or lam_h <= 0:
        raise SamplingError("axis intensities must be positive")
    lo, hi = interval
    if not lo <= 0 <= hi:
        raise SamplingError("interval must contain 0")
    yv = sample_axis_poisson(lam_v, interval, seed, stream)
    yh = sample_axis_poisson(lam_h, interval, derive_seed(seed, 2), stream)
    u = substream(seed, stream, _P_MIX).random()
    if u <= lam_h / (lam_h + lam_v):
        coords = np.sort(np.concatenate([yh.coords, [0.0]]))
        return yv, AxisSample(coords, interval, lam_h), "h"
    coords = np.sort(np.concatenate([yv.coords, [0.0]]))
    return AxisSample(coords, interval, lam_v), yh, "v"


# ---------------------------------------------------------------------------
# growable samplers: progressively reveal one realization on larger windows


class GrowthLimit(RuntimeError):
    """The model cannot be revealed beyond its maximum window."""


# (fixed-window models clamp growth instead of raising; callers compare the
# achieved radius against the request to detect exhaustion)


class _GrowableDiskPoisson:
    """One Poisson realization revealed on increasing origin-centered disks."""

    def __init__(self, intensity: float, seed: int, stream: int,
                 mark_law: Optional[MarkLaw] = None, include_origin: bool = False):
        self.intensity = intensity
        self.seed = seed
        self.stream = stream
        self.mark_law = mark_law
        self.radius = 0.0
        self.level = 0
        self.max_radius = math.inf
        if include_origin:
            self._pts = [np.zeros((1, 2))]
            self._marks = [mark_law.sample(substream(seed, stream, _P_MARKS, 0), 1)] \
                if mark_law is not None else []
        else:
            self._pts = [np.empty((0, 2))]
            self._marks = [np.empty(0)] if mark_law is not None else []

    def extend_to(self, radius: float) -> None:
        if radius <= self.radius:
            return
        region: Region
        if self.radius == 0.0:
            region = Disk((0.0, 0.0), radius)
        else:
            region = Annulus((0.0, 0.0), self.radius, radius)
        rng = substream(self.seed, self.stream, _P_POINTS, self.level + 1)
        pts = _ppp_in(self.intensity, region, rng)
        self._pts.append(pts)
        if self.mark_law is not None:
            mrng = substream(self.seed, self.stream, _P_MARKS, self.level + 1)
            self._marks.append(self.mark_law.sample(mrng, len(pts)))
        self.level += 1
        self.radius = radius

    @property
    def points(self) -> np.ndarray:
        return np.vstack(self._pts)

    @property
    def marks(self) -> np.ndarray:
        return np.concatenate(self._marks)

    def pattern(self) -> PointPattern:
        return PointPattern(self.points, Disk((0.0, 0.0), max(self.radius, 1e-300)),
                            self.intensity, self.seed, self.stream)

    def marked_pattern(self) -> MarkedPointPattern:
        return MarkedPointPattern(self.pattern(), self.marks, self.mark_law)


class _GrowableBoxPoisson:
    """One Poisson realization revealed on increasing origin-centered boxes."""

    def __init__(self, intensity: float, seed: int, stream: int,
                 include_origin: bool = False):
        self.intensity = intensity
        self.seed = seed
        self.stream = stream
        self.side = 0.0
        self.level = 0
        self.max_radius = math.inf
        self._pts = [np.zeros((1, 2))] if include_origin else [np.empty((0, 2))]

    def extend_to(self, side: float) -> None:
        if side <= self.side:
            return
        rng = substream(self.seed, self.stream, _P_POINTS, self.level + 1)
        h_old = self.side / 2.0
        h_new = side / 2.0
        # box ring decomposed into two full-height side strips + two caps
        rects = [(-h_new, -h_old, -h_new, h_new), (h_old, h_new, -h_new, h_new),
                 (-h_old, h_old, -h_new, -h_old), (-h_old, h_old, h_old, h_new)]
        if self.side == 0.0:
            rects = [(-h_new, h_new, -h_new, h_new)]
        for (x0, x1, y0, y1) in rects:
            n = rng.poisson(self.intensity * (x1 - x0) * (y1 - y0))
            if n:
                self._pts.append(np.column_stack([rng.uniform(x0, x1, n),
                                                  rng.uniform(y0, y1, n)]))
        self.level += 1
        self.side = side

    @property
    def points(self) -> np.ndarray:
        return np.vstack(self._pts)

    def pattern(self) -> PointPattern:
        return PointPattern(self.points, BoxRegion((0.0, 0.0), max(self.side, 1e-300)),
                            self.intensity, self.seed, self.stream)


class _GrowableDiskCox:
    """One Cox realization revealed on increasing disks.

    The germ field is revealed on disks enlarged by the interaction reach, so
    the point field restricted to already-revealed regions never changes.
    """

    def __init__(self, model: CoxModel, seed: int, stream: int):
        self.model = model
        self.seed = seed
        self.stream = stream
        self.radius = 0.0
        self.germ_radius = 0.0
        self.level = 0
        self.max_radius = math.inf
        self._pts = [np.empty((0, 2))]
        self._germs = [np.empty((0, 2))]
        self._radii = [np.empty(0)]

    def _extend_germs(self, radius: float) -> None:
        if radius <= self.germ_radius:
            return
        region: Region
        if self.germ_radius == 0.0:
            region = Disk((0.0, 0.0), radius)
        else:
            region = Annulus((0.0, 0.0), self.germ_radius, radius)
        rng = substream(self.seed, self.stream, _P_GERMS, self.level + 1)
        germs = _ppp_in(self.model.germ_intensity, region, rng)
        self._germs.append(germs)
        if isinstance(self.model, ModulatedCox):
            self._radii.append(self.model.radius_law.sample(rng, len(germs)))
        self.germ_radius = radius

    def extend_to(self, radius: float) -> None:
        if radius <= self.radius:
            return
        self._extend_germs(radius + self.model.reach)
        region: Region
        if self.radius == 0.0:
            region = Disk((0.0, 0.0), radius)
        else:
            region = Annulus((0.0, 0.0), self.radius, radius)
        rng = substream(self.seed, self.stream, _P_POINTS, self.level + 1)
        germs = np.vstack(self._germs)
        if isinstance(self.model, ModulatedCox):
            radii = np.concatenate(self._radii)
            pts = _sample_modulated_points(self.model, region, germs, radii, rng)
        else:
            pts = _sample_shotnoise_points(self.model, region, germs, rng)
        self._pts.append(pts)
        self.level += 1
        self.radius = radius

    @property
    def points(self) -> np.ndarray:
        return np.vstack(self._pts)

    def pattern(self) -> PointPattern:
        hint = (max(self.model.lam_inside, self.model.lam_outside)
                if isinstance(self.model, ModulatedCox)
                else self.model.germ_intensity * self.model.kernel_height
                * math.pi * self.model.kernel_radius ** 2)
        return PointPattern(self.points, Disk((0.0, 0.0), max(self.radius, 1e-300)),
                            hint, self.seed, self.stream)


class _FixedWindowGibbs:
    """Widom-Rowlinson sample on its fixed window; cannot grow beyond it."""

    def __init__(self, model: GibbsModel, seed: int, stream: int):
        self.model = model
        self.seed = seed
        self.stream = stream
        self.radius = 0.0
        self.max_radius = model.window.side / 2.0
        self._pattern: Optional[PointPattern] = None

    def extend_to(self, radius: float) -> None:
        if self._pattern is None:
            self._pattern = sample_wr_gibbs(self.model.params, self.model.window,
                                            self.seed, self.stream,
                                            self.model.area_resolution)
        self.radius = min(radius, self.max_radius)

    @property
    def points(self) -> np.ndarray:
        return self._pattern.points if self._pattern is not None else np.empty((0, 2))

    def pattern(self) -> PointPattern:
        if self._pattern is None:
            raise SamplingError("extend_to must be called first")
        return self._pattern


def growable_disk_sampler(model: Model, seed: int, stream: int):
    """Progressive-disk sampler for a model descriptor."""
    if isinstance(model, PoissonModel):
        return _GrowableDiskPoisson(model.intensity, seed, stream)
    if isinstance(model, PalmPoissonModel):
        return _GrowableDiskPoisson(model.intensity, seed, stream, include_origin=True)
    if isinstance(model, MarkedPoissonModel):
        return _GrowableDiskPoisson(model.intensity, seed, stream, mark_law=model.mark_law)
    if isinstance(model, PalmMarkedPoissonModel):
        return _GrowableDiskPoisson(model.intensity, seed, stream,
                                    mark_law=model.mark_law, include_origin=True)
    if isinstance(model, (ModulatedCox, ShotNoiseCox)):
        return _GrowableDiskCox(model, seed, stream)
    if isinstance(model, GibbsModel):
        return _FixedWindowGibbs(model, seed, stream)
    raise SamplingError(f"no growable sampler for {type(model).__name__}")


def growable_box_sampler(model: Model, seed: int, stream: int):
    """Progressive-box sampler (Delaunay certification path)."""
    if isinstance(model, PoissonModel):
        return _GrowableBoxPoisson(model.intensity, seed, stream)
    if isinstance(model, PalmPoissonModel):
        return _GrowableBoxPoisson(model.intensity, seed, stream, include_origin=True)
    raise SamplingError("box growth is only supported for Poisson models")
