"""Config-driven command line interface.

Subcommands: sample, estimate, tail, verify, scaling-test, series,
probe-assumptions.  All randomness flows from one top-level seed; outputs are
CSV tables plus a JSON summary and are byte-identical for any --threads.

Exit codes: 0 success, 1 check violation, 2 configuration error,
3 certification failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, mc, measure, tess, verify
from ._kernels import BACKEND
from .geom import BoxRegion, Disk
from .pointproc import (ExponentialMarks, GibbsModel, GibbsParams,
                        MarkedPoissonModel, ModulatedCox, PoissonModel,
                        RadiusLaw, SamplingError, ShotNoiseCox, UniformMarks)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config schema (flat key-value JSON; unknown keys rejected)

_COMMON_KEYS = {"seed": int, "threads": int, "out": str, "n": int}
_SCHEMA: dict[str, dict[str, type]] = {
    "sample": {"model": dict, "tessellation": str, "target_radius": float,
               "grid_step": float, "window_cap": float},
    "estimate": {"model": dict, "tessellation": str, "target_radius": float,
                 "functionals": list, "alphas": list, "grid_step": float,
                 "window_cap": float},
    "tail": {"model": dict, "tessellation": str, "target_radius": float,
             "functionals": list, "thresholds": list, "grid_step": float,
             "window_cap": float},
    "verify": {"lambdas": list, "n_jm": int, "files": list, "target_radius": float},
    "scaling-test": {"intensity": float, "ratio": float, "window_cap": float},
    "series": {"alpha": float, "intensity": float, "k_max": int},
    "probe-assumptions": {"model": dict, "n_values": list, "reps": int},
}

_MODEL_KEYS = {
    "ppp": {"intensity": float},
    "marked_ppp": {"intensity": float, "mark_law": dict},
    "modulated_cox": {"lam_inside": float, "lam_outside": float,
                      "germ_intensity": float, "radius": float},
    "shot_noise_cox": {"germ_intensity": float, "kernel_height": float,
                       "kernel_radius": float},
    "wr_gibbs": {"intensity": float, "gamma": float, "radius": float,
                 "sweeps": int, "burn_in": int, "window_side": float},
}


def _coerce(value, typ, key):
    if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if not isinstance(value, typ) or isinstance(value, bool):
        raise ConfigError(f"config key {key!r} must be of type {typ.__name__}")
    return value


def validate_config(cmd: str, raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    allowed = dict(_COMMON_KEYS)
    allowed.update(_SCHEMA[cmd])
    out = {}
    for key, value in raw.items():
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} for command {cmd!r}")
        out[key] = _coerce(value, allowed[key], key)
    return out


def parse_model(d: dict) -> object:
    if "kind" not in d:
        raise ConfigError("model needs a 'kind'")
    kind = d["kind"]
    if kind not in _MODEL_KEYS:
        raise ConfigError(f"unknown model kind {kind!r}")
    keys = _MODEL_KEYS[kind]
    for key in d:
        if key != "kind" and key not in keys:
            raise ConfigError(f"unknown model key {key!r} for {kind!r}")
    try:
        if kind == "ppp":
            return PoissonModel(float(d["intensity"]))
        if kind == "marked_ppp":
            return MarkedPoissonModel(float(d["intensity"]), parse_mark_law(d["mark_law"]))
        if kind == "modulated_cox":
            return ModulatedCox(float(d["lam_inside"]), float(d["lam_outside"]),
                                float(d["germ_intensity"]),
                                RadiusLaw("fixed", float(d["radius"]), float(d["radius"])))
        if kind == "shot_noise_cox":
            return ShotNoiseCox(float(d["germ_intensity"]), float(d["kernel_height"]),
                                float(d["kernel_radius"]))
        params = GibbsParams(float(d["intensity"]), float(d["gamma"]),
                             float(d["radius"]), int(d["sweeps"]), int(d["burn_in"]))
        return GibbsModel(params, BoxRegion((0.0, 0.0), float(d["window_side"])))
    except (SamplingError, KeyError) as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc


def parse_mark_law(d: dict):
    kind = d.get("kind")
    if kind == "uniform":
        return UniformMarks(float(d["tau"]))
    if kind == "exponential":
        return ExponentialMarks(float(d["scale"]))
    raise ConfigError(f"unknown mark law {kind!r}")


_TESS_KINDS = {"VT": "voronoi", "DT": "delaunay", "JMT": "jm", "LT": "line",
               "MG": "manhattan", "COUNT": "count"}


def build_spec(cfg: dict) -> mc.SimulationSpec:
    kind = cfg.get("tessellation", "VT")
    if kind not in _TESS_KINDS:
        raise ConfigError(f"unknown tessellation kind {kind!r}")
    model_cfg = cfg.get("model", {"kind": "ppp", "intensity": 1.0})
    model = parse_model(model_cfg)
    intensity = getattr(model, "intensity", 1.0)
    spec_kind = _TESS_KINDS[kind]
    extras = {}
    if isinstance(model, MarkedPoissonModel):
        if spec_kind != "jm":
            raise ConfigError("marked models drive Johnson-Mehl tessellations only")
        extras["mark_law"] = model.mark_law
        model_override = None
    elif isinstance(model, PoissonModel):
        model_override = None
    else:
        if spec_kind not in ("voronoi",):
            raise ConfigError("Cox/Gibbs models are supported for Voronoi tessellations")
        model_override = model
        intensity = 1.0
    return mc.SimulationSpec(spec_kind, intensity=intensity,
                             a=cfg.get("target_radius", 1.0),
                             grid_step=cfg.get("grid_step", 0.02),
                             max_window_factor=cfg.get("window_cap", 512.0),
                             model=model_override, **extras)


# ---------------------------------------------------------------------------
# output helpers


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _fmt(x) -> object:
    if isinstance(x, float):
        return repr(x)
    return x


def _summary(path: Path, cfg: dict, extra: dict) -> None:
    payload = {"config_sha256": hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode()).hexdigest(),
        "seed": cfg.get("seed", 0), "package_version": __version__,
        "numpy_version": np.__version__, "kernel_backend": BACKEND}
    payload.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_sample(cfg: dict) -> int:
    spec = build_spec(cfg)
    seed = cfg.get("seed", 0)
    out = Path(cfg.get("out", "out"))
    disk = Disk((0.0, 0.0), spec.a)
    if spec.kind == "voronoi":
        t = tess.restrict_voronoi_certified(mc._point_model(spec), disk, seed, 0,
                                            max_window_factor=spec.max_window_factor)
    elif spec.kind == "delaunay":
        t = tess.restrict_delaunay_certified(mc._point_model(spec), disk, seed, 0,
                                             max_window_factor=spec.max_window_factor)
    elif spec.kind == "jm":
        t = tess.build_jmt_in_disk(mc._point_model(spec), disk, spec.grid_step, seed, 0,
                                   max_window_factor=spec.max_window_factor)
    elif spec.kind == "line":
        from .pointproc import sample_line_process
        t = tess.build_lt_in_disk(sample_line_process(spec.intensity,
                                                      max(spec.a, 1.0), seed, 0), disk)
    elif spec.kind == "manhattan":
        from .pointproc import derive_seed, sample_axis_poisson
        yv = sample_axis_poisson(spec.intensity, (-spec.a, spec.a), seed, 0)
        yh = sample_axis_poisson(spec.intensity, (-spec.a, spec.a), derive_seed(seed, 1), 0)
        t = tess.build_mg(yv, yh, BoxRegion((0.0, 0.0), 2.0 * spec.a))
    else:
        raise ConfigError("sample does not support the COUNT pseudo-tessellation")
    out.mkdir(parents=True, exist_ok=True)
    doc = tess.tessellation_to_json(t)
    (out / "tessellation.json").write_text(json.dumps(doc, sort_keys=True) + "\n")
    has_cells = t.kind in ("VT", "DT", "MG") or (
        t.kind == "JMT" and t.meta.get("node_labels") is not None)
    row = measure.Functionals(
        seed=seed, stream=0, kind=t.kind, a=spec.a,
        length=measure.total_edge_length(t, disk),
        W=None if t.kind == "LT" else measure.count_edges(t, disk),
        V=measure.count_cells(t, disk) if has_cells else None,
        W_inf=measure.count_lines(t, disk) if t.kind == "LT" else None,
        R=t.meta.get("nearest_radius"),
        R_prime=t.meta.get("r_prime"),
        disc_R=t.meta.get("disc_R"),
        certified=t.certified)
    _write_csv(out / "functionals.csv", measure.CSV_COLUMNS, [[_fmt(x) for x in row.row()]])
    _summary(out / "summary.json", cfg, {"certified": t.certified, "kind": t.kind})
    if not t.certified:
        return EXIT_CERTIFICATION
    return EXIT_OK


def cmd_estimate(cfg: dict) -> int:
    spec = build_spec(cfg)
    seed = cfg.get("seed", 0)
    n = cfg.get("n", 1000)
    workers = cfg.get("threads", 1)
    alphas = [float(a) for a in cfg.get("alphas", [0.0, 0.5, 1.0])]
    functionals = cfg.get("functionals", ["length"])
    out = Path(cfg.get("out", "out"))
    rows = []
    try:
        for fname in functionals:
            values = mc.replicate(spec, fname, n, seed, workers=workers)
            for est in (mc.mgf_from_samples(values, a) for a in alphas):
                rows.append([fname, _fmt(est.alpha), _fmt(est.mean), _fmt(est.ci_low),
                             _fmt(est.ci_high), est.n, est.batches])
    except (mc.CertificationError, tess.TessellationError) as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    _write_csv(out / "mgf.csv",
               ["functional", "alpha", "mean", "ci_low", "ci_high", "n", "batches"],
               rows)
    _summary(out / "summary.json", cfg, {"rows": len(rows)})
    return EXIT_OK


def cmd_tail(cfg: dict) -> int:
    spec = build_spec(cfg)
    seed = cfg.get("seed", 0)
    n = cfg.get("n", 1000)
    workers = cfg.get("threads", 1)
    thresholds = [float(t) for t in cfg.get("thresholds", [0.0, 5.0, 10.0])]
    out = Path(cfg.get("out", "out"))
    rows = []
    try:
        for fname in cfg.get("functionals", ["length"]):
            for est in mc.estimate_tail(spec, fname, thresholds, n, seed, workers=workers):
                rows.append([fname, _fmt(est.threshold), _fmt(est.probability),
                             _fmt(est.ci_low), _fmt(est.ci_high), est.n])
    except (mc.CertificationError, tess.TessellationError) as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    _write_csv(out / "tail.csv",
               ["functional", "threshold", "probability", "ci_low", "ci_high", "n"], rows)
    _summary(out / "summary.json", cfg, {"rows": len(rows)})
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    seed = cfg.get("seed", 0)
    workers = cfg.get("threads", 1)
    out = Path(cfg.get("out", "out"))
    reports = []
    if cfg.get("files"):
        for fname in cfg["files"]:
            try:
                doc = json.loads(Path(fname).read_text())
                t = tess.tessellation_from_json(doc)
            except (OSError, json.JSONDecodeError, KeyError,
                    tess.TessellationError) as exc:
                print(f"configuration error: cannot load {fname}: {exc}",
                      file=sys.stderr)
                return EXIT_CONFIG
            reports.extend(verify.check_tessellation(t, cfg.get("target_radius", 1.0)))
    else:
        lams = [float(x) for x in cfg.get("lambdas", [1.0])]
        n = cfg.get("n", 200)
        reports = verify.run_lemma_suites(lams, n, seed, n_jm=cfg.get("n_jm"),
                                          workers=workers)
    rows = [[r.check_name, r.realizations, r.violations, r.vacuous,
             _fmt(r.worst_margin), r.first_violation or ""] for r in reports]
    _write_csv(out / "checks.csv",
               ["check_name", "realizations", "violations", "vacuous",
                "worst_margin", "first_violation"], rows)
    violations = sum(r.violations for r in reports)
    _summary(out / "summary.json", cfg, {"violations": violations,
                                         "checks": len(reports)})
    for r in reports:
        print(f"{r.check_name}: {r.realizations} realizations, "
              f"{r.violations} violations, {r.vacuous} vacuous")
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_scaling_test(cfg: dict) -> int:
    seed = cfg.get("seed", 0)
    rep = mc.scaling_test(cfg.get("intensity", 1.0), cfg.get("ratio", 2.0),
                          cfg.get("n", 500), seed, workers=cfg.get("threads", 1),
                          max_window_factor=cfg.get("window_cap", 512.0))
    out = Path(cfg.get("out", "out"))
    _write_csv(out / "scaling.csv", ["statistic", "pvalue", "n"],
               [[_fmt(rep.statistic), _fmt(rep.pvalue), rep.n]])
    _summary(out / "summary.json", cfg, {"pvalue": rep.pvalue})
    print(f"KS statistic {rep.statistic:.4f}, p-value {rep.pvalue:.4f}")
    return EXIT_OK


def cmd_series(cfg: dict) -> int:
    rep = mc.mg_divergence_series(cfg.get("alpha", 1.0), cfg.get("intensity", 1.0),
                                  cfg.get("k_max", 40))
    out = Path(cfg.get("out", "out"))
    rows = [[k, _fmt(lt), _fmt(ls)] for k, (lt, ls) in
            enumerate(zip(rep.log_terms, rep.log_partial_sums))]
    _write_csv(out / "series.csv", ["k", "log_term", "log_partial_sum"], rows)
    _summary(out / "summary.json", cfg, {"diverged_at": rep.diverged_at})
    print(f"partial sums exceed 1e6 at k = {rep.diverged_at}")
    return EXIT_OK


def cmd_probe_assumptions(cfg: dict) -> int:
    model = parse_model(cfg.get("model", {"kind": "ppp", "intensity": 1.0}))
    rows_out = []
    rows = mc.probe_assumptions(model, [float(x) for x in cfg.get("n_values", [1, 2])],
                                cfg.get("reps", 200), cfg.get("seed", 0),
                                workers=cfg.get("threads", 1))
    for r in rows:
        rows_out.append([_fmt(r.n), r.reps, _fmt(r.void_fraction), r.void_is_bound,
                         _fmt(r.void_rate), _fmt(r.mgf_rate_beta1), _fmt(r.mgf_rate_beta2),
                         _fmt(r.exact_void_rate) if r.exact_void_rate is not None else "",
                         _fmt(r.exact_mgf_rate_beta1) if r.exact_mgf_rate_beta1 is not None else ""])
    out = Path(cfg.get("out", "out"))
    _write_csv(out / "probes.csv",
               ["n", "reps", "void_fraction", "void_is_bound", "void_rate",
                "mgf_rate_beta1", "mgf_rate_beta2", "exact_void_rate",
                "exact_mgf_rate_beta1"], rows_out)
    _summary(out / "summary.json", cfg, {"rows": len(rows_out)})
    return EXIT_OK


_COMMANDS = {
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "tail": cmd_tail,
    "verify": cmd_verify,
    "scaling-test": cmd_scaling_test,
    "series": cmd_series,
    "probe-assumptions": cmd_probe_assumptions,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="disktess", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the top-level seed")
    parser.add_argument("--threads", type=int, help="worker count (results unchanged)")
    parser.add_argument("--out", type=Path, help="output directory")
    args = parser.parse_args(argv)
    raw = {}
    try:
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
        cfg = validate_config(args.command, raw)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.threads is not None:
            cfg["threads"] = args.threads
        if args.out is not None:
            cfg["out"] = str(args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
