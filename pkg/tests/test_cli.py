import json
from pathlib import Path

import pytest

from disktess import cli


def write_cfg(tmp_path: Path, payload: dict) -> Path:
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(payload))
    return p


class TestConfig:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, {"bogus": 1})
        assert cli.main(["estimate", "--config", str(cfg)]) == cli.EXIT_CONFIG

    def test_unknown_model_kind(self, tmp_path):
        cfg = write_cfg(tmp_path, {"model": {"kind": "nope"}})
        assert cli.main(["sample", "--config", str(cfg),
                         "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG

    def test_unknown_tessellation_kind(self, tmp_path):
        cfg = write_cfg(tmp_path, {"tessellation": "XX"})
        assert cli.main(["sample", "--config", str(cfg),
                         "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text("{not json")
        assert cli.main(["estimate", "--config", str(p)]) == cli.EXIT_CONFIG

    def test_type_validation(self, tmp_path):
        cfg = write_cfg(tmp_path, {"n": "many"})
        assert cli.main(["estimate", "--config", str(cfg)]) == cli.EXIT_CONFIG


class TestSample:
    def test_deterministic_outputs(self, tmp_path):
        cfg = write_cfg(tmp_path, {"model": {"kind": "ppp", "intensity": 1.0},
                                   "tessellation": "VT", "seed": 9})
        outa, outb = tmp_path / "a", tmp_path / "b"
        assert cli.main(["sample", "--config", str(cfg), "--out", str(outa)]) == 0
        assert cli.main(["sample", "--config", str(cfg), "--out", str(outb)]) == 0
        assert (outa / "tessellation.json").read_bytes() == \
            (outb / "tessellation.json").read_bytes()
        assert (outa / "functionals.csv").read_bytes() == \
            (outb / "functionals.csv").read_bytes()

    def test_sample_then_verify_files(self, tmp_path):
        cfg = write_cfg(tmp_path, {"model": {"kind": "ppp", "intensity": 1.0},
                                   "tessellation": "VT", "seed": 10})
        out = tmp_path / "s"
        assert cli.main(["sample", "--config", str(cfg), "--out", str(out)]) == 0
        vcfg = write_cfg(tmp_path / ".." / tmp_path.name,
                         {"files": [str(out / "tessellation.json")]})
        assert cli.main(["verify", "--config", str(vcfg),
                         "--out", str(tmp_path / "v")]) == 0


class TestEstimate:
    def test_alpha_zero_column(self, tmp_path):
        cfg = write_cfg(tmp_path, {"model": {"kind": "ppp", "intensity": 1.0},
                                   "tessellation": "MG", "alphas": [0.0],
                                   "n": 150, "seed": 3})
        out = tmp_path / "e"
        assert cli.main(["estimate", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "mgf.csv").read_text().strip().splitlines()
        assert rows[1].split(",")[2] == "1.0"

    def test_rerun_identical(self, tmp_path):
        cfg = write_cfg(tmp_path, {"model": {"kind": "ppp", "intensity": 1.0},
                                   "tessellation": "LT", "alphas": [0.0, 0.5],
                                   "n": 200, "seed": 4})
        outa, outb = tmp_path / "ra", tmp_path / "rb"
        cli.main(["estimate", "--config", str(cfg), "--out", str(outa)])
        cli.main(["estimate", "--config", str(cfg), "--out", str(outb)])
        assert (outa / "mgf.csv").read_bytes() == (outb / "mgf.csv").read_bytes()

    def test_thread_invariance(self, tmp_path):
        cfg = write_cfg(tmp_path, {"model": {"kind": "ppp", "intensity": 1.0},
                                   "tessellation": "VT", "alphas": [0.0, 1.0],
                                   "n": 60, "seed": 5})
        outa, outb = tmp_path / "t1", tmp_path / "t2"
        cli.main(["estimate", "--config", str(cfg), "--threads", "1", "--out", str(outa)])
        cli.main(["estimate", "--config", str(cfg), "--threads", "2", "--out", str(outb)])
        assert (outa / "mgf.csv").read_bytes() == (outb / "mgf.csv").read_bytes()


class TestVerifyCommand:
    def test_live_suites_pass(self, tmp_path):
        cfg = write_cfg(tmp_path, {"lambdas": [1.0], "n": 40, "n_jm": 5, "seed": 6})
        assert cli.main(["verify", "--config", str(cfg),
                         "--out", str(tmp_path / "v")]) == 0
        header = (tmp_path / "v" / "checks.csv").read_text().splitlines()[0]
        assert header.startswith("check_name,realizations,violations")

    def test_forced_violation_exits_nonzero(self, tmp_path):
        from disktess import pointproc as pp, tess
        from disktess.geom import Disk
        t = tess.restrict_voronoi_certified(pp.PoissonModel(1.0),
                                            Disk((0.0, 0.0), 1.0), 61, 0)
        doc = tess.tessellation_to_json(t)
        for k in range(200):
            doc["edges"].append({"id": 7000 + k, "kind": "segment",
                                 "vertices": [[0.0, 0.0], [0.05, 0.05]],
                                 "pair": [900 + k, 1900 + k], "tag": None,
                                 "tolerance": None})
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        cfg = write_cfg(tmp_path, {"files": [str(bad)]})
        assert cli.main(["verify", "--config", str(cfg),
                         "--out", str(tmp_path / "v")]) == cli.EXIT_VIOLATION

    def test_corrupted_file_is_config_error(self, tmp_path):
        bad = tmp_path / "corrupt.json"
        bad.write_text("{broken")
        cfg = write_cfg(tmp_path, {"files": [str(bad)]})
        assert cli.main(["verify", "--config", str(cfg),
                         "--out", str(tmp_path / "v")]) == cli.EXIT_CONFIG


class TestOtherCommands:
    def test_series(self, tmp_path):
        cfg = write_cfg(tmp_path, {"alpha": 1.0, "intensity": 1.0, "k_max": 20})
        assert cli.main(["series", "--config", str(cfg),
                         "--out", str(tmp_path / "s")]) == 0
        summary = json.loads((tmp_path / "s" / "summary.json").read_text())
        assert summary["diverged_at"] <= 3

    def test_scaling(self, tmp_path):
        cfg = write_cfg(tmp_path, {"intensity": 1.0, "ratio": 1.0, "n": 60, "seed": 7})
        assert cli.main(["scaling-test", "--config", str(cfg),
                         "--out", str(tmp_path / "k")]) == 0

    def test_probe(self, tmp_path):
        cfg = write_cfg(tmp_path, {"model": {"kind": "ppp", "intensity": 1.0},
                                   "n_values": [1.0], "reps": 100, "seed": 8})
        assert cli.main(["probe-assumptions", "--config", str(cfg),
                         "--out", str(tmp_path / "p")]) == 0

    def test_tail(self, tmp_path):
        cfg = write_cfg(tmp_path, {"model": {"kind": "ppp", "intensity": 1.0},
                                   "tessellation": "MG", "thresholds": [0.0, 5.0],
                                   "n": 120, "seed": 9})
        assert cli.main(["tail", "--config", str(cfg),
                         "--out", str(tmp_path / "t")]) == 0
