import json
from pathlib import Path

import pytest

from zerolab import cli
from zerolab import geometry as G
from zerolab import harness as H
from zerolab.errors import ConfigError


def _fs_config(tmp_path, **extra):
    d = {"model": {"kind": G.FUBINI_STUDY}, "N_list": [4, 6, 8],
         "samples": 3, "master_seed": 11, "outdir": str(tmp_path / "runs")}
    d.update(extra)
    return H.ExperimentConfig.from_dict(d)


def test_config_round_trip():
    cfg = H.ExperimentConfig.from_dict(
        {"model": {"kind": G.POINCARE_WEIGHTED, "epsilon": 0.07},
         "N_list": [10, 20], "samples": 5, "master_seed": 3})
    back = H.ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()


def test_config_validation_errors():
    base = {"model": {"kind": G.FUBINI_STUDY}, "N_list": [5, 10],
            "samples": 2, "master_seed": 0}
    for patch in (
            {"model": {"kind": "nope"}},
            {"model": {}},
            {"N_list": []},
            {"N_list": [10, 5]},
            {"N_list": [5, 5]},
            {"N_list": [0, 5]},
            {"samples": 0},
            {"master_seed": 2 ** 64},
            {"workers": 0},
            {"tolerances": {"quadrature": -1.0}},
            {"tolerances": {"bogus": 1.0}},
            {"region": {"chart": G.UPPER_HALF_PLANE, "shape": "box",
                        "bounds": [0, 1, 0.5, 1.5]}},  # chart mismatch
    ):
        with pytest.raises(ConfigError):
            H.ExperimentConfig.from_dict({**base, **patch})
    with pytest.raises(ConfigError):
        H.ExperimentConfig.from_dict({**base, "extra_key": 1})
    with pytest.raises(ConfigError):
        H.ExperimentConfig.from_dict({"model": {"kind": G.FUBINI_STUDY}})
    with pytest.raises(ConfigError):
        H.ExperimentConfig.from_json("not json")


def test_hyperbolic_config_needs_region():
    base = {"model": {"kind": G.HYPERBOLIC_GAMMA2}, "N_list": [5],
            "samples": 1, "master_seed": 0}
    with pytest.raises(ConfigError):
        H.ExperimentConfig.from_dict(base)
    with pytest.raises(ConfigError):  # region below the cusp height
        H.ExperimentConfig.from_dict(
            {**base, "region": {"chart": G.UPPER_HALF_PLANE, "shape": "box",
                                "bounds": [-0.5, 0.5, 0.1, 1.5]}})
    ok = H.ExperimentConfig.from_dict(
        {**base, "region": {"chart": G.UPPER_HALF_PLANE, "shape": "box",
                            "bounds": [-0.5, 0.5, 0.4, 1.5]}})
    assert ok.build_region().chart == G.UPPER_HALF_PLANE


def test_config_hash_covers_numerics_not_locations():
    a = _fs_config(Path("/tmp/a"))
    b = _fs_config(Path("/tmp/b"), workers=4)
    assert a.config_hash() == b.config_hash()
    c = _fs_config(Path("/tmp/a"), master_seed=12)
    assert c.config_hash() != a.config_hash()
    d = _fs_config(Path("/tmp/a"), tolerances={"quadrature": 1e-10})
    assert d.config_hash() != a.config_hash()


def test_with_overrides():
    cfg = _fs_config(Path("/tmp/x"))
    new = cfg.with_overrides(["master_seed=99",
                              f"model.kind=\"{G.FUBINI_STUDY}\"",
                              "samples=7"])
    assert new.master_seed == 99 and new.samples == 7
    with pytest.raises(ConfigError):
        cfg.with_overrides(["no_equals_sign"])
    with pytest.raises(ConfigError):
        cfg.with_overrides(["samples=0"])


def test_equidistribute_run_and_cache(tmp_path):
    cfg = _fs_config(tmp_path)
    rec = H.cmd_equidistribute(cfg)
    out = Path(rec.outdir)
    assert sorted(rec.files) == ["manifest.json", "ratefit.json",
                                 "records.csv", "summary.txt"]
    text = (out / "records.csv").read_bytes().decode()
    assert text.startswith(f"# config_hash={rec.config_hash}\r\n")
    assert rec.cache_hits == {4: False, 6: False, 8: False}
    assert rec.failures == []
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["master_seed"] == 11
    # rerun: cached spaces, byte-identical records
    rec2 = H.cmd_equidistribute(cfg)
    assert rec2.cache_hits == {4: True, 6: True, 8: True}
    assert (out / "records.csv").read_bytes() == text.encode()


def test_equidistribute_worker_count_does_not_change_output(tmp_path):
    cfg1 = _fs_config(tmp_path / "w1")
    cfg2 = _fs_config(tmp_path / "w2", workers=3)
    r1 = H.cmd_equidistribute(cfg1)
    r2 = H.cmd_equidistribute(cfg2)
    b1 = (Path(r1.outdir) / "records.csv").read_bytes()
    b2 = (Path(r2.outdir) / "records.csv").read_bytes()
    assert b1 == b2


def test_bergman_run(tmp_path):
    cfg = _fs_config(tmp_path)
    rec = H.cmd_bergman(cfg)
    out = Path(rec.outdir)
    assert "bergman.csv" in rec.files and "summary.txt" in rec.files
    lines = (out / "bergman.csv").read_bytes().decode().split("\r\n")
    assert lines[0] == f"# config_hash={rec.config_hash}"
    assert lines[1] == "N,re,im,P_N,logP_N"
    assert len(lines) == 2 + 3 * 64 + 1
    summary = (out / "summary.txt").read_text()
    assert "trace ratio" in summary and "b0 fit" in summary
    with pytest.raises(ConfigError):
        H.cmd_bergman(_fs_config(tmp_path / "short", N_list=[4, 6]))


def test_cuspforms_requires_hyperbolic(tmp_path):
    with pytest.raises(ConfigError):
        H.cmd_cuspforms(_fs_config(tmp_path))


def test_cuspforms_run(tmp_path):
    cfg = H.ExperimentConfig.from_dict({
        "model": {"kind": G.HYPERBOLIC_GAMMA2}, "N_list": [5],
        "samples": 2, "master_seed": 4,
        "region": {"chart": G.UPPER_HALF_PLANE, "shape": "box",
                   "bounds": [-0.5, 0.5, 0.4, 1.5]},
        "outdir": str(tmp_path / "runs")})
    rec = H.cmd_cuspforms(cfg)
    out = Path(rec.outdir)
    lines = (out / "records.csv").read_bytes().decode().split("\r\n")
    assert lines[1] == "model,N,sample_id,count,normalized,predicted,seed"
    assert len(lines) == 2 + 2 + 1
    assert rec.failures == []


# ---------------------------------------------------------------------------
# CLI

def _write_cfg(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_cli_validate_and_run(tmp_path, capsys):
    path = _write_cfg(tmp_path, {
        "model": {"kind": G.FUBINI_STUDY}, "N_list": [4, 6, 8],
        "samples": 2, "master_seed": 5, "outdir": str(tmp_path / "runs")})
    assert cli.main(["validate-config", "--config", path]) == 0
    assert "config ok" in capsys.readouterr().out
    assert cli.main(["equidistribute", "--config", path]) == 0
    out = capsys.readouterr().out
    assert "records.csv" in out


def test_cli_flags_override(tmp_path, capsys):
    path = _write_cfg(tmp_path, {
        "model": {"kind": G.FUBINI_STUDY}, "N_list": [4, 6, 8],
        "samples": 2, "master_seed": 5})
    code = cli.main(["equidistribute", "--config", path,
                     "--out", str(tmp_path / "alt"), "--seed", "9",
                     "--workers", "2", "--set", "samples=3"])
    assert code == 0
    run_dirs = [p for p in (tmp_path / "alt").iterdir() if p.name != "cache"]
    assert len(run_dirs) == 1
    manifest = json.loads((run_dirs[0] / "manifest.json").read_text())
    assert manifest["config"]["master_seed"] == 9
    assert manifest["config"]["samples"] == 3


def test_cli_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["equidistribute", "--config",
                     str(tmp_path / "missing.json")]) == 2
    bad = _write_cfg(tmp_path, {"model": {"kind": "nope"}, "N_list": [4],
                                "samples": 1, "master_seed": 0})
    assert cli.main(["validate-config", "--config", bad]) == 2
    capsys.readouterr()
