import json

import pytest

from qwakimoto import DeformationParams, Oscillators
from qwakimoto.cli import ConfigError, build_config, emit_report, main, parse_sector, random_overrides

SMALL = ["--degree", "1", "--window", "1"]


def run(tmp_path, *args):
    out = tmp_path / "r.json"
    code = main([*SMALL, *args, "--out", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


def strip_times(doc):
    for r in doc["records"]:
        r.pop("wall_time")
    return doc


def test_passing_suite_exits_zero(tmp_path):
    code, doc = run(tmp_path, "--suites", "HH,H_X,highest_weight")
    assert code == 0
    assert doc["summary"] == {"total": 3, "ExactPass": 3, "Fail": 0, "Skipped": 0, "interrupted": False}
    assert doc["records"][0]["params"]["e"] == 4


def test_failure_exits_one(tmp_path):
    code, doc = run(tmp_path, "--suites", "xi_eta")
    assert code == 1
    assert doc["summary"]["Fail"] >= 1


def test_bad_config_exits_two(tmp_path):
    assert main(["--granularity", "3", "--level", "1/2", "--out", str(tmp_path / "x.json")]) == 2
    assert not (tmp_path / "x.json").exists()
    assert main(["--M", "1", "--N", "2", "--level", "1", "--suites", "screening", "--out", str(tmp_path / "y.json")]) == 2


def test_equal_ranks_skip(tmp_path):
    code, doc = run(tmp_path, "--M", "2", "--N", "2", "--suites", "highest_weight")
    assert code == 0
    assert doc["records"][0]["status"] == "Skipped"


def test_report_is_deterministic(tmp_path):
    a = strip_times(run(tmp_path, "--suites", "HH,XX_commuting")[1])
    b = strip_times(run(tmp_path, "--suites", "HH,XX_commuting")[1])
    assert a == b


def test_toml_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('M = 1\nN = 2\nlevel = "2"\nsuites = "HH"\ndegree = 1\nwindow = 1\n')
    out = tmp_path / "r.json"
    assert main(["--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["M"] == 1 and doc["records"][0]["params"]["N"] == 2


def test_flags_override_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"M": 1, "N": 2, "level": "2"}))
    c = build_config(["--config", str(cfg), "--M", "2", "--N", "1", "--level", "1"])
    assert c["params"].M == 2


def test_unknown_suite():
    with pytest.raises(ConfigError):
        build_config(["--suites", "bogus"])


def test_sector_parsing():
    osc = Oscillators(DeformationParams(2, 1))
    assert parse_sector("vacuum", osc) == (osc.vacuum_charge(), None)
    ch, l = parse_sector("hw:1,0", osc)
    assert l == [1, 0] and ch == osc.charge_from(p_a=[1, 0])
    assert parse_sector("charges:b12=1,c12=-1", osc)[0] == osc.charge_from(p_b={(1, 2): 1}, p_c={(1, 2): -1})
    with pytest.raises(ConfigError):
        parse_sector("hw:1", osc)


def test_empty_report():
    doc = emit_report([])
    assert doc["records"] == [] and doc["summary"]["total"] == 0


def test_random_overrides_seeded():
    p = DeformationParams(2, 1)
    a, b = random_overrides(p, 3), random_overrides(p, 3)
    assert a == b and all(v != 0 for v in a.values())
    assert set(a) == {(1, 1), (2, 1), (2, 2)}
