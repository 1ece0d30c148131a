import json
import math

import pytest

from npi import harness, registry
from npi.errors import ConfigError


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("NPI_THREADS", "3")
    assert harness.thread_cap() == 3
    monkeypatch.setenv("NPI_THREADS", "not-a-number")
    assert harness.thread_cap() >= 1
    monkeypatch.delenv("NPI_THREADS")
    assert harness.thread_cap() >= 1


def test_load_example_name_and_path(tmp_path):
    cfg = harness.load_example("basic-ex1-1d")
    assert cfg.name == "basic-ex1-1d"
    pth = tmp_path / "cfg.json"
    pth.write_text(json.dumps(cfg.to_dict()))
    loaded = harness.load_example(str(pth))
    assert loaded.to_dict() == cfg.to_dict()
    with pytest.raises(ConfigError):
        harness.load_example(str(tmp_path / "missing.json"))


def test_constants_control():
    rep = harness.execute("constants", "control", nu=0.25, p=2.0,
                          no_timestamp=True)
    assert rep["schema"] == "report_v1"
    assert rep["summary"]["constant"] == pytest.approx(4.0, abs=1e-12)
    assert rep["exit_code"] == 0
    rep = harness.execute("constants", "control", nu=0.5, p=1.0,
                          no_timestamp=True)
    assert rep["summary"]["constant"] == pytest.approx(2.0, abs=1e-12)


def test_constants_control_needs_flags():
    rep = harness.execute("constants", "control", no_timestamp=True)
    assert rep["exit_code"] == 3
    assert rep["error"]["type"] == "config-error"


def test_constants_breakdown():
    rep = harness.execute("constants", "discontinuous-2d", no_timestamp=True)
    assert rep["summary"]["constant"] == pytest.approx(64.0)
    assert "breakdown" in rep["summary"]
    assert rep["exit_code"] == 0


def test_constants_on_ratio_mode_entry():
    rep = harness.execute("constants", "lowdim-point-2d", no_timestamp=True)
    assert rep["exit_code"] == 3


def test_verify_report_shape():
    rep = harness.execute("verify", "basic-ex1-1d", trials=4, seed=9,
                          no_timestamp=True)
    assert rep["exit_code"] == 0
    assert rep["seed"] == 9
    assert rep["config"]["name"] == "basic-ex1-1d"
    assert len(rep["results"]) == 4
    assert all(r["pass"] for r in rep["results"])
    s = rep["summary"]
    assert s["passes"] == 4 and s["failures"] == 0
    assert s["constant"] == pytest.approx(128.0)
    assert 0.0 < s["max_ratio"] < 1.0
    assert "timestamp" not in rep and "wall_time_s" not in rep


def test_verify_ratio_mode():
    rep = harness.execute("verify", "lowdim-point-2d", grid=16, trials=3,
                          seed=2, no_timestamp=True)
    assert rep["exit_code"] == 0
    assert rep["summary"]["constant"] is None
    for r in rep["results"]:
        assert math.isfinite(r["ratio"]) and r["ratio"] > 0.0


def test_verify_violation_exit(tmp_path):
    d = registry.get("basic-ex2-1d").to_dict()
    d["tol"] = -0.99999
    pth = tmp_path / "tight.json"
    pth.write_text(json.dumps(d))
    rep = harness.execute("verify", str(pth), trials=2, no_timestamp=True)
    assert rep["exit_code"] == 2
    assert rep["summary"]["failures"] == 2


def test_verify_unknown_example():
    rep = harness.execute("verify", "no-such", no_timestamp=True)
    assert rep["exit_code"] == 3
    assert rep["error"]["type"] == "config-error"


def test_verify_bad_grid():
    rep = harness.execute("verify", "basic-ex1-1d", grid=255,
                          no_timestamp=True)
    assert rep["exit_code"] == 3


def test_sharp_against_bound():
    rep = harness.execute("sharp", "basic-ex2-1d", no_timestamp=True)
    s = rep["summary"]
    assert s["pass"] and rep["exit_code"] == 0
    assert s["c_sharp"] <= s["bound"] == 1.0
    assert s["route"] == "form"


def test_sharp_ratio_mode_has_no_bound():
    rep = harness.execute("sharp", "lowdim-point-2d", grid=16,
                          no_timestamp=True)
    assert rep["exit_code"] == 0
    assert rep["summary"]["bound"] is None
    assert rep["summary"]["c_sharp"] > 0.0


def test_absorption_report():
    rep = harness.execute("absorption", "g-flow-1d", trials=64, seed=4,
                          no_timestamp=True)
    s = rep["summary"]
    assert rep["exit_code"] == 0 and s["pass"]
    assert s["not_absorbed_count"] == 0
    assert s["max_alpha"] >= 1
    total_count = sum(r["count"] for r in rep["results"])
    total_measure = sum(r["measure"] for r in rep["results"])
    assert total_measure == pytest.approx(total_count * s["phi_cell_volume"])
    assert rep["seed"] == 4


def test_absorption_needs_flow():
    rep = harness.execute("absorption", "basic-ex1-1d", no_timestamp=True)
    assert rep["exit_code"] == 3


def test_jensen_halfball():
    rep = harness.execute("jensen", "basic-ex1-1d", no_timestamp=True)
    s = rep["summary"]
    assert rep["exit_code"] == 0 and s["pass"]
    assert s["nu_emp"] == pytest.approx(0.875, rel=0.02)


def test_jensen_requires_block():
    rep = harness.execute("jensen", "basic-ex2-1d", no_timestamp=True)
    assert rep["exit_code"] == 3


def test_r_field_from_spec_unknown_kind():
    with pytest.raises(ConfigError):
        harness.r_field_from_spec({"kind": "mystery"}, None)


def test_sweep_ladder():
    rep = harness.execute("sweep", "basic-ex1-1d", trials=3, seed=5,
                          no_timestamp=True)
    assert rep["exit_code"] == 0
    grids = [r["grid"] for r in rep["results"]]
    assert grids == [64, 128, 256]
    ran = [r for r in rep["results"] if not r.get("skipped")]
    assert all(r["failures"] == 0 for r in ran)
    assert rep["summary"]["constant"] == pytest.approx(128.0)


def test_sweep_skips_streaming_rungs():
    rep = harness.execute("sweep", "discontinuous-2d", trials=2, seed=5,
                          no_timestamp=True)
    assert rep["exit_code"] == 0
    by_grid = {r["grid"]: r for r in rep["results"]}
    assert by_grid[96].get("skipped") is True
    assert not by_grid[48].get("skipped")


def test_report_determinism_same_seed():
    kw = dict(trials=6, seed=21, no_timestamp=True)
    a = harness.to_json(harness.execute("verify", "basic-ex1-1d", **kw))
    b = harness.to_json(harness.execute("verify", "basic-ex1-1d", **kw))
    assert a == b


def test_report_determinism_under_threading(monkeypatch):
    kw = dict(trials=6, seed=13, no_timestamp=True)
    monkeypatch.setenv("NPI_THREADS", "1")
    a = harness.to_json(harness.execute("verify", "sign-change2-2d", **kw))
    monkeypatch.setenv("NPI_THREADS", "4")
    b = harness.to_json(harness.execute("verify", "sign-change2-2d", **kw))
    assert a == b


def test_rerun_with_embedded_seed():
    rep = harness.execute("verify", "basic-ex2-1d", grid=64, trials=5,
                          seed=101, no_timestamp=True)
    again = harness.execute("verify", "basic-ex2-1d", grid=64, trials=5,
                            seed=rep["seed"], no_timestamp=True)
    assert harness.to_json(rep) == harness.to_json(again)


def test_timestamp_fields_present_by_default():
    rep = harness.execute("constants", "control", nu=0.5, p=1.0)
    assert "timestamp" in rep and "wall_time_s" in rep


def test_write_report_file(tmp_path):
    rep = harness.execute("constants", "control", nu=0.25, p=2.0,
                          no_timestamp=True)
    out = tmp_path / "rep.json"
    text = harness.write_report(rep, out=str(out), fmt="json")
    assert out.read_text() == text
    assert json.loads(text)["summary"]["constant"] == 4.0


def test_csv_shapes():
    rep = harness.execute("verify", "basic-ex1-1d", trials=2, seed=1,
                          no_timestamp=True)
    csv = harness.to_csv(rep)
    assert csv.splitlines()[0] == "trial,lhs,functional,ratio,passed"
    assert len(csv.splitlines()) == 3

    rep = harness.execute("absorption", "g-flow-1d", trials=16, seed=1,
                          no_timestamp=True)
    assert harness.to_csv(rep).splitlines()[0] == "alpha,measure,count"

    rep = harness.execute("sharp", "basic-ex2-1d", no_timestamp=True)
    assert harness.to_csv(rep).splitlines()[0] == "key,value"

    rep = harness.execute("verify", "no-such", no_timestamp=True)
    assert harness.to_csv(rep).splitlines()[0] == "key,value"


def test_unknown_subcommand():
    with pytest.raises(ConfigError):
        harness.execute("frobnicate", "basic-ex1-1d")
