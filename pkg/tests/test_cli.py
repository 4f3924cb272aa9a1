import json
import math

import pytest

from lmcflab import __version__
from lmcflab.cli import Scenario, ScenarioError, dispatch, main, parse_scenario


def _write(tmp_path, doc, name="scenario.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


MINIMAL = {"ambient": {"kind": "plane"}, "curve": {"preset": "circle", "params": {"r": 0.3, "n": 64}},
           "horizon": 1.0}


def test_minimal_scenario_parses(tmp_path):
    sc = parse_scenario(_write(tmp_path, MINIMAL))
    assert sc.command == "flow run"
    assert sc.params["horizon"] == 1.0
    assert sc.outputs == {} and sc.seed is None
    assert len(sc.digest) == 64


def test_missing_ambient_names_field(tmp_path):
    doc = {k: v for k, v in MINIMAL.items() if k != "ambient"}
    with pytest.raises(ScenarioError, match=r"^ambient: required"):
        parse_scenario(_write(tmp_path, doc))


def test_nested_missing_field(tmp_path):
    doc = dict(MINIMAL, outputs={"frames": {"interval": 0.1}})
    with pytest.raises(ScenarioError, match=r"^outputs\.frames\.directory"):
        parse_scenario(_write(tmp_path, doc))


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ScenarioError, match=r"^horizn: unknown field"):
        parse_scenario(_write(tmp_path, dict(MINIMAL, horizn=2.0)))
    with pytest.raises(ScenarioError, match=r"^policy\.dt: unknown field"):
        parse_scenario(_write(tmp_path, dict(MINIMAL, policy={"dt": 0.1})))


def test_bad_values_rejected(tmp_path):
    with pytest.raises(ScenarioError, match=r"^horizon"):
        parse_scenario(_write(tmp_path, dict(MINIMAL, horizon=-1)))
    with pytest.raises(ScenarioError, match=r"^ambient\.kind"):
        parse_scenario(_write(tmp_path, dict(MINIMAL, ambient={"kind": "sphere"})))
    with pytest.raises(ScenarioError, match=r"^curve"):
        parse_scenario(_write(tmp_path, dict(MINIMAL, curve={"graded": True})))
    p = tmp_path / "broken.json"
    p.write_text("{")
    with pytest.raises(ScenarioError, match="not valid JSON"):
        parse_scenario(p)


def test_soliton_angles_equal_parameters(capsys):
    assert main(["soliton", "angles", "--m", "3", "--a", "1,1,1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["phi"] == pytest.approx([math.pi / 3] * 3, abs=1e-12)
    assert out["sum"] == pytest.approx(math.pi, abs=1e-12)


def test_soliton_invert_round_trip(capsys):
    assert main(["soliton", "angles", "--m", "3", "--a", "1,2,3"]) == 0
    fwd = json.loads(capsys.readouterr().out)
    phi = ",".join(repr(v) for v in fwd["phi"])
    assert main(["soliton", "invert", "--phi", phi, "--area", repr(fwd["A"])]) == 0
    back = json.loads(capsys.readouterr().out)
    assert back["a"] == pytest.approx([1, 2, 3], rel=1e-8)


def test_soliton_sample_csv(tmp_path):
    out = tmp_path / "s.csv"
    args = ["soliton", "sample", "--m", "3", "--a", "1,2,3", "--n-y", "4", "--n-x", "2", "--output", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[:2] == ["y", "x1"] and lines[0].endswith("theta")
    assert len(lines) == 1 + 8
    first = out.read_text()
    assert main(args) == 0
    assert out.read_text() == first


def test_soliton_residual_and_asymptote(capsys):
    assert main(["soliton", "residual", "--kind", "expander", "--m", "3", "--a", "1,2,3", "--alpha", "1",
                 "--n-y", "3", "--n-x", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["residual"] < 1e-5
    assert main(["soliton", "asymptote", "--m", "3", "--a", "1,1,1"]) == 0
    assert json.loads(capsys.readouterr().out)["rho"] == pytest.approx(-1.0, abs=0.05)


def test_u1solve(capsys):
    assert main(["soliton", "u1solve", "--a", "1", "--n", "17", "--boundary", "quadratic",
                 "--coef", "1,0.5,0.2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["residual"] < 1e-10 and "f" not in out


@pytest.fixture
def category(tmp_path):
    from test_stability import valid_category

    cat, charge = valid_category()
    doc = cat.to_json()
    doc["charge"] = charge.to_json()
    return _write(tmp_path, doc, "cat.json")


def test_stability_commands(category, capsys):
    assert main(["stability", "check", str(category)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["ok"] is True
    assert main(["stability", "hn", str(category), "--object", "E"]) == 0
    hn = json.loads(capsys.readouterr().out)["objects"]["E"]
    assert [f["name"] for f in hn["factors"]] == ["B", "A"]
    phases = [f["phase"] for f in hn["factors"]]
    assert phases == sorted(phases, reverse=True)
    assert main(["stability", "phase", str(category), "--class", "1,1"]) == 0
    assert "query" in json.loads(capsys.readouterr().out)["phases"]


def test_stability_needs_charge(tmp_path, capsys):
    from test_stability import valid_category

    p = _write(tmp_path, valid_category()[0].to_json(), "nocharge.json")
    assert main(["stability", "check", str(p)]) == 1
    assert "charge" in capsys.readouterr().err


def test_exit_codes(tmp_path, capsys):
    # a non-graded circle collapsing is a terminal singularity
    p = _write(tmp_path, MINIMAL)
    assert main(["flow", "run", str(p)]) == 2
    assert json.loads(capsys.readouterr().out)["status"] == "singular-terminal"
    assert main(["flow", "run", str(tmp_path / "missing.json")]) == 1
    assert main(["flow", "run", str(_write(tmp_path, {"ambient": {"kind": "plane"}}, "bad.json"))]) == 1
    assert "curve: required" in capsys.readouterr().err
    assert main(["soliton", "angles", "--m", "3", "--a", "1,x"]) == 1
    assert main(["soliton", "angl", "--m", "3"]) == 1
    assert main(["--version"]) == 0


def test_flow_run_equal_infinity(tmp_path):
    doc = {"ambient": {"kind": "plane"},
           "curve": {"preset": "infinity", "params": {"a1": 0.3, "a2": 0.3, "n": 96}},
           "horizon": 1.0,
           "outputs": {"csv": "eq.csv", "events": "eq.json", "record": "rec.json",
                       "frames": {"directory": "frames", "interval": 0.02}}}
    rec = dispatch(parse_scenario(_write(tmp_path, doc)))
    assert rec.status == "empty" and rec.exit_code == 0
    events = json.loads((tmp_path / "eq.json").read_text())["events"]
    assert [e["kind"] for e in events] == ["collapse"]
    assert len(list((tmp_path / "frames").glob("*.svg"))) >= 3
    meta = json.loads((tmp_path / "rec.json").read_text())
    assert meta["version"] == __version__ and meta["scenario_hash"] == rec.scenario_hash
    assert str(tmp_path / "eq.csv") in meta["outputs"]


def test_determinism(tmp_path):
    doc = dict(MINIMAL, outputs={"csv": "a.csv", "events": "a.json"})
    r1 = dispatch(parse_scenario(_write(tmp_path, doc)))
    a_csv, a_json = (tmp_path / "a.csv").read_bytes(), (tmp_path / "a.json").read_bytes()
    r2 = dispatch(parse_scenario(_write(tmp_path, doc)))
    assert r1.scenario_hash == r2.scenario_hash
    assert (tmp_path / "a.csv").read_bytes() == a_csv
    assert (tmp_path / "a.json").read_bytes() == a_json
    other = dispatch(Scenario("soliton angles", {"kind": "lawlor", "m": 3, "a": [1, 1, 1]}))
    assert other.scenario_hash != r1.scenario_hash


def test_probe_from_csv(tmp_path, capsys):
    doc = dict(MINIMAL, outputs={"csv": "c.csv"})
    assert main(["flow", "probe", str(_write(tmp_path, doc))]) == 2
    direct = json.loads(capsys.readouterr().out)
    assert direct["kind"] == "I"
    assert main(["flow", "probe", "--series", str(tmp_path / "c.csv")]) == 0
    assert json.loads(capsys.readouterr().out) == direct


def test_log_level_env(tmp_path, monkeypatch, capsys):
    import logging

    monkeypatch.setenv("LMCF_LOG", "INFO")
    logging.getLogger().handlers.clear()
    assert main(["soliton", "angles", "--m", "3", "--a", "1,1,1"]) == 0
    assert "running soliton angles" in capsys.readouterr().err
