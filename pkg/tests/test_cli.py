import json

import pytest
from click.testing import CliRunner

from relentropy.cli import describe_text, main
from relentropy.errors import UnknownCommand


def run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def read(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_check_identities_ok_and_deterministic(tmp_path):
    args = ["check-identities", "--seed", "42", "--param", "instances=40"]
    a = run(args + ["--out", str(tmp_path / "a")])
    b = run(args + ["--out", str(tmp_path / "b")])
    assert a.exit_code == 0 and b.exit_code == 0
    assert read(tmp_path / "a") == read(tmp_path / "b")
    doc = json.loads((tmp_path / "a" / "report.json").read_text())
    assert doc["passed"] and doc["summary"]["violations"] == 0
    assert doc["config"]["seed"] == 42


def test_counterexample_gap_column(tmp_path):
    res = run(["scenario", "counterexample", "--out", str(tmp_path)])
    assert res.exit_code == 0
    rows = (tmp_path / "scenario.csv").read_text().splitlines()
    assert rows[0].split(",")[5] == "gap"
    gaps = [float(r.split(",")[5]) for r in rows[1:]]
    assert gaps[-1] > gaps[0]
    assert 0.85 < gaps[-1] < 1.0


@pytest.mark.parametrize("kind", ["dominated", "block-sums", "gibbs"])
def test_scenarios_pass(tmp_path, kind):
    assert run(["scenario", kind, "--seed", "3", "--out", str(tmp_path)]).exit_code == 0


def test_criterion_passes(tmp_path):
    res = run(["criterion", "--seed", "1", "--param", "d=6", "--param", "n_max=24", "--out", str(tmp_path)])
    assert res.exit_code == 0
    assert (tmp_path / "criterion.csv").exists()


def test_experiments(tmp_path):
    for kind in ("cp-preserve", "varying-maps"):
        res = run(["experiment", kind, "--param", "d=4", "--out", str(tmp_path / kind)])
        assert res.exit_code == 0, res.output
    res = run(["experiment", "cp-preserve", "--param", "d=4", "--param", "map=operation",
               "--out", str(tmp_path / "op")])
    assert res.exit_code == 0


def test_failing_assertions_exit_one(tmp_path):
    res = run(["scenario", "gibbs", "--param", "gap_tol=1e-12", "--out", str(tmp_path / "g")])
    assert res.exit_code == 1
    assert json.loads((tmp_path / "g" / "report.json").read_text())["passed"] is False
    res = run(["experiment", "varying-maps", "--param", "d=4", "--param", "mode=alternating",
               "--out", str(tmp_path / "v")])
    assert res.exit_code == 1


def test_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"version": 1, "command": "check-identities", "seed": 7,
                               "params": {"instances": 8}, "tolerances": {"identity_tol": 1e-9}}))
    res = run(["check-identities", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert res.exit_code == 0
    doc = json.loads((tmp_path / "o" / "report.json").read_text())
    assert doc["config"]["seed"] == 7
    assert doc["config"]["tolerances"] == {"identity_tol": 1e-9}


@pytest.mark.parametrize("content", [
    "not json",
    json.dumps({"version": 2}),
    json.dumps({"version": 1, "bogus": 1}),
    json.dumps({"version": 1, "command": "criterion"}),
    json.dumps({"version": 1, "params": {"instances": "many"}}),
    json.dumps({"version": 1, "params": {"unknown": 1}}),
    json.dumps({"version": 1, "tolerances": {"no_such_tol": 1.0}}),
    json.dumps({"version": 1, "seed": "x"}),
])
def test_malformed_config_exit_two(tmp_path, content):
    cfg = tmp_path / "bad.json"
    cfg.write_text(content)
    res = run(["check-identities", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


def test_bad_param_syntax_exit_two(tmp_path):
    assert run(["check-identities", "--param", "instances", "--out", str(tmp_path)]).exit_code == 2


def test_io_error_exit_three(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    res = run(["check-identities", "--param", "instances=4", "--out", str(blocker / "sub")])
    assert res.exit_code == 3
    res = run(["check-identities", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)])
    assert res.exit_code == 3


def test_describe():
    text = describe_text("criterion")
    for name in ("m_min", "m_max", "n0", "eps"):
        assert name in text
    text = describe_text("scenario")
    for kind in ("dominated", "block-sums", "gibbs", "counterexample"):
        assert kind in text
    with pytest.raises(UnknownCommand):
        describe_text("bogus")
    assert run(["describe", "bogus"]).exit_code == 2
    assert run(["describe", "experiment"]).exit_code == 0
