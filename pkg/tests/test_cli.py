import json
from fractions import Fraction as F

import pytest
from click.testing import CliRunner

from relucc.cli import main
from relucc.gadgets import boolean_gadget
from relucc.network import Network


@pytest.fixture
def runner():
    return CliRunner()


def _net(result):
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert {"tool", "construction", "command", "params"} <= set(doc["provenance"])
    return Network.from_json(doc["network"])


def test_version(runner):
    assert runner.invoke(main, ["--version"]).exit_code == 0


def test_gadget_boolean_roundtrip(runner):
    net = _net(runner.invoke(main, ["gadget", "boolean", "--kind", "DISJ", "--d", "3"]))
    assert net.size == 4
    assert net.scalar((1, 0, 0, 0, 1, 1)) == boolean_gadget("DISJ", 3).scalar((1, 0, 0, 0, 1, 1))


def test_gadget_commands(runner, tmp_path):
    assert _net(runner.invoke(main, ["gadget", "sawtooth", "--j", "3"])).depth == 4
    assert _net(runner.invoke(main, ["gadget", "extractor", "--c", "3"])).output_dim == 3
    assert _net(runner.invoke(main, ["gadget", "extractor", "--c", "2", "--deep", "--delta", "1/64"])).output_dim == 2
    assert _net(runner.invoke(main, ["gadget", "decoder", "--c", "3"])).scalar((1, 0, 1)) == F(5, 8)
    assert _net(runner.invoke(main, ["gadget", "rounding", "--d", "2"])).output_dim == 2
    xor = _net(runner.invoke(main, ["gadget", "truth-table", "--table", "0110"]))
    assert [xor.scalar(x) for x in ((0, 0), (1, 0), (0, 1), (1, 1))] == [0, 1, 1, 0]

    path = tmp_path / "ip.json"
    assert runner.invoke(main, ["gadget", "boolean", "--kind", "IP", "--d", "2", "--out", str(path)]).exit_code == 0
    thr = _net(runner.invoke(main, ["gadget", "threshold", "--net", str(path)]))
    assert thr.scalar((1, 1, 1, 0)) == 1
    agree = _net(runner.invoke(main, ["gadget", "agreement", "--net", str(path)]))
    assert agree.scalar((F(1, 10), F(9, 10), F(1, 20), F(1))) == 1


def test_gadget_compile(runner, tmp_path):
    path = tmp_path / "tc.json"
    tc = runner.invoke(main, ["gadget", "truth-table", "--table", "0001", "--out", str(path)])
    assert tc.exit_code == 0
    net = _net(runner.invoke(main, ["gadget", "compile", "--circuit", str(path)]))
    assert net.scalar((1, 1)) == 1 and net.scalar((1, 0)) == 0


def test_bad_truth_table(runner):
    assert runner.invoke(main, ["gadget", "truth-table", "--table", "012"]).exit_code != 0


def test_protocol_run(runner, tmp_path):
    path = tmp_path / "disj.json"
    runner.invoke(main, ["gadget", "boolean", "--kind", "DISJ", "--d", "2", "--out", str(path)])
    res = runner.invoke(main, ["protocol", "run", "--model", "real", "--net", str(path),
                               "--partition", "AABB", "--input", "1010"])
    assert res.exit_code == 0
    t = json.loads(res.output)
    assert t["cost"] == 3 and t["output"] == 0
    res = runner.invoke(main, ["protocol", "run", "--model", "randomized", "--net", str(path),
                               "--partition", "0,1", "--input", "1001", "--seed", "4"])
    assert res.exit_code == 0 and json.loads(res.output)["output"] == 1
    bad = runner.invoke(main, ["protocol", "run", "--model", "real", "--net", str(path),
                               "--partition", "AAAA", "--input", "1010"])
    assert bad.exit_code != 0


def test_protocol_sweep(runner, tmp_path):
    out = tmp_path / "sweep.csv"
    res = runner.invoke(main, ["protocol", "sweep", "--model", "real", "--ds", "2,3,4",
                               "--partitions", "5", "--out", str(out)])
    assert res.exit_code == 0
    rows = out.read_text().splitlines()
    assert rows[0].startswith("d,") and len(rows) == 4


def _lab(runner, tmp_path, name, params, seed=0):
    p = tmp_path / "params.json"
    p.write_text(json.dumps(params))
    out = tmp_path / "report.json"
    res = runner.invoke(main, ["lab", name, "--params", str(p), "--seed", str(seed), "--out", str(out)])
    return res, out


def test_lab_equivalence_exit_codes(runner, tmp_path):
    res, out = _lab(runner, tmp_path, "exhaustive_equivalence",
                    {"a": {"gadget": "IP", "d": 3}, "b": {"oracle": "IP", "d": 3}, "d": 6})
    assert res.exit_code == 0 and json.loads(out.read_text())["verdict"] == "pass"
    res, out = _lab(runner, tmp_path, "exhaustive_equivalence",
                    {"a": {"gadget": "IP", "d": 3}, "b": {"oracle": "DISJ", "d": 3}, "d": 6})
    assert res.exit_code == 1 and json.loads(out.read_text())["verdict"] == "fail"


def test_lab_reports_are_byte_identical(runner, tmp_path):
    params = {"c": 5, "n": 2000}
    _, out = _lab(runner, tmp_path, "extractor_failure_rate", params, seed=2)
    first = out.read_bytes()
    _, out = _lab(runner, tmp_path, "extractor_failure_rate", params, seed=2)
    assert out.read_bytes() == first


def test_lab_other_experiments(runner, tmp_path):
    res, out = _lab(runner, tmp_path, "l2_error", {"f": {"gadget": "IP", "d": 1}, "g": "1/2",
                                                   "mu": "uniform_boolean", "method": "exact_boolean",
                                                   "max_error": "1/2"})
    assert res.exit_code == 0
    assert json.loads(out.read_text())["records"][0]["squared"] == "1/4"
    res, _ = _lab(runner, tmp_path, "packing_distance_check", {"d": 1, "psi": [0, 1], "psi_prime": [1, 1]})
    assert res.exit_code == 0
    res, _ = _lab(runner, tmp_path, "pipeline_check", {"f": {"affine": [1], "bias": 0}, "d": 1, "c": 3})
    assert res.exit_code == 0
    res, out = _lab(runner, tmp_path, "cost_sweep", {"model": "real", "ds": [2, 3], "partitions": 4})
    assert res.exit_code == 0 and out.with_suffix(".csv").exists()


def test_lab_bad_params(runner, tmp_path):
    res, _ = _lab(runner, tmp_path, "l2_error", {"f": {"bogus": 1}, "g": 0})
    assert res.exit_code != 0
