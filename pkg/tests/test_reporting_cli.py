import json
import os

import numpy as np
import pytest

from lidskii.cli import main
from lidskii.experiments import ConfigError, load_config, run_experiment
from lidskii.reporting import Table, dumps, emit_report, format_float, parallel_map, thread_count

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "demos", "configs")


def test_float_format_round_trips():
    for x in (0.1, 1 / 3, 2.0, -1e-300, 6.02214076e23):
        assert float(format_float(x)) == x
    assert format_float(1 / 3) == "0.33333333333333331"
    assert format_float(float("inf")) == '"inf"'


def test_dumps_sorts_keys_and_handles_numpy():
    text = dumps({"b": np.float64(0.5), "a": [1 + 2j, np.int64(3)], "c": np.array([1.0])})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert json.loads(text) == {"a": [[1.0, 2.0], 3], "b": 0.5, "c": [1.0]}


def test_csv_schema(tmp_path):
    path = emit_report(Table(("nu", "norm"), [(0, 1.5), (1, 0.25)]), "csv", str(tmp_path), "g")
    assert open(path).read() == "nu,norm\n0,1.5\n1,0.25\n"
    with pytest.raises(TypeError):
        emit_report({"a": 1}, "csv", str(tmp_path), "x")


def test_parallel_map_keeps_order():
    assert parallel_map(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv("LIDSKII_THREADS", "3")
    assert thread_count() == 3
    assert thread_count(2) == 2
    with pytest.raises(ValueError):
        thread_count(0)


def test_decompose_jordan_example(tmp_path):
    status = main(["decompose", "--config", os.path.join(CONFIGS, "decompose_jordan2.json"),
                   "--out", str(tmp_path)])
    assert status == 0
    data = json.load(open(tmp_path / "decomposition_0.json"))
    (g,) = data["decomposition"]["groups"]
    assert g["mu"] == [0.5, 0.0] and g["lambda"] == [2.0, 0.0]
    manifest = json.load(open(tmp_path / "manifest.json"))
    assert manifest["status"] == "pass"
    assert {f["path"] for f in manifest["files"]} == {"decomposition_0.json",
                                                      "decomposition_1.json"}


def test_missing_matrix_file_exits_2_without_outputs(tmp_path):
    out = tmp_path / "out"
    status = main(["decompose", "--config", os.path.join(CONFIGS, "broken.json"),
                   "--out", str(out)])
    assert status == 2
    assert not out.exists()


def test_validation_lists_every_problem(tmp_path):
    cfg = load_config({"name": "x", "task": "sum", "operators": ["nope.json", 7]})
    with pytest.raises(ConfigError) as info:
        cfg.validate()
    assert len(info.value.problems) == 3


def test_failed_gate_exits_1(tmp_path):
    status = main(["analyze-exponent", "--config", os.path.join(CONFIGS, "exponent_e1.json"),
                   "--out", str(tmp_path)])
    assert status == 1
    manifest = json.load(open(tmp_path / "manifest.json"))
    assert manifest["gates"]["beta_trend"]["status"] == "fail"
    assert open(tmp_path / "beta_profile.csv").readline() == "r,beta,beta_ln_r\n"


def test_sum_writes_group_norms(tmp_path):
    assert main(["sum", "--config", os.path.join(CONFIGS, "sum_structured.json"),
                 "--out", str(tmp_path)]) == 0
    lines = open(tmp_path / "group_norms_0_0.csv").read().splitlines()
    assert lines[0] == "nu,norm"
    assert [int(l.split(",")[0]) for l in lines[1:]] == list(range(len(lines) - 1))


def test_evolve_writes_initial_limit_table(tmp_path):
    cfg = load_config({"name": "ev", "task": "evolve", "seed": 3, "output": str(tmp_path),
                       "operators": [{"family": "diagonal", "n": 3}],
                       "parameters": {"t_grid": [0.2, 0.5, 0.9],
                                      "backends": ["series", "eigen"]}})
    res = run_experiment(cfg)
    assert res.status == 0
    rows = open(tmp_path / "initial_limit_0.csv").read().splitlines()
    assert rows[0] == "t,distance" and len(rows) == 7


def test_same_config_twice_is_byte_identical(tmp_path):
    paths = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["contour-verify", "--config",
                     os.path.join(CONFIGS, "contour_sectorial.json"), "--out", str(out)]) == 0
        paths.append(out)
    names = sorted(os.listdir(paths[0]))
    assert names == sorted(os.listdir(paths[1]))
    for n in names:
        assert (paths[0] / n).read_bytes() == (paths[1] / n).read_bytes()
