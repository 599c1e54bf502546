import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from maxlab.cli import builtin_grid, main
from maxlab.grid import read_ggrid, write_ggrid, GridFunction


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_constants_limit(capsys):
    code, out, _ = run(capsys, "constants", "--p", "2", "--lambda-limit")
    assert code == 0
    assert out == "1.414214\n"


def test_constants_report(capsys):
    code, out, _ = run(capsys, "constants", "--p", "2", "--dim", "1")
    rep = json.loads(out)
    assert rep["theorem"]["dyadic"] == pytest.approx(math.sqrt(1.5))
    assert rep["layer_cake_A"] == pytest.approx(math.sqrt(1.2))
    code, out, _ = run(capsys, "constants", "--p", "2", "--lambda", "0.5")
    assert json.loads(out)["almost_centered"]["value"] > 1


def test_ratio_indicator(capsys):
    code, out, _ = run(capsys, "ratio", "--builtin", "indicator", "--p", "2")
    rep = json.loads(out)
    assert code == 0
    assert rep["ratio"] == pytest.approx(math.sqrt(3), rel=0.02)
    assert rep["config"]["builtin"] == "indicator"


def test_reports_are_byte_identical(capsys, tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        code, _, _ = run(capsys, "optimize", "--op", "dyadic", "--n", "32", "--budget", "300", "--seeds", "0", "1", "--out", str(a))
        assert code == 0
    first = (a / "optimize.json").read_bytes()
    code, out, _ = run(capsys, "optimize", "--op", "dyadic", "--n", "32", "--budget", "300", "--seeds", "0", "1", "--out", str(a))
    assert (a / "optimize.json").read_bytes() == first == out.encode()
    assert (a / "trace_seed1.tsv").read_text().startswith("step\tratio")
    assert read_ggrid(a / "best_seed0.ggrid").shape == (32,)


def test_partition_artifacts(capsys, tmp_path):
    code, out, _ = run(capsys, "partition", "--builtin", "linear_ramp", "--n", "16", "--max-depth", "6", "--svg", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["verify_density"]["all_passed"]
    assert (tmp_path / "partition.svg").exists()
    tree = json.loads((tmp_path / "tree.json").read_text())
    assert tree["tree"]["box"] == [[0.0, 0.0], [1.0, 1.0]]


def test_bellman_verify(capsys):
    code, out, _ = run(capsys, "bellman-verify", "--builtin", "random", "--n", "16", "--lambda", "1.5", "--max-depth", "8")
    rep = json.loads(out)
    assert rep["main_inequality_passed"]
    assert rep["certificate"]["passed"]


def test_maximal_writes_field(capsys, tmp_path):
    code, out, _ = run(capsys, "maximal", "--builtin", "random", "--n", "8", "--op", "lambda-box", "--lambda", "0.5", "--out", str(tmp_path))
    assert code == 0
    M = read_ggrid(tmp_path / "maximal.ggrid")
    g = builtin_grid("random", 8)
    assert np.all(M.values >= g.values)


def test_grid_file_input(capsys, tmp_path):
    path = tmp_path / "f.ggrid"
    write_ggrid(GridFunction(np.r_[np.zeros(8), np.ones(8), np.zeros(8)], (-1.0,), 1 / 8), path)
    code, out, _ = run(capsys, "grafakos", "--grid", str(path))
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    assert len(rep["rows"]) == 20


def test_cover_stein_dichotomy_counterexample(capsys):
    code, out, _ = run(capsys, "cover", "--builtin", "indicator", "--n", "512", "--levels-count", "5")
    assert code == 0 and all(r["prop4_residual"] <= 1e-3 for r in json.loads(out)["rows"])
    code, out, _ = run(capsys, "stein", "--builtin", "random", "--n", "8")
    assert code == 0 and json.loads(out)["rhs"] > 0
    code, out, _ = run(capsys, "dichotomy", "--builtin", "random", "--n", "8")
    assert json.loads(out)["verdict"] in ("both", "expansion", "spread", "neither")
    code, out, _ = run(capsys, "counterexample", "--n", "16")
    assert code == 0 and json.loads(out)["N"] == 16


@pytest.mark.parametrize(
    "argv,code_name",
    [
        (["frobnicate"], "usage"),
        (["ratio", "--grid", "/nonexistent/x.ggrid"], "unreadable-grid"),
        (["ratio", "--builtin", "indicator", "--p", "1"], None),
        (["maximal", "--op", "lambda-box", "--lambda", "2"], None),
        (["bellman-verify", "--lambda", "0.5", "--max-depth", "2"], "invalid-parameter"),
    ],
)
def test_errors(capsys, argv, code_name):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("error code=")
    if code_name:
        assert lines[0].startswith(f"error code={code_name} ")


def test_console_script(tmp_path):
    env = dict(os.environ, MAXLAB_THREADS="1")
    res = subprocess.run(
        [sys.executable, "-m", "maxlab.cli", "constants", "--p", "3", "--lambda-limit"],
        capture_output=True, text=True, env=env, check=False,
    )
    assert res.returncode == 0
    assert res.stdout == f"{1.5 ** (1 / 3):.6f}\n"
