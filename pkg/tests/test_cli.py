import json

import numpy as np
import pytest

from mopup.cli import main
from mopup.io import read_sample_set
from mopup.linalg import Subspace, sin_theta


@pytest.fixture
def matrix_file(tmp_path):
    data, truth = tmp_path / "x.mst", tmp_path / "truth.json"
    code = main(["generate", "--dims", "12,10", "--rank", "2,2", "-n", "6", "--R", "0.01",
                 "--seed", "3", "--out", str(data), "--truth", str(truth)])
    assert code == 0
    return data, truth


def test_generate_is_deterministic(tmp_path, matrix_file):
    data, _ = matrix_file
    again = tmp_path / "y.mst"
    assert main(["generate", "--dims", "12,10", "--rank", "2,2", "-n", "6", "--R", "0.01",
                 "--seed", "3", "--out", str(again)]) == 0
    assert data.read_bytes() == again.read_bytes()


@pytest.mark.parametrize("init", ["asc", "hosvd", "random"])
def test_fit(tmp_path, matrix_file, init):
    data, truth = matrix_file
    out = tmp_path / "fit.json"
    code = main(["fit", str(data), "--rank", "2,2", "--init", init, "--max-iter", "200",
                 "--update-order", "gauss-seidel", "--out", str(out)])
    assert code == 0
    fit = json.loads(out.read_text())
    assert {"iterations", "converged", "step_trace", "loadings", "objective_trace"} <= set(fit)
    u_true = np.array(json.loads(truth.read_text())["loadings"][0])
    assert sin_theta(Subspace(np.array(fit["loadings"][0])), Subspace(u_true)) < 0.1


def test_fit_from_file(tmp_path, matrix_file):
    data, truth = matrix_file
    out = tmp_path / "fit.json"
    assert main(["fit", str(data), "--rank", "2,2", "--init", "file", "--init-file", str(truth),
                 "--out", str(out)]) == 0
    assert main(["fit", str(data), "--rank", "2,2", "--init", "file"]) == 2


def test_fit_tensor(tmp_path):
    data, out = tmp_path / "t.tst", tmp_path / "fit.json"
    assert main(["generate", "--dims", "6,6,6", "--rank", "2,2,2", "-n", "5", "--noise", "none",
                 "--score-dist", "gaussian_std", "--out", str(data)]) == 0
    assert main(["fit-tensor", str(data), "--rank", "2,2,2", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["loadings"]) == 3
    assert main(["fit", str(data), "--rank", "2,2"]) == 2


def test_rank(tmp_path, matrix_file, capsys):
    data, _ = matrix_file
    out = tmp_path / "rank.csv"
    assert main(["rank", str(data), "--max-rank", "3,3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "r1,r2,loss,bic,chosen"
    assert len(lines) == 10
    assert "chosen rank:" in capsys.readouterr().err


def test_denoise(tmp_path, matrix_file):
    data, truth = matrix_file
    out = tmp_path / "d.mst"
    assert main(["denoise", str(data), "--rank", "2,2", "--loadings", str(truth), "--out", str(out)]) == 0
    assert read_sample_set(out).samples.shape == (6, 12, 10)
    assert main(["denoise", str(data), "--rank", "2,2"]) == 2


def test_compare(tmp_path, matrix_file):
    data, truth = matrix_file
    out = tmp_path / "c.csv"
    assert main(["compare", str(data), "--rank", "2,2", "--truth", str(truth), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "method,objective,iterations,err_max"
    assert {r.split(",")[0] for r in rows[1:]} == {"mopup", "mpca", "hosvd", "asc"}


def test_bench_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench", "--study", "scale_R", "--sweep", "0.05,0.1", "--replicates", "2", "--max-iter", "3"]
    assert main(args + ["--out", str(a), "--seed", "4"]) == 0
    assert main(args + ["--out", str(b), "--seed", "4", "--threads", "2"]) == 0

    def strip_wall(path):
        rows = [line.split(",") for line in path.read_text().splitlines()]
        k = rows[0].index("wall_ms")
        return [r[:k] + r[k + 1:] for r in rows]

    assert strip_wall(a) == strip_wall(b)


def test_bench_config_file(tmp_path):
    cfg, out, summ = tmp_path / "cfg.json", tmp_path / "r.csv", tmp_path / "s.csv"
    cfg.write_text(json.dumps({"study": "verify_bounds", "sweep": [5], "replicates": 3}))
    assert main(["bench", "--config", str(cfg), "--out", str(out), "--summary", str(summ)]) == 0
    assert len(out.read_text().splitlines()) == 4
    assert summ.read_text().startswith("sweep_value,count,mean")


def test_verify_small(tmp_path):
    out = tmp_path / "v.csv"
    assert main(["verify", "--suite", "recovery", "--instances", "4", "--out", str(out)]) == 0
    assert all(line.split(",")[1] == "true" for line in out.read_text().splitlines()[1:])


@pytest.mark.parametrize("argv", [
    [],
    ["fit"],
    ["bench"],
    ["bench", "--study", "scale_p1", "--sweep", "5"],
    ["generate", "--dims", "5,5", "--rank", "1", "-n", "2", "--out", "x"],
    ["generate", "--dims", "5,5", "--rank", "1,1", "-n", "2"],
    ["fit", "/nonexistent/file.mst", "--rank", "1,1"],
    ["bench", "--study", "scale_R", "--sweep", "a,b"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert err


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.mst"
    bad.write_text("MST1 2 2 2\n1 2\n3 4\n")
    assert main(["fit", str(bad), "--rank", "1,1"]) == 3
    err = capsys.readouterr().err
    assert "expected 4 data rows, found 2" in err and len(err.strip().splitlines()) == 1


def test_numerical_failure_exit_code(monkeypatch, matrix_file, capsys):
    data, _ = matrix_file

    def boom(*a, **k):
        raise np.linalg.LinAlgError("eigh did not converge")

    monkeypatch.setattr("mopup.cli.asc_init", boom)
    assert main(["fit", str(data), "--rank", "2,2"]) == 4
    assert "numerical failure" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "mopup", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("mopup")
