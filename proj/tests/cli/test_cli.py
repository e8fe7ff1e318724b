import csv
import json
import os
import subprocess

import pytest

PRISM = os.environ.get("PRISM_CLI", "prism")

SMALL = ["--K", "6", "--N", "60", "--M", "156", "--folds", "5"]
WINDOW = ["--from", "1996-01-06", "--to", "1996-06-29"]


def run(*args, cwd=None):
    return subprocess.run([PRISM, *map(str, args)], capture_output=True, text=True, cwd=cwd)


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    r = run("synth", "--seed", 11, "--weeks", 800, "--terms", 3, "--out-dir", d)
    assert r.returncode == 0, r.stderr
    return d


def backtest(data, out, *extra, window=WINDOW):
    return run("backtest", "--claims", data / "claims.csv", *window, *SMALL, "--out-dir", out, *extra)


def test_synth_is_seeded(tmp_path):
    for name in ("a", "b"):
        assert run("synth", "--seed", 5, "--weeks", 300, "--out-dir", tmp_path / name).returncode == 0
    assert (tmp_path / "a" / "claims.csv").read_bytes() == (tmp_path / "b" / "claims.csv").read_bytes()
    assert run("synth", "--seed", 6, "--weeks", 300, "--out-dir", tmp_path / "c").returncode == 0
    assert (tmp_path / "a" / "claims.csv").read_bytes() != (tmp_path / "c" / "claims.csv").read_bytes()


def test_usage_errors(data, tmp_path):
    assert run().returncode == 1
    assert run("nonsense").returncode == 1
    assert run("sweep", "--claims", data / "claims.csv", "--param", "w", "--param", "N",
               "--values", "1").returncode == 1
    assert backtest(data, tmp_path, "--K", "4", "--K", "5").returncode == 1
    r = backtest(data, tmp_path, window=["--from", "1996-01-07", "--to", "1996-06-29"])
    assert r.returncode == 1
    assert "Saturday" in r.stderr
    assert backtest(data, tmp_path, "--w", "1.5").returncode == 1
    assert backtest(data, tmp_path, "--rule", "median").returncode == 1


def test_data_errors(data, tmp_path):
    assert run("backtest", "--claims", tmp_path / "missing.csv", *WINDOW).returncode == 2
    gap = tmp_path / "gap.csv"
    gap.write_text("DATE,ICNSA\n2007-01-06,1\n2007-01-20,2\n")
    r = run("backtest", "--claims", gap, *WINDOW)
    assert r.returncode == 2
    assert "GapError" in r.stderr
    r = backtest(data, tmp_path, window=["--from", "1990-06-02", "--to", "1990-06-02"])
    assert r.returncode == 2
    assert "InsufficientHistory" in r.stderr


def test_decompose(data, tmp_path):
    out = tmp_path / "stl.csv"
    r = run("decompose", "--claims", data / "claims.csv", "--at", "2005-01-01", "--out", out)
    assert r.returncode == 0, r.stderr
    table = rows(out)
    assert len(table) == 700
    assert table[-1]["date"] == "2004-12-25"
    for row in table[:50]:
        total = float(row["trend"]) + float(row["seasonal"]) + float(row["remainder"])
        assert total == pytest.approx(float(row["value"]), rel=1e-10)
    assert {row["method"] for row in table} == {"stl"}

    out2 = tmp_path / "additive.csv"
    r = run("decompose", "--claims", data / "claims.csv", "--at", "2005-01-01", "--method", "additive",
            "--out", out2)
    assert r.returncode == 0, r.stderr
    assert {row["method"] for row in rows(out2)} == {"additive"}


def test_backtest_and_evaluate(data, tmp_path):
    r = backtest(data, tmp_path / "bt", "--trends", data / "manifest.txt", "--horizons", "0,1")
    assert r.returncode == 0, r.stderr
    model = rows(tmp_path / "bt" / "prism.csv")
    naive = rows(tmp_path / "bt" / "naive.csv")
    assert len(model) == len(naive) == 26 * 2
    assert {row["horizon"] for row in model} == {"0", "1"}
    cfg = json.loads((tmp_path / "bt" / "run_config.json").read_text())
    assert cfg["prism"]["K"] == 6

    r = run("evaluate", tmp_path / "bt" / "prism.csv", tmp_path / "bt" / "naive.csv",
            "--out-dir", tmp_path / "ev")
    assert r.returncode == 0, r.stderr
    table = {(row["method"], row["horizon"]): row for row in rows(tmp_path / "ev" / "relative_errors.csv")}
    assert float(table[("naive", "0")]["rmse_rel"]) == 1.0
    assert float(table[("naive", "1")]["mae_rel"]) == 1.0
    assert float(table[("prism", "0")]["rmse_rel"]) > 0.0
    dm = rows(tmp_path / "ev" / "dm_details.csv")
    assert all(row["n"] == "26" for row in dm)
    assert all(0.0 <= float(row["p_value"]) <= 1.0 for row in dm)
    assert (tmp_path / "ev" / "cssed_prism_h0.csv").exists()
    assert (tmp_path / "ev" / "qq_prism_h1.csv").exists()


def test_evaluate_grid_mismatch(data, tmp_path):
    assert backtest(data, tmp_path / "a").returncode == 0
    r = backtest(data, tmp_path / "b", window=["--from", "1997-01-04", "--to", "1997-02-01"])
    assert r.returncode == 0, r.stderr
    r = run("evaluate", f"late={tmp_path / 'b' / 'prism.csv'}", tmp_path / "a" / "naive.csv",
            "--out-dir", tmp_path / "ev")
    assert r.returncode == 2
    assert "GridMismatch" in r.stderr


def test_sweep(data, tmp_path):
    r = run("sweep", "--claims", data / "claims.csv", *WINDOW, *SMALL, "--horizons", "0",
            "--param", "w", "--values", "0.9,0.95,1", "--out-dir", tmp_path)
    assert r.returncode == 0, r.stderr
    table = rows(tmp_path / "sweep_w.csv")
    assert [row["w"] for row in table] == ["0.9", "0.95", "1"]
    assert all(float(row["rmse_rel_h0"]) > 0.0 for row in table)


def test_deterministic_output(data, tmp_path):
    for name, threads in (("one", "1"), ("two", "2")):
        r = backtest(data, tmp_path / name, "--trends", data / "manifest.txt", "--threads", threads)
        assert r.returncode == 0, r.stderr
    for f in ("prism.csv", "naive.csv"):
        assert (tmp_path / "one" / f).read_bytes() == (tmp_path / "two" / f).read_bytes()


def test_output_dir_from_environment(data, tmp_path):
    env = dict(os.environ, PRISM_OUTPUT_DIR=str(tmp_path / "env"))
    r = subprocess.run([PRISM, "backtest", "--claims", str(data / "claims.csv"), *WINDOW, *SMALL,
                        "--horizons", "0"], capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "env" / "prism.csv").exists()
