import json
import math
import subprocess
import sys

import numpy as np
import pytest

from kdiffract import cli
from kdiffract.cli import RunConfig, main, read_config_file, render, validate


def parse_csv(text):
    meta, columns, rows = {}, None, []
    for line in text.splitlines():
        if line.startswith("# columns="):
            columns = line[len("# columns="):].split(",")
        elif line.startswith("# "):
            k, v = line[2:].split("=", 1)
            meta[k] = v
        else:
            rows.append([float(x) for x in line.split(",")])
    return meta, columns, np.array(rows)


def run_cli(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--output", str(out)])
    return code, (out.read_text() if out.exists() else None)


@pytest.fixture(scope="module")
def figure_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig") / "fig.csv"
    code = main(["--mode", "averaged", "--T", "10", "--epsilon", "10", "--calT", "0,1,10",
                 "--format", "csv", "--output", str(out)])
    return code, out.read_text()


def test_averaged_figure_table(figure_csv):
    code, text = figure_csv
    assert code == 0
    meta, columns, rows = parse_csv(text)
    assert columns == ["p_x", "w_ideal", "w_avg_calT_0", "w_avg_calT_1", "w_avg_calT_10"]
    assert rows.shape[1] == 2 + 3
    centre = rows[np.argmin(np.abs(rows[:, 0]))]
    assert centre[2] == pytest.approx(0.0041770, abs=5e-7)
    assert centre[1] == centre[2]
    assert centre[2] < centre[3] < centre[4]
    for key in ("config.T", "config.epsilon", "config.calT", "config.method", "config.step",
                "config.tol", "config.seed", "version", "backend"):
        assert key in meta
    assert int(meta["n_max.w_avg_calT_10"]) > int(meta["n_max.w_avg_calT_1"])


def test_csv_row_count_matches_grid(figure_csv):
    _, text = figure_csv
    meta, _, rows = parse_csv(text)
    n_top = int(meta["n_max.w_avg_calT_10"])
    half = 2 * n_top + 6
    assert rows.shape[0] == 2 * round(half / 0.01) + 1


def test_csv_full_precision(figure_csv):
    _, text = figure_csv
    _, _, rows = parse_csv(text)
    line = text.splitlines()[-1]
    assert [float(x) for x in line.split(",")] == rows[-1].tolist()


def test_ideal_gaussian(tmp_path):
    code, text = run_cli(tmp_path, "--mode", "ideal", "--T", "0", "--epsilon", "10")
    assert code == 0
    _, columns, rows = parse_csv(text)
    assert columns == ["p_x", "w_ideal"]
    gauss = math.sqrt(10 / math.pi) * np.exp(-10 * rows[:, 0] ** 2)
    # Products below 1e-18 are dropped by the comb.
    assert np.allclose(rows[:, 1], gauss, rtol=1e-13, atol=1e-18)


def test_byte_identical_runs(tmp_path):
    args = ["--mode", "inm-table", "--n", "0..1", "--m", "0..2", "--T", "5", "--calT", "1",
            "--mc-samples", "20000", "--seed", "3"]
    _, a = run_cli(tmp_path, *args, name="a.csv")
    _, b = run_cli(tmp_path, *args, name="b.csv")
    assert a == b


def test_inm_table_columns(tmp_path):
    code, text = run_cli(tmp_path, "--mode", "inm-table", "--n", "0..2", "--m", "0..2",
                         "--T", "10", "--calT", "1", "--mc-samples", "100000", "--seed", "7")
    assert code == 0
    meta, columns, rows = parse_csv(text)
    assert columns == ["n", "m", "quadrature", "quadrature_err", "closed_form",
                       "abs_diff_closed_form", "monte_carlo", "mc_stderr",
                       "abs_diff_monte_carlo", "mc_z"]
    assert rows.shape[0] == 9
    assert np.all(rows[:, 5] < 1e-8)
    assert float(meta["max_abs_diff_closed_form"]) < 1e-8


def test_inm_table_negative_orders(tmp_path):
    code, text = run_cli(tmp_path, "--mode", "inm-table", "--n=-1..1", "--m", "0",
                         "--T", "4", "--calT", "1", "--method", "quadrature")
    assert code == 0
    _, columns, rows = parse_csv(text)
    assert "closed_form" not in columns
    assert rows[0, 2] == -rows[2, 2]


def test_json_round_trip(tmp_path):
    code, text = run_cli(tmp_path, "--mode", "scenario", "--scenario", "cold-beam-sec5",
                         "--format", "json")
    assert code == 0
    body = json.loads(text)
    assert set(body) == {"meta", "columns", "rows"}
    assert body["meta"]["dominant_term"] == "schrodinger_spread"
    record = cli.OutputRecord(body["meta"], body["columns"], body["rows"])
    assert render(record, "json") == text
    tau, calT, T = body["rows"][0][:3]
    assert calT / T == pytest.approx(tau / 1e-9, rel=1e-14)


def test_kernel_demo(tmp_path):
    code, text = run_cli(tmp_path, "--mode", "kernel-demo", "--levels", "0,1,3", "--tau", "0.5",
                         "--t-max", "5", "--t-points", "11", "--format", "json")
    assert code == 0
    body = json.loads(text)
    assert len(body["rows"]) == 11
    assert len(body["columns"]) == 1 + 3 * 3
    assert body["meta"]["max_abs_diff_exact_vs_closed"] < 1e-10
    assert body["meta"]["gamma[0,1]"] == pytest.approx(math.log(1.25) / 1.0)


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\nmode = ideal\nT = 0\nepsilon = 4\nstep = 0.1\np-min = -2\np-max = 2\n")
    code, text = run_cli(tmp_path, "--config", str(cfg), "--epsilon", "8")
    assert code == 0
    meta, _, rows = parse_csv(text)
    assert meta["config.epsilon"] == "8"
    assert meta["config.step"] == "0.10000000000000001"
    assert rows.shape[0] == 41
    assert rows[20, 1] == pytest.approx(math.sqrt(8 / math.pi), rel=1e-14)


def test_read_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(cli.ConfigError):
        read_config_file(str(bad))
    with pytest.raises(cli.ConfigError):
        read_config_file(str(tmp_path / "missing.cfg"))


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("KDIFFRACT_OUTPUT_DIR", str(tmp_path))
    assert main(["--mode", "scenario", "--format", "json"]) == 0
    assert json.loads((tmp_path / "kdiffract-scenario.json").read_text())["rows"]


def test_preset_figure2():
    config = cli.config_from_args(["--preset", "figure2", "--mode", "averaged"])
    assert (config.T, config.epsilon, config.calT) == (10.0, 10.0, (0.0, 1.0, 10.0))


@pytest.mark.parametrize("args", [
    ["--mode", "warp"],
    ["--T", "1"],
    ["--mode", "averaged", "--calT", ""],
    ["--mode", "averaged", "--calT", "10", "--method", "closed-form"],
    ["--mode", "averaged", "--calT", "1", "--method", "monte-carlo"],
    ["--mode", "ideal", "--T", "abc"],
    ["--mode", "inm-table", "--calT", "1,2"],
    ["--mode", "scenario", "--scenario", "hot-beam"],
    ["--mode", "ideal", "--format", "xml"],
])
def test_config_errors_exit_2(args, capsys):
    assert main(args) == 2
    assert "error" in capsys.readouterr().err


def test_numeric_failure_exit_3(capsys):
    code = main(["--mode", "inm-table", "--n", "0", "--m", "0", "--T", "10", "--calT", "1",
                 "--tol", "1e-300"])
    assert code == 3
    assert "achieved" in capsys.readouterr().err


def test_io_failure_exit_4(tmp_path, capsys):
    target = tmp_path / "no" / "such" / "dir" / "out.csv"
    assert main(["--mode", "scenario", "--output", str(target)]) == 4
    assert "cannot write" in capsys.readouterr().err


def test_validate_diagnostics():
    warn = validate(RunConfig(mode="ideal", epsilon=0.5))
    assert [d.level for d in warn] == ["warning"]
    assert "peaks unresolved" in warn[0].message
    errs = validate(RunConfig(mode="averaged", calT=(10.0,), method="closed-form"))
    assert any(d.level == "error" and "closed-form" in d.message for d in errs)
    assert any(d.level == "error" for d in validate(RunConfig(mode="averaged", calT=())))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kdiffract", "--mode", "scenario"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "# dominant_term=schrodinger_spread" in proc.stdout
