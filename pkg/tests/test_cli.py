import json

import numpy as np
import pytest

from ustatlab import cli, data_exporter, database, harness
from ustatlab.data_importer import load_result, read_sample_file
from ustatlab.data_simulator import write_sample_file
from ustatlab.errors import ConfigError
from ustatlab.processes import make_process, sample_path
from ustatlab.rng import stream

HEADER = ("config_hash,seed,n,R,d2_full,d2_linear,rms_remainder,mean_square,"
          "sigma_sq_used,sigma_source,applicable,degeneracy_order,wall_ms")


def converge_args(out_dir, *extra):
    return ["converge", "--kernel", "mean", "--n-grid", "20,50", "--reps", "100", "--seed", "3",
            "--out", str(out_dir), *extra]


def test_catalog(capsys, monkeypatch):
    monkeypatch.setenv("COLUMNS", "200")
    assert cli.main(["catalog"]) == cli.EXIT_OK
    assert cli.main(["catalog", "--process", "iid_uniform"]) == cli.EXIT_OK
    output = capsys.readouterr().out
    assert "gini" in output
    assert "ar1_gaussian" in output


def test_catalog_with_unknown_process():
    assert cli.main(["catalog", "--process", "garch"]) == cli.EXIT_CONFIG


def test_converge_writes_a_stable_report(tmp_path):
    out = tmp_path / "results"
    assert cli.main(converge_args(out)) == cli.EXIT_OK
    (report,) = out.glob("*.csv")
    first = report.read_bytes()
    lines = first.decode("utf-8").splitlines()
    assert lines[0] == HEADER
    assert len(lines) == 3
    assert lines[1].split(",")[10] == "true"

    assert cli.main(converge_args(out)) == cli.EXIT_OK
    assert report.read_bytes() == first


def test_converge_from_config_file(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("kernel = variance\nn_grid = [20, 50]\nreps = 100\n")
    out = tmp_path / "results"
    assert cli.main(["converge", "--config", str(config), "--seed", "4", "--format", "json", "--out", str(out)]) == 0
    (report,) = out.glob("*.json")
    data = json.loads(report.read_text())
    assert data["config"]["kernel"] == "variance"
    assert data["config"]["seed"] == 4
    assert [row["estimator"] for row in data["rows"]] == ["exact", "exact"]


def test_configuration_errors_exit_with_2(tmp_path):
    assert cli.main(converge_args(tmp_path, "--reps", "10")) == cli.EXIT_CONFIG
    assert cli.main(["converge", "--config", str(tmp_path / "absent.cfg")]) == cli.EXIT_CONFIG


@pytest.mark.parametrize("setting", [
    "projection_mode = true_xi\noracle_size = 100",
    "mc_size = 100",
    "probe_size = 10",
    "lindeberg_epsilon = 0",
    "projection_mode = plug_in",
])
def test_out_of_range_settings_exit_with_2(tmp_path, setting):
    config = tmp_path / "run.cfg"
    config.write_text(setting + "\n")
    assert cli.main(converge_args(tmp_path / "out", "--config", str(config))) == cli.EXIT_CONFIG
    assert cli.main(["diagnose", "--config", str(config), "--out", str(tmp_path / "out")]) == cli.EXIT_CONFIG


def test_w2_between_files(tmp_path, capsys):
    a = write_sample_file([1.0, 2.0], tmp_path / "a.txt")
    b = write_sample_file([3.0, 2.0], tmp_path / "b.txt")
    assert cli.main(["w2", str(a), str(b)]) == cli.EXIT_OK
    assert capsys.readouterr().out.strip().endswith("= 1.0")


def test_w2_against_gaussian(tmp_path):
    a = write_sample_file([0.0, 0.5, -0.5], tmp_path / "a.txt")
    assert cli.main(["w2", str(a), "--gaussian", "1.0"]) == cli.EXIT_OK
    assert cli.main(["w2", str(a), "--gaussian", "-1"]) == cli.EXIT_NUMERIC
    assert cli.main(["w2", str(a)]) == cli.EXIT_CONFIG


def test_simulate_writes_paths(tmp_path):
    out = tmp_path / "samples"
    assert cli.main(["simulate", "--process", "ar1_gaussian", "--n", "100", "--count", "2", "--out", str(out)]) == 0
    files = sorted(out.glob("*.txt"))
    assert [f.name for f in files] == ["ar1_gaussian_n100_seed0_0.txt", "ar1_gaussian_n100_seed0_1.txt"]
    expected = sample_path(make_process("ar1_gaussian"), 100, stream(0, 1, "path", 100))
    assert np.array_equal(read_sample_file(files[1]), expected)


def test_simulate_rejects_bad_parameters(tmp_path):
    assert cli.main(["simulate", "--process-params", '{"sigma": -1}', "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_history_lists_recorded_runs(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("COLUMNS", "200")
    db = tmp_path / "runs.db"
    assert cli.main(converge_args(tmp_path / "results", "--db", str(db))) == 0
    rows = database.fetch_rows(db)
    assert [row["n"] for row in rows] == [20, 50]
    assert rows[0]["applicable"] is True
    assert database.fetch_rows(db, kernel="variance") == []
    assert database.fetch_rows(db, config_hash=rows[0]["config_hash"], kernel="mean") == rows

    capsys.readouterr()
    assert cli.main(["history", "--db", str(db)]) == 0
    assert rows[0]["config_hash"] in capsys.readouterr().out


def test_recording_twice_replaces_rows(tmp_path, small_config):
    result = harness.run_convergence_experiment(small_config())
    db = tmp_path / "runs.db"
    database.record_result(result, db)
    database.record_result(result, db)
    assert len(database.fetch_rows(db)) == 2


# --- Reports ---

def test_json_report_round_trip(small_config):
    result = harness.run_convergence_experiment(small_config(kernel="variance"))
    path = data_exporter.emit_report(result, "json")
    assert path.name == f"{result.config_hash}.json"
    loaded = load_result(path)
    assert loaded == result
    assert loaded.replicated == {}


def test_load_result_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{\"config_hash\": \"x\"}")
    with pytest.raises(ConfigError, match="missing"):
        load_result(broken)
    with pytest.raises(ConfigError, match="Cannot read"):
        load_result(tmp_path / "absent.json")


def test_unknown_report_format(small_config):
    result = harness.run_convergence_experiment(small_config(reps=100))
    with pytest.raises(ConfigError, match="xml"):
        data_exporter.emit_report(result, "xml")


def test_unwritable_output_directory(tmp_path, small_config):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    result = harness.run_convergence_experiment(small_config(reps=100))
    with pytest.raises(ConfigError, match="unwritable path"):
        data_exporter.emit_report(result, "csv", blocker / "results")


def test_rate_report(small_config):
    config = small_config(kernel="variance", n_grid=[10, 20, 40, 100], reps=100, orders=[1, 2])
    path = data_exporter.emit_rate_report(harness.run_rate_experiment(config))
    lines = path.read_text().splitlines()
    assert path.name.endswith("_rates.csv")
    assert lines[0] == "config_hash,order,slope,slope_se,status,rms_n10,rms_n20,rms_n40,rms_n100"
    assert [line.split(",")[1] for line in lines[1:]] == ["1", "2"]
    assert all(line.split(",")[4] == "ok" for line in lines[1:])


def test_diagnostics_report_file(small_config, tmp_path):
    report = harness.run_diagnostics(small_config())
    path = data_exporter.emit_diagnostics(report, tmp_path)
    data = json.loads(path.read_text())
    assert data["sigma_sq_analytic"] == 1.0
    assert [entry["n"] for entry in data["lindeberg"]] == [20, 50]
    assert len(data["ui_profile"]) == 5


# --- Sample files ---

def test_sample_file_round_trip(tmp_path, rng):
    values = rng.normal(size=25)
    assert np.array_equal(read_sample_file(write_sample_file(values, tmp_path / "s.txt")), values)


def test_sample_file_skips_blank_lines(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("1.5\n\n  -2\n")
    assert list(read_sample_file(path)) == [1.5, -2.0]


@pytest.mark.parametrize("text,message", [
    ("1.0\nabc\n", "line 2: 'abc' is not a number"),
    ("1.0\ninf\n", "line 2: value must be finite"),
    ("\n\n", "no values"),
])
def test_bad_sample_files(tmp_path, text, message):
    path = tmp_path / "s.txt"
    path.write_text(text)
    with pytest.raises(ConfigError, match=message):
        read_sample_file(path)


def test_history_without_runs(tmp_path, capsys):
    assert cli.main(["history", "--db", str(tmp_path / "empty.db")]) == 0
    assert "No recorded runs." in capsys.readouterr().out
