"""Config validation, runners, JSON/CSV emission, exit codes, determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest

from qadconv import cli
from qadconv.errors import ConfigError


def write_csv(tmp_path, name, values):
    p = tmp_path / name
    p.write_text("".join(f"{v}\n" for v in values))
    return str(p)


def run_main(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_config_validation_errors():
    with pytest.raises(ConfigError) as e:
        cli.ExperimentConfig(kind="qdac", data="x.csv").validate()
    assert e.value.field == "m"
    with pytest.raises(ConfigError):
        cli.ExperimentConfig(kind="prep", data="x.csv", random=4).validate()
    with pytest.raises(ConfigError):
        cli.ExperimentConfig(kind="prep", random=4).validate()  # no seed
    with pytest.raises(ConfigError):
        cli.ExperimentConfig(kind="nonlinear", data="x.csv", m=3,
                             mode="sample").validate()
    with pytest.raises(ConfigError):
        cli.ExperimentConfig(kind="spectrum").validate()
    with pytest.raises(ConfigError):
        cli.ExperimentConfig(kind="frobnicate").validate()
    # a qadc sweep does not need a single m
    cli.ExperimentConfig(kind="qadc-abs", data="x.csv", sweep="3,4").validate()


def test_prep_runner_exact_loader(tmp_path):
    path = write_csv(tmp_path, "d.csv", ["0.6", "0.8"])
    record = cli.run(cli.ExperimentConfig(kind="prep", data=path))
    m = record.metrics
    assert m["fidelity"] == pytest.approx(1.0, abs=1e-12)
    assert m["n_qubits"] == 1
    assert m["input_norm"] == pytest.approx(1.0, abs=1e-12)


def test_qdac_fixture_record(tmp_path, capsys):
    path = write_csv(tmp_path, "d.csv", ["0.6", "0.8"])
    code, record = run_main(capsys, ["qdac", "--data", path, "--m", "8"])
    assert code == 0
    m = record["metrics"]
    assert m["predicted_probability"] == pytest.approx(0.50156402587890625, abs=1e-15)
    assert m["empirical_probability"] == pytest.approx(m["predicted_probability"],
                                                       abs=1e-10)
    assert m["fidelity"] >= 1.0 - 1e-6
    assert record["schema"] == "qadconv/v1"
    assert record["config"]["m"] == 8


def test_qadc_record_shape(tmp_path, capsys):
    path = write_csv(tmp_path, "d.csv", ["0.1", "0.5", "0.7", "0.5"])
    code, record = run_main(
        capsys,
        ["qadc", "--data", path, "--variant", "abs", "--m", "3", "--g", "2"],
    )
    assert code == 0
    m = record["metrics"]
    assert len(m["estimates"]) == 4
    assert m["controlled_ua_count"] == 4 * (2**5 - 1)
    assert m["true_values"] == pytest.approx([0.1, 0.5, 0.7, 0.5], abs=1e-12)
    assert 0.0 <= m["clean_probability"] <= 1.0


def test_qadc_sweep_csv_and_thread_determinism(tmp_path, capsys, monkeypatch):
    path = write_csv(tmp_path, "d.csv", ["0.6", "0.8"])
    csv_path = tmp_path / "sweep.csv"

    def sweep_once(threads):
        monkeypatch.setenv("QADCONV_THREADS", threads)
        code, record = run_main(
            capsys,
            ["qadc", "--data", path, "--variant", "real", "--sweep", "4,3",
             "--g", "2", "--csv", str(csv_path)],
        )
        assert code == 0
        return json.dumps(record["metrics"], sort_keys=True), csv_path.read_text()

    m1, c1 = sweep_once("1")
    m3, c3 = sweep_once("3")
    assert m1 == m3
    assert c1 == c3
    lines = c1.strip().splitlines()
    assert lines[0] == ("m,fidelity_vs_ideal,readout_accuracy,"
                        "clean_probability,controlled_ua_count")
    ms = [int(row.split(",")[0]) for row in lines[1:]]
    assert ms == [3, 4]
    rows = json.loads(m1)["rows"]
    assert [r["m"] for r in rows] == [3, 4]
    assert float(lines[1].split(",")[1]) == rows[0]["fidelity_vs_ideal"]


def test_nonlinear_record_and_csv(tmp_path, capsys):
    path = write_csv(tmp_path, "d.csv", ["0.6", "0.8"])
    csv_path = tmp_path / "amps.csv"
    code, record = run_main(
        capsys,
        ["nonlinear", "--data", path, "--f", "square", "--m", "3", "--g", "2",
         "--csv", str(csv_path)],
    )
    assert code == 0
    m = record["metrics"]
    assert m["success_probability"] == pytest.approx(m["predicted_probability"],
                                                     abs=1e-10)
    assert m["leakage"] < 0.1
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "index,amplitude,classical_target"
    assert len(lines) == 3
    assert float(lines[1].split(",")[1]) == m["amplitudes"][0]


def test_perceptron_record_with_training(capsys):
    code, record = run_main(
        capsys,
        ["perceptron", "--random", "4", "--seed", "7", "--m", "3", "--g", "2",
         "--shots", "512", "--train-budget", "3"],
    )
    assert code == 0
    m = record["metrics"]
    assert len(m["readouts"]) == 4
    for r in m["readouts"]:
        assert abs(r["estimate"] - r["exact"]) <= 4 * max(r["standard_error"], 1e-3)
    t = m["training"]
    assert t["evaluations"] == 3
    assert t["final_loss"] <= t["initial_loss"]


def test_spectrum_single_point(capsys):
    code, record = run_main(capsys, ["spectrum", "--r", "0"])
    assert code == 0
    m = record["metrics"]
    assert m["theta"] == pytest.approx(0.25, abs=1e-12)
    assert m["lambda_plus"][1] == pytest.approx(1.0, abs=1e-12)
    assert not m["degenerate"]


def test_spectrum_sweep_golden_csv(tmp_path, capsys):
    csv_path = tmp_path / "sp.csv"
    code, record = run_main(
        capsys, ["spectrum", "--sweep", "0:1:0.5", "--csv", str(csv_path)]
    )
    assert code == 0
    assert record["metrics"]["points"] == 3
    got = csv_path.read_bytes().decode()
    want = (
        "value,theta,lambda_plus_re,lambda_plus_im,lambda_minus_re,lambda_minus_im\r\n"
        "0.0,0.25000000000000006,-3.8285686989269494e-16,1.0,"
        "-3.8285686989269494e-16,-1.0\r\n"
        "0.5,0.29021531162758313,-0.2499999999999999,0.9682458365518543,"
        "-0.2499999999999999,-0.9682458365518543\r\n"
        "1.0,0.5,-1.0,1.2246467991473532e-16,-1.0,-1.2246467991473532e-16\r\n"
    )
    assert got == want


def test_default_sweep_injected(capsys):
    code, record = run_main(capsys, ["spectrum"])
    assert code == 0
    assert record["metrics"]["points"] == 101


def test_verify_all_green(capsys):
    code, record = run_main(capsys, ["verify"])
    assert code == 0
    m = record["metrics"]
    assert m["all_pass"]
    assert len(m["rows"]) == len(cli.ORACLE_CHECKS)
    for row in m["rows"]:
        assert row["max_deviation"] <= row["tolerance"]


def test_verify_scopes(capsys):
    code, record = run_main(capsys, ["verify", "--scope", "none"])
    assert code == 0
    assert record["metrics"]["rows"] == []
    assert record["metrics"]["all_pass"]

    code, record = run_main(capsys, ["verify", "--scope", "spectrum"])
    assert code == 0
    assert [r["name"] for r in record["metrics"]["rows"]] == ["spectrum"]

    code, _ = run_main(capsys, ["verify", "--scope", "nonsense"])
    assert code == 2


def test_verify_failure_exits_4(capsys, monkeypatch):
    monkeypatch.setattr(
        cli, "ORACLE_CHECKS", (("always-bad", 1e-12, lambda: 1.0),)
    )
    code, record = run_main(capsys, ["verify"])
    assert code == 4
    assert record["metrics"]["rows"][0]["pass"] is False


def test_exit_codes(tmp_path, capsys):
    path = write_csv(tmp_path, "d.csv", ["0.1", "0.5", "0.7", "0.5"])
    assert cli.main(["qdac", "--data", path]) == 2  # missing m
    capsys.readouterr()
    code = cli.main(["qadc", "--data", path, "--m", "12", "--g", "12",
                     "--cap", "20"])
    assert code == 3
    capsys.readouterr()


def test_out_file_matches_stdout(tmp_path, capsys):
    out = tmp_path / "rec.json"
    code, record = run_main(
        capsys, ["spectrum", "--r", "0.5", "--out", str(out)]
    )
    assert code == 0
    assert json.loads(out.read_text()) == record


def test_metric_bytes_identical_across_runs(tmp_path):
    path = write_csv(tmp_path, "d.csv", ["0.6", "0.8"])
    cfg = cli.ExperimentConfig(kind="nonlinear", data=path, m=3, g=2,
                               f="square", mode="sample", seed=12, shots=256)
    a = cli.run(cfg).metrics_json()
    b = cli.run(cfg).metrics_json()
    assert a.encode() == b.encode()


def test_f64_data_format(tmp_path):
    raw = tmp_path / "d.f64"
    np.array([0.6, 0.8]).tofile(raw)
    record = cli.run(cli.ExperimentConfig(kind="prep", data=str(raw), fmt="f64"))
    assert record.metrics["fidelity"] == pytest.approx(1.0, abs=1e-12)


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "qadconv", "spectrum", "--r", "0.25"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    record = json.loads(proc.stdout)
    assert record["kind"] == "spectrum"
