import json
import subprocess
import sys

import numpy as np
import pytest

from freefield import cli
from freefield.errors import QuadratureNotConverged
from freefield.longrange import read_cov_matrix
from freefield.sampler import read_batch


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main(list(args) + ["--out", str(out)])
    return code, out


def manifest(out):
    return json.loads((out / "run_manifest.json").read_text())


def test_sample_then_verify_char(tmp_path):
    code, out = run(tmp_path, "sample", "--d", "1", "--n", "128", "--a", "0.1", "--m", "1", "--count", "100",
                    "--seed", "7", name="batch")
    assert code == 0
    assert len(list(out.glob("field_*.bin"))) == 100 and (out / "manifest.json").exists()
    assert read_batch(out).seed == 7
    man = manifest(out)
    assert man["seed"] == 7 and set(man["versions"]) >= {"numpy", "scipy", "python"} and man["wall_time_s"] >= 0

    code, rep = run(tmp_path, "verify-char", "--batch", str(out), name="vc")
    report = json.loads((rep / "verify_char.json").read_text())
    assert report["count"] == 100 and len(report["tests"]) == 5
    for t in report["tests"]:
        assert {"abs_diff", "stderr", "pass"} <= set(t)
        assert t["pass"] == (t["abs_diff"] <= max(3 * t["stderr"], 0.02))
    assert code == (0 if report["pass"] else cli.EXIT_CHECK)


def test_covmat_example(tmp_path):
    code, out = run(tmp_path, "covmat", "--d", "1", "--m", "1", "--L", "1", "--J", "50", "--tol", "1e-6")
    assert code == 0
    M = read_cov_matrix(out / "covmat.bin")
    rep = json.loads((out / "covmat.json").read_text())
    assert M.J == 50 and rep["min_eigenvalue"] > 0 and rep["increment_sizes"] == [3, 6, 12, 25, 50]
    assert manifest(out)["checks"]["increments_decreasing"] is True


def test_outputs_byte_identical(tmp_path):
    args = ["mixing", "--n", "256", "--a", "0.5", "--count", "200", "--mc-shifts", "1", "2", "--floor", "1"]
    _, a = run(tmp_path, *args, name="a")
    _, b = run(tmp_path, *args, name="b")
    for fname in ("mixing.csv", "mixing_mc.csv"):
        assert (a / fname).read_bytes() == (b / fname).read_bytes()
    ma, mb = manifest(a), manifest(b)
    ma.pop("wall_time_s"), mb.pop("wall_time_s")
    ma["config"].pop("out"), mb["config"].pop("out")
    assert ma == mb


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "lambda", "masses": [2.0, 0.5], "L": 0.5, "tol": 1e-5}))
    code, out = run(tmp_path, "lambda", "--config", str(cfg), "--L", "1")
    assert code == 0
    conf = manifest(out)["config"]
    assert conf["L"] == 1.0 and conf["masses"] == [2.0, 0.5] and conf["tol"] == 1e-5
    rows = (out / "lambda.csv").read_text().splitlines()
    assert rows[0] == "m,lambda" and rows[1].startswith("0.5,")


def test_config_round_trip():
    c = cli.resolve("envelope", {"epsilon": [0, 1], "N": 50}, {"seed": 3})
    back = cli.ExperimentConfig.from_json(c.to_json())
    assert back == c


@pytest.mark.parametrize("args", [
    ["sample", "--n", "7"],                      # odd lattice size
    ["lambda", "--masses", "0", "1"],            # non-positive mass
    ["covmat", "--L", "3.5"],                    # probes overlap
])
def test_config_errors_exit_2(tmp_path, capsys, args):
    code, _ = run(tmp_path, *args)
    assert code == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and err["error"] and err["message"]


def test_unknown_key_and_wrong_command_in_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(tmp_path, "lambda", "--config", str(cfg))[0] == cli.EXIT_CONFIG
    cfg.write_text(json.dumps({"command": "covmat"}))
    assert run(tmp_path, "lambda", "--config", str(cfg))[0] == cli.EXIT_CONFIG
    assert "covmat" in json.loads(capsys.readouterr().err.splitlines()[-1])["message"]


def test_numerical_failure_exit_3(tmp_path, capsys, monkeypatch):
    def boom(c, out):
        raise QuadratureNotConverged("did not settle")
    monkeypatch.setitem(cli.RUNNERS, "lambda", boom)
    assert run(tmp_path, "lambda")[0] == cli.EXIT_NUMERICAL
    assert json.loads(capsys.readouterr().err)["error"] == "QuadratureNotConverged"


def test_check_failure_exit_4(tmp_path):
    code, out = run(tmp_path, "discriminate", "--trials", "5", "--accuracy", "1.5")
    assert code == cli.EXIT_CHECK
    assert manifest(out)["exit_status"] == 4


def test_envelope_table_from_input(tmp_path):
    seq = tmp_path / "x.txt"
    np.savetxt(seq, [0.0, 5.0, 0.1, 0.2])
    code, out = run(tmp_path, "envelope", "--input", str(seq), "--rho", "1", "--N", "2", "--epsilon", "0")
    assert code == 0
    lines = (out / "envelope.csv").read_text().splitlines()
    assert lines[0] == "n,bound,abs_x,violated" and lines[1].endswith(",5,true") and len(lines) == 4


def test_discriminate_table(tmp_path):
    code, out = run(tmp_path, "discriminate", "--trials", "3", "--length", "60")
    lines = (out / "discriminate.csv").read_text().splitlines()
    assert lines[0] == "candidate_m,lambda_m_L,lambda_hat,z_score" and len(lines) == 3
    assert len((out / "trials.csv").read_text().splitlines()) == 4


def test_workers_env(tmp_path, monkeypatch):
    monkeypatch.setenv("FREEFIELD_WORKERS", "2")
    _, out = run(tmp_path, "evolve", "--n", "32")
    assert manifest(out)["config"]["workers"] == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "freefield.cli", "lambda", "--masses", "1", "2",
                          "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
