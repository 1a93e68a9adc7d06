import csv
import io
import json
import subprocess
import sys

import pytest

from apmoments.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_salie_example(capsys):
    doc = run_json(capsys, "expsum", "eval", "--q", "9", "--m", "1", "--n", "1", "--kind", "salie")
    re_, im_ = doc["result"]["value"]
    assert re_ == pytest.approx(0.347296, abs=1e-6) and im_ == 0
    assert doc["config"]["command"] == ["expsum", "eval"]


def test_qr_search_csv_rows(capsys):
    code, out, _ = run(capsys, "qr-primes", "search", "--x", "100", "--Z", "const:2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 11
    assert all(int(r["p"]) % 8 in (1, 7) for r in rows)


def test_harness_moments_below_budget(capsys):
    doc = run_json(
        capsys, "harness", "moments", "--p", "47", "--N", "2", "--Y", "2", "--nu", "3",
        "--mode", "integral", "--coeffs", "delta",
    )
    res = doc["result"]
    assert res["rhs_main"] == 0
    assert abs(res["lhs"]) < res["error_budget"]["total"]


def test_charsum(capsys):
    doc = run_json(capsys, "qr-primes", "charsum", "--q", "3", "--x", "10")
    assert doc["result"]["pi_chi"] == -3


def test_config_round_trip_is_byte_identical(capsys, tmp_path):
    argv = ["moments", "salie", "--q", "27", "--nu", "2", "--m", "1,4"]
    code, first, _ = run(capsys, *argv)
    assert code == 0
    cfg = tmp_path / "run.json"
    cfg.write_text(first)
    code, second, _ = run(capsys, "--config", str(cfg))
    assert code == 0 and second == first


def test_out_flag_writes_file(capsys, tmp_path):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "expsum", "eval", "--q", "25", "--m", "2", "--n", "3", "--kind", "kloosterman",
                       "--out", str(target))
    assert code == 0 and out == ""
    assert "value" in json.loads(target.read_text())["result"]


@pytest.mark.parametrize(
    "argv",
    [
        ["expsum", "eval", "--q", "9", "--m", "1", "--n", "1", "--kind", "salie", "--bogus", "1"],
        ["expsum", "eval", "--q", "7", "--m", "1", "--n", "1", "--kind", "kloosterman"],
        ["expsum", "eval", "--q", "9", "--m", "1", "--n", "1", "--kind", "salie", "--format", "csv"],
        ["expsum", "eval", "--q", "9", "--m", "1", "--n", "1", "--kind", "salie", "--threads", "0"],
        ["harness", "moments", "--p", "11", "--nu", "2", "--format", "svg"],
        ["qr-primes", "search", "--x", "100", "--Z", "cubic"],
        ["frobnicate"],
        [],
    ],
)
def test_validation_exit_code(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and err


def test_io_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "coeffs", "check", "--file", str(tmp_path / "missing.csv"))
    assert code == 3 and "I/O" in err


def test_numerical_exit_code_keeps_payload(capsys):
    code, out, err = run(capsys, "voronoi", "check", "--q", "9", "--b", "1", "--X", "100", "--tol", "1e-30")
    assert code == 2 and "numerical" in err
    assert json.loads(out)["result"]["residual"] < 1e-8


def test_gen_delta_then_check(capsys, tmp_path):
    path = tmp_path / "delta.csv"
    code, _, err = run(capsys, "coeffs", "gen-delta", "--X", "500", "--out", str(path))
    assert code == 0, err
    doc = run_json(capsys, "coeffs", "check", "--file", str(path))
    assert doc["result"]["length"] >= 500


def test_distribution_svg(capsys, tmp_path):
    svg = tmp_path / "h.svg"
    doc = run_json(capsys, "harness", "distribution", "--p", "23", "--Y", "2", "--svg", str(svg))
    assert doc["result"]
    assert svg.read_text().startswith("<svg")


def test_module_entry_point_version():
    proc = subprocess.run([sys.executable, "-m", "apmoments", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
