import json
import subprocess
import sys


import pytest

from bswkb.cli import main

HARMONIC_CFG = "family: harmonic\n"
QUARTIC_CFG = "family: quartic-well\n"


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "harmonic.yaml"
    p.write_text(HARMONIC_CFG)
    return p


def test_spectrum_row_count_and_columns(cfg, tmp_path, capsys):
    out = tmp_path / "spec.csv"
    rc = main(["spectrum", "--config", str(cfg), "--h", "0.1",
               "--order", "0,2", "--n-range", "0..4", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    data = [l for l in lines if not l.startswith("#")]
    assert data[0] == "n,E_order0,bs_residual_order0,E_order2,bs_residual_order2"
    assert len(data) == 6  # header + 5 rows
    # identical columns for vanishing corrections
    for row in data[1:]:
        cells = row.split(",")
        assert abs(float(cells[1]) - float(cells[3])) < 1e-8


def test_output_determinism(cfg, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        rc = main(["spectrum", "--config", str(cfg), "--h", "0.1",
                   "--n-range", "0..2", "--out", str(out)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


def test_json_mirror(cfg, tmp_path):
    out = tmp_path / "spec.json"
    rc = main(["spectrum", "--config", str(cfg), "--h", "0.1",
               "--n-range", "0..1", "--format", "json", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["columns"][0] == "n"
    assert len(doc["rows"]) == 2
    assert doc["meta"]["calibration"].startswith("sigma_Gamma=")


def test_missing_config_exit2(tmp_path):
    rc = main(["spectrum", "--config", str(tmp_path / "nope.yaml"), "--h", "0.1"])
    assert rc == 2


def test_malformed_config_exit2(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("family: harmonic\nbogus: 1\n")
    rc = main(["spectrum", "--config", str(p), "--h", "0.1"])
    assert rc == 2


def test_bad_h_exit2(cfg):
    assert main(["spectrum", "--config", str(cfg), "--h", "-0.1"]) == 2


def test_unknown_suite_exit2(cfg):
    assert main(["verify", "--suite", "nosuch", "--config", str(cfg)]) == 2


def test_sweep_single_h_exit2(cfg):
    rc = main(["sweep", "--config", str(cfg), "--h-list", "0.1"])
    assert rc == 2


def test_solver_failure_exit3(tmp_path):
    # deep level in a shallow Morse well: quantization target unreachable
    p = tmp_path / "shallow.yaml"
    p.write_text("family: morse\nmorse: {A: 0.25, a: 1.0}\n")
    rc = main(["spectrum", "--config", str(p), "--h", "0.1",
               "--n-range", "30..31"])
    assert rc == 3


def test_verify_stokes_suite_passes(capsys):
    rc = main(["verify", "--suite", "stokes"])
    captured = capsys.readouterr()
    assert rc == 0
    assert "PASS" in captured.out and "FAIL" not in captured.out


def test_calibration_file_roundtrip(cfg, tmp_path):
    calfile = tmp_path / "cal.json"
    calfile.write_text(json.dumps(
        {"sigma_Gamma": -1, "sigma_p1sq": 1, "sigma_p2": -1}))
    out = tmp_path / "o.csv"
    rc = main(["spectrum", "--config", str(cfg), "--h", "0.1",
               "--n-range", "0..1", "--calibration", str(calfile),
               "--out", str(out)])
    assert rc == 0
    assert "sigma_Gamma=-1" in out.read_text()


@pytest.mark.slow
def test_sweep_exact_flag_for_harmonic(cfg, tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep", "--config", str(cfg), "--h-list", "0.2,0.1,0.05",
               "--n-range", "0..1", "--out", str(out)])
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 5  # header + 3 h rows + order_fit row
    fit = lines[-1].split(",")
    assert fit[0] == "order_fit"
    assert fit[1] == "exact" and fit[2] == "exact"


def test_console_entry_point():
    rc = subprocess.run([sys.executable, "-m", "bswkb.cli", "--help"],
                        capture_output=True, text=True)
    assert rc.returncode == 0
    assert "spectrum" in rc.stdout and "verify" in rc.stdout
