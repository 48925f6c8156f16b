import subprocess
import sys

import numpy as np
import pytest

from qavkdv.cli import main
from qavkdv.experiments import read_csv


def test_solitons3(tmp_path, capsys):
    out = tmp_path / "s3.csv"
    rc = main(["solitons3", "--t-final", "0.5", "--out", str(out), "--gnuplot"])
    assert rc == 0
    rows = read_csv(out)
    assert len(rows) == 6
    for suffix in ("_energy.dat", "_mass.dat", "_momentum.dat", "_profile.dat", ".gp"):
        assert (tmp_path / f"s3{suffix}").exists()
    assert "max relative energy error" in capsys.readouterr().out


def test_twosoliton(tmp_path):
    out = tmp_path / "two.csv"
    assert main(["twosoliton", "--t-final", "0.1", "--record-every", "5", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [int(r["step"]) for r in rows] == [0, 5, 10, 15, 20]
    assert any(float(r["lambda_eip"]) != 0.0 for r in rows[1:])


def test_bimodal(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bimodal", "--case", "IV", "--t-final", "0.02", "--seed", "4", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 2


def test_run_config(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nscheme = grk_2\ndt = 0.05\nt_final = 0.1\n[domain]\nn = 64\n")
    out = tmp_path / "r.csv"
    assert main(["run", str(cfg), "--out", str(out), "--scheme", "avf"]) == 0
    assert len(read_csv(out)) == 3


def test_configuration_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nbogus = 1\n")
    assert main(["run", str(cfg)]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["solitons3", "--dt", "0.3", "--t-final", "1", "--out", str(tmp_path / "x.csv")]) == 2


def test_divergence_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\ndt = 0.5\nt_final = 1\n[domain]\nn = 128\na = -20\nb = 20\n"
                   "[initial]\nc = 40\n[solver]\nmax_iter = 500\n")
    with np.errstate(all="ignore"):
        assert main(["run", str(cfg), "--out", str(tmp_path / "d.csv")]) == 3
    assert "diverged" in capsys.readouterr().err


def test_accuracy(tmp_path, capsys):
    rc = main(["accuracy", "--axis", "both", "--scheme", "qav_eprk_2", "--levels", "0.2", "0.1",
               "--space-levels", "64", "96", "--t-final", "0.2", "--out", str(tmp_path / "acc"), "--gnuplot"])
    assert rc == 0
    for name in ("time_qav_eprk_2.csv", "time_qav_eprk_2.dat", "space.csv", "space.dat", "accuracy.gp"):
        assert (tmp_path / "acc" / name).exists()
    assert "orders" in capsys.readouterr().out


def test_bad_flag_value():
    with pytest.raises(SystemExit):
        main(["solitons3", "--eip", "maybe"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qavkdv", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "accuracy" in proc.stdout
