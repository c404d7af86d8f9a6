import json
import subprocess
import sys

import pytest

from stokeslfa.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_smooth_optimal(capsys):
    code, out, _ = run(capsys, "smooth", "--disc", "posd", "--scheme", "dwj1", "--optimal")
    assert code == 0
    assert "55/89" in out
    assert "mu = 0.61" in out


def test_smooth_with_parameters_and_csv(capsys, tmp_path):
    path = tmp_path / "mu.csv"
    code, out, _ = run(
        capsys, "smooth", "--disc", "prsd", "--scheme", "bsr", "--alpha", "1", "--omega", "0.888888889", "--out", str(path)
    )
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# command=smooth disc=prsd")
    assert lines[1] == "mu,theta1,theta2"
    assert abs(float(lines[2].split(",")[0]) - 1 / 3) < 5e-3


def test_twogrid(capsys):
    code, out, _ = run(capsys, "twogrid", "--disc", "posd", "--scheme", "bsr", "--alpha", "1", "--omega", "0.8888888889")
    assert code == 0
    assert "rho = 0.111" in out


def test_twogrid_sweep_to_stdout(capsys):
    code, out, _ = run(
        capsys, "twogrid", "--disc", "posd", "--scheme", "bsr", "--samples", "16",
        "--sweep", "alpha,omega", "--range1", "0.9:1.1:0.1", "--range2", "0.8,0.9",
    )
    assert code == 0
    rows = [line for line in out.splitlines() if line and not line.startswith("#")]
    assert rows[0] == "alpha,omega,rho"
    assert len(rows) == 1 + 3 * 2


def test_twogrid_spectrum(capsys, tmp_path):
    path = tmp_path / "spec.csv"
    code, _, _ = run(
        capsys, "twogrid", "--disc", "q2q1", "--scheme", "bsr", "--alpha", "1.1", "--omega", "1.05",
        "--samples", "8", "--spectrum", str(path),
    )
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[1] == "theta1,theta2,real,imag"
    # 15 non-constant low frequencies, 36 eigenvalues each
    assert len(lines) == 2 + 15 * 36


def test_optimize_small_grid(capsys, tmp_path):
    path = tmp_path / "opt.csv"
    code, out, _ = run(
        capsys, "optimize", "--disc", "posd", "--scheme", "bsr", "--objective", "smoothing",
        "--grid", "alpha=0.9:1.1:0.1", "omega=0.8:1.0:0.1", "--samples", "32", "--out", str(path),
    )
    assert code == 0
    assert "smoothing factor" in out
    assert path.read_text().splitlines()[1] == "alpha,omega,factor"


def test_solve(capsys):
    code, out, _ = run(capsys, "solve", "--disc", "posd", "--scheme", "bsr", "--alpha", "1", "--omega", "0.8888889",
                       "--n", "8", "--k", "10", "--cycle", "W")
    assert code == 0
    assert "n=8 W(1,1) rho_hat=0." in out
    assert "rho_lfa=0.111" in out


def test_solve_from_config(capsys, tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"id": "c", "disc": "prsd", "scheme": {"kind": "dwj2", "alpha1": 1.5, "omega": 1.3333},
                               "cycles": [[1, 1]], "n": [8], "k": 5}))
    out_csv = tmp_path / "res.csv"
    code, out, _ = run(capsys, "solve", "--config", str(cfg), "--no-lfa", "--out", str(out_csv))
    assert code == 0
    assert out.startswith("c,8,W,1,1,")
    assert out_csv.read_text().splitlines()[0].startswith("experiment,n,cycle")


def test_solve_overflow_exits_one(capsys):
    code, out, _ = run(capsys, "solve", "--disc", "posd", "--scheme", "bsr", "--omega", "3", "--n", "8", "--k", "400",
                       "--no-lfa")
    assert code == 1
    assert "NAN" in out and "DIVERGED" in out


def test_tables_list(capsys):
    code, out, _ = run(capsys, "tables", "list")
    assert code == 0
    assert "posd-dwj-w" in out and "q2q1-ibsr3" in out


def test_lfa_table(capsys, tmp_path):
    path = tmp_path / "t.csv"
    code, out, _ = run(capsys, "table", "posd-ibsr-lfa", "--samples", "32", "--out", str(path))
    assert code == 0
    assert "mu=" in out and "rho=" in out
    assert path.read_text().splitlines()[1] == "label,params,mu,mu_ref,rho,rho_ref"


@pytest.mark.parametrize(
    "argv",
    [
        ["smooth", "--disc", "posd", "--scheme", "bsr", "--sigma", "0.3"],
        ["smooth", "--disc", "q2q1", "--scheme", "bsr", "--optimal"],
        ["smooth", "--disc", "posd", "--scheme", "bsr", "--omega", "-1"],
        ["table", "no-such-table"],
        ["solve", "--n", "8"],
        ["optimize", "--disc", "posd", "--scheme", "bsr", "--grid", "alpha=1:0.5:0.1"],
        ["twogrid", "--disc", "posd", "--scheme", "bsr", "--sweep", "alpha"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "usage:" in err and "error:" in err


def test_argparse_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["smooth", "--disc", "mac", "--scheme", "bsr"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "stokeslfa", "tables", "list"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "prsd-bsr-w" in proc.stdout
