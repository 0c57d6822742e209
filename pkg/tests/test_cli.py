import csv
import io

import numpy as np
import pytest
from click.testing import CliRunner

from lmg import __version__
from lmg.cli import main
from lmg.experiments import SCHEMA
from lmg.spin_algebra import build_spin_operators
from lmg.thermal import rescaled_hamiltonian


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    result = CliRunner().invoke(main, [*args, "--out", str(out)])
    return result, out


def read_table(path):
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return header, list(csv.DictReader(io.StringIO("\n".join(body))))


def test_figure1_rows_and_zero_set(tmp_path):
    result, out = run(tmp_path, "figure1", "--set", "n_eps=101")
    assert result.exit_code == 0, result.output
    _, rows = read_table(out)
    assert len(rows) == 2 * 101
    for lam, zeros in ((0.5, [-1.0, 1.0]), (2.0, [-1.25, 1.0])):
        sel = [r for r in rows if float(r["lambda"]) == lam]
        eps = np.array([float(r["epsilon"]) for r in sel])
        a = np.array([float(r["A"]) for r in sel])
        assert eps[0] == pytest.approx(zeros[0]) and eps[-1] == 1.0
        assert np.all(a >= -1e-12)
        assert set(eps[a < 1e-8]) == set(zeros)


def test_header_echoes_every_key_and_version(tmp_path):
    _, out = run(tmp_path, "figure1", "--set", "n_eps=3")
    header, _ = read_table(out)
    assert header[0] == f"# lmg {__version__}"
    assert "# experiment = figure1" in header
    for key in SCHEMA:
        assert any(line.startswith(f"# {key} = ") for line in header)
    assert "# n_eps = 3" in header


def test_output_is_byte_identical_across_runs(tmp_path):
    args = ("slowflow", "--set", "n_t=11", "--set", "gamma_t_max=5")
    _, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_set_overrides_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nlambda = 2\nn_eps = 7\n")
    result, out = run(tmp_path, "figure1", "--config", str(cfg), "--set", "n_eps=5")
    assert result.exit_code == 0, result.output
    header, rows = read_table(out)
    assert "# n_eps = 5" in header and "# lambda = 2" in header
    assert len(rows) == 5


def test_unknown_key_is_config_error(tmp_path):
    result, out = run(tmp_path, "figure1", "--set", "lamda=2")
    assert result.exit_code == 2
    assert "lamda" in result.output
    assert not out.exists()


@pytest.mark.parametrize(
    "override", ["gamma=-1", "n_t=1", "ttilde=0", "form=lindblad", "beta_tilde=0", "lambda=", "omega_c=-3", "s=1.3"]
)
def test_bad_values_are_config_errors(tmp_path, override):
    result, _ = run(tmp_path, "figure2", "--set", override)
    assert result.exit_code == 2, result.output


def test_malformed_set_and_missing_config(tmp_path):
    assert run(tmp_path, "figure1", "--set", "novalue")[0].exit_code == 2
    assert run(tmp_path, "figure1", "--config", str(tmp_path / "missing.cfg"))[0].exit_code == 2
    sectioned = tmp_path / "s.cfg"
    sectioned.write_text("[extra]\nlambda = 2\n")
    assert run(tmp_path, "figure1", "--config", str(sectioned))[0].exit_code == 2


def test_unwritable_output_is_io_error(tmp_path):
    result = CliRunner().invoke(main, ["figure1", "--set", "n_eps=3", "--out", str(tmp_path / "no" / "dir.csv")])
    assert result.exit_code == 4


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    from lmg import experiments
    from lmg.errors import IntegrationError

    def boom(cfg):
        raise IntegrationError("step size underflow", 1.0)

    monkeypatch.setitem(experiments.DRIVERS, "figure1", boom)
    result, out = run(tmp_path, "figure1")
    assert result.exit_code == 3
    assert not out.exists()


def test_gap_scan_without_dissipation_has_zero_gap(tmp_path):
    result, out = run(tmp_path, "gap-scan", "--set", "gamma=0", "--set", "s_list=3,5", "--set", "lambda=0.5", "--set", "ttilde=1")
    assert result.exit_code == 0, result.output
    _, rows = read_table(out)
    assert len(rows) == 2
    assert all(abs(float(r["gap"])) < 1e-10 for r in rows)


def test_gap_scan_reports_positive_gaps_and_flatness(tmp_path):
    result, out = run(tmp_path, "gap-scan", "--set", "s_list=3,5,8", "--set", "lambda=0.5", "--set", "ttilde=1")
    assert result.exit_code == 0, result.output
    header, rows = read_table(out)
    assert all(float(r["gap"]) > 0 for r in rows)
    assert any("flatness" in line for line in header)


def test_figure2_series_converge_to_gibbs(tmp_path):
    result, out = run(tmp_path, "figure2", "--set", "s=6", "--set", "lambda=0.5", "--set", "n_t=13")
    assert result.exit_code == 0, result.output
    header, rows = read_table(out)
    labels = {(r["Ttilde"], r["label"]) for r in rows}
    assert len([lab for lab in labels if lab[1] != "gibbs"]) == 6
    assert len([lab for lab in labels if lab[1] == "gibbs"]) == 2
    assert all(r["converged"] == "1" for r in rows)
    assert not any("not converged" in line for line in header)


def test_figure2_high_temperature_reaches_maximally_mixed(tmp_path):
    result, out = run(tmp_path, "figure2", "--set", "s=4", "--set", "lambda=0.5", "--set", "ttilde=1000", "--set", "n_t=4")
    assert result.exit_code == 0, result.output
    _, rows = read_table(out)
    ops = build_spin_operators(4)
    mixed = np.trace(rescaled_hamiltonian(ops, 0.5)).real / ops.dim
    finals = [float(r["h"]) for r in rows if r["gamma_t"] == "60" and r["label"] != "gibbs"]
    assert len(finals) == 3
    assert all(abs(h - mixed) < 5e-3 for h in finals)


def test_stationarity_and_kernels_run(tmp_path):
    result, out = run(tmp_path, "stationarity", "--set", "s_list=4,8", "--set", "beta_tilde=1")
    assert result.exit_code == 0, result.output
    _, rows = read_table(out)
    assert len(rows) == 4 and all(float(r["residual"]) > 0 for r in rows)
    result, out = run(tmp_path, "kernels", "--set", "n_grid=5", "--set", "lambda=2")
    assert result.exit_code == 0, result.output
    assert len(read_table(out)[1]) == 15


def test_classical_matches_slow_flow(tmp_path):
    result, out = run(tmp_path, "classical", "--set", "lambda=0.5", "--set", "gamma=0.02", "--set", "gamma_t_max=4", "--set", "n_t=5")
    assert result.exit_code == 0, result.output
    _, rows = read_table(out)
    assert len(rows) == 15
    assert all(abs(float(r["h"]) - float(r["h_slowflow"])) < 0.05 for r in rows)
