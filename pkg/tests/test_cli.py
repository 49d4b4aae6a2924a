"""

Test CLI

Commands end to end on a tiny run config, exit statuses included.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import pytest
import yaml
from click.testing import CliRunner

from gaam.cli import cli
from gaam.attractor_diag import NoEntryError, RankDeficientError
from gaam.constants import EXIT_CHECK_FAILED, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE
from gaam.persistence import read_checkpoint, read_csv_table


#
# CONSTANTS
#
TINY_CONFIG = {
    "model.alpha": 2.0,
    "model.beta": 2.0,
    "model.gamma": 1.0,
    "model.delta": 1.0,
    "model.nu": 1.0,
    "model.dim": 2,
    "model.modes_per_axis": 16,
    "sim.dt": 0.002,
    "sim.t_end": 0.02,
    "sim.record_stride": 5,
    "force.kind": "random",
    "force.amplitude": 0.05,
    "force.seed": 1,
    "init.kind": "random",
    "init.amplitude": 1.0,
    "init.seed": 2,
}


#
# FIXTURES
#
@pytest.fixture
def runner():
    return CliRunner()


def _write_config(tmp_path, **overrides):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump({**TINY_CONFIG, **overrides}, sort_keys=False))
    return str(path)


@pytest.fixture
def tiny_config(tmp_path):
    return _write_config(tmp_path)


#
# TESTS - simulate
#
def test_simulate_writes_outputs(runner, tmp_path, tiny_config):
    """Test that simulate writes the trajectory, checkpoint and config."""
    out = tmp_path / "sim"
    result = runner.invoke(cli, ["simulate", "-c", tiny_config, "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    assert "✓ simulated 10 steps" in result.output
    rows = read_csv_table(out / "trajectory.csv")
    assert [row["step"] for row in rows] == ["0", "5", "10"]
    assert read_checkpoint(out / "final.gaam").t == pytest.approx(0.02)
    assert (out / "config.yaml").is_file()


def test_simulate_refuses_to_overwrite(runner, tmp_path, tiny_config):
    """Test that a second simulate into the same directory needs --force."""
    out = str(tmp_path / "sim")
    assert runner.invoke(cli, ["simulate", "-c", tiny_config, "--out", out]).exit_code == EXIT_OK
    result = runner.invoke(cli, ["simulate", "-c", tiny_config, "--out", out])
    assert result.exit_code == EXIT_CHECK_FAILED
    assert "already exists" in result.output
    assert runner.invoke(cli, ["simulate", "-c", tiny_config, "--out", out, "--force"]).exit_code == EXIT_OK


def test_unknown_config(runner, tmp_path):
    """Test the exit status for a config that cannot be found."""
    result = runner.invoke(cli, ["simulate", "-c", "no_such_config", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_USAGE
    assert "Config error" in result.output


def test_invalid_config_value(runner, tmp_path):
    """Test the exit status for an out-of-range parameter."""
    config = _write_config(tmp_path, **{"model.gamma": -1.0})
    result = runner.invoke(cli, ["simulate", "-c", config, "--out", str(tmp_path / "sim")])
    assert result.exit_code == EXIT_USAGE


#
# TESTS - stationary / verify / dim-bound
#
def test_stationary_zero_forcing(runner, tmp_path):
    """Test the stationary command on a zero forcing."""
    config = _write_config(tmp_path, **{"force.kind": "zero"})
    out = tmp_path / "stat"
    result = runner.invoke(cli, ["stationary", "-c", config, "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    assert "asymptotic" in result.output
    document = yaml.safe_load((out / "stationary.yaml").read_text())
    assert document["smallness"]["verdict"] == "asymptotic"
    assert document["solution"]["residual_l2"] == 0.0
    assert not read_checkpoint(out / "stationary.gaam").field.coefficients.any()


def test_verify_energy(runner, tmp_path, tiny_config):
    """Test the energy suite end to end."""
    out = tmp_path / "verify"
    result = runner.invoke(cli, ["verify", "-c", tiny_config, "--suite", "energy", "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    assert "✓ energy_inequality" in result.output
    document = yaml.safe_load((out / "verify_energy.yaml").read_text())
    assert document["passed"] is True
    assert [check["name"] for check in document["checks"]] == ["energy_inequality", "continuity_in_data"]


def test_verify_absorbing_default(runner, tmp_path):
    """The packaged default run enters the absorbing ball in time."""
    out = tmp_path / "verify"
    result = runner.invoke(cli, ["verify", "-c", "default", "-s", "absorbing", "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    assert "✓ absorbing_entry" in result.output
    assert (out / "verify_absorbing.yaml").is_file()


def test_lyapunov(runner, tmp_path):
    """The lyapunov command runs the trace and tangent checks on the default run."""
    out = tmp_path / "lyapunov"
    result = runner.invoke(cli, ["lyapunov", "-c", "default", "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    document = yaml.safe_load((out / "verify_lyapunov.yaml").read_text())
    assert document["suite"] == "lyapunov"
    assert document["checks"][-1]["name"] == "tangent_taylor"


def test_verify_rejects_unknown_suite(runner, tiny_config):
    """Test that click rejects an unknown suite name."""
    result = runner.invoke(cli, ["verify", "-c", tiny_config, "--suite", "bogus"])
    assert result.exit_code == 2


def test_dim_bound(runner, tiny_config):
    """Test the constants printed by dim-bound."""
    result = runner.invoke(cli, ["dim-bound", "-c", tiny_config])
    assert result.exit_code == EXIT_OK, result.output
    assert "C_LT: 1.09" in result.output
    assert "hypotheses_hold: True" in result.output


def test_dim_bound_strict_outside_hypotheses(runner, tmp_path):
    """Test that --strict outside the hypotheses is a usage error."""
    config = _write_config(tmp_path, **{"model.alpha": 0.5, "model.beta": 1.0})
    result = runner.invoke(cli, ["dim-bound", "-c", config, "--strict"])
    assert result.exit_code == EXIT_USAGE


#
# TESTS - sweep
#
def test_sweep(runner, tmp_path, tiny_config):
    """A one-cell sweep over the tiny run writes its table, report and cell directory."""
    sweep_path = tmp_path / "sweep.yaml"
    sweep_path.write_text(yaml.safe_dump(
        {"base": tiny_config, "verify.starts": 2, "sweep.model.gamma": [2.0]}, sort_keys=False))
    out = tmp_path / "sweep_out"
    result = runner.invoke(cli, ["sweep", str(sweep_path), "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    assert "✓ swept 1 cells (0 with errors)" in result.output
    rows = read_csv_table(out / "sweep.csv")
    assert len(rows) == 1
    assert float(rows[0]["gamma"]) == 2.0
    assert rows[0]["error"] == ""
    assert (out / "sweep.yaml").is_file()
    assert (out / "cell_000" / "stationary.gaam").is_file()


def test_sweep_unknown_config(runner, tmp_path):
    """An unknown sweep config is a usage error."""
    result = runner.invoke(cli, ["sweep", "no_such_sweep", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_USAGE


#
# TESTS - exit statuses
#
@pytest.mark.parametrize("error, code, label", [
    (RankDeficientError("family of 4 fields has rank 3"), EXIT_NUMERICAL, "Rank-deficient"),
    (NoEntryError("trajectory never entered the absorbing ball"), EXIT_CHECK_FAILED, "Check failed"),
])
def test_diagnostic_errors_map_to_exit_status(runner, monkeypatch, tiny_config, error, code, label):
    """Rank-deficient families are numerical faults and a missed absorbing ball is a failed check."""
    def fail(cfg, strict=False):
        raise error

    monkeypatch.setattr("gaam.cli.cmd_dim_bound", fail)
    result = runner.invoke(cli, ["dim-bound", "-c", tiny_config])
    assert result.exit_code == code
    assert label in result.output

#
# TESTS - listing
#
def test_list(runner, monkeypatch, tmp_path):
    """Test listing of packaged run and sweep configs."""
    monkeypatch.chdir(tmp_path)
    result = runner.invoke(cli, ["list"])
    assert result.exit_code == 0
    assert "Run Configurations:" in result.output
    assert "bardina" in result.output
    assert "Sweep Configurations:" in result.output
    assert "demo" in result.output
