"""
Tests for the command line interface
"""
import pytest
from click.testing import CliRunner

from app.cli import cli
from app.services.analysis import write_data_points
from app.services.qasm import parse_qasm
from app.services.verifier import planted_points

WORKED_TEXT = "# worked example\n5 6\n101001\n010101\n011100\n011010\n110001\n"

SMALL_GRID_YAML = (
    "alpha_c_min: 0.90\nalpha_c_max: 0.94\nalpha_c_step: 0.01\n"
    "nu_min: 2.0\nnu_max: 3.0\nnu_step: 0.25\n"
)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def matrix_file(tmp_path):
    path = tmp_path / "worked.txt"
    path.write_text(WORKED_TEXT, encoding="utf-8")
    return str(path)


class TestCompileCommand:
    def test_reports_counts(self, runner, matrix_file):
        result = runner.invoke(cli, ["compile", "--matrix", matrix_file, "--naive"])
        assert result.exit_code == 0
        assert "rank=5" in result.stdout
        assert "cnot=75" in result.stdout

    def test_qasm_to_stdout_keeps_stats_on_stderr(self, runner, matrix_file):
        result = runner.invoke(cli, ["compile", "--matrix", matrix_file, "--emit-qasm"])
        assert result.exit_code == 0
        assert result.stdout.startswith("OPENQASM 2.0;")
        assert "rank=5" in result.stderr
        assert parse_qasm(result.stdout).n_qubits == 11

    def test_qasm_to_file(self, runner, matrix_file, tmp_path):
        out = tmp_path / "c.qasm"
        result = runner.invoke(cli, ["compile", "--matrix", matrix_file, "--emit-qasm", "--output", str(out)])
        assert result.exit_code == 0
        assert parse_qasm(out.read_text(encoding="utf-8")).optimized

    def test_bad_matrix(self, runner, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 3\n101\n", encoding="utf-8")
        result = runner.invoke(cli, ["compile", "--matrix", str(path)])
        assert result.exit_code == 1
        assert "Error" in result.output


class TestSweepCommand:
    def test_writes_run_directory(self, runner, tmp_path):
        config = tmp_path / "sweep.yaml"
        config.write_text("L: [6]\nmatrices: 3\nmatrices_overrides: {}\nseed: 4\n", encoding="utf-8")
        result = runner.invoke(cli, ["sweep", "--config", str(config), "--output", str(tmp_path / "out"), "--quiet"])
        assert result.exit_code == 0, result.output
        run_dirs = list((tmp_path / "out").iterdir())
        assert len(run_dirs) == 1
        assert run_dirs[0].name.endswith("-seed4")
        assert (run_dirs[0] / "data_points.csv").exists()

    def test_invalid_config(self, runner, tmp_path):
        config = tmp_path / "sweep.yaml"
        config.write_text("L: [3]\n", encoding="utf-8")
        result = runner.invoke(cli, ["sweep", "--config", str(config)])
        assert result.exit_code == 1
        assert "L" in result.output


class TestCollapseCommand:
    def test_report_and_surface(self, runner, tmp_path):
        data = write_data_points(str(tmp_path / "points.csv"), planted_points(sizes=(8, 16)))
        grid = tmp_path / "grid.yaml"
        grid.write_text(SMALL_GRID_YAML, encoding="utf-8")
        result = runner.invoke(cli, [
            "collapse", "--data", data, "--grid", str(grid),
            "--surface", str(tmp_path / "surface.csv"), "--report", str(tmp_path / "fit.txt"),
        ])
        assert result.exit_code == 0, result.output
        assert "alpha_c =" in result.stdout
        assert (tmp_path / "surface.csv").exists()
        assert (tmp_path / "fit.txt").read_text(encoding="utf-8") == result.stdout

    def test_collapsed_curve_option(self, runner, tmp_path):
        data = write_data_points(str(tmp_path / "points.csv"), planted_points(sizes=(8, 16)))
        grid = tmp_path / "grid.yaml"
        grid.write_text(SMALL_GRID_YAML, encoding="utf-8")
        collapsed = tmp_path / "out" / "collapsed.csv"
        result = runner.invoke(cli, ["collapse", "--data", data, "--grid", str(grid), "--collapsed", str(collapsed)])
        assert result.exit_code == 0, result.output
        assert collapsed.read_text(encoding="utf-8").splitlines()[0] == "L,alpha,t,q_mean,stderr"

    def test_degenerate_data(self, runner, tmp_path):
        points = [p for p in planted_points(sizes=(8,))]
        data = write_data_points(str(tmp_path / "points.csv"), points)
        result = runner.invoke(cli, ["collapse", "--data", data])
        assert result.exit_code == 1
        assert "two system sizes" in result.output


@pytest.mark.slow
class TestVerifyCommand:
    def test_quick_suite_passes(self, runner):
        result = runner.invoke(cli, ["verify", "--quick"])
        assert result.exit_code == 0, result.output
        assert "FAIL" not in result.output
        assert result.output.count("PASS") == 6
