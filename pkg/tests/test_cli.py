import csv
import os

import numpy as np
import pytest
import yaml

from fcgl import cli, config as config_mod, tensorops
from fcgl.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_NO_CONVERGENCE, EXIT_OK


def write_config(path, text):
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


BASE = """
problem: {{kind: example1, d: 2, n: 24}}
run: {{scheme: lbdf2, steps: {steps}, snapshot_times: [0.0, 1.0]}}
output: {{directory: {out}}}
"""


class TestSolve:
    def test_outputs_and_row_count(self, tmp_path):
        cfg = write_config(tmp_path / "run.yaml", BASE.format(steps=25, out=tmp_path / "out"))
        assert cli.run_cli(["solve", "--config", cfg]) == EXIT_OK
        rows = read_csv(tmp_path / "out" / "run.csv")
        assert rows[0] == ["step", "time", "error", "step_seconds"]
        assert len(rows) == 26
        for name in ("summary.txt", "effective_config.yaml",
                     "snapshot_t0.bin", "snapshot_t0.csv",
                     "snapshot_t1.bin", "snapshot_t1.csv"):
            assert (tmp_path / "out" / name).exists(), name

    def test_snapshot_zero_is_initial_state(self, tmp_path):
        cfg = write_config(tmp_path / "run.yaml", BASE.format(steps=5, out=tmp_path / "out"))
        cli.run_cli(["solve", "--config", cfg])
        from fcgl.problem import example1_setup
        state = tensorops.read_tensor(tmp_path / "out" / "snapshot_t0.bin")
        np.testing.assert_array_equal(state, example1_setup(2, 24).u0)

    def test_determinism_everything_but_timing(self, tmp_path):
        cfg1 = write_config(tmp_path / "a.yaml", BASE.format(steps=8, out=tmp_path / "o1"))
        cfg2 = write_config(tmp_path / "b.yaml", BASE.format(steps=8, out=tmp_path / "o2"))
        cli.run_cli(["solve", "--config", cfg1])
        cli.run_cli(["solve", "--config", cfg2])
        rows1 = read_csv(tmp_path / "o1" / "run.csv")
        rows2 = read_csv(tmp_path / "o2" / "run.csv")
        nontiming1 = [row[:3] for row in rows1]
        nontiming2 = [row[:3] for row in rows2]
        assert nontiming1 == nontiming2

    def test_effective_config_round_trip(self, tmp_path):
        cfg = write_config(tmp_path / "run.yaml", BASE.format(steps=6, out=tmp_path / "out"))
        cli.run_cli(["solve", "--config", cfg])
        echoed = tmp_path / "out" / "effective_config.yaml"
        resolved = config_mod.resolve_config(yaml.safe_load(echoed.read_text()))
        rerun_dir = tmp_path / "out2"
        resolved["output"]["directory"] = str(rerun_dir)
        (tmp_path / "echo.yaml").write_text(config_mod.dump_config(resolved))
        cli.run_cli(["solve", "--config", str(tmp_path / "echo.yaml")])
        first = [r[:3] for r in read_csv(tmp_path / "out" / "run.csv")]
        second = [r[:3] for r in read_csv(rerun_dir / "run.csv")]
        assert first == second

    def test_precision_override(self, tmp_path):
        cfg = write_config(tmp_path / "run.yaml", BASE.format(steps=4, out=tmp_path / "out"))
        assert cli.run_cli(["solve", "--config", cfg, "--precision", "single"]) == EXIT_OK
        summary = (tmp_path / "out" / "summary.txt").read_text()
        assert "precision = single" in summary


class TestExitCodes:
    def test_missing_file(self):
        assert cli.run_cli(["solve", "--config", "/nonexistent.yaml"]) == EXIT_CONFIG

    def test_unknown_key(self, tmp_path):
        cfg = write_config(tmp_path / "run.yaml", "problem: {kind: example1, banana: 3}\n")
        assert cli.run_cli(["solve", "--config", cfg]) == EXIT_CONFIG

    def test_unknown_section(self, tmp_path):
        cfg = write_config(tmp_path / "run.yaml", "problems: {kind: example1}\n")
        assert cli.run_cli(["solve", "--config", cfg]) == EXIT_CONFIG

    def test_bad_scheme_value(self, tmp_path):
        cfg = write_config(tmp_path / "run.yaml", "run: {scheme: euler}\n")
        assert cli.run_cli(["solve", "--config", cfg]) == EXIT_CONFIG

    def test_blow_up_exit(self, tmp_path):
        text = f"""
problem:
  kind: custom
  n: 6
  nu: 1.0
  eta: 0.0
  gamma: 2000.0
  kappa: 1.0e-280
  zeta: 0.0
  alphas: [1.5, 1.5]
  domain: [[-1.0, 1.0], [-1.0, 1.0]]
  final_time: 1.0
run: {{scheme: strang, steps: 2}}
output: {{directory: {tmp_path / "out"}}}
"""
        cfg = write_config(tmp_path / "run.yaml", text)
        with np.errstate(over="ignore", invalid="ignore"):
            assert cli.run_cli(["solve", "--config", cfg]) == EXIT_BLOWUP

    def test_strang_with_source_is_config_error(self, tmp_path):
        text = f"""
problem: {{kind: example1, d: 2, n: 16}}
run: {{scheme: strang, steps: 4}}
output: {{directory: {tmp_path / "out"}}}
"""
        cfg = write_config(tmp_path / "run.yaml", text)
        assert cli.run_cli(["solve", "--config", cfg]) == EXIT_CONFIG

    def test_non_convergence_exit(self, tmp_path):
        text = f"""
problem: {{kind: example1, d: 2, n: 24}}
run: {{scheme: lbdf2, steps: 3, engine: iterative_baseline}}
solver: {{tol: 1.0e-14, maxit: 1}}
output: {{directory: {tmp_path / "out"}}}
"""
        cfg = write_config(tmp_path / "run.yaml", text)
        assert cli.run_cli(["solve", "--config", cfg]) == EXIT_NO_CONVERGENCE


class TestConvergence:
    def test_exact_mode_fits_order_two(self, tmp_path, capsys):
        text = f"""
problem: {{kind: example1, d: 2, n: 32}}
run: {{scheme: lbdf2, steps: 25}}
convergence: {{steps_list: [10, 20, 40]}}
output: {{directory: {tmp_path / "out"}}}
"""
        cfg = write_config(tmp_path / "run.yaml", text)
        assert cli.run_cli(["convergence", "--config", cfg]) == EXIT_OK
        out = capsys.readouterr().out
        assert "fitted order" in out
        rows = read_csv(tmp_path / "out" / "convergence.csv")
        assert rows[0] == ["steps", "tau", "error", "total_seconds"]
        assert len(rows) == 4
        order = float((tmp_path / "out" / "summary.txt").read_text()
                      .split("fitted_order = ")[1].splitlines()[0])
        assert abs(order - 2.0) < 0.15

    def test_needs_three_points(self, tmp_path):
        text = f"""
problem: {{kind: example1, d: 2, n: 16}}
convergence: {{steps_list: [10, 20]}}
output: {{directory: {tmp_path / "out"}}}
"""
        cfg = write_config(tmp_path / "run.yaml", text)
        assert cli.run_cli(["convergence", "--config", cfg]) == EXIT_CONFIG

    def test_self_mode_for_example2(self, tmp_path):
        text = f"""
problem: {{kind: example2, d: 2, n: 24}}
run: {{scheme: strang, steps: 8}}
convergence: {{steps_list: [4, 8, 16], reference_factor: 4}}
output: {{directory: {tmp_path / "out"}}}
"""
        cfg = write_config(tmp_path / "run.yaml", text)
        assert cli.run_cli(["convergence", "--config", cfg]) == EXIT_OK
        summary = (tmp_path / "out" / "summary.txt").read_text()
        assert "mode = self" in summary


class TestBench:
    def test_speedup_table(self, tmp_path, capsys):
        text = f"""
problem: {{kind: example1, d: 2, n: 24}}
run: {{scheme: lbdf2, steps: 6}}
output: {{directory: {tmp_path / "out"}}}
"""
        cfg = write_config(tmp_path / "run.yaml", text)
        assert cli.run_cli(["bench", "--config", cfg]) == EXIT_OK
        rows = read_csv(tmp_path / "out" / "bench.csv")
        assert rows[0][0] == "scheme"
        assert len(rows) == 2
        assert float(rows[1][7]) > 0.0

    def test_identical_engines_speedup_near_one(self, tmp_path):
        text = f"""
problem: {{kind: example1, d: 2, n: 32}}
run: {{scheme: lbdf2, steps: 30}}
bench: {{engines: [spectral, spectral]}}
output: {{directory: {tmp_path / "out"}}}
"""
        cfg = write_config(tmp_path / "run.yaml", text)
        assert cli.run_cli(["bench", "--config", cfg, "--warmup"]) == EXIT_OK
        rows = read_csv(tmp_path / "out" / "bench.csv")
        speedup = float(rows[1][7])
        assert 0.3 <= speedup <= 3.0  # identical work modulo timing noise

    def test_bad_engines_pair(self, tmp_path):
        text = "bench: {engines: [spectral]}\n"
        cfg = write_config(tmp_path / "run.yaml", text)
        assert cli.run_cli(["bench", "--config", cfg]) == EXIT_CONFIG


class TestCoeffs:
    def test_stdout_listing(self, capsys):
        assert cli.run_cli(["coeffs", "--alpha", "2.0", "--fd-order", "2", "--n", "4"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "0,2" in out and "1,-1" in out
        assert "max eigenvalue" in out

    def test_coefficient_signs(self, capsys):
        cli.run_cli(["coeffs", "--alpha", "1.5", "--n", "10"])
        out = capsys.readouterr().out
        lines = [l for l in out.splitlines() if "," in l and not l.startswith("#")]
        gvals = [float(l.split(",")[1]) for l in lines[1:11]]
        assert gvals[0] > 0 and all(g < 0 for g in gvals[1:])

    def test_bad_alpha(self, capsys):
        assert cli.run_cli(["coeffs", "--alpha", "0.5"]) == EXIT_CONFIG

    def test_csv_output(self, tmp_path):
        assert cli.run_cli(["coeffs", "--alpha", "1.5", "--n", "6",
                            "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "coeffs.csv").exists()
        assert (tmp_path / "spectrum.csv").exists()
        spec_rows = read_csv(tmp_path / "spectrum.csv")
        assert all(float(r[1]) < 0 for r in spec_rows[1:])


def test_launcher_peeks_threads(monkeypatch):
    import fcgl_cli
    assert fcgl_cli._peek_threads(["solve", "--threads", "2"]) == "2"
    assert fcgl_cli._peek_threads(["solve", "--threads=3"]) == "3"
    assert fcgl_cli._peek_threads(["solve"]) is None
