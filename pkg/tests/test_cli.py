"""Command-line client: workflows, output files, and exit-code discipline."""
import json

import pytest
from click.testing import CliRunner

from stochpath.cli import main
from stochpath.errors import EXIT_DATA, EXIT_IO, EXIT_USAGE

REF_FLAGS = [
    "--mu", "0.513", "--kappa", "0.00979", "--theta", "-0.09228",
    "--sigma-v", "0.03", "--rho", "0.00165", "--v0", "0.0009", "--x0", "67.20",
]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def prices_csv(tmp_path):
    rows = ["date,close"] + [f"2021-01-{d:02d},{67.0 + 0.1 * d:.2f}"
                             for d in range(1, 29)]
    f = tmp_path / "prices.csv"
    f.write_text("\n".join(rows) + "\n")
    return str(f)


class TestEstimate:
    def test_minimal_two_row_csv(self, runner, tmp_path):
        f = tmp_path / "two.csv"
        f.write_text("date,close\n2021-03-11,67.50\n2021-03-12,67.20\n")
        r = runner.invoke(main, ["estimate", str(f)])
        assert r.exit_code == 0
        assert "sigma    0" in r.output
        assert "skipped" in r.output and "30" in r.output  # heston refused

    def test_constant_prices_report_zero_sigma(self, runner, tmp_path):
        f = tmp_path / "const.csv"
        rows = ["date,close"] + [f"2021-01-{d:02d},50.00" for d in range(1, 20)]
        f.write_text("\n".join(rows) + "\n")
        r = runner.invoke(main, ["estimate", str(f)])
        assert r.exit_code == 0
        assert "sigma    0" in r.output

    def test_json_format(self, runner, prices_csv):
        r = runner.invoke(main, ["estimate", prices_csv, "--format", "json",
                                 "--no-heston"])
        assert r.exit_code == 0
        body = json.loads(r.output)
        assert body["gbm"]["x0"] == pytest.approx(69.8)

    def test_data_error_exit_code(self, runner, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("date,close\n2021-03-11,-5\n")
        r = runner.invoke(main, ["estimate", str(f)])
        assert r.exit_code == EXIT_DATA

    def test_missing_file_is_io_error(self, runner, tmp_path):
        r = runner.invoke(main, ["estimate", str(tmp_path / "nope.csv")])
        assert r.exit_code == EXIT_IO


class TestSimulate:
    def test_deterministic_output_files(self, runner, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["simulate", "--model", "heston", *REF_FLAGS,
                "--n-paths", "2000", "--seed", "11", "--raw"]
        assert runner.invoke(main, args + ["-o", str(out1)]).exit_code == 0
        assert runner.invoke(main, args + ["-o", str(out2)]).exit_code == 0
        assert out1.read_bytes() == out2.read_bytes()
        body = json.loads(out1.read_text())
        assert body["config"]["seed"] == 11
        assert body["params"]["theta"] == -0.09228

    def test_sigma_zero_override_degenerate(self, runner):
        r = runner.invoke(main, ["simulate", "--model", "gbm", "--scheme", "exact",
                                 "--mu", "0.513", "--sigma", "0", "--x0", "67.20",
                                 "--n-paths", "50"])
        assert r.exit_code == 0
        body = json.loads(r.output)
        assert body["summary"]["terminal_std"] == 0.0
        assert body["summary"]["terminal_min"] == body["summary"]["terminal_max"]

    def test_r_is_an_alias_for_mu(self, runner):
        a = runner.invoke(main, ["simulate", "--model", "gbm", "--r", "0.513",
                                 "--sigma", "0", "--x0", "67.20", "--n-paths", "2"])
        b = runner.invoke(main, ["simulate", "--model", "gbm", "--mu", "0.513",
                                 "--sigma", "0", "--x0", "67.20", "--n-paths", "2"])
        assert a.exit_code == b.exit_code == 0
        assert a.output == b.output

    def test_calibrated_run_with_override(self, runner, prices_csv, tmp_path):
        out = tmp_path / "out.json"
        r = runner.invoke(main, ["simulate", "--model", "gbm", "--input", prices_csv,
                                 "--sigma", "0.25", "--n-paths", "100",
                                 "-o", str(out)])
        assert r.exit_code == 0
        body = json.loads(out.read_text())
        assert body["params"]["sigma"] == 0.25          # explicit flag wins
        assert body["params"]["x0"] == pytest.approx(69.8)  # calibrated

    def test_incompatible_scheme_usage_error(self, runner):
        r = runner.invoke(main, ["simulate", "--model", "heston",
                                 "--scheme", "exact", *REF_FLAGS])
        assert r.exit_code == EXIT_USAGE

    def test_missing_params_usage_error(self, runner):
        r = runner.invoke(main, ["simulate", "--model", "heston", "--mu", "0.1"])
        assert r.exit_code == EXIT_USAGE
        assert "missing" in r.output

    def test_csv_format_and_paths_dump(self, runner, tmp_path):
        out = tmp_path / "out.csv"
        dump = tmp_path / "paths.csv"
        r = runner.invoke(main, ["simulate", "--model", "gbm", "--mu", "0.1",
                                 "--sigma", "0.2", "--x0", "100",
                                 "--n-paths", "20", "--n-steps", "3",
                                 "--horizon", "0.5", "--format", "csv",
                                 "-o", str(out), "--paths-out", str(dump)])
        assert r.exit_code == 0
        header = out.read_text().splitlines()[0]
        assert "terminal_min" in header and "seed" in header
        assert len(dump.read_text().strip().splitlines()) == 1 + 20 * 4

    def test_terminal_only_dump(self, runner, tmp_path):
        dump = tmp_path / "terminals.csv"
        r = runner.invoke(main, ["simulate", "--model", "gbm", "--mu", "0.1",
                                 "--sigma", "0.2", "--x0", "100",
                                 "--n-paths", "25", "--n-steps", "4",
                                 "--horizon", "0.5",
                                 "--paths-out", str(dump), "--terminal-only"])
        assert r.exit_code == 0
        assert len(dump.read_text().strip().splitlines()) == 1 + 25


class TestCompare:
    def test_bypass_mode_reproduces_reference_errors(self, runner):
        r = runner.invoke(main, ["compare",
                                 "--heston-range", "67.2098", "68.2224",
                                 "--gbm-range", "67.2987", "68.1559",
                                 "--exact-low", "67.20", "--exact-high", "68.22"])
        assert r.exit_code == 0
        assert "0.0098" in r.output and "0.0024" in r.output
        assert "0.0987" in r.output and "0.0641" in r.output

    def test_zero_errors_when_ranges_match(self, runner):
        r = runner.invoke(main, ["compare",
                                 "--heston-range", "67.20", "68.22",
                                 "--gbm-range", "67.20", "68.22",
                                 "--exact-low", "67.20", "--exact-high", "68.22"])
        assert r.exit_code == 0
        assert "0.0000" in r.output

    def test_missing_exact_range_usage_error(self, runner):
        r = runner.invoke(main, ["compare", *REF_FLAGS, "--sigma", "0.03"])
        assert r.exit_code == EXIT_USAGE
        assert "exact" in r.output

    def test_simulated_comparison_structure(self, runner):
        r = runner.invoke(main, ["compare", *REF_FLAGS, "--sigma", "0.03",
                                 "--n-paths", "2000",
                                 "--exact-low", "67.20", "--exact-high", "68.22",
                                 "--format", "json"])
        assert r.exit_code == 0
        body = json.loads(r.output)
        assert set(body) >= {"exact_low", "exact_high", "heston", "gbm",
                             "seed", "coupled"}
        for model in ("heston", "gbm"):
            assert set(body[model]) >= {"simulated_low", "simulated_high",
                                        "abs_error_low", "abs_error_high", "width"}

    def test_coupled_flag_and_independent(self, runner):
        base = ["compare", *REF_FLAGS, "--sigma", "0.03", "--n-paths", "500",
                "--exact-low", "67.20", "--exact-high", "68.22", "--format", "json"]
        coupled = json.loads(runner.invoke(main, base).output)
        indep = json.loads(runner.invoke(main, base + ["--independent"]).output)
        assert coupled["coupled"] is True and indep["coupled"] is False
        assert coupled["gbm"]["simulated_low"] != indep["gbm"]["simulated_low"]
        assert coupled["heston"] == indep["heston"]  # heston unaffected by coupling


class TestSeedHandling:
    def test_random_seed_flag_draws_entropy_and_echoes_it(self, runner):
        args = ["simulate", "--model", "gbm", "--mu", "0.1", "--sigma", "0.2",
                "--x0", "100", "--n-paths", "2", "--random-seed"]
        a = json.loads(runner.invoke(main, args).output)
        b = json.loads(runner.invoke(main, args).output)
        assert a["config"]["seed"] != b["config"]["seed"]
        assert 0 <= a["config"]["seed"] < 2 ** 64


class TestServe:
    def test_serve_wires_uvicorn(self, runner, monkeypatch):
        import uvicorn
        calls = {}
        monkeypatch.setattr(uvicorn, "run",
                            lambda app, host, port: calls.update(host=host, port=port))
        r = runner.invoke(main, ["serve", "--host", "0.0.0.0", "--port", "9100"])
        assert r.exit_code == 0
        assert calls == {"host": "0.0.0.0", "port": 9100}
