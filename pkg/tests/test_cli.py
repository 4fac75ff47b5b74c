"""
Tests for the command line interface
"""
import csv
import json
import math

import click
import pytest
from click.testing import CliRunner

from cwlab.cmdline.cmd_cwlab import cwlab, handle_errors
from cwlab.cmdline.configs import ChainConfig, DistanceConfig, ModelConfig, VerifyConfig, parse_n_grid
from cwlab.common.exceptions import ConfigError, NumericalError


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, tmp_path, args, name="out.csv"):
    """Run a command writing to a file under tmp_path, return (result, text)"""
    out = tmp_path / name
    result = runner.invoke(cwlab, args + ["--out", str(out)])
    text = out.read_text() if out.exists() else None
    return result, text


def read_table(text):
    """Header, rows and footer of a CSV written by the commands"""
    lines = text.splitlines()
    body = [line for line in lines if not line.startswith("#")]
    footer = dict(line[2:].split(": ", 1) for line in lines if line.startswith("# "))
    rows = list(csv.reader(body))
    return rows[0], rows[1:], footer


def test_pmf_two_spins(runner, tmp_path):
    result, text = invoke(runner, tmp_path, ["pmf", "--n", "2", "--beta", "1.0"])
    assert result.exit_code == 0, result.output
    header, rows, _ = read_table(text)
    assert header == ["spin_sum", "value", "prob", "cdf"]
    assert [int(row[0]) for row in rows] == [-2, 0, 2]
    e = math.e
    probs = [float(row[2]) for row in rows]
    assert probs == pytest.approx([e / (2 * e + 2), 2 / (2 * e + 2), e / (2 * e + 2)], rel=1e-14)
    assert float(rows[-1][3]) == pytest.approx(1.0)


def test_pmf_formats_agree(runner, tmp_path):
    args = ["pmf", "--n", "7", "--beta", "1.3", "--rescale", "2.0"]
    _, text = invoke(runner, tmp_path, args)
    _, payload = invoke(runner, tmp_path, args + ["--format", "json"], name="out.json")
    data = json.loads(payload)
    assert data["schema_version"] == 1
    assert data["command"] == "pmf"
    assert data["config"]["rescale"] == 2.0
    _, rows, _ = read_table(text)
    assert [[int(r[0]), float(r[1]), float(r[2]), float(r[3])] for r in rows] == data["rows"]
    assert data["rows"][0][1] == -3.5


def test_usage_errors(runner, tmp_path):
    result, _ = invoke(runner, tmp_path, ["pmf", "--n", "0"])
    assert result.exit_code == 2
    result, _ = invoke(runner, tmp_path, ["distance", "--regime", "hot"])
    assert result.exit_code == 2
    # Rejected by the model rather than by the option parser
    result, _ = invoke(runner, tmp_path, ["pmf", "--n", "4", "--beta", "-1"])
    assert result.exit_code == 2
    result, _ = invoke(runner, tmp_path, ["distance", "--n-grid", "64"])
    assert result.exit_code == 2


def test_distance_deterministic(runner, tmp_path):
    args = ["distance", "--regime", "subcritical", "--n-grid", "64:256", "--beta", "0.5"]
    result, first = invoke(runner, tmp_path, args, name="a.csv")
    assert result.exit_code == 0, result.output
    _, second = invoke(runner, tmp_path, args, name="b.csv")
    assert first == second
    header, rows, footer = read_table(first)
    assert header == ["n", "distance"]
    assert [int(row[0]) for row in rows] == [64, 128, 256]
    assert float(footer["slope"]) < 0


def test_distance_json_fit(runner, tmp_path):
    args = ["distance", "--regime", "window", "--gamma", "-1.0", "--n-grid", "64:256", "--method", "smooth", "--format", "json"]
    result, text = invoke(runner, tmp_path, args, name="out.json")
    assert result.exit_code == 0, result.output
    data = json.loads(text)
    assert data["config"]["gamma"] == -1.0
    assert len(data["rows"]) == 3
    assert data["fit"]["slope"] == pytest.approx(data["summary"]["slope"])


def test_rate_from_series(runner, tmp_path):
    series = tmp_path / "series.csv"
    series.write_text("n,distance\n10,0.3\n100,0.03\n1000,0.003\n# slope: -1.0\n")
    result, text = invoke(runner, tmp_path, ["rate", "--series", str(series)])
    assert result.exit_code == 0, result.output
    header, rows, footer = read_table(text)
    assert header == ["n", "distance", "fitted", "residual"]
    assert len(rows) == 3
    assert float(footer["slope"]) == pytest.approx(-1.0)

    series.write_text("n,distance\n10,abc\n")
    result, _ = invoke(runner, tmp_path, ["rate", "--series", str(series)])
    assert result.exit_code == 2
    result, _ = invoke(runner, tmp_path, ["rate", "--series", str(tmp_path / "missing.csv")])
    assert result.exit_code == 4


def test_rate_reads_distance_output(runner, tmp_path):
    _, _ = invoke(runner, tmp_path, ["distance", "--regime", "critical", "--n-grid", "64:1024:4"], name="series.csv")
    result, text = invoke(runner, tmp_path, ["rate", "--series", str(tmp_path / "series.csv")])
    assert result.exit_code == 0, result.output
    assert "# slope:" in text


def test_chain_histogram(runner, tmp_path):
    args = ["chain", "--n", "20", "--beta", "0.8", "--steps", "50000", "--seed", "1"]
    result, text = invoke(runner, tmp_path, args, name="a.csv")
    assert result.exit_code == 0, result.output
    header, rows, footer = read_table(text)
    assert header == ["spin_sum", "count", "frequency", "exact"]
    assert len(rows) == 21
    assert sum(int(row[1]) for row in rows) == 50000
    assert float(footer["tv"]) < 0.1

    _, other = invoke(runner, tmp_path, args[:-1] + ["2"], name="b.csv")
    assert other != text
    _, again = invoke(runner, tmp_path, args, name="c.csv")
    assert again == text


def test_chain_zero_steps(runner, tmp_path):
    result, text = invoke(runner, tmp_path, ["chain", "--n", "10", "--beta", "0.5", "--steps", "0"])
    assert result.exit_code == 0, result.output
    _, rows, footer = read_table(text)
    assert len(rows) == 11
    assert all(int(row[1]) == 0 for row in rows)
    assert footer["steps"] == "0"
    assert "tv" not in footer


def test_chain_with_field(runner, tmp_path):
    result, text = invoke(runner, tmp_path, ["chain", "--n", "10", "--beta", "0.5", "--mu", "0.5", "--steps", "2000"])
    assert result.exit_code == 0, result.output
    header, _, footer = read_table(text)
    assert "exact" not in header
    assert float(footer["mean"]) > 0


def test_sample_deterministic(runner, tmp_path, monkeypatch):
    args = ["sample", "--n", "50", "--beta", "0.5", "--samples", "25000", "--seed", "3"]
    result, first = invoke(runner, tmp_path, args, name="a.csv")
    assert result.exit_code == 0, result.output
    # Each chunk has its own stream, so threads do not change the output
    monkeypatch.setenv("CWLAB_THREADS", "3")
    _, second = invoke(runner, tmp_path, args, name="b.csv")
    assert first == second
    _, rows, footer = read_table(first)
    assert len(rows) == 25000
    assert all((int(float(row[1])) + 50) % 2 == 0 for row in rows[:100])
    assert abs(float(footer["mean"])) < 1.0


def test_sample_limit(runner, tmp_path):
    args = ["sample", "--n", "100", "--beta", "0.5", "--kind", "limit", "--samples", "20000", "--format", "json"]
    result, text = invoke(runner, tmp_path, args, name="out.json")
    assert result.exit_code == 0, result.output
    data = json.loads(text)
    assert data["summary"]["samples"] == 20000
    # N(0, 2) below the critical temperature
    assert data["summary"]["variance"] == pytest.approx(2.0, rel=0.05)

    result, text = invoke(runner, tmp_path, ["sample", "--n", "10", "--samples", "0"])
    assert result.exit_code == 0, result.output
    assert read_table(text)[2] == {"samples": "0"}


def test_verify_single_check(runner, tmp_path):
    args = ["verify", "--only", "z-subcritical", "--beta", "0.5", "--n", "100"]
    result, text = invoke(runner, tmp_path, args)
    assert result.exit_code == 0, result.output
    header, rows, footer = read_table(text)
    assert header == ["name", "passed", "observed", "bound_or_target", "detail"]
    assert [row[:2] for row in rows] == [["z-subcritical", "True"]]
    assert footer["failed"] == "0"


def test_verify_failure_exit_code(runner, tmp_path):
    result, text = invoke(runner, tmp_path, ["verify", "--only", "binomial-distance", "--slack", "0", "--format", "json"], name="out.json")
    assert result.exit_code == 1
    data = json.loads(text)
    assert data["summary"]["passed"] is False
    assert data["reports"][0]["name"] == "binomial-distance"
    assert data["reports"][0]["passed"] is False


def test_verify_usage(runner, tmp_path):
    result, _ = invoke(runner, tmp_path, ["verify", "--all", "--only", "z-critical"])
    assert result.exit_code == 2
    result, _ = invoke(runner, tmp_path, ["verify", "--only", "no-such-check"])
    assert result.exit_code == 2


def test_config_file_and_flags(runner, tmp_path):
    config = tmp_path / "pmf.yaml"
    config.write_text("n: 4\nbeta: 0.5\nformat: json\n")
    result, text = invoke(runner, tmp_path, ["pmf", "--config", str(config), "--n", "3"], name="out.json")
    assert result.exit_code == 0, result.output
    data = json.loads(text)
    assert len(data["rows"]) == 4
    assert data["config"]["n"] == 3
    assert data["config"]["beta"] == 0.5

    config.write_text("n: 4\nsamples: 10\n")
    result, _ = invoke(runner, tmp_path, ["pmf", "--config", str(config)])
    assert result.exit_code == 2
    result, _ = invoke(runner, tmp_path, ["pmf", "--config", str(tmp_path / "missing.yaml")])
    assert result.exit_code == 4


def test_unwritable_output(runner, tmp_path):
    out = tmp_path / "missing" / "out.csv"
    result = runner.invoke(cwlab, ["pmf", "--n", "3", "--out", str(out)])
    assert result.exit_code == 4
    assert not out.exists()


def test_stdout_output(runner):
    result = runner.invoke(cwlab, ["pmf", "--n", "1", "--beta", "0.5"])
    assert result.exit_code == 0
    header, rows, _ = read_table(result.output)
    assert header == ["spin_sum", "value", "prob", "cdf"]
    assert [float(row[2]) for row in rows] == pytest.approx([0.5, 0.5])


def test_handle_errors_exit_codes():
    @handle_errors
    def numerical():
        raise NumericalError("quadrature did not converge")

    @handle_errors
    def configuration():
        raise ConfigError("bad")

    with pytest.raises(SystemExit) as excinfo:
        numerical()
    assert excinfo.value.code == 3
    with pytest.raises(SystemExit) as excinfo:
        configuration()
    assert excinfo.value.code == 2


def test_handle_errors_in_command():
    @click.command()
    @handle_errors
    def broken():
        raise NumericalError("no convergence")

    assert CliRunner().invoke(broken).exit_code == 3


def test_parse_n_grid():
    assert parse_n_grid("64:256") == [64, 128, 256]
    assert parse_n_grid("64:1024:4") == [64, 256, 1024]
    for bad in ("64", "a:b", "256:64", "1:2:3:4"):
        with pytest.raises(ConfigError):
            parse_n_grid(bad)


def test_config_containers(tmp_path):
    conf = ChainConfig(n=5, beta=1.2, steps=10)
    path = tmp_path / "chain.yaml"
    conf.to_yaml(path)
    assert ChainConfig.from_yaml(path) == conf

    params = ModelConfig(n=16, gamma=-1.0).model_params()
    assert params.effective_beta() == pytest.approx(1.25)
    assert DistanceConfig(n_grid="64:512:8").grid() == [64, 512]
    assert VerifyConfig(n=10).settings()["n"] == 10
    with pytest.raises(ConfigError):
        ChainConfig(steps=-1)
    with pytest.raises(ConfigError):
        DistanceConfig(regime="hot")


def test_config_keys(runner):
    result = runner.invoke(cwlab, ["config-keys", "rate"])
    assert result.exit_code == 0, result.output
    assert "series:  CSV file with n and distance columns" in result.output
    assert "Default: None (required) [Undefined]" in result.output
    result = runner.invoke(cwlab, ["config-keys", "chain"])
    assert "Default: 100 [int]" in result.output
    assert runner.invoke(cwlab, ["config-keys", "plot"]).exit_code == 2
