import json

import numpy as np
import pytest

from spde_hypotest.base import ConfigError
from spde_hypotest.cli import RunConfig, main, read_report_header

HYPOTHESES = ["--theta0", "1", "--theta1", "2"]


def _csv_body(text):
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def test_simulate_is_reproducible(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        argv = ["simulate", "--theta", "1.5", "--n-modes", "3", "--horizon", "0.5"]
        assert main(argv + ["--seed", "11", "--out", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_text().splitlines()[0] == "t,u_1,u_2,u_3"


def test_missing_required_value(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path / "x.csv")]) == 2
    assert "theta" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv, field",
    [
        (["type1", *HYPOTHESES, "--regime", "large-x"], "regime"),
        (["type1", *HYPOTHESES, "--alpha", "1.5"], "alpha"),
        (["type1", "--theta0", "2", "--theta1", "1"], "theta1"),
        (["type1", *HYPOTHESES, "--reps", "0"], "reps"),
        (["test", *HYPOTHESES, "--theta", "1", "--horizon", "-1"], "horizon"),
        (["simulate", "--theta", "1", "--gamma", "0.25"], "gamma"),
        (["type1", *HYPOTHESES, "--n-modes", "two"], "n_modes"),
    ],
)
def test_configuration_errors_name_the_field(argv, field, capsys):
    assert main(argv) == 2
    assert field in capsys.readouterr().err


def test_domain_errors_at_run_time(capsys):
    argv = ["sld-table", *HYPOTHESES, "--eps-min", "-2"]
    assert main(argv) == 3
    assert "error" in capsys.readouterr().err


def test_config_file_lines_are_reported(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("# experiment\ntheta0 = 1\n\nalpha = 1.5\ntheta1 = 2\n")
    assert main(["type1", "--config", str(path)]) == 2
    assert "line 4: alpha" in capsys.readouterr().err


def test_unreadable_config_file(tmp_path, capsys):
    assert main(["type1", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert "config" in capsys.readouterr().err


def test_flags_override_the_config_file(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("theta0=1\ntheta1=2\ntheta=-1\nsteps-per-unit=10\n")
    assert main(["test", "--config", str(path)]) == 2
    capsys.readouterr()
    assert main(["test", "--config", str(path), "--theta", "1.5"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert set(record) == {
        "regime",
        "statistic",
        "threshold",
        "reject",
        "log_lr",
        "log_threshold_lr",
        "mle",
    }
    assert record["regime"] == "large-t"
    assert record["reject"] == (record["log_lr"] >= record["log_threshold_lr"])


def test_sweep_has_one_row_per_value(capsys):
    argv = ["sweep", *HYPOTHESES, "--sweep", "10,20", "--reps", "40", "--steps-per-unit", "5"]
    assert main(argv) == 0
    rows = _csv_body(capsys.readouterr().out)
    assert [float(r["horizon"]) for r in rows] == [10.0, 20.0]
    for row in rows:
        assert 0 <= float(row["estimate"]) <= 1
        assert 0 <= float(row["power"]) <= 1


def test_sweep_requires_values(capsys):
    assert main(["sweep", *HYPOTHESES]) == 2
    assert "sweep" in capsys.readouterr().err


def test_sld_cgf_table(capsys):
    assert main(["sld-table", *HYPOTHESES, "--n-modes", "2", "--points", "21"]) == 0
    rows = _csv_body(capsys.readouterr().out)
    assert len(rows) == 21
    assert list(rows[0]) == ["eps", "log_m", "c", "L", "H", "R_T"]
    zero = [row for row in rows if float(row["eps"]) == 0.0]
    assert len(zero) == 1
    assert all(float(value) == 0.0 for value in zero[0].values())
    minus_one = rows[0]
    assert float(minus_one["eps"]) == -1.0
    assert abs(float(minus_one["log_m"])) < 1e-12


def _strict_json(text):
    def reject(constant):
        raise ValueError(f"{constant} is not valid JSON")

    return json.loads(text, parse_constant=reject)


def test_sld_rate_table_json(capsys):
    argv = ["sld-table", *HYPOTHESES, "--table", "rate", "--points", "5", "--format", "json"]
    assert main(argv) == 0
    document = _strict_json(capsys.readouterr().out)
    assert document["table"] == "rate"
    rows = document["rows"]
    assert len(rows) == 5
    assert rows[0]["eta"] == pytest.approx(-0.5)
    assert rows[-1]["eps_eta"] is None
    assert rows[-1]["I"] is None
    assert rows[2]["I"] == pytest.approx(1 / 24)


def test_sld_table_as_text(capsys):
    argv = ["sld-table", *HYPOTHESES, "--table", "rate", "--points", "5", "--format", "table"]
    assert main(argv) == 0
    header = capsys.readouterr().out.splitlines()[0].split()
    assert header == ["eta", "I", "eps_eta", "variance"]


def test_report_as_text(capsys):
    argv = ["type1", *HYPOTHESES, "--reps", "40", "--steps-per-unit", "5", "--format", "table"]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert out.split()[:3] == ["horizon", "estimate", "standard_error"]
    assert "predicted" in out


def test_report_as_text_to_file(tmp_path):
    out = tmp_path / "type1.txt"
    argv = ["type1", *HYPOTHESES, "--reps", "40", "--steps-per-unit", "5", "--format", "table"]
    assert main(argv + ["--out", str(out)]) == 0
    assert out.read_text().split()[0] == "horizon"


def test_unknown_log_level(capsys):
    assert main(["type1", *HYPOTHESES, "--log-level", "chatty"]) == 2
    err = capsys.readouterr().err
    assert "log_level" in err
    assert "CHATTY" in err


def test_report_header_round_trip(tmp_path):
    out = tmp_path / "power.csv"
    argv = ["power", *HYPOTHESES, "--reps", "50", "--horizon", "2", "--seed", "5"]
    assert main(argv + ["--steps-per-unit", "10", "--out", str(out)]) == 0
    config = read_report_header(str(out))
    values = dict(theta0="1", theta1="2", reps="50", horizon="2", seed="5", steps_per_unit="10")
    expected = RunConfig.from_mapping(dict(values, out=str(out)))
    assert config == expected
    assert _csv_body(out.read_text())[0]["type2"]


def test_header_omits_defaults():
    config = RunConfig.from_mapping({"theta0": "1", "theta1": "2", "alpha": "0.05"})
    assert config.header() == {"theta0": "1", "theta1": "2"}


def test_compare_runs_both_tests_on_common_paths(capsys):
    argv = ["compare", *HYPOTHESES, "--shift", "-1", "--reps", "60", "--steps-per-unit", "10"]
    assert main(argv + ["--format", "json"]) == 0
    document = json.loads(capsys.readouterr().out)
    point = document["points"][0]
    assert point["nested"] == 1.0
    assert point["estimate"] >= 0


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError, match="colour"):
        RunConfig.from_mapping({"colour": "blue"})


def test_eps_grid_snaps_to_zero(capsys):
    argv = ["sld-table", *HYPOTHESES, "--eps-min", "-0.3", "--eps-max", "0.3", "--points", "7"]
    assert main(argv) == 0
    eps = [float(r["eps"]) for r in _csv_body(capsys.readouterr().out)]
    assert 0.0 in eps
    assert np.allclose(eps, np.linspace(-0.3, 0.3, 7))
