import json

import pytest

from src.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, _config_tokens, run
from src.errors import NumericalError
from src.pydantic_models import Method
from src.replication_service import get_replication_service


def run_json(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    assert code == EXIT_OK, out
    return json.loads(out)


def test_combine_single_method(capsys):
    result = run_json(capsys, "combine", "--po", "0.026", "--pr", "0.001", "--method", "edgington", "--alpha", "0.025")
    assert result == [{"method": "edgington", "p": 0.0003645, "level": 0.000625, "success": True}]


def test_json_results_are_always_lists(capsys):
    levels = run_json(capsys, "level", "--po", "0.001", "--method", "edgington")
    assert [row["method"] for row in levels] == ["edgington"]
    powers = run_json(capsys, "power", "--original-power", "0.8", "--c", "1", "--method", "two-trials")
    assert len(powers) == 1
    assert powers[0]["project_power"] == pytest.approx(0.64)


def test_cli_uses_the_shared_service(capsys, monkeypatch):
    calls = []
    service = get_replication_service()
    original = service.combine

    def combine(request):
        calls.append(request)
        return original(request)

    monkeypatch.setattr(service, "combine", combine)
    run_json(capsys, "combine", "--po", "0.026", "--pr", "0.001", "--method", "fisher")
    assert [request.methods for request in calls] == [[Method.FISHER]]


def test_combine_all_methods_text(capsys):
    assert run(["combine", "--po", "0.026", "--pr", "0.001", "--c", "1", "--output", "text"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert [line.split(":")[0] for line in lines] == ["two-trials", "edgington", "edgington-weighted", "fisher", "meta"]
    assert "no success" in lines[0]


def test_combine_csv(capsys):
    assert run(["combine", "--po", "0.026", "--pr", "0.001", "--method", "fisher", "--output", "csv"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "method,p,level,success"
    assert out.splitlines()[1].startswith("fisher,0.000300")


def test_level_text_shows_percentages(capsys):
    assert run(["level", "--po", "0.001", "--method", "edgington", "--method", "fisher", "--output", "text"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["edgington: 3.4%", "fisher: 5.8%"]


def test_power_with_limit(capsys):
    results = run_json(capsys, "power", "--original-power", "0.8", "--c", "1", "--method", "two-trials",
                       "--method", "edgington", "--limit")
    assert results[0]["project_power"] == pytest.approx(0.64)
    assert results[1]["limit"] == pytest.approx(0.84, abs=0.003)


def test_power_curve_csv(capsys):
    assert run(["power", "--original-power", "0.8", "--method", "edgington", "--curve", "1", "3", "3",
                "--output", "csv"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "method,c,d,original_power,alpha,project_power"
    assert [line.split(",")[1] for line in lines[1:]] == ["1", "2", "3"]


def test_samplesize_weighted(capsys):
    result = run_json(capsys, "samplesize", "--po", "0.035", "--method", "edgington-weighted", "--wr", "2",
                      "--power", "0.8")
    assert result["adjusted_level"] == pytest.approx(0.0075)
    assert result["relative_sample_size"] > 0
    assert result["power_type"] == "conditional"


def test_samplesize_predictive_with_sizes(capsys):
    result = run_json(capsys, "samplesize", "--po", "0.001", "--method", "edgington", "--power", "0.8",
                      "--predictive", "--no", "40")
    assert result["power_type"] == "predictive"
    assert result["replication_size_from_no"] == pytest.approx(40 * result["relative_sample_size"], abs=1.0)


def test_samplesize_ratio_curve(capsys):
    rows = run_json(capsys, "samplesize", "--method", "edgington", "--power", "0.8", "--ratio-curve", "1e-6", "1e-2", "5")
    assert len(rows) == 5
    assert rows[0]["ratio"] == pytest.approx(0.894, abs=0.002)


def test_sequential_plan(capsys):
    plan = run_json(capsys, "sequential", "plan", "--alpha", "0.025", "--gamma", "0.5")
    assert plan["b2"] == pytest.approx(0.025)
    assert plan["b3"] == pytest.approx(0.13, abs=0.005)


def test_sequential_plan_curve(capsys):
    rows = run_json(capsys, "sequential", "plan", "--curve", "3")
    assert [row["gamma"] for row in rows] == [0.0, 0.5, 1.0]


def test_sequential_decide_and_assess(capsys):
    decision = run_json(capsys, "sequential", "decide", "--e2", "0.05", "--pr2", "0.01")
    assert decision["verdict"] == "continue"
    assert decision["final_verdict"] == "stop-success"

    assessed = run_json(capsys, "sequential", "assess", "--po", "0.05", "--pr1", "0.05", "--pr2", "0.055")
    assert assessed["success"] is True


def test_analyze(capsys, pvalues_csv, tmp_path):
    result = run_json(capsys, "analyze", "--input", str(pvalues_csv), "--out-dir", str(tmp_path / "out"))
    assert result["summary"]["n_pairs"] == 5
    assert (tmp_path / "out" / "success_rates.csv").exists()
    assert {row["project"] for row in result["success_rates"]} == {"EERP", "SSRP"}


def test_analyze_is_deterministic(capsys, pvalues_csv):
    first = run_json(capsys, "analyze", "--input", str(pvalues_csv))
    second = run_json(capsys, "analyze", "--input", str(pvalues_csv))
    assert first == second


def test_analyze_bad_rows_exit_2(capsys, bad_rows_csv):
    assert run(["analyze", "--input", str(bad_rows_csv)]) == EXIT_DATA
    err = capsys.readouterr().err
    assert "line 3" in err and "line 5" in err


def test_analyze_undecodable_input_exit_2(capsys, bad_encoding_csv):
    assert run(["analyze", "--input", str(bad_encoding_csv)]) == EXIT_DATA
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "not UTF-8" in err
    assert "Traceback" not in err


def test_simulate(capsys, fixtures_dir):
    result = run_json(capsys, "simulate", "--spec", str(fixtures_dir / "sim_null_edgington.json"),
                      "--nsim", "20000", "--seed", "3")
    assert result["n_sim"] == 20000
    assert result["seed"] == 3
    again = run_json(capsys, "simulate", "--spec", str(fixtures_dir / "sim_null_edgington.json"),
                     "--nsim", "20000", "--seed", "3", "--workers", "3")
    assert again == result


@pytest.mark.parametrize(
    "argv",
    [
        ["combine", "--po", "0.01"],
        ["combine", "--po", "0.01", "--pr", "0.02", "--method", "meta"],
        ["combine", "--po", "2", "--pr", "0.02"],
        ["level", "--po", "0.01", "--method", "bonferroni"],
        ["samplesize", "--po", "0.03", "--method", "two-trials"],
        ["samplesize", "--po", "0.001", "--method", "fisher"],
        ["samplesize", "--method", "edgington"],
        ["analyze", "--input", "does-not-exist.csv"],
        ["combine", "--po", "0.01", "--pr", "0.02", "--workers", "0"],
        [],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    assert run(argv) == EXIT_USAGE
    assert capsys.readouterr().err.startswith("error:")


def test_numerical_failure_exit_3(capsys, monkeypatch):
    def fail(*args, **kwargs):
        raise NumericalError("did not converge", {"abserr": 1.0})

    monkeypatch.setattr("src.replication_service.power_result", fail)
    assert run(["power", "--original-power", "0.8"]) == EXIT_NUMERICAL
    assert "abserr" in capsys.readouterr().err


def test_help_exits_0(capsys):
    assert run(["--help"]) == EXIT_OK
    assert "combine" in capsys.readouterr().out


def test_config_file_supplies_defaults(capsys, tmp_path):
    config = tmp_path / "replisum.conf"
    config.write_text("# defaults\npo = 0.026\npr = 0.001\nmethod = edgington\n")
    [result] = run_json(capsys, "combine", "--config", str(config))
    assert result["success"] is True

    # flags on the command line win
    [overridden] = run_json(capsys, "combine", "--config", str(config), "--method", "two-trials")
    assert overridden["method"] == "two-trials"
    assert overridden["success"] is False


def test_config_file_unknown_key(capsys, tmp_path):
    config = tmp_path / "replisum.conf"
    config.write_text("po = 0.026\npr = 0.001\nfavourite_colour = blue\n")
    assert run(["combine", "--config", str(config)]) == EXIT_USAGE


def test_config_tokens():
    tokens = _config_tokens({"predictive": "true", "limit": "no", "method": "fisher, edgington", "po": "0.1"}, {"--po"})
    assert tokens == ["--predictive", "--method", "fisher", "--method", "edgington"]
