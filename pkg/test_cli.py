#!/usr/bin/env python3
"""
Command-line tests: exit codes, output formats and the cheap end-to-end runs
"""

import json
import math

import pandas as pd
import pytest

from manage_bubbles import EXIT_FAIL, EXIT_OK, EXIT_USAGE, run_cli
from suites_manager import ROW_FIELDS, get_suite_manager


def _config(tmp_path, data):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_constants_at_six_four(capsys):
    assert run_cli(["constants"]) == EXIT_OK
    record = json.loads(capsys.readouterr().out)
    constants = record["constants"]
    assert constants["hls_c"]["value"] == pytest.approx(math.pi ** 2 / 6.0 * 60.0 ** (1.0 / 3.0), rel=1e-12)
    assert constants["i_half_alpha"]["value"] == pytest.approx(math.pi ** 3 / 6.0, rel=1e-12)
    assert constants["bubble_coeff_closed"]["value"] == pytest.approx(12.0 / math.pi ** 1.5, rel=1e-12)
    assert constants["sobolev_s"]["value"] == pytest.approx(constants["sobolev_s_closed"]["value"], rel=1e-8)
    assert record["problem"]["two_star_alpha"] == pytest.approx(2.0)


def test_constants_written_to_directory(tmp_path):
    assert run_cli(["constants", "--out", str(tmp_path)]) == EXIT_OK
    record = json.loads((tmp_path / "constants.json").read_text())
    assert record["problem"]["N"] == 6


def test_invalid_problem_is_a_usage_error(tmp_path):
    config = _config(tmp_path, {"problem": {"N": 4, "alpha": 3.0}})
    assert run_cli(["constants", "--config", config]) == EXIT_USAGE


def test_unknown_config_key_is_a_usage_error(tmp_path):
    assert run_cli(["constants", "--config", _config(tmp_path, {"problm": {}})]) == EXIT_USAGE


def test_print_config_applies_overrides(capsys):
    assert run_cli(["--print-config", "--seed", "42", "--threads", "3"]) == EXIT_OK
    config = json.loads(capsys.readouterr().out)
    assert config["quadrature"]["seed"] == 42
    assert config["quadrature"]["threads"] == 3
    assert config["problem"] == {"N": 6, "alpha": 4.0}


def test_missing_command():
    assert run_cli([]) == EXIT_USAGE


def test_synthetic_expansion_recovers_coefficients(tmp_path):
    config = _config(tmp_path, {"expansion": {"m": 2, "synthetic": {"A1": 1.5, "A2": 0.7}}})
    assert run_cli(["expansion", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "expansion.csv")
    assert list(frame.columns) == ["lambda", "dj_dlambda", "est_error", "model_prediction", "A1", "A2", "A3"]
    assert frame["A1"].iloc[0] == pytest.approx(1.5, rel=1e-8)
    assert frame["A2"].iloc[0] == pytest.approx(0.7, rel=1e-8)
    pd.testing.assert_series_equal(frame["model_prediction"], frame["dj_dlambda"], check_names=False, rtol=1e-10)


def test_forced_solve(tmp_path, capsys):
    config = _config(tmp_path, {"solve": {"m": 10, "A1": 2.0, "A3": 2.0}})
    assert run_cli(["solve", "--config", config]) == EXIT_OK
    record = json.loads(capsys.readouterr().out)
    solution = record["solution"]
    assert solution["t_m"] == pytest.approx(1.0)
    assert solution["lambda_m"] == pytest.approx(100.0)
    assert solution["degree_sign"] == -1
    assert record["lambda_window"] == pytest.approx([1e-3 * 100.0, 1e3 * 100.0])


def test_solve_needs_two_bubbles(tmp_path):
    config = _config(tmp_path, {"solve": {"m": 1, "A1": 1.0, "A3": 1.0}})
    assert run_cli(["solve", "--config", config]) == EXIT_USAGE


def test_solve_outside_window_fails(tmp_path):
    config = _config(tmp_path, {"solve": {"m": 4, "A1": 1.0, "A3": 1.0}, "ansatz": {"window": [2.0, 3.0]}})
    assert run_cli(["solve", "--config", config]) == EXIT_FAIL


def test_solve_outside_window_can_be_reported(tmp_path, capsys):
    config = _config(tmp_path, {"solve": {"m": 4, "A1": 1.0, "A3": 1.0, "require_window": False},
                                "ansatz": {"window": [2.0, 3.0]}})
    assert run_cli(["solve", "--config", config]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["solution"]["in_window"] is False


def test_potential_that_turns_negative_is_a_usage_error(tmp_path):
    config = _config(tmp_path, {"potential": {"kind": "callable", "callable": "test_config:steep_potential"},
                                "solve": {"m": 4, "A1": 1.0, "A3": 1.0}})
    assert run_cli(["solve", "--config", config]) == EXIT_USAGE


def test_verify_argument_errors():
    assert "riesz" in get_suite_manager().available()
    assert run_cli(["verify"]) == EXIT_USAGE
    assert run_cli(["verify", "no_such_suite"]) == EXIT_USAGE


def test_lemma_check_product_estimate(tmp_path):
    assert run_cli(["lemma-check", "B1", "--out", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "lemma_check.csv")
    assert frame["which"].tolist() == ["B1"]
    assert bool(frame["holds"].iloc[0])
    assert len(json.loads(frame["witness"].iloc[0])) == 6


def test_lemma_check_unknown_lemma():
    assert run_cli(["lemma-check", "B9"]) == EXIT_USAGE


@pytest.mark.slow
def test_verify_riesz(tmp_path):
    assert run_cli(["verify", "riesz", "--out", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "verify_riesz.csv")
    assert list(frame.columns) == ROW_FIELDS
    assert frame["pass"].all()
    # every row is a real comparison
    assert (frame["tol"] < 1.0).all()
    assert frame["check_id"].str.startswith(("identity_", "bubble_r")).all()


@pytest.mark.slow
def test_verify_invariance_detects_wrong_coefficient(tmp_path):
    config = _config(tmp_path, {"verify": {"coefficient_scale": 1.1}})
    assert run_cli(["verify", "invariance", "--config", config, "--out", str(tmp_path)]) == EXIT_FAIL
    frame = pd.read_csv(tmp_path / "verify_invariance.csv")
    failing = frame.loc[~frame["pass"], "check_id"].tolist()
    assert failing and all("equation" in check for check in failing)


def test_norms_rows_carry_errors(tmp_path):
    config = _config(tmp_path, {"norms": {"samples": 2000, "lambdas": [10.0, 40.0]}})
    assert run_cli(["norms", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "norms.csv")
    assert list(frame.columns) == ["lambda", "norm", "value", "est_error", "tol", "samples"]
    assert len(frame) == 6
    assert set(frame["norm"]) == {"ansatz_star", "laplacian_starstar", "error_starstar"}
    assert (frame["est_error"] >= 0).all() and (frame["est_error"] <= frame["value"]).all()
    assert (frame["tol"] > 0).all()


@pytest.mark.slow
def test_pohozaev_output_is_independent_of_thread_count(tmp_path):
    config = _config(tmp_path, {"quadrature": {"nodes": 2 ** 16}, "pohozaev": {"rho_factors": [3.5]}})
    outputs = []
    for threads in ("1", "4"):
        out = tmp_path / f"threads{threads}"
        assert run_cli(["pohozaev", "--config", config, "--threads", threads, "--out", str(out)]) == EXIT_OK
        outputs.append((out / "pohozaev.csv").read_bytes())
    assert outputs[0] == outputs[1]


@pytest.mark.slow
def test_default_solve_runs_end_to_end(capsys):
    assert run_cli(["solve"]) == EXIT_OK
    record = json.loads(capsys.readouterr().out)
    assert record["m"] == 16
    assert record["fit"]["A1"] > 0 and record["fit"]["A2"] > 0
    assert record["solution"]["in_window"] and record["solution"]["proximity_ok"]


@pytest.mark.slow
def test_expansion_for_two_unit_bubbles(tmp_path):
    config = _config(tmp_path, {"potential": {"kind": "constant"}, "expansion": {"m": 2}})
    assert run_cli(["expansion", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "expansion.csv")
    assert frame["A2"].iloc[0] > 0
    assert len(frame) == 4
