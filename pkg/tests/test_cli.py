import csv
import json

import pytest

from pavg.api.cli import build_parser, main
from pavg.enums.constants import EXIT_FAILED, EXIT_OK, EXIT_USAGE, SUBCOMMANDS
from pavg.services.helpers.artifacts import TIMESTAMP_FIELD


def _run(capsys, argv):
    status = main(argv)
    captured = capsys.readouterr()
    report = json.loads(captured.out) if captured.out.strip() else None
    return status, report, captured.err


def _without_timestamp(report):
    return {k: v for k, v in report.items() if k != TIMESTAMP_FIELD}


@pytest.fixture
def values_csv(tmp_path):
    path = tmp_path / "values.csv"
    path.write_text("1\n6\n11,2\n13\n19\n")
    return str(path)


def test_compute_four_average_matches_closed_form(capsys, values_csv):
    status, report, _ = _run(capsys, ["compute", "--values", values_csv, "--p", "4"])
    assert status == EXIT_OK
    assert report["subcommand"] == "compute"
    assert report["closed_form_gap"] <= 1e-10
    assert abs(report["newton_step"]) <= 1e-12
    assert abs(report["residual"]) <= 1e-9
    assert TIMESTAMP_FIELD in report


def test_compute_midrange(capsys, values_csv):
    status, report, _ = _run(capsys, ["compute", "--values", values_csv, "--p", "inf"])
    assert status == EXIT_OK
    assert report["p"] == "inf"
    assert report["value"] == 10.0


def test_verify_set_cell600_passes(capsys):
    status, report, _ = _run(capsys, ["verify-set", "--set", "cell600", "--p", "4", "--trials", "500", "--seed", "1"])
    assert status == EXIT_OK
    assert report["pass"] is True
    assert report["d_estimate"] == pytest.approx(8 / 3, abs=1e-10)
    assert report["seed"] == 1


def test_verify_set_cell24_with_p6_fails(capsys):
    status, report, _ = _run(capsys, ["verify-set", "--set", "cell24", "--p", "6", "--trials", "100"])
    assert status == EXIT_FAILED
    assert report["pass"] is False


def test_verify_set_normalized_reports_scheme_constants(capsys, tmp_path):
    export = tmp_path / "ico.csv"
    status, report, _ = _run(
        capsys, ["verify-set", "--set", "icosahedron", "--normalize", "--exact", "--trials", "100", "--export", str(export)]
    )
    assert status == EXIT_OK
    assert report["implied_scheme_constant"] == pytest.approx(0.4, abs=1e-10)
    assert report["sphere_scheme_constant"] == pytest.approx(0.4)
    assert len(export.read_text().splitlines()) == 13


def test_verify_set_rejects_a_non_integer_exponent(capsys):
    for p in ("inf", "4.5"):
        status, report, err = _run(capsys, ["verify-set", "--set", "cell24", "--p", p, "--trials", "10"])
        assert status == EXIT_USAGE
        assert report is None
        assert "even integer" in err


def test_exact_check_needs_exact_coordinates(capsys):
    status, report, err = _run(capsys, ["verify-set", "--set", "polygon:k=2", "--exact", "--trials", "10"])
    assert status == EXIT_USAGE
    assert report is None
    assert "no exact coordinates" in err


def test_unknown_set_is_a_usage_error(capsys):
    status, _, err = _run(capsys, ["verify-set", "--set", "tesseract"])
    assert status == EXIT_USAGE
    assert "unknown set" in err


def test_missing_values_file_names_the_field(capsys, tmp_path):
    status, _, err = _run(capsys, ["compute", "--values", str(tmp_path / "missing.csv")])
    assert status == EXIT_USAGE
    assert "values_path" in err


def test_malformed_values_file(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0\nabc\n")
    status, _, err = _run(capsys, ["compute", "--values", str(path)])
    assert status == EXIT_USAGE
    assert "bad.csv:2" in err


def test_invalid_exponent_is_rejected_by_the_parser(capsys, values_csv):
    with pytest.raises(SystemExit) as exc:
        main(["compute", "--values", values_csv, "--p", "0.5"])
    assert exc.value.code == EXIT_USAGE


def test_identical_runs_give_identical_reports(capsys):
    argv = ["verify-set", "--set", "dodecahedron", "--trials", "200", "--seed", "7"]
    _, first, _ = _run(capsys, argv)
    _, second, _ = _run(capsys, argv)
    assert _without_timestamp(first) == _without_timestamp(second)


def test_seed_defaults_to_environment(capsys, monkeypatch):
    monkeypatch.setenv("PAVG_SEED", "5")
    _, report, _ = _run(capsys, ["verify-set", "--set", "icosahedron", "--trials", "20"])
    assert report["seed"] == 5


def test_report_file_is_written(capsys, tmp_path):
    target = tmp_path / "out" / "report.json"
    status, report, _ = _run(capsys, ["quintic-check", "--report", str(target)])
    assert status == EXIT_OK
    assert json.loads(target.read_text()) == report
    assert report["depressed"] == "t^5 + 376t^3 + 72t^2 + 13460t + 156"
    assert report["resolvent_integer_roots"] == []
    assert list(target.parent.iterdir()) == [target]


def test_report_file_in_csv_format(capsys, tmp_path):
    target = tmp_path / "report.csv"
    status, report, _ = _run(capsys, ["verify-trig", "--kmax", "3", "--report", str(target), "--format", "csv"])
    assert status == EXIT_OK
    lines = target.read_text().splitlines()
    assert lines[0] == "field,value"
    rows = dict(csv.reader(lines[1:]))
    assert rows["hexagon_cos4_sum"] == "9/4"
    assert rows["pass"] == "True"
    assert len(lines) == 1 + len(report)


def test_gamma_median(capsys):
    status, report, _ = _run(capsys, ["gamma-median", "--values", "0", "1", "2", "4", "--p-seq", "2", "1.5", "1.001"])
    assert status == EXIT_OK
    assert report["gamma_median"] == pytest.approx(1.6, abs=1e-14)
    assert report["p_averages"][0] == pytest.approx(1.75)
    assert report["final_gap"] <= 5e-3


def test_gamma_median_rejects_odd_counts(capsys):
    status, _, err = _run(capsys, ["gamma-median", "--values", "0", "1", "2"])
    assert status == EXIT_USAGE
    assert "even" in err


def test_amvp_with_probe_file(capsys, tmp_path):
    probe = tmp_path / "probe.json"
    probe.write_text(json.dumps({"gradient": [0.6, 0.8], "hessian": [[1.0, 0.3], [0.3, -2.0]]}))
    sweep = tmp_path / "sweep.csv"
    status, report, _ = _run(capsys, ["amvp", "--set", "polygon:k=3", "--probe", str(probe), "--out", str(sweep)])
    assert status == EXIT_OK
    assert report["extrapolation_error"] <= 1e-6
    lines = sweep.read_text().splitlines()
    assert lines[0] == "epsilon,estimate"
    assert len(lines) == 1 + 6


def test_amvp_rejects_zero_gradient_probe(capsys, tmp_path):
    probe = tmp_path / "probe.json"
    probe.write_text(json.dumps({"gradient": [0.0, 0.0], "hessian": [[1.0, 0.0], [0.0, 1.0]]}))
    status, _, err = _run(capsys, ["amvp", "--set", "polygon:k=2", "--probe", str(probe)])
    assert status == EXIT_USAGE
    assert "gradient" in err


def test_solve_from_problem_file(capsys, tmp_path):
    problem = tmp_path / "problem.json"
    problem.write_text(
        json.dumps(
            {
                "dimension": 2,
                "domain": {"kind": "ball", "center": [0, 0], "radius": 0.3},
                "epsilon": 0.05,
                "p": 2,
                "boundary": "re_z2",
                "reference": "re_z2",
                "tol": 1e-12,
            }
        )
    )
    solution = tmp_path / "solution.csv"
    status, report, _ = _run(capsys, ["solve", "--config", str(problem), "--out", str(solution)])
    assert status == EXIT_OK
    assert report["converged"] is True
    assert report["comparison_held"] is True
    assert report["sup_error_vs_reference"] <= 1e-7
    assert report["scheme_constant"] == "1/2"
    assert solution.read_text().startswith("x1,x2,value,node_class\n")


def test_solve_rejects_inconsistent_problem(capsys, tmp_path):
    problem = tmp_path / "problem.json"
    problem.write_text(
        json.dumps(
            {
                "dimension": 2,
                "domain": {"kind": "ball", "center": [0, 0], "radius": 0.3},
                "epsilon": 0.05,
                "stencil": "cell24",
                "boundary": 1.0,
            }
        )
    )
    status, _, err = _run(capsys, ["solve", "--config", str(problem)])
    assert status == EXIT_USAGE
    assert "stencil" in err


def test_solve_reports_non_convergence(capsys, tmp_path):
    problem = tmp_path / "problem.json"
    problem.write_text(
        json.dumps(
            {
                "dimension": 2,
                "domain": {"kind": "ball", "center": [0, 0], "radius": 0.3},
                "epsilon": 0.05,
                "p": 4,
                "boundary": "step_tanh",
                "max_iters": 2,
            }
        )
    )
    status, report, _ = _run(capsys, ["solve", "--config", str(problem)])
    assert status == EXIT_FAILED
    assert report["converged"] is False


def test_walsh_and_trig(capsys):
    status, report, _ = _run(capsys, ["verify-walsh", "--degree", "6", "--trials", "50"])
    assert status == EXIT_OK and report["pass"] is True
    status, report, _ = _run(capsys, ["verify-trig", "--kmax", "6"])
    assert status == EXIT_OK and report["hexagon_cos4_sum"] == "9/4"


@pytest.mark.parametrize("subcommand", SUBCOMMANDS)
def test_every_subcommand_has_help(capsys, subcommand):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([subcommand, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "--seed" in text
    assert "default" in text
