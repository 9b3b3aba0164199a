import csv
import math

import pytest

from hslab.config import DEFAULT_INI, OUTPUT_DIR_ENV
from hslab.constants import ProblemParams, compute_constants, sobolev_constant
from hslab.main import (
    CONSTANTS_COLUMNS,
    DECOMPOSITION_COLUMNS,
    EXPANSION_COLUMNS,
    INTEGRALS_COLUMNS,
    SOLUTION_COLUMNS,
    SWEEP_COLUMNS,
    main,
)
from hslab.report import read_json, strip_volatile


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    return tmp_path


def run(*argv):
    with pytest.raises(SystemExit) as excinfo:
        main(list(argv))
    return excinfo.value.code


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_constants_reports(workdir):
    assert run("constants", "--n", "6", "--lambda", "1", "--output-dir", "out") == 0
    report = read_json(workdir / "out" / "constants.json")
    consts = compute_constants(ProblemParams(6, 1.0))
    assert report["subcommand"] == "constants"
    assert report["D_star"] == pytest.approx(consts.D_star, rel=1e-15)
    assert report["beta_star"] == pytest.approx(report["D_star"], rel=1e-12)
    assert report["sign_changing_bound"] == pytest.approx(2.0 * consts.D_star)
    assert max(report["extended_precision_error"].values()) <= 1e-10 * consts.d_star
    rows = read_csv(workdir / "out" / "constants.csv")
    assert rows[0] == CONSTANTS_COLUMNS
    assert len(rows) == 2
    assert float(rows[1][2]) == consts.k_sobolev


def test_reports_are_deterministic(workdir):
    assert run("constants", "--format", "json") == 0
    first = read_json(workdir / "hslab-out" / "constants.json")
    assert run("constants", "--format", "json") == 0
    second = read_json(workdir / "hslab-out" / "constants.json")
    assert strip_volatile(first) == strip_volatile(second)
    assert not (workdir / "hslab-out" / "constants.csv").exists()


def test_output_dir_environment(workdir, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(workdir / "env-out"))
    assert run("constants") == 0
    assert (workdir / "env-out" / "constants.json").exists()


def test_parameter_error_exits_two(capsys):
    assert run("constants", "--n", "2") == 2
    assert capsys.readouterr().err.startswith("Error:")


def test_unknown_config_key_exits_two(workdir, capsys):
    (workdir / "hslab.ini").write_text("[constants]\ndim = 4\n")
    assert run("constants") == 2
    assert "dim" in capsys.readouterr().err


def test_init_config(workdir):
    assert run("init-config") == 0
    assert (workdir / "hslab.ini").read_text() == DEFAULT_INI
    assert run("init-config") == 2
    (workdir / "hslab.ini").write_text("[constants]\nn = 4\n")
    assert run("init-config", "--force") == 0
    assert (workdir / "hslab.ini").read_text() == DEFAULT_INI
    assert run("init-config", "--path", "other.ini") == 0
    assert (workdir / "other.ini").exists()


def test_integrals(workdir):
    assert run("integrals", "--output-dir", "out") == 0
    report = read_json(workdir / "out" / "integrals.json")
    row = report["rows"][0]
    assert row["direct"] == pytest.approx(1.0 / 24.0, rel=1e-10)
    assert report["max_recurrence_rel_err"] <= report["tolerance"]
    assert read_csv(workdir / "out" / "integrals.csv")[0] == INTEGRALS_COLUMNS


def test_standard_bubble(workdir):
    assert run("bubble", "--n", "4", "--kind", "standard", "--output-dir", "out") == 0
    report = read_json(workdir / "out" / "bubble.json")
    assert report["residual_sup"] <= 1e-6
    assert report["quotient_rel_err"] <= 1e-6
    assert report["k_from_quotient"] == pytest.approx(sobolev_constant(4), rel=1e-6)
    assert set(report["energies"]) == {"J_infinity", "J"}
    rows = read_csv(workdir / "out" / "bubble.csv")
    assert rows[0] == ["r", "U", "residual"]
    assert len(rows) == 122


def test_singular_bubble_energy(workdir):
    assert run("bubble", "--n", "6", "--lambda", "1", "--format", "json") == 0
    report = read_json(workdir / "hslab-out" / "bubble.json")
    assert report["energy_from_quotient"] == pytest.approx(report["D_star"], rel=1e-5)
    assert report["k_from_quotient"] is None
    assert set(report["energies"]) == {"J_infinity"}


def test_sweep_table(workdir):
    argv = ("sweep", "--n", "4,5", "--lambda-points", "3", "--measure-quotient", "false")
    assert run(*argv, "--output-dir", "serial") == 0
    rows = read_csv(workdir / "serial" / "sweep.csv")
    assert rows[0] == SWEEP_COLUMNS
    assert len(rows) == 7
    assert all(row[7] == "" for row in rows[1:])
    report = read_json(workdir / "serial" / "sweep.json")
    assert report["ordering_ok"] and not report["failures"]
    assert report["max_quotient_rel_err"] is None

    assert run(*argv, "--output-dir", "parallel", "--workers", "2") == 0
    assert read_csv(workdir / "parallel" / "sweep.csv") == rows


def test_sweep_measures_quotient(workdir):
    assert run("sweep", "--n", "5", "--lambda-points", "2", "--ratio-max", "0.5",
               "--format", "json") == 0
    report = read_json(workdir / "hslab-out" / "sweep.json")
    assert report["max_quotient_rel_err"] <= 1e-6
    assert math.isclose(report["rows"][1]["lambda"], 0.5 * 9.0 / 4.0)


def test_decompose_single_bubble(workdir):
    assert run("decompose", "--nodes", "2048", "--scale-first", "5", "--scale-last", "7",
               "--extract", "false", "--output-dir", "out") == 0
    rows = read_csv(workdir / "out" / "decomposition.csv")
    assert rows[0] == DECOMPOSITION_COLUMNS
    assert len(rows) == 4
    report = read_json(workdir / "out" / "decomposition.json")
    assert report["decomposition"]["remainder_decreasing"] is True
    assert report["grid"]["first_node"] == pytest.approx(1e-6)


def test_expansion_below_threshold(workdir):
    assert run("expansion", "--n", "6", "--h0", "1", "--h2", "20", "--output-dir", "out") == 0
    report = read_json(workdir / "out" / "expansion.json")
    assert report["expansion"]["verdict"] == "below_D_star"
    assert report["expansion"]["verdict_basis"] == "fitted slope"
    assert report["existence"]["decided_by"] == "literal condition (advisory)"
    assert read_csv(workdir / "out" / "expansion.csv")[0] == EXPANSION_COLUMNS


def test_expansion_inconclusive_exits_one(workdir, capsys):
    assert run("expansion", "--n", "6", "--h0", "1", "--h2", "-20", "--format", "json") == 1
    assert "expansion inconclusive" in capsys.readouterr().err
    report = read_json(workdir / "hslab-out" / "expansion.json")
    assert report["expansion"]["verdict"] == "inconclusive"


def test_unconverged_solve_exits_one(workdir, capsys):
    assert run("solve", "--nodes", "256", "--seeds", "2", "--max-iter", "0", "--newton-iter", "0",
               "--format", "json") == 1
    err = capsys.readouterr().err
    assert "solve not accepted" in err and "residual" in err
    report = read_json(workdir / "hslab-out" / "solution.json")
    assert report["acceptance"]["failures"]
    assert report["acceptance"]["residual_tol"] == 1e-6


def test_solve_then_decompose_on_saved_background(workdir):
    assert run("solve", "--nodes", "2048", "--seeds", "3", "--output-dir", "out") == 0
    solution = read_json(workdir / "out" / "solution.json")
    assert solution["acceptance"]["failures"] == []
    assert solution["result"]["residual_norm"] <= 1e-6
    assert solution["multistart"]["relative_spread"] <= 1e-6
    assert solution["existence"]["regime"] == "(0,D*)"
    assert solution["existence"]["decided_by"] == "solver energy"
    assert read_csv(workdir / "out" / "solution.csv")[0] == SOLUTION_COLUMNS

    assert run("decompose", "--h2", "-4", "--delta-cap", "1", "--nodes", "2048",
               "--background", str(workdir / "out" / "solution.csv"), "--scale-first", "5",
               "--scale-last", "7", "--extract", "false", "--output-dir", "dec") == 0
    report = read_json(workdir / "dec" / "decomposition.json")
    assert report["background"]["energy"] == pytest.approx(solution["result"]["energy"], rel=1e-9)
    assert report["background"]["residual_norm"] <= 1e-6
    rows = report["decomposition"]["rows"]
    assert all(r["background_energy"] == report["background"]["energy"] for r in rows)


def test_decompose_background_needs_a_minimiser(workdir, capsys):
    assert run("decompose", "--background", "solve", "--nodes", "256", "--scale-first", "5",
               "--scale-last", "5", "--extract", "false", "--format", "json") == 1
    assert "background solve not accepted" in capsys.readouterr().err
