import ast
from pathlib import Path

import pandas as pd
import pytest

import run_solver
from run_solver import SolverRunner, build_parser, main
from src.errors import ConfigParseError

# Desk-scale constant solve that converges in well under a second
FAST_CONST = [
    "b=0.05",
    "grid.radial.R_dom=15.0",
    "grid.radial.n=300",
    "solver.max_domain_retries=0",
    "solver.boundary_threshold=1e-3",
]


@pytest.fixture
def out(tmp_path):
    return tmp_path / "output"


def _output(out):
    return f"output.base_output_path={str(out)!r}"


def _result(out, name):
    (path,) = out.glob(f"*/{name}")
    return pd.read_csv(path)


def test_parser_knows_every_command():
    parser = build_parser()
    for command in ("solve-const", "solve", "sweep", "thresholds", "check-potentials", "verify"):
        args = parser.parse_args([command, "a=1"])
        assert args.command == command
        assert args.overrides == ["a=1"]
    assert parser.parse_args(["verify", "--suite", "quick", "--seed", "3"]).seed == 3


def test_list_experiments(capsys):
    assert main(["list"]) == 0
    stdout = capsys.readouterr().out
    assert "exp01_constant_ground_state" in stdout
    assert "Total experiments: 7" in stdout


def test_thresholds_golden_ratio_case(out, capsys):
    assert main(["thresholds", "a=1", "b=1", "S=1", "q=1", _output(out)]) == 0

    frame = _result(out, "thresholds.csv")
    assert list(frame.columns) == ["a", "b", "S", "q", "t0", "s0", "c_star",
                                   "consistency_residual"]  # fmt: skip
    assert frame["t0"].iloc[0] == pytest.approx(1.6180339887, abs=1e-10)
    assert frame["s0"].iloc[0] == pytest.approx(2.6180339887, abs=1e-10)
    assert frame["consistency_residual"].iloc[0] < 1e-10
    assert "a,b,S,q,t0,s0,c_star,consistency_residual\n" in capsys.readouterr().out


def test_csv_bytes_are_reproducible(tmp_path):
    first, second = tmp_path / "one", tmp_path / "two"
    for target in (first, second):
        assert main(["thresholds", "q=2", _output(target)]) == 0
    (a,) = first.glob("*/thresholds.csv")
    (b,) = second.glob("*/thresholds.csv")
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_p_outside_range_exits_1(out, capsys):
    assert main(["thresholds", "p=7", _output(out)]) == 1
    assert "p in (4,6)" in capsys.readouterr().err
    assert not out.exists() or not list(out.glob("*/thresholds.csv"))


def test_unknown_key_exits_1(out, capsys):
    assert main(["solve", "kirchhoff.c=1", _output(out)]) == 1
    assert "kirchhoff.c" in capsys.readouterr().err


def test_usage_error_exits_1(capsys):
    assert main(["thresholds", "--bogus"]) == 1
    assert "unrecognized arguments" in capsys.readouterr().err


def test_missing_config_file_exits_1(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "absent.cfg")]) == 1


def test_dry_run_writes_nothing(out, capsys):
    assert main(["sweep", "--dry-run", _output(out)]) == 0
    printed = capsys.readouterr().out
    assert "Configuration Sources:" in printed
    assert "Configuration Summary:" in printed
    assert "Command: sweep" in printed
    assert "Dry run completed" in printed
    assert not list(out.glob("*/*.csv"))


def test_run_indexed_experiment(out):
    assert main(["run", "--experiment", "exp02_threshold_table", _output(out)]) == 0
    (path,) = out.glob("*_thresholds/thresholds.csv")
    assert path.exists()


def test_config_file_command(tmp_path, out):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command = check-potentials\npotential.preset = competing\n")
    assert main(["check-potentials", "--config", str(cfg), _output(out)]) == 0
    frame = _result(out, "conditions.csv")
    assert set(frame["condition"]) == {"PQ1", "PQ2", "VQ1", "VQ2"}


def test_solve_const_writes_summary_and_checks(out):
    assert main(["solve-const", *FAST_CONST, _output(out)]) == 0
    row = _result(out, "solve_const.csv").iloc[0]
    assert row["converged"]
    assert row["nehari"] and row["positivity"] and row["ps_bound"]
    assert abs(row["identity_quarter"]) < 1e-8
    assert row["k"] == row["tau"] == row["nu"] == 1.0


def test_non_convergence_exits_2_after_writing(out, capsys):
    assert main(["solve-const", *FAST_CONST, "max_iter=2", _output(out)]) == 2
    assert not _result(out, "solve_const.csv").iloc[0]["converged"]
    assert "tangential gradient" in capsys.readouterr().err


def test_verify_suite_with_seed(out):
    assert main(["verify", "--suite", "thresholds", "--seed", "7", _output(out)]) == 0
    frame = _result(out, "verify.csv")
    assert (frame["suite"] == "thresholds").all()
    assert frame["passed"].all()
    assert not list(out.glob("*/lattice.csv"))


def test_verify_unknown_suite_exits_1(out):
    assert main(["verify", "--suite", "nope", _output(out)]) == 1


def test_runner_load_requires_a_command(config_root):
    runner = SolverRunner(config_root)
    merged = runner.load("thresholds", overrides=["a=3"])
    assert merged["kirchhoff"]["a"] == 3
    assert merged["experiment"]["command"] == "thresholds"
    with pytest.raises(ConfigParseError, match="No command"):
        runner.load(None)


def test_project_root_is_on_path_before_local_imports():
    tree = ast.parse(Path(run_solver.__file__).read_text())
    body = tree.body
    path_setup = next(i for i, node in enumerate(body) if "sys.path.insert" in ast.unparse(node))
    local = {"helper_functions", "config_manager", "src"}
    for i, node in enumerate(body):
        if isinstance(node, ast.Import):
            names = [alias.name.split(".")[0] for alias in node.names]
        elif isinstance(node, ast.ImportFrom):
            names = [(node.module or "").split(".")[0]]
        else:
            continue
        if local.intersection(names):
            assert i > path_setup, ast.unparse(node)
