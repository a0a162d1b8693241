import json
import os

import pytest

from config_manager import ConfigurationManager, parse_value
from src.errors import ConfigParseError
from src.g import SolverConfig
from src.thresholds import BEST_SOBOLEV_CONSTANT

INDEX = os.path.join(os.path.dirname(__file__), os.pardir, "config", "experiments", "exp_index.json")
with open(INDEX, encoding="utf-8") as f:
    EXPERIMENT_IDS = [exp["id"] for exp in json.load(f)["experiments"]]


@pytest.fixture
def manager(config_root):
    return ConfigurationManager(config_root)


def _write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# ==========================================
# MERGING
# ==========================================


@pytest.mark.parametrize(
    "text, expected",
    [("[0.5, 0.25]", [0.5, 0.25]), ("true", True), ("null", None), ("1e-9", 1e-9),
     (" aligned ", "aligned"), ("'a,b'", "a,b")],
)  # fmt: skip
def test_parse_value(text, expected):
    assert parse_value(text) == expected


def test_defaults_drop_documentation_keys(manager):
    merged = manager.load_defaults()
    assert merged["kirchhoff"] == {"a": 1.0, "b": 1.0, "p": 5.0}
    assert "_S_note" not in merged["thresholds"]
    assert "_description" not in merged["output"]
    assert merged["output"]["core_outputs"]["export_summary"] is True
    assert merged["experiment"]["command"] is None


@pytest.mark.parametrize("experiment_id", EXPERIMENT_IDS)
def test_every_indexed_experiment_loads(manager, experiment_id):
    merged = manager.load_experiment(experiment_id)
    assert merged["experiment"]["id"] == experiment_id
    assert manager.validate_configuration() == []


def test_json_experiment_with_overrides(manager):
    merged = manager.load_experiment("exp07_potential_checks")
    assert merged["potential"]["preset"] == "competing"
    assert merged["display"]["show_condition_report"] is True
    assert merged["display"]["show_summary"] is True
    assert merged["experiment"]["command"] == "check-potentials"


def test_cfg_experiment(manager):
    merged = manager.load_experiment("exp06_vq_sweep")
    assert merged["kirchhoff"]["b"] == 0.05
    assert merged["kirchhoff"]["a"] == 1.0
    assert merged["potential"]["preset"] == "vq_competing"
    assert merged["sweep"]["eps_list"] == [0.5, 0.25, 0.125]
    assert merged["experiment"]["output_prefix"] == "vq_sweep"
    assert manager.sources["kirchhoff.b"] == "exp06_vq_sweep.cfg"


def test_cfg_aliases_and_comments(manager, tmp_path):
    path = _write_cfg(tmp_path, "# comment\ncommand = thresholds\n\na = 2\nq=0.5\n")
    merged = manager.load_config_file(path)
    assert merged["kirchhoff"]["a"] == 2
    assert merged["thresholds"]["q"] == 0.5
    assert merged["experiment"]["command"] == "thresholds"


def test_unknown_cfg_key_reports_key_and_line(manager, tmp_path):
    path = _write_cfg(tmp_path, "command = solve\nkirchhoff.c = 1\n")
    with pytest.raises(ConfigParseError) as info:
        manager.load_config_file(path)
    assert info.value.key == "kirchhoff.c"
    assert info.value.line == 2
    assert "kirchhoff.c" in str(info.value)


def test_malformed_cfg_line(manager, tmp_path):
    path = _write_cfg(tmp_path, "command = solve\njust text\n")
    with pytest.raises(ConfigParseError) as info:
        manager.load_config_file(path)
    assert info.value.line == 2


def test_value_for_a_section_is_rejected(manager, tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"command": "solve", "grid": 3}), encoding="utf-8")
    with pytest.raises(ConfigParseError, match="needs a mapping"):
        manager.load_config_file(str(path))


def test_unknown_json_section(manager, tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"command": "solve", "plotting": {"x": 1}}), encoding="utf-8")
    with pytest.raises(ConfigParseError) as info:
        manager.load_config_file(str(path))
    assert info.value.key == "plotting"
    assert info.value.line == "run.json"


def test_unknown_override_section(manager, tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"overrides": {"solver": {"tol": 1.0}}}), encoding="utf-8")
    with pytest.raises(ConfigParseError, match="Unknown override section"):
        manager.load_config_file(str(path))


def test_unknown_experiment(manager):
    with pytest.raises(ConfigParseError, match="not found"):
        manager.load_experiment("exp99_missing")


def test_missing_config_file(manager, tmp_path):
    with pytest.raises(FileNotFoundError):
        manager.load_config_file(str(tmp_path / "absent.cfg"))


def test_cli_overrides(manager):
    manager.load_defaults()
    merged = manager.apply_cli_overrides(["a=2", "solver.tol=1e-9", "eps=0.5"])
    assert merged["kirchhoff"]["a"] == 2
    assert merged["solver"]["tol"] == 1e-9
    assert merged["epsilon"] == 0.5
    assert manager.get_value("solver.tol") == 1e-9
    assert manager.get_value("solver.nope", "fallback") == "fallback"


@pytest.mark.parametrize(
    "pair, message", [("bogus=1", "Unknown"), ("kirchhoff=1", "whole section"),
                      ("novalue", "key=value"), ("=1", "Missing key")],
)  # fmt: skip
def test_cli_override_errors(manager, pair, message):
    manager.load_defaults()
    with pytest.raises(ConfigParseError, match=message) as info:
        manager.apply_cli_overrides(["a=1", pair])
    assert info.value.line == "argv 2"


def test_validate_configuration_collects_errors(manager):
    manager.load_defaults()
    manager.apply_cli_overrides(["a=-1", "sweep.eps_list=[]"])
    manager.set_value("experiment.command", "fly")
    errors = manager.validate_configuration()
    assert len(errors) == 3
    assert any("Invalid command" in e for e in errors)


def test_export_merged_config(manager, tmp_path):
    manager.load_experiment("exp02_threshold_table")
    path = tmp_path / "debug" / "merged.json"
    manager.export_merged_config(str(path))
    assert json.loads(path.read_text())["experiment"]["command"] == "thresholds"


# ==========================================
# SOLVER CONFIG
# ==========================================


def test_solver_config_from_defaults(merged_defaults):
    config = SolverConfig(merged_defaults)
    assert config.params.p == 5.0
    assert config.S == BEST_SOBOLEV_CONSTANT
    assert config.lam == config.q == 1.0
    assert config.radial_grid.n == 4000
    assert config.cartesian_grid.m == 33
    assert config.check_grid is None
    assert config.options.seed_widths == (1.0, 2.0)
    assert config.options.max_cartesian_nodes == 96
    assert config.potential.name == "aligned"
    assert config.eps_list == [0.5, 0.25, 0.125]
    assert config.output_path.startswith(merged_defaults["output"]["base_output_path"])
    assert config.output_path.endswith("_adhoc")


def test_default_truncation_levels(merged_defaults):
    merged_defaults["potential"]["preset"] = "competing"
    config = SolverConfig(merged_defaults)
    spec = config.potential
    assert config.truncation.c == spec.V.at(spec.x_star)
    assert config.truncation.d == pytest.approx(0.5 * (spec.P_max + spec.P_inf))
    assert config.truncation.e == spec.Q_max
    config.truncation.validate(spec)


def test_eps_list_is_sorted_descending(merged_defaults):
    merged_defaults["sweep"]["eps_list"] = [0.125, 0.5, 0.25]
    assert SolverConfig(merged_defaults).eps_list == [0.5, 0.25, 0.125]


def test_unknown_solver_option(merged_defaults):
    merged_defaults["solver"]["momentum"] = 0.9
    with pytest.raises(ConfigParseError) as info:
        SolverConfig(merged_defaults)
    assert info.value.key == "solver.momentum"


def test_reset_rng_replays_draws(merged_defaults):
    config = SolverConfig(merged_defaults)
    first = config.rng.uniform(size=3)
    config.reset_rng()
    assert (config.rng.uniform(size=3) == first).all()
    config.reset_rng(seed=11)
    assert config.random_seed == 11
