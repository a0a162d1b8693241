"""
File: config_manager.py
Location: Project root
Description: Configuration management system with hierarchical merging
Author: Patrick Jordan
Version: 2026-10

Handles configuration loading and merging from:
1. default_config.json - Numerical defaults (Kirchhoff constants, solver, grids)
2. runtime_config.json - Output, visualization and display settings
3. experiment files - Experiment-specific settings (.json or flat key=value .cfg)
4. experiment overrides - Optional runtime overrides in experiment file
5. command-line key=value pairs

Configuration hierarchy: later overrides earlier. Every key set by layers 3-5
must exist in the defaults; unknown keys raise ConfigParseError naming the key
and its line.
"""

import ast
import json
import os
from typing import Dict, List, Optional, Sequence, Tuple

from src.errors import ConfigParseError

# Experiment keys that describe the run rather than set parameters
META_KEYS = ("experiment_id", "description", "output_prefix", "command", "name")

# Runtime sections that experiment overrides may touch
RUNTIME_SECTIONS = ("output", "visualization", "display")

# Short command-line names
ALIASES = {
    "a": "kirchhoff.a",
    "b": "kirchhoff.b",
    "p": "kirchhoff.p",
    "k": "constants.k",
    "tau": "constants.tau",
    "nu": "constants.nu",
    "S": "thresholds.S",
    "q": "thresholds.q",
    "lambda": "thresholds.lambda",
    "tol": "solver.tol",
    "max_iter": "solver.max_iter",
    "seed": "random_seed",
    "eps": "epsilon",
}

COMMANDS = (
    "solve-const",
    "solve",
    "sweep",
    "thresholds",
    "check-potentials",
    "verify",
)


def parse_value(text: str):
    """Python literal if the text is one, else the stripped string."""
    text = text.strip()
    if text.lower() in ("null", "none"):
        return None
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _strip_notes(config: Dict) -> Dict:
    """Copy without documentation keys ("_note", "_description", ...)."""
    return {
        key: _strip_notes(value) if isinstance(value, dict) else value
        for key, value in config.items()
        if not key.startswith("_")
    }


class ConfigurationManager:
    """Configuration management for ground-state solver runs.

    Configuration hierarchy (later overrides earlier):
    1. default_config.json - Numerical defaults
    2. runtime_config.json - Output/visualization settings
    3. experiment file - Experiment-specific settings
    4. experiment overrides - Optional runtime overrides in experiment file
    5. command-line key=value pairs
    """

    def __init__(self, config_root: str):
        """Initialize configuration manager with root configuration directory.

        Args:
            config_root: Root directory containing all configuration files
        """
        self.config_root = config_root
        self.experiment_index = None
        self.current_experiment = None
        self.merged_config = {}
        self.sources: Dict[str, str] = {}

    # ==========================================
    # LOADING
    # ==========================================

    def load_defaults(self) -> Dict:
        """Defaults plus runtime settings, without experiment."""
        merged_config = {"version": "1.0"}

        # 1. Load numerical defaults
        default_config = self._load_json_file(
            os.path.join(self.config_root, "default_config.json")
        )
        for key, value in _strip_notes(default_config).items():
            if key not in ("version", "description"):
                merged_config[key] = value

        # 2. Load runtime config (output, visualization, display)
        runtime_config_path = os.path.join(self.config_root, "runtime_config.json")
        if os.path.exists(runtime_config_path):
            runtime_config = _strip_notes(self._load_json_file(runtime_config_path))
            for section in RUNTIME_SECTIONS:
                merged_config[section] = runtime_config.get(section, {})

        merged_config["experiment"] = {
            "id": "adhoc",
            "name": "",
            "description": "",
            "output_prefix": "adhoc",
            "command": None,
        }
        self.merged_config = merged_config
        return merged_config

    def load_experiment(self, experiment_id: str) -> Dict:
        """Load complete configuration for a specific experiment.

        Args:
            experiment_id: ID of the experiment to load from exp_index.json

        Returns:
            Dict: Complete merged configuration for the experiment

        Raises:
            ConfigParseError: If experiment_id not found or a key is unknown
            FileNotFoundError: If required configuration files missing
        """
        self._load_experiment_index()

        experiment_entry = self._find_experiment(experiment_id)
        if not experiment_entry:
            raise ConfigParseError(f"Experiment '{experiment_id}' not found in index")

        exp_config_path = os.path.join(
            self.config_root, "experiments", experiment_entry["config_file"]
        )
        return self.load_config_file(exp_config_path, experiment_entry)

    def load_config_file(self, path: str, experiment_entry: Optional[Dict] = None) -> Dict:
        """Merge an experiment file (.json or flat .cfg) over the defaults."""
        self.load_defaults()

        if path.endswith(".cfg"):
            experiment_config = self._parse_cfg_file(path)
        else:
            experiment_config = self._load_json_file(path)
        self.current_experiment = experiment_config

        self.merged_config = self._build_merged_config(
            experiment_config, experiment_entry or {}, os.path.basename(path)
        )
        return self.merged_config

    def _build_merged_config(
        self, experiment_config: Dict, experiment_entry: Dict, source: str
    ) -> Dict:
        """Build the merged configuration.

        Args:
            experiment_config: The experiment-specific configuration
            experiment_entry: The experiment entry from index
            source: File label used in error messages

        Returns:
            Dict: Complete merged configuration
        """
        merged_config = self.merged_config

        # 3. Apply experiment-specific settings
        for section, value in _strip_notes(experiment_config).items():
            if section in META_KEYS or section == "overrides":
                continue
            lines = experiment_config.get("_lines", {})
            self._merge_checked(merged_config, section, value, source, lines)

        # 4. Apply any experiment-specific overrides
        if "overrides" in experiment_config:
            self._apply_overrides(merged_config, experiment_config["overrides"], source)

        # 5. Add experiment metadata
        experiment_id = experiment_config.get(
            "experiment_id", experiment_entry.get("id", "adhoc")
        )
        merged_config["experiment"] = {
            "id": experiment_id,
            "name": experiment_entry.get("name", ""),
            "description": experiment_entry.get(
                "description", experiment_config.get("description", "")
            ),
            "output_prefix": experiment_config.get("output_prefix", experiment_id),
            "command": experiment_config.get("command"),
        }

        return merged_config

    def _merge_checked(
        self, config: Dict, key: str, value, source: str, lines: Dict, prefix: str = ""
    ) -> None:
        """Set config[key] = value, recursing into sections; unknown keys raise."""
        dotted = f"{prefix}{key}"
        if key not in config:
            raise ConfigParseError(
                f"Unknown configuration key in {source}",
                key=dotted,
                line=lines.get(dotted, source),
            )
        if isinstance(config[key], dict):
            if not isinstance(value, dict):
                raise ConfigParseError(
                    f"Section '{dotted}' needs a mapping in {source}",
                    key=dotted,
                    line=lines.get(dotted, source),
                )
            for sub_key, sub_value in value.items():
                self._merge_checked(
                    config[key], sub_key, sub_value, source, lines, prefix=f"{dotted}."
                )
        else:
            config[key] = value
            self.sources[dotted] = source

    def _apply_overrides(self, config: Dict, overrides: Dict, source: str) -> None:
        """Apply experiment-specific runtime overrides (output, visualization, display).

        Uses deep merging to preserve nested settings.

        Raises:
            ConfigParseError: If an unknown override section is encountered
        """
        for section, settings in overrides.items():
            if section == "comment" or section.startswith("_"):
                continue

            if section not in RUNTIME_SECTIONS:
                raise ConfigParseError(
                    f"Unknown override section '{section}'. Valid sections are: "
                    f"{', '.join(RUNTIME_SECTIONS)}",
                    key=f"overrides.{section}",
                    line=source,
                )

            if isinstance(settings, dict) and isinstance(config.get(section), dict):
                self._deep_merge_dict(config[section], settings)
            else:
                config[section] = settings

    def apply_cli_overrides(self, pairs: Sequence[str]) -> Dict:
        """Apply key=value pairs from the command line (aliases allowed).

        Raises:
            ConfigParseError: If a pair is malformed or names an unknown key
        """
        if not self.merged_config:
            self.load_defaults()

        for position, pair in enumerate(pairs, start=1):
            label = f"argv {position}"
            key, value = self._split_pair(pair, label)
            self.set_value(ALIASES.get(key, key), value, line=label)
        return self.merged_config

    def set_value(self, key_path: str, value, line: Optional[object] = None) -> None:
        """Set an existing configuration value using dot notation."""
        keys = key_path.split(".")
        current = self.merged_config
        for depth, key in enumerate(keys):
            if not isinstance(current, dict) or key not in current:
                raise ConfigParseError("Unknown configuration key", key=key_path, line=line)
            if depth == len(keys) - 1:
                if isinstance(current[key], dict):
                    raise ConfigParseError(
                        "Cannot assign a value to a whole section", key=key_path, line=line
                    )
                current[key] = value
                self.sources[key_path] = str(line)
            else:
                current = current[key]

    # ==========================================
    # FILE PARSING
    # ==========================================

    @staticmethod
    def _split_pair(text: str, line: object) -> Tuple[str, object]:
        if "=" not in text:
            raise ConfigParseError(f"Expected key=value, got '{text.strip()}'", line=line)
        key, value = text.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigParseError("Missing key before '='", line=line)
        return key, parse_value(value)

    def _parse_cfg_file(self, file_path: str) -> Dict:
        """Flat key=value file with dotted sections into a nested dict.

        Lines starting with # are comments. Meta keys (command, experiment_id,
        output_prefix, description) stay at the top level. Line numbers are kept
        under "_lines" for error messages.
        """
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"Configuration file not found: {file_path}")

        config: Dict = {"_lines": {}}
        with open(file_path, "r", encoding="utf-8") as f:
            for number, raw in enumerate(f, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                key, value = self._split_pair(line, number)
                key = ALIASES.get(key, key)
                config["_lines"][key] = number

                if key in META_KEYS:
                    config[key] = value
                    continue

                # Rebuild nesting from the dotted path
                current = config
                parts = key.split(".")
                for part in parts[:-1]:
                    current = current.setdefault(part, {})
                    if not isinstance(current, dict):
                        raise ConfigParseError(
                            "Key used both as value and section", key=key, line=number
                        )
                current[parts[-1]] = value
        return config

    def _load_experiment_index(self) -> None:
        """Load the experiment index file."""
        index_path = os.path.join(self.config_root, "experiments", "exp_index.json")
        self.experiment_index = self._load_json_file(index_path)

    def _find_experiment(self, experiment_id: str) -> Optional[Dict]:
        """Find experiment entry in the index."""
        for exp in self.experiment_index.get("experiments", []):
            if exp["id"] == experiment_id:
                return exp
        return None

    def list_experiments(self) -> List[Dict]:
        self._load_experiment_index()
        return self.experiment_index.get("experiments", [])

    def _load_json_file(self, file_path: str) -> Dict:
        """Load and parse a JSON file."""
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError:
            raise FileNotFoundError(f"Configuration file not found: {file_path}")
        except json.JSONDecodeError as e:
            raise ConfigParseError(f"Invalid JSON in {file_path}: {e.msg}", line=e.lineno)

    # ==========================================
    # ACCESS AND EXPORT
    # ==========================================

    def get_value(self, key_path: str, default=None):
        """Get a configuration value using dot notation.

        Args:
            key_path: Dot-separated path to the value (e.g., "solver.tol")
            default: Default value if key not found

        Returns:
            The configuration value or default
        """
        keys = key_path.split(".")
        value = self.merged_config

        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default

        return value

    def validate_configuration(self) -> List[str]:
        """Validate the loaded configuration for completeness and consistency.

        Returns:
            List[str]: List of validation errors (empty if valid)
        """
        errors = []

        required_keys = ["kirchhoff", "solver", "grid", "potential", "output"]
        for key in required_keys:
            if key not in self.merged_config:
                errors.append(f"Missing required configuration section: {key}")

        command = self.get_value("experiment.command")
        if command is not None and command not in COMMANDS:
            errors.append(f"Invalid command: {command}")

        for key in ("kirchhoff.a", "kirchhoff.b", "constants.k", "constants.tau", "constants.nu"):
            value = self.get_value(key)
            if not isinstance(value, (int, float)) or value <= 0:
                errors.append(f"{key} must be a positive number, got {value!r}")

        eps_list = self.get_value("sweep.eps_list", [])
        if not isinstance(eps_list, (list, tuple)) or not eps_list:
            errors.append("sweep.eps_list must be a non-empty list")

        return errors

    def export_merged_config(self, output_path: str) -> None:
        """Export the merged configuration to a file for debugging/documentation.

        Args:
            output_path: Path where to save the merged configuration
        """
        os.makedirs(os.path.dirname(output_path) or ".", exist_ok=True)

        with open(output_path, "w", encoding="utf-8") as f:
            json.dump(self.merged_config, f, indent=2, default=str)

        print(f"Merged configuration exported to: {output_path}")

    def print_config_sources(self) -> None:
        """Print information about where each configuration value comes from."""
        print("\nConfiguration Sources:")
        print("-" * 50)
        print("1. Numerical Defaults (default_config.json):")
        print("   - Kirchhoff constants a, b, p")
        print("   - Solver tolerances and grid sizes")
        print("   - Potential preset, sweep and lattice settings")
        print("\n2. Runtime Settings (runtime_config.json):")
        print("   - Output configuration")
        print("   - Visualization and display settings")
        print("\n3. Experiment Settings (exp_*.json / exp_*.cfg) and overrides")
        print("\n4. Command line key=value pairs")
        if self.sources:
            print("\nChanged keys:")
            for key, source in sorted(self.sources.items()):
                print(f"   {key:<32} <- {source}")

    def _deep_merge_dict(self, base_dict: Dict, override_dict: Dict) -> None:
        """Deep merge override_dict into base_dict in-place.

        Args:
            base_dict: The dictionary to merge into (modified in-place)
            override_dict: The dictionary with override values
        """
        for key, value in override_dict.items():
            if key.startswith("_"):
                continue
            if (
                key in base_dict
                and isinstance(base_dict[key], dict)
                and isinstance(value, dict)
            ):
                # Recursively merge nested dictionaries
                self._deep_merge_dict(base_dict[key], value)
            else:
                # Direct assignment for non-dict values or new keys
                base_dict[key] = value
