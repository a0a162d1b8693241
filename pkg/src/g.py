"""
File: g.py
Location: /src/g.py
Description: Solver configuration and run state (SolverConfig class)
Author: Patrick Jordan
Version: 2026-10

This module turns the merged configuration dictionary into typed solver objects.

Key Components:
- SolverConfig: Kirchhoff constants, grids, solver options, potential triple,
  sweep policy, truncation levels, random generator and output paths of one run

The configuration hierarchy (see config_manager.py):
1. default_config.json - Numerical defaults
2. runtime_config.json - Output/visualization settings
3. experiment config - Experiment-specific settings
4. experiment overrides / command line pairs
"""

# Standard library imports
import os
import time
from dataclasses import replace
from datetime import datetime
from typing import Dict, List, Optional

# Third-party imports
import numpy as np

# Local Imports
from src.concentration import SweepGridPolicy
from src.errors import ConfigParseError
from src.groundstate import ConstantCoefficients, DescentOptions, TruncationLevels
from src.model import CartesianGrid, KirchhoffParams, RadialGrid
from src.potentials import PotentialTripleSpec, spec_from_config
from src.thresholds import BEST_SOBOLEV_CONSTANT


class SolverConfig:
    """Typed view of one merged configuration.

    Attributes:
        params (KirchhoffParams): a, b, p
        constants (ConstantCoefficients): k, tau, nu for solve-const
        S, q, lam (float): Threshold inputs (S defaults to the best Sobolev constant)
        options (DescentOptions): Engine tolerances and retry settings
        radial_grid (RadialGrid): Grid for constant-coefficient solves
        cartesian_grid (CartesianGrid): Rescaled grid for variable solves
        check_grid (Optional[CartesianGrid]): Physical grid for condition checks
        potential (PotentialTripleSpec): V, P, Q with declared limits and x*
        epsilon (float): Concentration parameter for solve / truncation
        policy (SweepGridPolicy): Grids used along an eps sweep
        eps_list (List[float]): Sweep values, descending
        truncation (TruncationLevels): Clamp levels c, d, e
        lattice_values (List[float]): Values of k, tau, nu for the lattice check
        rng (np.random.Generator): Seeded generator for sampling checks
        output_path (str): Folder of this run
    """

    def __init__(self, config: Dict):
        """
        Initialize solver configuration from a configuration dictionary.

        The config comes from config_manager.py. Range checks live in
        src/validation.py; this class only converts types.

        Raises:
            ConfigParseError: If a value cannot be converted
        """
        self.full_configuration = config
        self.start_time = time.time()
        self.run_timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")

        try:
            self._init_model_parameters(config)
            self._init_solver_options(config)
            self._init_grids(config)
            self._init_potential(config)
            self._init_sweep(config)
            self._init_checks(config)
        except (TypeError, KeyError) as e:
            raise ConfigParseError(f"Malformed configuration value: {e}") from e

        self._init_output_settings(config)
        self._init_experiment_metadata(config)

        # Results of the last lattice and sweep suites, kept for plotting
        self.last_comparison = None
        self.last_sweep = None

    # ==========================================
    # NUMERICAL SETTINGS
    # ==========================================

    def _init_model_parameters(self, config: Dict) -> None:
        """Kirchhoff constants, constant coefficients and threshold inputs."""
        kirchhoff = config.get("kirchhoff", {})
        self.params = KirchhoffParams(
            a=kirchhoff.get("a", 1.0), b=kirchhoff.get("b", 1.0), p=kirchhoff.get("p", 5.0)
        )

        constants = config.get("constants", {})
        self.constants = ConstantCoefficients(
            k=constants.get("k", 1.0),
            tau=constants.get("tau", 1.0),
            nu=constants.get("nu", 1.0),
        )

        thresholds = config.get("thresholds", {})
        S = thresholds.get("S")
        self.S = float(S) if S is not None else BEST_SOBOLEV_CONSTANT
        self.q = float(thresholds.get("q", 1.0))
        lam = thresholds.get("lambda")
        self.lam = float(lam) if lam is not None else self.q

    def _init_solver_options(self, config: Dict) -> None:
        """DescentOptions from the solver section plus runtime flags."""
        solver = dict(config.get("solver", {}))
        solver["seed_widths"] = tuple(solver.get("seed_widths", (1.0, 2.0)))

        known = DescentOptions.__dataclass_fields__
        unknown = [key for key in solver if key not in known]
        if unknown:
            raise ConfigParseError("Unknown solver option", key=f"solver.{unknown[0]}")

        options = DescentOptions(**solver)
        cartesian = config.get("grid", {}).get("cartesian", {})
        check = config.get("grid", {}).get("check", {})
        self.options = replace(
            options,
            max_cartesian_nodes=int(cartesian.get("max_nodes", options.max_cartesian_nodes)),
            check_nodes=int(check.get("m", options.check_nodes)),
            show_progress=bool(
                config.get("visualization", {}).get("show_progress_bar", False)
            ),
        )

    def _init_grids(self, config: Dict) -> None:
        grid = config.get("grid", {})
        radial = grid.get("radial", {})
        self.radial_grid = RadialGrid(float(radial.get("R_dom", 20.0)), int(radial.get("n", 4000)))

        cartesian = grid.get("cartesian", {})
        self.cartesian_grid = CartesianGrid(
            float(cartesian.get("half_width", 8.0)), int(cartesian.get("m", 33))
        )

        check = grid.get("check", {})
        half_width = check.get("half_width")
        self.check_grid = (
            CartesianGrid(float(half_width), int(check.get("m", 41)))
            if half_width is not None
            else None
        )

    def _init_potential(self, config: Dict) -> None:
        """Potential triple, epsilon and truncation levels."""
        self.potential: PotentialTripleSpec = spec_from_config(config.get("potential", {}))
        self.epsilon = float(config.get("epsilon", 0.25))

        truncation = config.get("truncation", {})
        spec = self.potential
        c = truncation.get("c")
        d = truncation.get("d")
        e = truncation.get("e")
        self.truncation = TruncationLevels(
            c=float(c) if c is not None else spec.V.at(spec.x_star),
            d=float(d) if d is not None else 0.5 * (spec.P_max + spec.P_inf),
            e=float(e) if e is not None else spec.Q_max,
        )

    def _init_sweep(self, config: Dict) -> None:
        sweep = config.get("sweep", {})
        self.eps_list: List[float] = sorted(
            (float(eps) for eps in sweep.get("eps_list", [0.5, 0.25, 0.125])), reverse=True
        )
        self.policy = SweepGridPolicy(
            physical_half_width=float(sweep.get("physical_half_width", 2.0)),
            rescaled_spacing=float(sweep.get("rescaled_spacing", 0.5)),
            max_nodes=int(sweep.get("max_nodes", 65)),
            profile_half_width=float(sweep.get("profile_half_width", 3.5)),
            profile_nodes=int(sweep.get("profile_nodes", 29)),
            limit_R=float(sweep.get("limit_R", 20.0)),
            limit_n=int(sweep.get("limit_n", 2000)),
            decay_window=float(sweep.get("decay_window", 2.0)),
            check_nodes=self.options.check_nodes,
        )

    def _init_checks(self, config: Dict) -> None:
        """Lattice, verification suite, seed and worker settings."""
        self.lattice_values = [float(v) for v in config.get("lattice", {}).get("values", [])]

        verify = config.get("verify", {})
        self.suite = verify.get("suite", "all")
        self.draws = int(verify.get("draws", 50))

        self.random_seed = int(config.get("random_seed", 7))
        self.rng = np.random.default_rng(self.random_seed)
        workers = config.get("workers")
        self.workers: Optional[int] = int(workers) if workers is not None else None

    def reset_rng(self, seed: Optional[int] = None) -> None:
        """Restart the generator, optionally with a new seed."""
        if seed is not None:
            self.random_seed = int(seed)
        self.rng = np.random.default_rng(self.random_seed)

    # ==========================================
    # OUTPUT AND METADATA
    # ==========================================

    def _init_output_settings(self, config: Dict) -> None:
        """Initialize output-related settings."""
        output_config = config.get("output", {})

        self.base_output_path = output_config.get("base_output_path", "./output")

        core = output_config.get("core_outputs", {})
        self.export_summary = core.get("export_summary", True)
        self.export_fields = core.get("export_fields", False)
        self.export_trace = core.get("export_trace", False)

        debug = output_config.get("debug_outputs", {})
        self.export_merged_config = debug.get("export_merged_config", False)
        self.create_debug_log = debug.get("create_debug_log", False)

        viz_config = config.get("visualization", {})
        self.show_progress_bar = viz_config.get("show_progress_bar", False)
        self.save_plots = viz_config.get("save_plots", False)

        display_config = config.get("display", {})
        self.show_summary = display_config.get("show_summary", True)
        self.show_condition_report = display_config.get("show_condition_report", False)

    def _init_experiment_metadata(self, config: Dict) -> None:
        experiment = config.get("experiment", {})

        self.experiment_id = experiment.get("id", "adhoc")
        self.experiment_name = experiment.get("name", "")
        self.experiment_description = experiment.get("description", "")
        self.output_prefix = experiment.get("output_prefix") or self.experiment_id
        self.command = experiment.get("command")

        self.output_path = os.path.join(
            self.base_output_path, f"{self.run_timestamp}_{self.output_prefix}"
        )

    def ensure_output_path(self) -> str:
        """Create the run folder on first use."""
        os.makedirs(self.output_path, exist_ok=True)
        return self.output_path

    def print_config_summary(self) -> None:
        """Print a summary of the loaded configuration."""
        print("\nConfiguration Summary:")
        print("-" * 50)
        print(f"Experiment: {self.experiment_id}")
        print(f"Command: {self.command}")
        print(f"Kirchhoff: a={self.params.a:g}, b={self.params.b:g}, p={self.params.p:g}")
        print(f"Potential: {self.potential.name}")
        print(f"Solver tol: {self.options.tol:g} (max_iter {self.options.max_iter})")
        print(f"Output: {self.output_path}")
        print("-" * 50)
