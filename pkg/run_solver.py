"""
File: run_solver.py
Location: Project root
Description: Main runner with CLI for the Kirchhoff ground-state solver
Author: Patrick Jordan
Version: 2026-10

This script provides command-line interface to:
- List available experiments
- Run experiments from the index
- Run single commands with key=value overrides
- Validate configurations (dry-run mode)

Commands:
- solve-const: constant-coefficient ground state on the radial grid (solve_const.csv)
- solve: variable-coefficient ground state on the rescaled grid (solve.csv)
- sweep: concentration sweep over eps (sweep.csv)
- thresholds: (t0, s0), c* and the consistency residual (thresholds.csv)
- check-potentials: condition report of the potential triple (conditions.csv)
- verify: property suites (verify.csv, lattice.csv / sweep.csv when those suites ran)

Exit status: 0 success, 1 invalid input, 2 solver non-convergence,
3 failing property check.

Usage:
    python run_solver.py list
    python run_solver.py run --experiment exp01_constant_ground_state
    python run_solver.py thresholds a=1 b=1 q=1
    python run_solver.py solve-const --config my_run.cfg tol=1e-9
    python run_solver.py verify --suite fibering --seed 7
"""

import argparse
import os
import sys
import time
from typing import Dict, List, Optional, Sequence

import pandas as pd

# Add project root to path
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

import helper_functions  # noqa: E402
from config_manager import ConfigurationManager  # noqa: E402
from src import logging  # noqa: E402
from src import validation  # noqa: E402
from src import verify  # noqa: E402
from src.concentration import epsilon_sweep, sweep_trends  # noqa: E402
from src.errors import (  # noqa: E402
    ConfigParseError,
    KirchhoffError,
    NonConvergenceError,
    PreconditionError,
    exit_code_for,
)
from src.functional import energy_identity_residuals  # noqa: E402
from src.g import SolverConfig  # noqa: E402
from src.groundstate import (  # noqa: E402
    GroundStateReport,
    default_check_grid,
    solve_constant,
    solve_variable,
)
from src.potentials import active_branch, check_conditions  # noqa: E402
from src.thresholds import THRESHOLD_COLUMNS, threshold_table  # noqa: E402


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors count as invalid input (exit 1), not as exit 2."""

    def error(self, message):
        raise ConfigParseError(f"{self.prog}: {message}")


class SolverRunner:
    """Loads configurations and dispatches solver commands."""

    def __init__(self, config_root: Optional[str] = None):
        """Initialize the runner.

        Args:
            config_root: Root directory for configuration files
        """
        if config_root is None:
            config_root = os.path.join(project_root, "config")

        self.config_root = config_root
        self.config_manager = ConfigurationManager(config_root)

    # ==========================================
    # EXPERIMENT INDEX
    # ==========================================

    def list_experiments(self) -> None:
        """List all available experiments from the index, grouped by their first tag."""
        experiments = self.config_manager.list_experiments()

        print("\nAvailable Experiments:")
        print("=" * 80)

        groups: Dict[str, List[Dict]] = {}
        for exp in experiments:
            tags = exp.get("tags") or ["untagged"]
            groups.setdefault(tags[0], []).append(exp)

        for group, entries in sorted(groups.items()):
            print(f"\n{group}:")
            print("-" * 40)
            for exp in entries:
                print(f"  {exp['id']:.<40} {exp.get('name', 'Unnamed')}")
                if exp.get("description"):
                    for line in self._wrap_text(exp["description"], 70, 6):
                        print(line)

        print("\n" + "=" * 80)
        print(f"Total experiments: {len(experiments)}")
        print("\nUse 'python run_solver.py run --experiment <id>' to run an experiment")

    def _wrap_text(self, text: str, width: int, indent: int) -> List[str]:
        """Wrap text to specified width with indentation."""
        words = text.split()
        lines = []
        current_line = " " * indent

        for word in words:
            if len(current_line) + len(word) + 1 <= width + indent:
                current_line += word + " "
            else:
                lines.append(current_line.rstrip())
                current_line = " " * indent + word + " "

        if current_line.strip():
            lines.append(current_line.rstrip())

        return lines

    # ==========================================
    # CONFIGURATION
    # ==========================================

    def load(
        self,
        command: Optional[str],
        config_file: Optional[str] = None,
        experiment_id: Optional[str] = None,
        overrides: Sequence[str] = (),
    ) -> Dict:
        """Merge defaults, experiment or config file and key=value overrides.

        Raises:
            ConfigParseError: On unknown keys or malformed entries
            PreconditionError: If the merged configuration is incomplete
        """
        if experiment_id:
            merged = self.config_manager.load_experiment(experiment_id)
        elif config_file:
            merged = self.config_manager.load_config_file(config_file)
        else:
            merged = self.config_manager.load_defaults()

        merged = self.config_manager.apply_cli_overrides(overrides)
        if command is not None:
            merged["experiment"]["command"] = command
        if merged["experiment"]["command"] is None:
            raise ConfigParseError(
                "No command given and the configuration names none", key="command"
            )

        errors = self.config_manager.validate_configuration()
        if errors:
            print("  [FAIL] Configuration validation failed:")
            for error in errors:
                print(f"    - {error}")
            raise PreconditionError("; ".join(errors))
        return merged

    # ==========================================
    # EXECUTION
    # ==========================================

    def run(
        self,
        command: Optional[str] = None,
        config_file: Optional[str] = None,
        experiment_id: Optional[str] = None,
        overrides: Sequence[str] = (),
        dry_run: bool = False,
        suite: Optional[str] = None,
        seed: Optional[int] = None,
    ) -> Optional[SolverConfig]:
        """Load, validate and execute one command.

        Args:
            command: Subcommand; None takes the command of the experiment
            config_file: Experiment file (.json or .cfg) outside the index
            experiment_id: Experiment from exp_index.json
            overrides: key=value pairs applied last
            dry_run: If True, only validate configuration without running
            suite: verify suite selection (overrides verify.suite)
            seed: Random seed (overrides random_seed)

        Returns:
            SolverConfig of the run, or None for a dry run
        """
        pairs = list(overrides)
        if suite is not None:
            pairs.append(f"verify.suite={suite!r}")
        if seed is not None:
            pairs.append(f"random_seed={int(seed)}")

        merged = self.load(command, config_file, experiment_id, pairs)
        command = merged["experiment"]["command"]

        validation.validate_inputs(merged)
        config = SolverConfig(merged)
        if dry_run:
            self.config_manager.print_config_sources()
            config.print_config_summary()
            print("[OK] Dry run completed - configuration is valid")
            return None

        output_path = config.ensure_output_path()
        helper_functions.init_debug_log(
            output_path, config.output_prefix, config.run_timestamp, config.create_debug_log
        )
        try:
            helper_functions.debug_print(f"Command: {command}")
            if config.export_merged_config:
                filename = helper_functions.generate_filename(
                    "merged_config", config.output_prefix, config.run_timestamp, "config"
                )
                self.config_manager.export_merged_config(
                    os.path.join(output_path, "debug", filename)
                )

            handler = COMMAND_HANDLERS[command]
            start = time.time()
            summary = handler(config)
            print(f"[OK] {command}: {summary} ({time.time() - start:.2f} s) -> {output_path}")
        finally:
            helper_functions.close_debug_log()
        return config


# ==========================================
# COMMAND HANDLERS
# ==========================================


def _write(frame: pd.DataFrame, filename: str, config: SolverConfig) -> None:
    if config.export_summary:
        logging.export_data(frame, filename, config.output_path)


def _require_converged(report: GroundStateReport, label: str) -> None:
    if not report.converged:
        raise NonConvergenceError(
            f"{label}: tangential gradient {report.grad_sup:.3e} above "
            f"tol after {report.iterations} iterations",
            trace=report.trace,
        )


def command_solve_const(config: SolverConfig) -> str:
    start = time.time()
    cc = config.constants
    report = solve_constant(cc, config.params, config.radial_grid, config.options)

    row = {"k": cc.k, "tau": cc.tau, "nu": cc.nu, **report.summary()}
    row.update({f"identity_{k}": v for k, v in energy_identity_residuals(
        report.functional, report.field).items()})  # fmt: skip
    row.update(report.invariant_checks(config.options.tol))
    frame = pd.DataFrame([row])

    _write(frame, "solve_const.csv", config)
    logging.export_report(report, "const", config)
    logging.print_results("Constant ground state", frame, time.time() - start, config)
    _require_converged(report, "solve-const")
    return f"level={report.level!r} iterations={report.iterations}"


def command_solve(config: SolverConfig) -> str:
    start = time.time()
    spec = config.potential
    if config.show_condition_report:
        check_grid = config.check_grid or default_check_grid(
            spec, config.epsilon, config.cartesian_grid, config.options.check_nodes
        )
        logging.print_condition_report(check_conditions(spec, check_grid), spec.name)

    report = solve_variable(
        config.params, spec, config.epsilon, config.cartesian_grid, config.options,
        check_grid=config.check_grid,
    )  # fmt: skip
    frame = pd.DataFrame([{"potential": spec.name, "epsilon": config.epsilon,
                           **report.summary()}])  # fmt: skip

    _write(frame, "solve.csv", config)
    logging.export_report(report, f"eps{config.epsilon:g}", config)
    logging.print_results("Variable ground state", frame, time.time() - start, config)
    _require_converged(report, "solve")
    return f"level={report.level!r} max_point={report.max_point}"


def command_sweep(config: SolverConfig) -> str:
    start = time.time()
    report = epsilon_sweep(
        config.params, config.potential, config.eps_list, config.policy,
        config.options, config.workers,
    )  # fmt: skip
    config.last_sweep = report
    frame = report.to_frame()
    _write(frame, "sweep.csv", config)
    _export_sweep_extras(report, config)

    logging.print_results("Concentration sweep", frame, time.time() - start, config)
    trends = sweep_trends(report)
    logging.print_check_table(trends)
    failed = len(report.records) - len(report.fields)
    if failed:
        raise NonConvergenceError(f"sweep: {failed} epsilon value(s) failed to solve")
    return f"branch={report.branch} eps={len(report.records)} trends_ok={bool(trends['passed'].all())}"


def _export_sweep_extras(report, config: SolverConfig) -> None:
    for eps, field_ in report.fields.items():
        logging.export_field(field_, f"eps{eps:g}", config)
    if config.save_plots:
        filename = helper_functions.generate_filename(
            "sweep", config.output_prefix, config.run_timestamp, category="plot"
        )
        logging.plot_sweep(
            report.to_frame(extended=True), os.path.join(config.output_path, filename)
        )


def command_thresholds(config: SolverConfig) -> str:
    rows = pd.DataFrame([{"a": config.params.a, "b": config.params.b,
                          "S": config.S, "q": config.q}])  # fmt: skip
    frame = threshold_table(rows)[THRESHOLD_COLUMNS]
    _write(frame, "thresholds.csv", config)

    # One CSV row on stdout
    print(frame.to_csv(index=False, float_format=helper_functions.format_float,
                       lineterminator="\n"), end="")  # fmt: skip
    return f"c_star={frame['c_star'].iloc[0]!r}"


def command_check_potentials(config: SolverConfig) -> str:
    spec = config.potential
    check_grid = config.check_grid or default_check_grid(
        spec, config.epsilon, config.cartesian_grid, config.options.check_nodes
    )
    report = check_conditions(spec, check_grid)
    _write(report, "conditions.csv", config)

    if config.show_condition_report:
        logging.print_condition_report(report, spec.name)
    else:
        print(report.to_csv(index=False, float_format=helper_functions.format_float,
                            lineterminator="\n"), end="")  # fmt: skip
    return f"{spec.name}: active branch {active_branch(report) or 'none'}"


def command_verify(config: SolverConfig) -> str:
    start = time.time()
    results = verify.run_suites(config)
    _write(results, "verify.csv", config)

    if config.last_comparison is not None:
        comparison = config.last_comparison
        _write(comparison.pairs, "lattice.csv", config)
        if config.save_plots:
            filename = helper_functions.generate_filename(
                "lattice", config.output_prefix, config.run_timestamp, category="plot"
            )
            logging.plot_lattice(comparison.graph, os.path.join(config.output_path, filename))
    if config.last_sweep is not None:
        _write(config.last_sweep.to_frame(), "sweep.csv", config)
        _export_sweep_extras(config.last_sweep, config)

    logging.print_results("Verification", results, time.time() - start, config)
    verify.assert_passed(results)
    return f"{len(results)} checks passed"


COMMAND_HANDLERS = {
    "solve-const": command_solve_const,
    "solve": command_solve,
    "sweep": command_sweep,
    "thresholds": command_thresholds,
    "check-potentials": command_check_potentials,
    "verify": command_verify,
}


# ==========================================
# ENTRY POINT
# ==========================================


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        description="Kirchhoff ground-state solver",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # List all available experiments
  python run_solver.py list

  # Run an experiment from the index (validation only)
  python run_solver.py run --experiment exp05_aligned_sweep --dry-run

  # Thresholds for a = b = q = 1
  python run_solver.py thresholds a=1 b=1 q=1

  # Fibering property suite with a fixed seed
  python run_solver.py verify --suite fibering --seed 7
        """,
    )

    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    subparsers.add_parser("list", help="List available experiments")

    run_parser = subparsers.add_parser("run", help="Run an experiment from the index")
    run_parser.add_argument("--experiment", "-e", required=True, help="Experiment ID to run")
    run_parser.add_argument(
        "--dry-run", "-d", action="store_true",
        help="Validate configuration without solving",
    )  # fmt: skip
    run_parser.add_argument("overrides", nargs="*", help="key=value overrides")

    helps = {
        "solve-const": "Constant-coefficient ground state (radial grid)",
        "solve": "Variable-coefficient ground state at the configured epsilon",
        "sweep": "Concentration sweep over sweep.eps_list",
        "thresholds": "Compactness thresholds t0, s0 and c*",
        "check-potentials": "Condition report of the potential triple",
        "verify": "Run property suites",
    }
    for name, text in helps.items():
        sub = subparsers.add_parser(name, help=text)
        sub.add_argument("--config", "-c", help="Experiment file (.json or key=value .cfg)")
        sub.add_argument(
            "--dry-run", "-d", action="store_true",
            help="Validate configuration without solving",
        )  # fmt: skip
        sub.add_argument("overrides", nargs="*", help="key=value overrides")
        if name == "verify":
            sub.add_argument("--suite", help="all, quick, or a comma list of suites")
            sub.add_argument("--seed", type=int, help="Random seed of the draws")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit status."""
    try:
        parser = build_parser()
        args = parser.parse_args(argv)

        runner = SolverRunner()
        if args.command == "list":
            runner.list_experiments()
        elif args.command == "run":
            runner.run(
                experiment_id=args.experiment, overrides=args.overrides, dry_run=args.dry_run
            )
        elif args.command in COMMAND_HANDLERS:
            runner.run(
                command=args.command,
                config_file=args.config,
                overrides=args.overrides,
                dry_run=args.dry_run,
                suite=getattr(args, "suite", None),
                seed=getattr(args, "seed", None),
            )
        else:
            parser.print_help()
        return 0

    except (KirchhoffError, FileNotFoundError) as e:
        print(f"\n[ERROR] {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
