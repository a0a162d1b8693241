"""
File: logging.py
Location: /src/logging.py
Description: Data export and results visualization module
Author: Patrick Jordan
Version: 2026-10

Handles all solver output including:
- CSV export of result tables (header row, stable column order,
  shortest round-trip floats)
- KGS1 field dumps of ground states
- Descent traces
- Console result blocks
- Plots of descent traces, sweep trends and the level lattice

Key Functions:
- export_data(): Single DataFrame to CSV
- export_report(): Fields and traces of a solved ground state
- print_results(): Console output formatting
- plot_trace() / plot_sweep() / plot_lattice(): Figures (seaborn + matplotlib)
"""

import os
from typing import Optional

import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns

import helper_functions
from src.model import Field, write_field


def export_data(df: pd.DataFrame, filename: str, output_path: str) -> str:
    """
    Export DataFrame to CSV.

    Floats use the shortest decimal string that round-trips, so identical
    results give identical bytes.

    Args:
        df: DataFrame to export
        filename: Name of the output file
        output_path: Folder of the run

    Returns:
        str: Full path of the written file
    """
    # Ensure the directory exists
    os.makedirs(output_path, exist_ok=True)

    full_path = os.path.join(output_path, filename)

    # Export with index=False to avoid adding an extra index column
    df.to_csv(
        full_path,
        index=False,
        float_format=helper_functions.format_float,
        na_rep="nan",
        lineterminator="\n",
    )

    print(f"Exported {len(df)} rows to {filename}")
    helper_functions.debug_print(f"CSV written: {full_path}")
    return full_path


def export_field(field: Field, name: str, config) -> Optional[str]:
    """KGS1 dump of a field if field export is enabled."""
    if not config.export_fields:
        return None

    filename = helper_functions.generate_filename(
        f"field_{name}", config.output_prefix, config.run_timestamp
    )
    path = os.path.join(config.ensure_output_path(), "fields", filename)
    write_field(path, field)
    print(f"Field written to {os.path.relpath(path, config.output_path)}")
    return path


def export_trace(trace: pd.DataFrame, name: str, config) -> Optional[str]:
    """Descent trace CSV if trace export is enabled."""
    if not config.export_trace or trace.empty:
        return None

    filename = helper_functions.generate_filename(
        f"trace_{name}", config.output_prefix, config.run_timestamp
    )
    return export_data(trace, filename, config.ensure_output_path())


def export_report(report, name: str, config) -> None:
    """Field, trace and trace plot of one GroundStateReport, each as configured."""
    export_field(report.field, name, config)
    export_trace(report.trace, name, config)
    if config.save_plots and not report.trace.empty:
        filename = helper_functions.generate_filename(
            f"trace_{name}", config.output_prefix, config.run_timestamp, category="plot"
        )
        plot_trace(report.trace, os.path.join(config.ensure_output_path(), filename), name)


# ==========================================
# CONSOLE OUTPUT
# ==========================================


def print_results(title: str, frame: pd.DataFrame, elapsed: float, config=None) -> None:
    """Print the result block of a command based on display settings."""
    print(f"{title} completed in {round(elapsed, 3)} seconds")

    if config is not None and not config.show_summary:
        return

    print(f"\n=============== {title.upper()} ===============")
    if frame.empty:
        print("(no rows)")
    else:
        with pd.option_context(
            "display.max_columns", None, "display.width", 160, "display.precision", 10
        ):
            print(frame.to_string(index=False))
    print("=" * 80)


def print_condition_report(report: pd.DataFrame, name: str) -> None:
    """Clause-by-clause condition report with witnesses."""
    print(f"\n=============== CONDITIONS: {name} ===============")
    for row in report.itertuples(index=False):
        tag = "[OK]  " if row.passed else "[FAIL]"
        print(f"{tag} {row.condition:<4} {row.clause:<28} {row.witness} ({row.value:.6g})")


def print_check_table(frame: pd.DataFrame, label_column: str = "check") -> None:
    """One tagged line per check row (columns: label_column, passed, value)."""
    for row in frame.itertuples(index=False):
        tag = "[OK]  " if row.passed else "[FAIL]"
        print(f"{tag} {getattr(row, label_column):<36} {row.value}")


# ==========================================
# PLOTS
# ==========================================


def plot_trace(trace: pd.DataFrame, output_file: str, label: str = "") -> None:
    """Level and tangential gradient over the iterations of one descent."""
    try:
        fig, ax = plt.subplots(2, 1, figsize=(7, 8), sharex=True)

        sns.lineplot(data=trace, x="iteration", y="level", ax=ax[0])
        ax[0].set_title(f"Descent {label}".strip())
        ax[0].set_ylabel("J(v)")

        sns.lineplot(data=trace, x="iteration", y="grad_sup", ax=ax[1])
        ax[1].set_yscale("log")
        ax[1].set_xlabel("Iteration")
        ax[1].set_ylabel("sup |tangential gradient|")

        plt.tight_layout()
        fig.savefig(output_file, dpi=150)
        plt.close(fig)
        print(f"Plot saved: {os.path.basename(output_file)}")

    except Exception as e:
        print(f"[WARN] Error generating trace plot: {e}")


def plot_sweep(frame: pd.DataFrame, output_file: str) -> None:
    """Distance to the admissible set, decay rate and profile distance against epsilon."""
    ok = frame[frame["status"] == "ok"] if "status" in frame.columns else frame
    if ok.empty:
        print("[WARN] No converged sweep rows to plot")
        return

    try:
        fig, ax = plt.subplots(1, 3, figsize=(15, 4.5))
        panels = (
            ("dist_AV", "dist(x_eps, admissible set)"),
            ("decay_c", "decay constant c"),
            ("profile_dist", "profile distance"),
        )
        for axis, (column, title) in zip(ax, panels):
            sns.lineplot(data=ok, x="epsilon", y=column, marker="o", ax=axis)
            axis.set_xscale("log")
            axis.invert_xaxis()
            axis.set_title(title)
            axis.set_xlabel("epsilon")

        plt.tight_layout()
        fig.savefig(output_file, dpi=150)
        plt.close(fig)
        print(f"Plot saved: {os.path.basename(output_file)}")

    except Exception as e:
        print(f"[WARN] Error generating sweep plot: {e}")


def plot_lattice(graph, output_file: str) -> None:
    try:
        helper_functions.visualize_lattice(graph, output_file)
        print(f"Plot saved: {os.path.basename(output_file)}")
    except Exception as e:
        print(f"[WARN] Error generating lattice plot: {e}")
