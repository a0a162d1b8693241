"""
File: helper_functions.py
Location: Project root
Description: Helper functions for solver runs
Author: Patrick Jordan
Version: 2026-10

Contains utility functions for:
- Debug logging to a text file under <output>/debug
- Standardized output filenames
- Worker count for concurrent solves (KGS_WORKERS)
- Shortest round-trip float formatting for CSV output
- Visualization of the level-monotonicity lattice (networkx graph)
"""

import os
from datetime import datetime
from typing import Optional

import matplotlib.pyplot as plt
import networkx as nx

# Global debug file handle
_debug_file = None


def generate_filename(
    file_type: str,
    experiment_id: Optional[str] = None,
    timestamp: Optional[str] = None,
    category: str = "raw",  # Categories: raw, debug, config, plot
) -> str:
    """
    Generate standardized filename with category prefix.

    Categories:
    - raw: Solver outputs (traces, field dumps)
    - debug: Debug log
    - config: Merged configuration
    - plot: Figures
    """
    parts = [timestamp or datetime.now().strftime("%Y%m%d_%H%M%S"), category, file_type]
    if experiment_id:
        parts.append(experiment_id)
    filename = "_".join(parts)

    if file_type == "merged_config":
        filename += ".json"
    elif file_type == "debug_log":
        filename += ".txt"
    elif category == "plot":
        filename += ".png"
    elif file_type.startswith("field"):
        filename += ".kgs"
    else:
        filename += ".csv"

    return filename


def init_debug_log(
    output_path: str,
    experiment_id: Optional[str] = None,
    timestamp: Optional[str] = None,
    enabled: bool = True,
) -> Optional[str]:
    """Initialize the debug log file for this run; returns its path."""
    global _debug_file

    # Only create if debug logging is enabled
    if not enabled:
        return None

    debug_output_path = os.path.join(output_path, "debug")
    os.makedirs(debug_output_path, exist_ok=True)

    debug_filename = generate_filename(
        "debug_log", experiment_id, timestamp, category="debug"
    )
    debug_path = os.path.join(debug_output_path, debug_filename)

    _debug_file = open(debug_path, "w", encoding="utf-8")
    _debug_file.write(f"Debug Log Started: {datetime.now()}\n")
    _debug_file.write(f"Experiment: {experiment_id}\n")
    _debug_file.write("=" * 80 + "\n\n")
    print(f"Debug log initialized: {debug_path}")
    return debug_path


def debug_print(message: str) -> None:
    """Write debug message to file if debug logging is enabled."""
    if _debug_file:
        _debug_file.write(f"{message}\n")
        _debug_file.flush()  # Ensure immediate write


def close_debug_log() -> None:
    """Close debug log file."""
    global _debug_file
    if _debug_file:
        _debug_file.write("\n" + "=" * 80 + "\n")
        _debug_file.write(f"Debug Log Ended: {datetime.now()}\n")
        _debug_file.close()
        _debug_file = None


def worker_count(default: Optional[int] = None) -> int:
    """Thread count for independent solves; KGS_WORKERS takes precedence."""
    count = default or os.cpu_count() or 1
    raw = os.environ.get("KGS_WORKERS")
    if raw:
        try:
            count = int(raw)
        except ValueError:
            print(f"[WARN] Ignoring KGS_WORKERS={raw!r} (not an integer)")
    return max(int(count), 1)


def format_float(value: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(value))


def visualize_lattice(graph: nx.DiGraph, output_file: Optional[str] = None) -> None:
    """Draws the level order of a constant-coefficient lattice as a networkx graph.

    Nodes are (k, tau, nu) triples colored by level; an edge points from the lower
    to the higher level of a comparable pair. Not ideal for large lattices.

    Args:
        graph: Graph built by groundstate.compare_levels
        output_file: Save the figure here instead of showing it
    """
    levels = [graph.nodes[n].get("level", 0.0) for n in graph.nodes]
    labels = {n: "({:g},{:g},{:g})".format(*n) for n in graph.nodes}

    # Layered by k, the parameter that raises the level
    pos = {n: (n[0] + 0.15 * n[2], n[1] + 0.1 * n[2]) for n in graph.nodes}

    fig, ax = plt.subplots(figsize=(9, 7))
    nx.draw(
        graph,
        pos,
        ax=ax,
        labels=labels,
        node_color=levels,
        cmap="viridis",
        font_size=7,
        arrows=True,
    )
    ax.set_title("Ground-state levels m*(k, tau, nu)")

    if output_file:
        fig.savefig(output_file, dpi=150, bbox_inches="tight")
        plt.close(fig)
    else:
        plt.show()
