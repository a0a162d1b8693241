"""
File: solver_monitor.py
Location: /src/solver_monitor.py
Description: Descent monitoring and progress tracking
Author: Patrick Jordan
Version: 2026-10

Collects one row per descent iteration and prints an optional progress bar:
- Iteration trace as a pandas DataFrame (attached to reports and errors)
- Progress bar display during long solves
- Bubbling detector: peak growth while the energy stagnates
"""

# Standard library imports
from typing import Dict, List, Optional

# Third-party imports
import pandas as pd

# Local Imports
import helper_functions

TRACE_COLUMNS = ["iteration", "level", "grad_sup", "step", "peak"]


class DescentMonitor:
    """
    Per-solve trace recorder; each solve owns its monitor.

    Args:
        label: Name printed in progress lines and debug output
        max_iter: Iteration budget, used for the progress percentage
        bubbling_factor: Peak growth factor that counts as bubbling
        stagnation_window: Iterations over which the level must stagnate
        show_progress: Print a progress bar every 1% of the budget
    """

    def __init__(
        self,
        label: str,
        max_iter: int,
        bubbling_factor: float = 10.0,
        stagnation_window: int = 50,
        show_progress: bool = False,
    ):
        self.label = label
        self.max_iter = max(int(max_iter), 1)
        self.bubbling_factor = bubbling_factor
        self.stagnation_window = stagnation_window
        self.show_progress = show_progress

        self.rows: List[Dict[str, float]] = []
        self.notes: List[str] = []
        self._initial_peak: Optional[float] = None
        self._progress_every = max(self.max_iter // 100, 1)

    def record(
        self, iteration: int, level: float, grad_sup: float, step: float, peak: float
    ) -> None:
        if self._initial_peak is None:
            self._initial_peak = peak

        self.rows.append(
            {
                "iteration": iteration,
                "level": level,
                "grad_sup": grad_sup,
                "step": step,
                "peak": peak,
            }
        )

        if self.show_progress and iteration % self._progress_every == 0:
            self.print_progress(iteration, level, grad_sup)

    def note(self, message: str) -> None:
        self.notes.append(message)
        helper_functions.debug_print(f"[{self.label}] {message}")

    def print_progress(self, iteration: int, level: float, grad_sup: float) -> None:
        percentage_completed = round(100 * iteration / self.max_iter, 0)
        progress_bar_length = 50
        progress_block = int(round(progress_bar_length * percentage_completed / 100))
        progress_bar = "#" * progress_block + "-" * (progress_bar_length - progress_block)
        text = "\r{0}: [{1}] {2:.0f}% (J={3:.10g}, |g|={4:.2e})".format(
            self.label, progress_bar, percentage_completed, level, grad_sup
        )
        print(text, end="\n")

    def bubbling(self) -> bool:
        """True if the peak grew by bubbling_factor while the level stagnated."""
        if self._initial_peak is None or len(self.rows) <= self.stagnation_window:
            return False

        current = self.rows[-1]
        if current["peak"] < self.bubbling_factor * self._initial_peak:
            return False

        earlier = self.rows[-1 - self.stagnation_window]["level"]
        change = abs(current["level"] - earlier)
        return change <= 1e-10 * max(abs(current["level"]), 1.0)

    def trace(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=TRACE_COLUMNS)
