"""
File: errors.py
Location: /src/errors.py
Description: Exception hierarchy for the ground-state solver and its front end
Author: Patrick Jordan
Version: 2026-10

Every error raised by the solver modules derives from KirchhoffError. Input
problems also derive from ValueError and solver failures from RuntimeError, so
callers catching builtin exceptions keep working.

Exit codes used by run_solver.py:
- 0: success
- 1: precondition failure (invalid input, configuration or potential)
- 2: solver non-convergence
- 3: property-suite violation
"""

# Standard library imports
from typing import Optional

# Third-party imports
import pandas as pd


class KirchhoffError(Exception):
    """Base class of all solver errors."""

    exit_code = 1


class StructuralError(KirchhoffError, ValueError):
    """Grid/value mismatch or non-finite field values."""


class DomainError(KirchhoffError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PreconditionError(KirchhoffError, ValueError):
    """A documented precondition does not hold (conditions, grid size, config)."""


class InconsistencyError(KirchhoffError, ValueError):
    """Discrete data contradicts a claimed continuous property."""


class InsufficientDataError(KirchhoffError, ValueError):
    """Too few usable samples for a fit."""


class NoRootError(KirchhoffError, ValueError):
    """The fibering equation has no positive root (zero nonlinear moments)."""


class ConfigParseError(KirchhoffError, ValueError):
    """Unknown or malformed configuration entry.

    Args:
        message: Description of the problem
        key: Offending configuration key, if known
        line: Line number or source label of the entry, if known
    """

    def __init__(
        self, message: str, key: Optional[str] = None, line: Optional[object] = None
    ):
        self.key = key
        self.line = line
        location = ""
        if key is not None:
            location += f" [key '{key}'"
            location += f", line {line}]" if line is not None else "]"
        super().__init__(message + location)


class NonConvergenceError(KirchhoffError, RuntimeError):
    """The descent failed; carries the iteration trace for diagnosis."""

    exit_code = 2

    def __init__(self, message: str, trace: Optional[pd.DataFrame] = None):
        super().__init__(message)
        self.trace = trace if trace is not None else pd.DataFrame()


class PropertyViolation(KirchhoffError, AssertionError):
    """A verification suite found failing checks."""

    exit_code = 3

    def __init__(self, message: str, failures: Optional[pd.DataFrame] = None):
        super().__init__(message)
        self.failures = failures if failures is not None else pd.DataFrame()


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit status."""
    if isinstance(error, KirchhoffError):
        return error.exit_code
    # Builtin input errors (missing files, bad JSON) count as preconditions
    return 1
