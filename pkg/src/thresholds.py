"""
File: thresholds.py
Location: /src/thresholds.py
Description: Closed-form compactness thresholds and the (t, s) dominance system
Author: Patrick Jordan
Version: 2026-10

The system

    Phi(t, s) = t - a S lam^{-1/3} (t + s)^{1/3} = 0
    Psi(t, s) = s - b S^2 lam^{-2/3} (t + s)^{2/3} = 0

has one positive solution. With A = a S lam^{-1/3}, B = b S^2 lam^{-2/3} and
w = (t + s)^{1/3} it reduces to w^2 - B w - A = 0, so

    w = (B + sqrt(B^2 + 4A)) / 2,  t0 = A w,  s0 = B w^2.

The critical level is

    c* = ab S^3 / (4q) + (b^2 S^4 + 4qaS)^{3/2} / (24 q^2) + b^3 S^6 / (24 q^2)

and equals t0/3 + s0/12 for lam = q.

Key Functions:
- solve_ts_system(): closed-form (t0, s0)
- fixed_point_ts(): iteration oracle for the same system
- dominance_check(): Phi >= 0 and Psi >= 0 test
- critical_level() / threshold_consistency(): c* and its cross-check
- threshold_table(): one report row per (a, b, S, q) through the scalar functions
"""

# Standard library imports
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

# Third-party imports
import pandas as pd

# Local Imports
from src.errors import DomainError, InconsistencyError

THRESHOLD_COLUMNS = ["a", "b", "S", "q", "t0", "s0", "c_star", "consistency_residual"]

# Best constant of |grad u|_2^2 >= S |u|_6^2 in R^3
BEST_SOBOLEV_CONSTANT = 3.0 * (math.pi / 2.0) ** (4.0 / 3.0)


@dataclass(frozen=True)
class TsSolution:
    t0: float
    s0: float
    lam: float
    S: float
    a: float
    b: float

    @property
    def coefficients(self) -> Tuple[float, float]:
        return ts_coefficients(self.a, self.b, self.S, self.lam)

    def phi_psi(self, t: float, s: float) -> Tuple[float, float]:
        A, B = self.coefficients
        u = t + s
        return t - A * u ** (1.0 / 3.0), s - B * u ** (2.0 / 3.0)

    def residuals(self) -> Tuple[float, float]:
        """Relative fixed-point residuals |Phi|/t0 and |Psi|/s0 at the solution."""
        phi, psi = self.phi_psi(self.t0, self.s0)
        return abs(phi) / self.t0, abs(psi) / self.s0


@dataclass(frozen=True)
class ThresholdValues:
    c_star: float
    S: float
    a: float
    b: float
    q: float


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be positive, got {value}")


def ts_coefficients(a: float, b: float, S: float, lam: float) -> Tuple[float, float]:
    return a * S * lam ** (-1.0 / 3.0), b * S**2 * lam ** (-2.0 / 3.0)


def solve_ts_system(a: float, b: float, S: float, lam: float) -> TsSolution:
    """Closed-form solution of the dominance system.

    Raises:
        DomainError: If any argument is not positive
    """
    _require_positive(a=a, b=b, S=S, lam=lam)
    A, B = ts_coefficients(a, b, S, lam)
    w = 0.5 * (B + math.sqrt(B * B + 4.0 * A))
    t0 = A * w
    s0 = B * w * w

    if abs(t0 + s0 - w**3) > 1e-10 * w**3:
        raise InconsistencyError(
            f"t0 + s0 = {t0 + s0!r} does not reproduce w^3 = {w**3!r}"
        )
    return TsSolution(t0=t0, s0=s0, lam=lam, S=S, a=a, b=b)


def fixed_point_ts(
    a: float,
    b: float,
    S: float,
    lam: float,
    start: Sequence[float] = (1.0, 1.0),
    tol: float = 1e-14,
    max_iter: int = 10000,
) -> Tuple[float, float, int]:
    """Iterate (t, s) <- (A u^{1/3}, B u^{2/3}), u = t + s, from a positive start.

    The map on u is increasing and concave with slope below one at the fixed
    point, so the iteration converges from every positive start.
    """
    _require_positive(a=a, b=b, S=S, lam=lam, t=start[0], s=start[1])
    A, B = ts_coefficients(a, b, S, lam)
    t, s = float(start[0]), float(start[1])
    for iteration in range(1, max_iter + 1):
        u = t + s
        t_new, s_new = A * u ** (1.0 / 3.0), B * u ** (2.0 / 3.0)
        if abs(t_new - t) <= tol * t_new and abs(s_new - s) <= tol * s_new:
            return t_new, s_new, iteration
        t, s = t_new, s_new
    return t, s, max_iter


def dominance_check(t: float, s: float, sol: TsSolution, rtol: float = 1e-12) -> bool:
    """True iff Phi(t, s) >= 0 and Psi(t, s) >= 0 (up to rounding at rtol).

    When true, t >= t0 and s >= s0 must follow.
    """
    _require_positive(t=t, s=s)
    A, B = sol.coefficients
    u = t + s
    cube = A * u ** (1.0 / 3.0)
    square = B * u ** (2.0 / 3.0)
    return bool(
        t - cube >= -rtol * max(t, cube) and s - square >= -rtol * max(s, square)
    )


def critical_level(a: float, b: float, S: float, q: float) -> ThresholdValues:
    """Critical compactness level c* for Q = q."""
    _require_positive(a=a, b=b, S=S, q=q)
    c_star = (
        a * b * S**3 / (4.0 * q)
        + (b * b * S**4 + 4.0 * q * a * S) ** 1.5 / (24.0 * q * q)
        + b**3 * S**6 / (24.0 * q * q)
    )
    return ThresholdValues(c_star=c_star, S=S, a=a, b=b, q=q)


def threshold_consistency(a: float, b: float, S: float, q: float) -> float:
    """|t0/3 + s0/12 - c*| / c* with (t0, s0) solved at lam = q."""
    sol = solve_ts_system(a, b, S, q)
    return _consistency_residual(sol, critical_level(a, b, S, q).c_star)


def _consistency_residual(sol: TsSolution, c_star: float) -> float:
    return abs(sol.t0 / 3.0 + sol.s0 / 12.0 - c_star) / c_star


def threshold_table(rows: pd.DataFrame) -> pd.DataFrame:
    """Evaluate t0, s0, c* and the consistency residual for each (a, b, S, q) row.

    Every row goes through solve_ts_system and critical_level, so the table and
    the scalar path give identical numbers.
    """
    missing = [c for c in ("a", "b", "S", "q") if c not in rows.columns]
    if missing:
        raise DomainError(f"Threshold rows lack columns: {', '.join(missing)}")

    records = []
    for a, b, S, q in rows[["a", "b", "S", "q"]].itertuples(index=False, name=None):
        a, b, S, q = float(a), float(b), float(S), float(q)
        sol = solve_ts_system(a, b, S, q)
        c_star = critical_level(a, b, S, q).c_star
        records.append(
            (a, b, S, q, sol.t0, sol.s0, c_star, _consistency_residual(sol, c_star))
        )

    return pd.DataFrame.from_records(records, columns=THRESHOLD_COLUMNS)
