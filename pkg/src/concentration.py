"""
File: concentration.py
Location: /src/concentration.py
Description: Epsilon sweeps: maximum points, decay fits and rescaled profiles
Author: Patrick Jordan
Version: 2026-10

For each epsilon the variable problem is solved in rescaled variables and
mapped back with u_eps(x) = v_eps(x / eps). Each record reports:
- x_eps: maximum point of u_eps and its distance to A_V (or A_P)
- decay constants of u_eps <= C exp(-(c / eps) |x - x_eps|)
- distance of the rescaled profile u_eps(eps x + x_eps) to the limit
  constant-coefficient ground state at x0 (the max point at the smallest eps)
- level c_eps and the translated-witness upper bound

Trend checks over a sweep live in sweep_trends(); the common decay envelope of
all rescaled profiles in uniform_decay_envelope().
"""

# Standard library imports
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

# Third-party imports
import numpy as np
import pandas as pd
from scipy import stats
from scipy.interpolate import RegularGridInterpolator

# Local Imports
import helper_functions
from src.errors import (
    DomainError,
    InsufficientDataError,
    KirchhoffError,
    PreconditionError,
)
from src.groundstate import (
    ConstantCoefficients,
    DescentOptions,
    GroundStateReport,
    solve_constant,
    solve_variable,
    translated_witness_level,
)
from src.model import (
    CartesianGrid,
    Field,
    KirchhoffParams,
    Point,
    RadialGrid,
    argmax_point,
    extended_radial,
    gradient_energy,
    quadrature,
    radial_to_cartesian,
    to_physical,
)
from src.potentials import (
    PotentialTripleSpec,
    active_branch,
    admissible_sets,
    best_candidate,
    check_conditions,
    shift,
)

SWEEP_COLUMNS = [
    "epsilon", "x1", "x2", "x3", "dist_AV", "decay_C", "decay_c",
    "profile_dist", "level", "iterations",
]  # fmt: skip
EXTENDED_COLUMNS = SWEEP_COLUMNS + ["witness_level", "status"]


# ==========================================
# DOMAIN TYPES
# ==========================================


@dataclass(frozen=True)
class DecayFit:
    """u <= C exp(-rate |x - x_eps|) fitted in log space.

    envelope_C is the smallest constant making the bound hold on every fitted
    node with the fitted rate.
    """

    C: float
    rate: float
    residual: float
    envelope_C: float
    n_points: int


@dataclass(frozen=True)
class ConcentrationRecord:
    epsilon: float
    x_eps: Point
    dist_AV: float
    decay_C: float
    decay_c: float
    profile_dist: float
    level: float
    iterations: int
    witness_level: float = float("nan")
    status: str = "ok"

    def row(self) -> Dict[str, object]:
        return {
            "epsilon": self.epsilon,
            "x1": self.x_eps[0],
            "x2": self.x_eps[1],
            "x3": self.x_eps[2],
            "dist_AV": self.dist_AV,
            "decay_C": self.decay_C,
            "decay_c": self.decay_c,
            "profile_dist": self.profile_dist,
            "level": self.level,
            "iterations": self.iterations,
            "witness_level": self.witness_level,
            "status": self.status,
        }


@dataclass(frozen=True)
class SweepGridPolicy:
    """
    Grids used along a sweep.

    The physical box [-physical_half_width, physical_half_width]^3 is fixed; the
    rescaled box is that box divided by eps, with spacing rescaled_spacing and
    at most max_nodes nodes per axis (the spacing grows beyond the cap).
    """

    physical_half_width: float = 2.0
    rescaled_spacing: float = 0.5
    max_nodes: int = 65
    profile_half_width: float = 3.5
    profile_nodes: int = 29
    limit_R: float = 20.0
    limit_n: int = 2000
    decay_window: float = 2.0
    check_nodes: int = 41

    def grid_for(self, epsilon: float) -> CartesianGrid:
        half_width = self.physical_half_width / epsilon
        m = 2 * int(math.ceil(half_width / self.rescaled_spacing - 1e-9)) + 1
        return CartesianGrid(half_width, min(m, self.max_nodes))

    def profile_grid(self) -> CartesianGrid:
        return CartesianGrid(self.profile_half_width, self.profile_nodes)

    def limit_grid(self) -> RadialGrid:
        return RadialGrid(self.limit_R, self.limit_n)

    def check_grid(self, spec: PotentialTripleSpec) -> CartesianGrid:
        half_width = max(self.physical_half_width, 2.0 * spec.R_cond)
        return CartesianGrid(half_width, self.check_nodes)


@dataclass(frozen=True, eq=False)
class SweepReport:
    records: List[ConcentrationRecord]
    branch: str
    x0: Optional[Point]
    limit_level: float
    policy: SweepGridPolicy
    profiles: Dict[float, Field] = field(default_factory=dict, repr=False)
    fields: Dict[float, Field] = field(default_factory=dict, repr=False)

    def to_frame(self, extended: bool = False) -> pd.DataFrame:
        columns = EXTENDED_COLUMNS if extended else SWEEP_COLUMNS
        return pd.DataFrame([r.row() for r in self.records], columns=EXTENDED_COLUMNS)[
            columns
        ]


# ==========================================
# PER-FIELD OPERATIONS
# ==========================================


def max_point(u: Field) -> Point:
    """Grid node of the largest value; ties go to the lexicographically first index."""
    if u.max_abs() == 0.0:
        raise DomainError("The zero field has no maximum point")
    return argmax_point(u)


def _fit_mask(u: Field, x_eps: Sequence[float], r_min: float, boundary_cells: int):
    grid = u.grid
    values = u.values
    if grid.kind == "radial":
        distance = grid.nodes
        inside = np.arange(grid.n) < grid.n - boundary_cells
    else:
        distance = grid.radius(x_eps)
        index = np.arange(grid.m)
        keep = (index >= boundary_cells) & (index < grid.m - boundary_cells)
        inside = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
    mask = inside & (values > 1e-14) & (distance >= r_min)
    return distance, mask


def decay_fit(
    u: Field, x_eps: Sequence[float], r_min: float, boundary_cells: int = 2
) -> DecayFit:
    """
    Least-squares fit of log u against |x - x_eps| beyond r_min.

    Nodes within boundary_cells of the box boundary carry the Dirichlet layer
    and are left out.

    Returns:
        DecayFit: C = exp(intercept), rate = -slope (physical units), RMS residual
            in log units, the envelope constant and the number of fitted nodes

    Raises:
        InsufficientDataError: If fewer than 10 nodes qualify
    """
    distance, mask = _fit_mask(u, x_eps, r_min, boundary_cells)
    count = int(np.count_nonzero(mask))
    if count < 10:
        raise InsufficientDataError(
            f"Decay fit needs at least 10 nodes beyond r_min={r_min}, found {count}"
        )

    d = distance[mask]
    log_u = np.log(u.values[mask])
    fit = stats.linregress(d, log_u)
    rate = -float(fit.slope)
    residual = log_u - (fit.intercept + fit.slope * d)

    return DecayFit(
        C=float(np.exp(fit.intercept)),
        rate=rate,
        residual=float(np.sqrt(np.mean(residual**2))),
        envelope_C=float(np.max(np.exp(log_u + rate * d))),
        n_points=count,
    )


def rescaled_profile(
    u: Field, epsilon: float, x_tilde: Sequence[float], target_grid: CartesianGrid
) -> Field:
    """u(eps x + x_tilde) on the target grid by trilinear interpolation.

    Raises:
        DomainError: If a mapped target node falls outside the domain of u
    """
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    source = u.grid
    if source.kind != "cartesian":
        raise DomainError("Rescaled profiles are taken from Cartesian fields")

    points = epsilon * target_grid.points() + np.asarray(x_tilde, dtype=np.float64)
    limit = source.half_width * (1.0 + 1e-12)
    if np.any(np.abs(points) > limit):
        raise DomainError(
            f"Rescaled target grid leaves the box [-{source.half_width}, "
            f"{source.half_width}]^3"
        )
    points = np.clip(points, -source.half_width, source.half_width)

    axis = source.axis
    interpolator = RegularGridInterpolator((axis, axis, axis), u.values, method="linear")
    return Field(target_grid, interpolator(points).reshape(target_grid.shape))


def profile_distance(f: Field, g: Field) -> float:
    """H^1-type distance (int|grad(f - g)|^2 + int (f - g)^2)^{1/2} on one grid."""
    if f.grid != g.grid:
        raise DomainError("Profiles live on different grids")
    diff = f.values - g.values
    return math.sqrt(gradient_energy(f.grid, diff) + quadrature(f.grid, diff**2))


def half_width_at_half_max(profile: Field) -> float:
    """Radius where a radial profile first drops to half its peak."""
    r, values = extended_radial(profile)
    peak = float(np.max(values))
    below = np.flatnonzero(values <= 0.5 * peak)
    if below.size == 0:
        return float(r[-1])
    i = int(below[0])
    if i == 0:
        return 0.0
    # Linear interpolation inside the crossing cell
    return float(np.interp(0.5 * peak, [values[i], values[i - 1]], [r[i], r[i - 1]]))


# ==========================================
# SWEEP DRIVER
# ==========================================


def _solve_for(params, spec, epsilon, policy, options, check_grid):
    try:
        return solve_variable(
            params, spec, epsilon, policy.grid_for(epsilon), options,
            check_grid=check_grid,
        )  # fmt: skip
    except KirchhoffError as e:
        return e


def epsilon_sweep(
    params: KirchhoffParams,
    spec: PotentialTripleSpec,
    eps_list: Sequence[float],
    policy: Optional[SweepGridPolicy] = None,
    options: Optional[DescentOptions] = None,
    workers: Optional[int] = None,
) -> SweepReport:
    """
    Solve along a strictly decreasing epsilon list and collect concentration records.

    Per-epsilon solver failures are recorded with a status message; the sweep
    continues with the remaining values.

    Args:
        params: Kirchhoff constants
        spec: Potential triple satisfying (PQ1)+(PQ2) or (VQ1)+(VQ2)
        eps_list: Strictly decreasing positive values
        policy: Grid policy
        options: Engine settings
        workers: Concurrent solves (defaults to KGS_WORKERS)

    Raises:
        DomainError: If eps_list is empty, not positive or not strictly decreasing
        PreconditionError: If neither condition pair holds
    """
    policy = policy or SweepGridPolicy()
    eps = [float(e) for e in eps_list]
    if not eps or any(e <= 0 for e in eps):
        raise DomainError("Sweep needs a non-empty list of positive epsilon values")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError(f"Sweep epsilons must be strictly decreasing: {eps}")

    check_grid = policy.check_grid(spec)
    branch = active_branch(check_conditions(spec, check_grid))
    if branch is None:
        raise PreconditionError(
            f"Potential triple '{spec.name}' satisfies neither condition pair"
        )
    sets = admissible_sets(spec, check_grid, branch=branch)
    which = "A_V" if branch == "PQ" else "A_P"
    y = best_candidate(spec, sets, branch)

    workers = workers or helper_functions.worker_count()
    with ThreadPoolExecutor(max_workers=workers) as executor:
        outcomes = list(
            executor.map(
                lambda e: _solve_for(params, spec, e, policy, options, check_grid), eps
            )
        )

    solved: Dict[float, GroundStateReport] = {
        e: r for e, r in zip(eps, outcomes) if isinstance(r, GroundStateReport)
    }
    physical = {e: to_physical(r.field, e) for e, r in solved.items()}
    maxima = {e: max_point(u) for e, u in physical.items()}

    # Limit problem at x0 and witness bound at y (constant solves on the radial grid)
    x0 = maxima[min(solved)] if solved else None
    limit = limit_profile = None
    r_half = float("nan")
    if x0 is not None:
        limit = solve_constant(
            ConstantCoefficients(*spec.coefficients_at(x0)),
            params, policy.limit_grid(), options,
        )  # fmt: skip
        limit_profile = radial_to_cartesian(limit.field, policy.profile_grid())
        r_half = half_width_at_half_max(limit.field)
    witness_limit = solve_constant(
        ConstantCoefficients(*spec.coefficients_at(y)), params, policy.limit_grid(), options
    ) if solved else None  # fmt: skip

    records: List[ConcentrationRecord] = []
    profiles: Dict[float, Field] = {}
    for e, outcome in zip(eps, outcomes):
        if not isinstance(outcome, GroundStateReport):
            print(f"[FAIL] eps={e:g}: {outcome}")
            records.append(_failed_record(e, f"failed: {outcome}"))
            continue

        u = physical[e]
        x_eps = maxima[e]
        issues = [] if outcome.converged else ["not converged"]
        try:
            fit = decay_fit(u, x_eps, policy.decay_window * e * r_half)
            decay_C, decay_c = fit.C, fit.rate * e
        except InsufficientDataError as error:
            decay_C = decay_c = float("nan")
            issues.append(f"decay fit: {error}")

        try:
            profile = rescaled_profile(u, e, x_eps, policy.profile_grid())
            profiles[e] = profile
            distance = profile_distance(profile, limit_profile)
        except DomainError as error:
            distance = float("nan")
            issues.append(f"profile: {error}")

        witness = translated_witness_level(
            params, spec, e, outcome.field.grid, y, options=options, limit=witness_limit
        )
        records.append(
            ConcentrationRecord(
                epsilon=e,
                x_eps=x_eps,
                dist_AV=sets.distance(x_eps, which),
                decay_C=decay_C,
                decay_c=decay_c,
                profile_dist=distance,
                level=outcome.level,
                iterations=outcome.iterations,
                witness_level=witness,
                status=sweep_status(issues),
            )
        )
        print(f"[OK] eps={e:g}: level={outcome.level:.10g} x_eps={x_eps}")

    return SweepReport(
        records=records,
        branch=branch,
        x0=x0,
        limit_level=limit.level if limit is not None else float("nan"),
        policy=policy,
        profiles=profiles,
        fields={e: r.field for e, r in solved.items()},
    )


def sweep_status(issues: Sequence[str]) -> str:
    """"ok", or every problem of one epsilon in the order it occurred."""
    return "; ".join(issues) if issues else "ok"


def _failed_record(epsilon: float, status: str) -> ConcentrationRecord:
    nan = float("nan")
    return ConcentrationRecord(
        epsilon=epsilon,
        x_eps=(nan, nan, nan),
        dist_AV=nan,
        decay_C=nan,
        decay_c=nan,
        profile_dist=nan,
        level=nan,
        iterations=0,
        status=status,
    )


# ==========================================
# SWEEP PROPERTIES
# ==========================================


def sweep_trends(report: SweepReport, slack: float = 1e-12) -> pd.DataFrame:
    """Trend checks across a sweep: distance and profile distance non-increasing,
    decay-rate ratios in [1.5, 2.5] when eps halves, final distance within 2h."""
    frame = report.to_frame(extended=True)
    ok = frame[frame["status"] == "ok"]
    rows = []

    dist = ok["dist_AV"].to_numpy()
    rows.append(
        {
            "check": "dist_non_increasing",
            "passed": bool(np.all(np.diff(dist) <= slack)),
            "value": float(np.max(np.diff(dist))) if dist.size > 1 else 0.0,
        }
    )

    if len(ok):
        last = ok.iloc[-1]
        h = report.policy.grid_for(last["epsilon"]).h * last["epsilon"]
        rows.append(
            {
                "check": "final_dist_within_2h",
                "passed": bool(last["dist_AV"] <= 2.0 * h + slack),
                "value": float(last["dist_AV"]),
            }
        )

    eps = ok["epsilon"].to_numpy()
    rates = (ok["decay_c"] / ok["epsilon"]).to_numpy()
    for i in range(len(eps) - 1):
        if math.isclose(eps[i + 1], eps[i] / 2.0, rel_tol=1e-9):
            ratio = rates[i + 1] / rates[i]
            rows.append(
                {
                    "check": f"rate_ratio_{eps[i]:g}_{eps[i + 1]:g}",
                    "passed": bool(1.5 <= ratio <= 2.5),
                    "value": float(ratio),
                }
            )

    profile = ok["profile_dist"].to_numpy()
    rows.append(
        {
            "check": "profile_dist_non_increasing",
            "passed": bool(np.all(np.diff(profile) <= slack)),
            "value": float(np.max(np.diff(profile))) if profile.size > 1 else 0.0,
        }
    )
    return pd.DataFrame(rows, columns=["check", "passed", "value"])


def level_bound_check(report: SweepReport, tol: float = 1e-8) -> pd.Series:
    """level <= witness_level + tol per record (NaN rows count as failures)."""
    frame = report.to_frame(extended=True)
    return frame["level"] <= frame["witness_level"] + tol


def uniform_decay_envelope(
    profiles: Sequence[Field], r_min: float = 0.0
) -> Dict[str, Union[float, List[float]]]:
    """
    One (C, c) pair bounding every rescaled profile by C exp(-c |x|).

    c is the smallest fitted rate across profiles; C the largest
    max(profile * exp(c |x|)) over the fitted nodes.
    """
    if not profiles:
        raise InsufficientDataError("No profiles to bound")

    fits = [decay_fit(p, (0.0, 0.0, 0.0), r_min) for p in profiles]
    rate = min(f.rate for f in fits)
    constants = []
    for profile in profiles:
        distance, mask = _fit_mask(profile, (0.0, 0.0, 0.0), r_min, 2)
        constants.append(
            float(np.max(profile.values[mask] * np.exp(rate * distance[mask])))
        )
    return {"C": max(constants), "c": rate, "per_profile_C": constants}


def translation_check(
    params: KirchhoffParams,
    spec: PotentialTripleSpec,
    offset: Sequence[float],
    epsilon: float,
    grid: CartesianGrid,
    options: Optional[DescentOptions] = None,
) -> Dict[str, object]:
    """Solve the triple and its translate; x_eps must move by offset up to one cell.

    Neither solve requires the condition pairs: the exterior clauses are measured
    from the origin and need not hold for the translate.
    """
    base = solve_variable(params, spec, epsilon, grid, options, require_conditions=False)
    moved = solve_variable(
        params, shift(spec, offset), epsilon, grid, options, require_conditions=False
    )
    x = max_point(to_physical(base.field, epsilon))
    x_moved = max_point(to_physical(moved.field, epsilon))
    cell = epsilon * grid.h
    error = max(abs(b - a - s) for a, b, s in zip(x, x_moved, offset))
    return {
        "x_eps": x,
        "x_eps_shifted": x_moved,
        "error": error,
        "cell": cell,
        "passed": error <= cell * (1.0 + 1e-9),
        "level": base.level,
        "level_gap": abs(moved.level - base.level),
    }
