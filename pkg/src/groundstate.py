"""
File: groundstate.py
Location: /src/groundstate.py
Description: Nehari-manifold minimization for constant, variable and truncated problems
Author: Patrick Jordan
Version: 2026-10

Engine:
- minimize_on_nehari(): preconditioned gradient descent with Barzilai-Borwein
  steps, pointwise absolute value and Nehari reprojection after every step,
  nonmonotone backtracking as safeguard
- Preconditioner: A = (a + b int|grad v|^2) K + Vbar M, factored once per
  refresh (sparse LU on radial grids, DST-I diagonalization on Cartesian grids)

Problems:
- solve_constant(): m*_{k tau nu} on a radial (or Cartesian) grid
- solve_variable(): c_eps for V(eps x), P(eps x), Q(eps x) on a Cartesian grid
- solve_truncated(): c_eps^{cde} with clamped coefficients
- compare_levels(): level monotonicity over a lattice of constant triples
- level_graph(): networkx order graph of a solved lattice

Upper bounds:
- translated_witness_level(): J_eps ray maximum of a translated constant ground state
- ray_sampling_bound(): ray maxima along random positive directions
"""

# Standard library imports
import itertools
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

# Third-party imports
import networkx as nx
import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.fft import dstn
from scipy.sparse.linalg import splu

# Local Imports
import helper_functions
from src.errors import (
    DomainError,
    NoRootError,
    NonConvergenceError,
    PreconditionError,
    StructuralError,
)
from src.functional import (
    EnergyFunctional,
    compute_moments,
    dual_gradient,
    energy_from_moments,
    nehari_project,
    ray_maximum,
)
from src.model import (
    CartesianGrid,
    Field,
    Grid,
    KirchhoffParams,
    Point,
    RadialGrid,
    argmax_point,
    boundary_ratio,
    gaussian_field,
    gradient_energy,
    quadrature,
    radial_to_cartesian,
    resample_cartesian,
    resample_radial,
)
from src.potentials import (
    PotentialTripleSpec,
    active_branch,
    admissible_sets,
    best_candidate,
    check_conditions,
)
from src.solver_monitor import DescentMonitor

LEVEL_COLUMNS = ["k", "tau", "nu", "level", "iterations", "converged"]
PAIR_COLUMNS = [
    "k1", "tau1", "nu1", "k2", "tau2", "nu2",
    "level1", "level2", "gap", "consistent", "strict", "strict_ok",
]  # fmt: skip


# ==========================================
# DOMAIN TYPES
# ==========================================


@dataclass(frozen=True)
class ConstantCoefficients:
    """Constant potentials V = k, P = tau, Q = nu."""

    k: float
    tau: float
    nu: float

    def __post_init__(self):
        for name in ("k", "tau", "nu"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"Constant coefficient {name} must be positive")
            object.__setattr__(self, name, value)

    def dominates(self, other: "ConstantCoefficients") -> bool:
        """True if self is the (k2, tau2, nu2) side of a comparable pair with other."""
        return self.k >= other.k and self.tau <= other.tau and self.nu <= other.nu


@dataclass(frozen=True)
class TruncationLevels:
    """Clamp levels: V -> max(c, V), P -> min(d, P), Q -> min(e, Q)."""

    c: float
    d: float
    e: float

    def validate(self, spec: PotentialTripleSpec, tol: float = 1e-12) -> None:
        """Raises PreconditionError unless each level lies in its declared interval."""
        checks = (
            ("c", self.c, spec.V_min, spec.V_max),
            ("d", self.d, spec.P_min, spec.P_max),
            ("e", self.e, spec.Q_min, spec.Q_max),
        )
        for name, value, low, high in checks:
            if not low - tol <= value <= high + tol:
                raise PreconditionError(
                    f"Truncation level {name}={value} outside [{low}, {high}]"
                )


@dataclass(frozen=True)
class DescentOptions:
    """Engine settings; the defaults are the documented solver tolerances."""

    tol: float = 1e-8
    max_iter: int = 50000
    bb_min: float = 1e-4
    bb_max: float = 1e4
    armijo: float = 1e-4
    max_backtracks: int = 40
    nonmonotone_memory: int = 10
    preconditioner_refresh: int = 20
    bubbling_factor: float = 10.0
    stagnation_window: int = 50
    seed_widths: Tuple[float, ...] = (1.0, 2.0)
    max_domain_retries: int = 10
    domain_growth: float = 1.5
    boundary_threshold: float = 1e-8
    max_cartesian_nodes: int = 96
    check_nodes: int = 41
    show_progress: bool = False


@dataclass(frozen=True, eq=False)
class GroundStateReport:
    field: Field
    level: float
    nehari_residual: float
    grad_sup: float
    max_point: Point
    iterations: int
    converged: bool
    functional: EnergyFunctional
    trace: pd.DataFrame = field(default_factory=pd.DataFrame, repr=False)
    alternate_levels: Tuple[float, ...] = ()
    domain_retries: int = 0
    epsilon: Optional[float] = None

    @property
    def norm_sq(self) -> float:
        return compute_moments(self.functional, self.field.values).norm_sq

    def invariant_checks(self, tol: float = 1e-8) -> Dict[str, bool]:
        """Report-level properties of a converged ground state."""
        m = compute_moments(self.functional, self.field.values)
        p = self.functional.params.p
        free = self.field.grid.free_mask()
        return {
            "nehari": abs(self.nehari_residual) <= tol * m.norm_sq,
            "positive_level": self.level > 0,
            "positivity": bool(np.min(self.field.values[free]) > 0),
            "level_lower_bound": self.level
            >= (0.5 - 1.0 / p) * m.norm_sq - tol * m.norm_sq,
            "ps_bound": m.norm_sq <= 2.0 * p / (p - 2.0) * self.level + 1e-6,
        }

    def summary(self) -> Dict[str, object]:
        return {
            "level": self.level,
            "nehari_residual": self.nehari_residual,
            "grad_sup": self.grad_sup,
            "x1": self.max_point[0],
            "x2": self.max_point[1],
            "x3": self.max_point[2],
            "iterations": self.iterations,
            "converged": self.converged,
            "domain_retries": self.domain_retries,
        }


@dataclass(frozen=True, eq=False)
class LevelComparison:
    """Lattice levels, every comparable ordered pair and the order graph."""

    levels: pd.DataFrame
    pairs: pd.DataFrame
    graph: nx.DiGraph
    tol: float

    @property
    def consistent(self) -> bool:
        return bool(self.pairs["consistent"].all() and self.pairs["strict_ok"].all())

    def violations(self) -> pd.DataFrame:
        bad = ~(self.pairs["consistent"] & self.pairs["strict_ok"])
        return self.pairs[bad]


# ==========================================
# PRECONDITIONER
# ==========================================


class Preconditioner:
    """
    Linearized operator A = kappa K + Vbar M on the free nodes.

    kappa = a + b int|grad v|^2 and Vbar = int V v^2 / int v^2 are frozen at
    construction.

    Args:
        F: Energy functional
        values: Current iterate
    """

    def __init__(self, F: EnergyFunctional, values: np.ndarray):
        grid = F.grid
        self.grid = grid
        params = F.params
        self.kappa = params.a + params.b * gradient_energy(grid, values)
        squares = values**2
        mass = quadrature(grid, squares)
        self.vbar = quadrature(grid, F.Vfield.values * squares) / mass

        if grid.kind == "radial":
            free = grid.free_mask()
            self._free = free
            A = self.kappa * grid.stiffness + self.vbar * sp.diags(grid.weights)
            self._matrix = A.tocsr()[free][:, free].tocsc()
            self._lu = splu(self._matrix)
        else:
            m = grid.m
            k = np.arange(1, m - 1)
            lam = 2.0 - 2.0 * np.cos(np.pi * k / (m - 1))
            total = lam[:, None, None] + lam[None, :, None] + lam[None, None, :]
            self._eigenvalues = self.kappa * grid.h * total + self.vbar * grid.h**3

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """A^{-1} rhs on the free nodes, zero on the fixed nodes."""
        out = np.zeros_like(rhs)
        if self.grid.kind == "radial":
            out[self._free] = self._lu.solve(rhs[self._free])
        else:
            inner = rhs[1:-1, 1:-1, 1:-1]
            spectral = dstn(inner, type=1, norm="ortho") / self._eigenvalues
            out[1:-1, 1:-1, 1:-1] = dstn(spectral, type=1, norm="ortho")
        return out

    def multiply(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros_like(values)
        if self.grid.kind == "radial":
            out[self._free] = self._matrix @ values[self._free]
        else:
            inner = values[1:-1, 1:-1, 1:-1]
            spectral = dstn(inner, type=1, norm="ortho") * self._eigenvalues
            out[1:-1, 1:-1, 1:-1] = dstn(spectral, type=1, norm="ortho")
        return out


# ==========================================
# ENGINE
# ==========================================


def _tangential_sup(
    dual: np.ndarray, values: np.ndarray, weights: np.ndarray, free: np.ndarray
) -> float:
    """Max-norm over free nodes of g - (<g, v> / <v, v>) v with g = dual / weights."""
    g = dual / weights
    coefficient = float(np.vdot(dual, values)) / float(np.sum(weights * values**2))
    residual = g - coefficient * values
    return float(np.max(np.abs(residual[free])))


def _level(F: EnergyFunctional, values: np.ndarray) -> float:
    return energy_from_moments(compute_moments(F, values), F.params)


def _project_values(F: EnergyFunctional, values: np.ndarray) -> Optional[np.ndarray]:
    try:
        projected = nehari_project(F, Field(F.grid, values)).projected
    except (NoRootError, DomainError):
        return None
    return np.array(projected.values)


def _build_report(
    F: EnergyFunctional,
    values: np.ndarray,
    iterations: int,
    converged: bool,
    grad_sup: float,
    trace: pd.DataFrame,
) -> GroundStateReport:
    m = compute_moments(F, values)
    residual = m.norm_sq + F.params.b * m.grad_sq**2 - m.mass_p - m.mass_q
    result = Field(F.grid, values)
    return GroundStateReport(
        field=result,
        level=energy_from_moments(m, F.params),
        nehari_residual=float(residual),
        grad_sup=grad_sup,
        max_point=argmax_point(result),
        iterations=iterations,
        converged=converged,
        functional=F,
        trace=trace,
    )


def minimize_on_nehari(
    F: EnergyFunctional,
    init: Field,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    options: Optional[DescentOptions] = None,
    label: str = "descent",
) -> GroundStateReport:
    """
    Minimize the energy over the Nehari manifold starting from init.

    Each iteration takes a preconditioned step of Barzilai-Borwein length, takes
    the pointwise absolute value and reprojects onto the Nehari manifold. Steps
    are accepted against the maximum of the last few levels (nonmonotone
    backtracking). The run stops when the tangential gradient max-norm drops
    below tol.

    Args:
        F: Energy functional on the grid of init
        init: Nonzero starting field
        tol: Stopping threshold for the tangential gradient max-norm
        max_iter: Iteration budget
        options: Engine settings (tol and max_iter override its values)
        label: Name used in progress and debug output

    Returns:
        GroundStateReport: Converged iterate, or the lowest iterate seen when the
            budget ran out (converged = False)

    Raises:
        DomainError: If init vanishes on the free nodes or tol/max_iter are invalid
        StructuralError: If init lives on another grid
        NonConvergenceError: On bubbling or if the final level exceeds the
            initial one
    """
    opts = options or DescentOptions()
    tol = opts.tol if tol is None else float(tol)
    max_iter = opts.max_iter if max_iter is None else int(max_iter)
    if not tol > 0:
        raise DomainError(f"Solver tolerance must be positive, got {tol}")
    if max_iter < 0:
        raise DomainError(f"max_iter must be non-negative, got {max_iter}")
    if init.grid != F.grid:
        raise StructuralError("Initial field and functional live on different grids")

    grid = F.grid
    free = grid.free_mask()
    weights = grid.weights

    start = np.where(free, np.abs(init.values), 0.0)
    if not np.any(start > 0):
        raise DomainError("Initial field vanishes on the free nodes")
    values = _project_values(F, start)
    if values is None:
        raise DomainError("Initial field cannot be projected onto the Nehari manifold")

    level = _level(F, values)
    initial_level = level
    dual = dual_gradient(F, values)
    grad_sup = _tangential_sup(dual, values, weights, free)

    monitor = DescentMonitor(
        label,
        max_iter,
        bubbling_factor=opts.bubbling_factor,
        stagnation_window=opts.stagnation_window,
        show_progress=opts.show_progress,
    )
    monitor.record(0, level, grad_sup, 0.0, float(np.max(values)))

    best_level, best_values, best_sup = level, values, grad_sup
    converged = grad_sup < tol
    preconditioner = Preconditioner(F, values)
    alpha = 1.0
    history = deque([level], maxlen=opts.nonmonotone_memory)
    iteration = 0

    while not converged and iteration < max_iter:
        iteration += 1
        if iteration % opts.preconditioner_refresh == 0:
            preconditioner = Preconditioner(F, values)

        direction = preconditioner.solve(dual)
        slope = float(np.vdot(dual, direction))
        reference = max(history)
        slack = 1e-12 * abs(reference)

        step = alpha
        accepted = None
        for _ in range(opts.max_backtracks):
            trial = np.where(free, np.abs(values - step * direction), 0.0)
            projected = _project_values(F, trial) if np.any(trial > 0) else None
            if projected is not None:
                trial_level = _level(F, projected)
                if trial_level <= reference - opts.armijo * step * slope + slack:
                    accepted = projected
                    break
            step *= 0.5

        if accepted is None:
            monitor.note(f"line search stalled at iteration {iteration}")
            break

        new_dual = dual_gradient(F, accepted)
        s = accepted - values
        y = new_dual - dual
        sy = float(np.vdot(s, y))
        if sy > 0:
            alpha = float(np.vdot(s, preconditioner.multiply(s))) / sy
        else:
            alpha = 2.0 * step
        alpha = min(max(alpha, opts.bb_min), opts.bb_max)

        values, dual, level = accepted, new_dual, trial_level
        history.append(level)
        grad_sup = _tangential_sup(dual, values, weights, free)
        monitor.record(iteration, level, grad_sup, step, float(np.max(values)))

        if level < best_level:
            best_level, best_values, best_sup = level, values, grad_sup

        if monitor.bubbling():
            raise NonConvergenceError(
                f"{label}: peak grew {opts.bubbling_factor:g}x while the energy "
                f"stagnated at iteration {iteration} (grid-scale bubbling)",
                trace=monitor.trace(),
            )
        converged = grad_sup < tol

    trace = monitor.trace()
    if converged:
        return _build_report(F, values, iteration, True, grad_sup, trace)

    if level > initial_level:
        raise NonConvergenceError(
            f"{label}: level {level!r} above the initial level {initial_level!r} "
            f"after {iteration} iterations",
            trace=trace,
        )
    helper_functions.debug_print(
        f"[{label}] budget exhausted after {iteration} iterations, |g|={best_sup:.3e}"
    )
    return _build_report(F, best_values, iteration, False, best_sup, trace)


# ==========================================
# MULTI-START AND DOMAIN RETRIES
# ==========================================


def _enlarged(grid: Grid, opts: DescentOptions) -> Optional[Grid]:
    """Grid with the same spacing and domain_growth times the extent."""
    if grid.kind == "radial":
        n = int(round(grid.n * opts.domain_growth))
        return RadialGrid(grid.h * n, n)

    cells = int(round((grid.m - 1) * opts.domain_growth))
    m = min(cells + 1, opts.max_cartesian_nodes)
    if m <= grid.m:
        return None
    return CartesianGrid(grid.h * (m - 1) / 2.0, m)


def _transfer(field_: Field, grid: Grid) -> Field:
    if grid.kind == "radial":
        return resample_radial(field_, grid)
    return resample_cartesian(field_, grid)


def _solve_multistart(
    build: Callable[[Grid], EnergyFunctional],
    seeds: Callable[[Grid], List[Field]],
    grid: Grid,
    opts: DescentOptions,
    label: str,
) -> GroundStateReport:
    """Run every seed, keep the lowest level, then enlarge the domain while the
    solution does not decay inside it."""
    F = build(grid)
    reports = [
        minimize_on_nehari(F, seed, options=opts, label=f"{label}/seed{i}")
        for i, seed in enumerate(seeds(grid))
    ]
    reports.sort(key=lambda r: r.level)
    best = reports[0]
    alternates = tuple(r.level for r in reports[1:])

    retries = 0
    while (
        boundary_ratio(best.field) > opts.boundary_threshold
        and retries < opts.max_domain_retries
    ):
        larger = _enlarged(best.field.grid, opts)
        if larger is None:
            print(
                f"[WARN] {label}: boundary ratio {boundary_ratio(best.field):.2e} "
                f"but the Cartesian grid is capped at {opts.max_cartesian_nodes} nodes"
            )
            break
        retries += 1
        helper_functions.debug_print(f"[{label}] domain retry {retries}: {larger.describe()}")
        F = build(larger)
        best = minimize_on_nehari(
            F, _transfer(best.field, larger), options=opts, label=f"{label}/retry{retries}"
        )

    return replace(best, alternate_levels=alternates, domain_retries=retries)


# ==========================================
# PROBLEMS
# ==========================================


def solve_constant(
    cc: ConstantCoefficients,
    params: KirchhoffParams,
    grid: Grid,
    options: Optional[DescentOptions] = None,
) -> GroundStateReport:
    """Discrete m*_{k tau nu} from Gaussian seeds centered at the origin."""
    opts = options or DescentOptions()

    def build(g: Grid) -> EnergyFunctional:
        return EnergyFunctional.constant(params, g, cc.k, cc.tau, cc.nu)

    def seeds(g: Grid) -> List[Field]:
        return [gaussian_field(g, width=w) for w in opts.seed_widths]

    label = f"const({cc.k:g},{cc.tau:g},{cc.nu:g})"
    return _solve_multistart(build, seeds, grid, opts, label)


def variable_functional(
    params: KirchhoffParams,
    triple: PotentialTripleSpec,
    epsilon: float,
    grid: CartesianGrid,
) -> EnergyFunctional:
    """Functional with coefficients V(eps x), P(eps x), Q(eps x) sampled on grid."""
    V, P, Q = triple.sample(grid, epsilon)
    return EnergyFunctional(params, V, P, Q)


def default_check_grid(
    triple: PotentialTripleSpec,
    epsilon: float,
    grid: CartesianGrid,
    nodes: int = 41,
) -> CartesianGrid:
    """Physical condition grid covering 2 R_cond and the physical image of grid."""
    return CartesianGrid(max(2.0 * triple.R_cond, epsilon * grid.half_width), nodes)


def concentration_candidate(
    triple: PotentialTripleSpec,
    check_grid: CartesianGrid,
    require_conditions: bool = True,
) -> Tuple[Optional[str], Point]:
    """Active branch and the physical seed point for a variable solve.

    Raises:
        PreconditionError: If conditions are required and neither branch holds
    """
    report = check_conditions(triple, check_grid)
    branch = active_branch(report)
    if branch is None:
        if require_conditions:
            failing = report[~report["passed"]]
            clauses = "; ".join(f"{r.condition}: {r.clause}" for r in failing.itertuples())
            raise PreconditionError(
                f"Potential triple '{triple.name}' satisfies neither condition pair "
                f"(failing: {clauses})"
            )
        return None, triple.x_star

    sets = admissible_sets(triple, check_grid, branch=branch)
    return branch, best_candidate(triple, sets, branch)


def _solve_on_triple(
    build_variant: Callable[[EnergyFunctional], EnergyFunctional],
    params: KirchhoffParams,
    triple: PotentialTripleSpec,
    epsilon: float,
    grid: CartesianGrid,
    options: Optional[DescentOptions],
    require_conditions: bool,
    check_grid: Optional[CartesianGrid],
    label: str,
) -> GroundStateReport:
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if grid.kind != "cartesian":
        raise StructuralError("Variable-coefficient solves need a Cartesian grid")
    opts = options or DescentOptions()

    check_grid = check_grid or default_check_grid(triple, epsilon, grid, opts.check_nodes)
    _, y = concentration_candidate(triple, check_grid, require_conditions)
    center = tuple(c / epsilon for c in y)
    if max(abs(c) for c in center) >= grid.half_width:
        raise PreconditionError(
            f"Rescaled concentration candidate {center} lies outside the box "
            f"[-{grid.half_width}, {grid.half_width}]^3"
        )

    def build(g: Grid) -> EnergyFunctional:
        return build_variant(variable_functional(params, triple, epsilon, g))

    def seeds(g: Grid) -> List[Field]:
        return [gaussian_field(g, width=w, center=center) for w in opts.seed_widths]

    report = _solve_multistart(build, seeds, grid, opts, label)
    return replace(report, epsilon=epsilon)


def solve_variable(
    params: KirchhoffParams,
    triple: PotentialTripleSpec,
    epsilon: float,
    grid: CartesianGrid,
    options: Optional[DescentOptions] = None,
    require_conditions: bool = True,
    check_grid: Optional[CartesianGrid] = None,
) -> GroundStateReport:
    """
    Discrete c_eps and v_eps for the rescaled variable-coefficient problem.

    The seed is centered at y / eps where y is the best node of A_V (branch PQ)
    or A_P (branch VQ) on the physical condition grid.

    Args:
        params: Kirchhoff constants
        triple: Potential triple
        epsilon: Semiclassical parameter
        grid: Rescaled Cartesian grid
        options: Engine settings
        require_conditions: Refuse triples satisfying neither condition pair
        check_grid: Physical grid for the condition check

    Raises:
        PreconditionError: If the conditions fail or the box misses the candidate
    """
    label = f"{triple.name}/eps={epsilon:g}"
    return _solve_on_triple(
        lambda F: F, params, triple, epsilon, grid, options,
        require_conditions, check_grid, label,
    )  # fmt: skip


def solve_truncated(
    levels: TruncationLevels,
    params: KirchhoffParams,
    triple: PotentialTripleSpec,
    epsilon: float,
    grid: CartesianGrid,
    options: Optional[DescentOptions] = None,
    require_conditions: bool = True,
    check_grid: Optional[CartesianGrid] = None,
) -> GroundStateReport:
    """Discrete c_eps^{cde} with V -> max(c, V), P -> min(d, P), Q -> min(e, Q)."""
    levels.validate(triple)
    label = f"{triple.name}/eps={epsilon:g}/cde=({levels.c:g},{levels.d:g},{levels.e:g})"
    return _solve_on_triple(
        lambda F: F.clamped(levels.c, levels.d, levels.e),
        params, triple, epsilon, grid, options,
        require_conditions, check_grid, label,
    )  # fmt: skip


# ==========================================
# UPPER BOUNDS
# ==========================================


def translated_witness_level(
    params: KirchhoffParams,
    triple: PotentialTripleSpec,
    epsilon: float,
    grid: CartesianGrid,
    y: Sequence[float],
    radial_grid: Optional[RadialGrid] = None,
    options: Optional[DescentOptions] = None,
    limit: Optional[GroundStateReport] = None,
) -> float:
    """max_t J_eps(t w) for the constant ground state at (V(y), P(y), Q(y)) moved to y/eps.

    The witness is sampled on grid with its boundary layer zeroed, so the value
    is an upper bound for the discrete c_eps on that grid. A radial ground state
    already solved for these coefficients can be passed as `limit`.
    """
    if limit is None:
        if radial_grid is None:
            raise DomainError("Either a radial grid or a solved limit is required")
        cc = ConstantCoefficients(*triple.coefficients_at(y))
        limit = solve_constant(cc, params, radial_grid, options)
    center = tuple(float(c) / epsilon for c in y)
    witness = radial_to_cartesian(limit.field, grid, center)
    values = np.where(grid.free_mask(), witness.values, 0.0)
    F = variable_functional(params, triple, epsilon, grid)
    return ray_maximum(F, Field(grid, values))


def ray_sampling_bound(
    F: EnergyFunctional,
    base: Field,
    rng: np.random.Generator,
    n_directions: int = 50,
    spread: float = 0.5,
) -> np.ndarray:
    """Ray maxima max_t J(t w) along random positive perturbations w of base."""
    free = F.grid.free_mask()
    maxima = np.empty(n_directions)
    for i in range(n_directions):
        noise = rng.normal(size=base.values.shape)
        values = np.where(free, np.abs(base.values) * np.exp(spread * noise), 0.0)
        maxima[i] = ray_maximum(F, Field(F.grid, values))
    return maxima


# ==========================================
# LEVEL MONOTONICITY
# ==========================================


def compare_levels(
    lattice: Sequence[ConstantCoefficients],
    params: KirchhoffParams,
    grid: Grid,
    options: Optional[DescentOptions] = None,
    workers: Optional[int] = None,
) -> LevelComparison:
    """
    Solve each lattice triple and check every comparable ordered pair.

    A pair (i, j) with i != j is comparable when k_j >= k_i, tau_i >= tau_j and
    nu_i >= nu_j; its gap m*_j - m*_i must be >= -2 tol, and > 2 tol when the
    triples differ.

    Args:
        lattice: Triples; repeated entries are solved once
        params: Kirchhoff constants
        grid: Grid used for every solve
        options: Engine settings
        workers: Thread count (defaults to KGS_WORKERS)
    """
    opts = options or DescentOptions()
    lattice = list(lattice)
    unique = list(dict.fromkeys(lattice))
    workers = workers or helper_functions.worker_count()

    with ThreadPoolExecutor(max_workers=workers) as executor:
        reports = list(
            executor.map(lambda cc: solve_constant(cc, params, grid, opts), unique)
        )
    solved = dict(zip(unique, reports))

    levels = pd.DataFrame(
        [
            {
                "k": cc.k,
                "tau": cc.tau,
                "nu": cc.nu,
                "level": solved[cc].level,
                "iterations": solved[cc].iterations,
                "converged": solved[cc].converged,
            }
            for cc in lattice
        ],
        columns=LEVEL_COLUMNS,
    )

    rows = []
    band = 2.0 * opts.tol
    for i, j in itertools.permutations(range(len(lattice)), 2):
        low, high = lattice[i], lattice[j]
        if not high.dominates(low):
            continue
        gap = solved[high].level - solved[low].level
        strict = low != high
        rows.append(
            {
                "k1": low.k, "tau1": low.tau, "nu1": low.nu,
                "k2": high.k, "tau2": high.tau, "nu2": high.nu,
                "level1": solved[low].level,
                "level2": solved[high].level,
                "gap": gap,
                "consistent": gap >= -band,
                "strict": strict,
                "strict_ok": (gap > band) if strict else True,
            }
        )  # fmt: skip

    pairs = pd.DataFrame(rows, columns=PAIR_COLUMNS)
    graph = level_graph(levels, pairs)
    return LevelComparison(levels=levels, pairs=pairs, graph=graph, tol=opts.tol)


def level_graph(levels: pd.DataFrame, pairs: pd.DataFrame) -> nx.DiGraph:
    """Order graph of a lattice: nodes (k, tau, nu) with their level, edges low -> high.

    Only strictly different comparable pairs become edges.
    """
    graph = nx.DiGraph()
    for row in levels.itertuples(index=False):
        graph.add_node((row.k, row.tau, row.nu), level=row.level)
    for row in pairs[pairs["strict"].astype(bool)].itertuples(index=False):
        graph.add_edge(
            (row.k1, row.tau1, row.nu1), (row.k2, row.tau2, row.nu2), gap=row.gap
        )
    return graph
