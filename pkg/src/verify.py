"""
File: verify.py
Location: /src/verify.py
Description: Property suites behind `run_solver.py verify --suite`
Author: Patrick Jordan
Version: 2026-10

Each suite takes the SolverConfig of the run and returns one row per check
(suite, check, passed, value, detail). Random draws come from a generator
seeded with the configured seed at the start of every suite, so a suite
gives the same rows whether it runs alone or inside "all".

Suites:
- thresholds: closed-form (t0, s0), fixed-point oracle, dominance, c* identity
- sobolev: discrete best Sobolev constant and its refinement order
- fibering: uniqueness and location of the fibering maximum
- gradient: energy_gradient against central differences
- constant: constant-coefficient ground state and its invariants
- lattice: level monotonicity over a lattice of constant triples
- truncation: ordering of c_eps, c_eps^{cde} and the constant level
- sweep: concentration trends along an eps sweep
- translation: equivariance of the maximum point under a shift of V, P, Q
- potentials: condition checks, admissible sets and declared limits of presets
"""

# Standard library imports
import itertools
import math
import time
from typing import Callable, Dict, List, Optional

# Third-party imports
import numpy as np
import pandas as pd

# Local Imports
import helper_functions
from src.concentration import (
    epsilon_sweep,
    level_bound_check,
    sweep_trends,
    translation_check,
    uniform_decay_envelope,
)
from src.errors import ConfigParseError, PropertyViolation
from src.functional import (
    EnergyFunctional,
    FiberingMap,
    energy,
    energy_gradient,
    energy_identity_residuals,
    fibering_map,
    nehari_project,
    sobolev_constant,
)
from src.groundstate import (
    ConstantCoefficients,
    compare_levels,
    ray_sampling_bound,
    solve_constant,
    solve_truncated,
    solve_variable,
)
from src.model import CartesianGrid, Field, RadialGrid, gaussian_field, inner
from src.potentials import (
    admissible_sets,
    branch_passes,
    check_conditions,
    preset,
    verify_declared_limits,
)
from src.thresholds import (
    BEST_SOBOLEV_CONSTANT,
    critical_level,
    dominance_check,
    fixed_point_ts,
    solve_ts_system,
    threshold_table,
)

VERIFY_COLUMNS = ["suite", "check", "passed", "value", "detail"]

THRESHOLD_DRAWS = 100
FIXED_POINT_STARTS = 20
FIBERING_PROFILES = 50
FIBERING_SAMPLES = 200
GRADIENT_DRAWS = 50
GRADIENT_STEP = 1e-5
SOBOLEV_GRID = (60.0, 12000)


def _row(suite: str, check: str, passed: bool, value: float, detail: str = "") -> Dict:
    return {
        "suite": suite,
        "check": check,
        "passed": bool(passed),
        "value": float(value),
        "detail": detail,
    }


def _rng(config) -> np.random.Generator:
    return np.random.default_rng(config.random_seed)


# ==========================================
# CLOSED-FORM SUITES
# ==========================================


def suite_thresholds(config) -> List[Dict]:
    rng = _rng(config)
    rows = []

    draws = pd.DataFrame(
        10.0 ** rng.uniform(-1.0, 1.0, size=(THRESHOLD_DRAWS, 4)), columns=["a", "b", "S", "q"]
    )
    table = threshold_table(draws)
    worst = float(table["consistency_residual"].max())
    rows.append(_row("thresholds", "consistency_residual", worst < 1e-10, worst,
                     f"{THRESHOLD_DRAWS} random (a, b, S, q)"))  # fmt: skip

    fixed_point_residual = 0.0
    for a, b, S, q in draws.itertuples(index=False):
        fixed_point_residual = max(fixed_point_residual, *solve_ts_system(a, b, S, q).residuals())
    rows.append(_row("thresholds", "fixed_point_residual", fixed_point_residual < 1e-12,
                     fixed_point_residual))  # fmt: skip

    # Uniqueness: the iteration lands on the closed form from every start
    a, b, S, lam = config.params.a, config.params.b, config.S, config.lam
    sol = solve_ts_system(a, b, S, lam)
    spread = 0.0
    for start in 10.0 ** rng.uniform(-3.0, 3.0, size=(FIXED_POINT_STARTS, 2)):
        t, s, _ = fixed_point_ts(a, b, S, lam, start=start)
        spread = max(spread, abs(t - sol.t0) / sol.t0, abs(s - sol.s0) / sol.s0)
    rows.append(_row("thresholds", "fixed_point_uniqueness", spread < 1e-8, spread,
                     f"{FIXED_POINT_STARTS} starts"))  # fmt: skip

    at_solution = dominance_check(sol.t0, sol.s0, sol)
    doubled = dominance_check(2.0 * sol.t0, 2.0 * sol.s0, sol)
    halved = dominance_check(0.5 * sol.t0, 0.5 * sol.s0, sol)
    rows.append(_row("thresholds", "dominance_examples", at_solution and doubled and not halved,
                     float(at_solution) + float(doubled) + float(not halved),
                     "(t0,s0) true, (2t0,2s0) true, (t0/2,s0/2) false"))  # fmt: skip

    # Dominance implication on random points
    implication_ok = True
    for t, s in 10.0 ** rng.uniform(-1.0, 2.0, size=(200, 2)) * np.array([sol.t0, sol.s0]):
        dominated = t >= sol.t0 * (1 - 1e-12) and s >= sol.s0 * (1 - 1e-12)
        if dominance_check(t, s, sol) and not dominated:
            implication_ok = False
    rows.append(_row("thresholds", "dominance_implication", implication_ok, float(implication_ok)))

    c_values = [critical_level(a, b, S, q).c_star for q in (0.5, 1.0, 2.0, 4.0)]
    decreasing = all(y < x for x, y in zip(c_values, c_values[1:]))
    rows.append(_row("thresholds", "c_star_decreasing_in_q", decreasing, c_values[-1]))

    lam_ok = solve_ts_system(a, b, S, 2.0 * lam)
    monotone = lam_ok.t0 < sol.t0 and lam_ok.s0 < sol.s0
    rows.append(_row("thresholds", "ts_decreasing_in_lambda", monotone, lam_ok.t0 - sol.t0))
    return rows


def suite_sobolev(config) -> List[Dict]:
    R, n = SOBOLEV_GRID
    value = sobolev_constant(RadialGrid(R, n))
    error = abs(value - BEST_SOBOLEV_CONSTANT)
    rows = [_row("sobolev", "best_constant", error < 1e-3, value,
                 f"|S_h - S| = {error:.3e} on RadialGrid({R:g}, {n})")]  # fmt: skip

    # Successive differences remove the resolution-independent part of the error
    levels = [sobolev_constant(RadialGrid(R, n // k)) for k in (4, 2, 1)]
    ratio = (levels[0] - levels[1]) / (levels[1] - levels[2])
    order = math.log2(abs(ratio)) if ratio != 0 else float("nan")
    rows.append(_row("sobolev", "refinement_order", 1.5 <= order <= 2.5, order,
                     f"n = {n // 4}, {n // 2}, {n}"))  # fmt: skip
    return rows


# ==========================================
# FIBERING AND GRADIENT
# ==========================================


GOLDEN_RATIO = 2.0 / (1.0 + math.sqrt(5.0))


def golden_section_min(f: Callable[[float], float], lo: float, hi: float,
                       xtol: float, max_iter: int = 200) -> float:
    """Minimizer of a unimodal f on [lo, hi] by golden-section search."""
    x1 = hi - GOLDEN_RATIO * (hi - lo)
    x2 = lo + GOLDEN_RATIO * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        if f2 > f1:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN_RATIO * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN_RATIO * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)


def brute_force_fibering_max(
    fmap: FiberingMap, t_max: float = 10.0, step: float = 1e-5
) -> float:
    """Maximizer of g on a uniform scan of (0, t_max], then golden-section refinement.

    The scan doubles t_max until the best sample lies inside the window. The
    golden-section refinement minimizes |g'| inside the two cells around the
    best sample.
    """
    while True:
        t = np.arange(step, t_max + 0.5 * step, step)
        best = int(np.argmax(fmap(t)))
        if best < t.size - 1:
            break
        t_max *= 2.0

    lo = max(t[best] - step, 0.5 * step)
    hi = t[best] + step
    return golden_section_min(lambda x: abs(fmap.derivative(x)), lo, hi, 1e-15 * hi)


def _random_profile(grid: RadialGrid, rng: np.random.Generator) -> Field:
    amplitude = rng.uniform(1.5, 3.0)
    width = rng.uniform(0.75, 2.0)
    wiggle = rng.uniform(-0.3, 0.3)
    r = grid.nodes
    values = amplitude * np.exp(-((r / width) ** 2)) * (1.0 + wiggle * np.sin(r))
    return Field(grid, np.where(grid.free_mask(), values, 0.0))


def suite_fibering(config) -> List[Dict]:
    rng = _rng(config)
    grid = RadialGrid(12.0, 1200)
    F = EnergyFunctional.constant(config.params, grid, 1.0, 1.0, 1.0)

    sign_failures = agreement = dominance_failures = 0
    worst_gap = 0.0
    for _ in range(FIBERING_PROFILES):
        v = _random_profile(grid, rng)
        fmap = fibering_map(F, v)
        t_star = nehari_project(F, v).t_star

        t_grid = t_star * np.geomspace(1e-6, 1e6, 10_000)
        signs = np.sign(fmap.transformed(t_grid))
        if np.count_nonzero(np.diff(signs[signs != 0])) != 1:
            sign_failures += 1

        t_brute = brute_force_fibering_max(fmap)
        gap = abs(t_brute - t_star)
        worst_gap = max(worst_gap, gap)
        if gap <= 1e-8:
            agreement += 1

        samples = rng.uniform(0.0, 4.0 * t_star, size=FIBERING_SAMPLES)
        samples = samples[samples > 0]
        peak = fmap(t_star)
        if np.any(fmap(samples) > peak + 1e-12 * abs(peak)):
            dominance_failures += 1

    return [
        _row("fibering", "single_sign_change", sign_failures == 0, sign_failures,
             f"{FIBERING_PROFILES} profiles, 1e4-point geometric t-grid"),
        _row("fibering", "bisection_vs_brute_force", agreement == FIBERING_PROFILES, worst_gap,
             "max |t_bisect - t_brute|"),
        _row("fibering", "maximum_dominates_samples", dominance_failures == 0, dominance_failures,
             f"{FIBERING_SAMPLES} samples in (0, 4 t*]"),
    ]  # fmt: skip


def _gradient_case(config, rng: np.random.Generator, radial: bool):
    if radial:
        grid = RadialGrid(8.0, 200)
        F = EnergyFunctional.constant(config.params, grid, *rng.uniform(0.5, 2.0, size=3))
    else:
        grid = CartesianGrid(3.0, 9)
        V, P, Q = config.potential.sample(grid, 0.5)
        F = EnergyFunctional(config.params, V, P, Q)
    base = gaussian_field(grid, width=rng.uniform(0.8, 1.5)).values
    v = base * (1.0 + 0.2 * rng.uniform(-1.0, 1.0, size=grid.shape))
    phi = np.where(grid.free_mask(), rng.normal(size=grid.shape), 0.0)
    return F, Field(grid, v), Field(grid, phi)


def suite_gradient(config) -> List[Dict]:
    rng = _rng(config)
    worst = 0.0
    for i in range(GRADIENT_DRAWS):
        F, v, phi = _gradient_case(config, rng, radial=i % 2 == 0)
        analytic = inner(energy_gradient(F, v), phi)
        plus = energy(F, v.with_values(v.values + GRADIENT_STEP * phi.values))
        minus = energy(F, v.with_values(v.values - GRADIENT_STEP * phi.values))
        numeric = (plus - minus) / (2.0 * GRADIENT_STEP)
        scale = max(abs(analytic), abs(numeric), 1e-300)
        worst = max(worst, abs(analytic - numeric) / scale)

    return [_row("gradient", "central_difference", worst < 1e-6, worst,
                 f"{GRADIENT_DRAWS} (v, phi) pairs, step {GRADIENT_STEP:g}")]  # fmt: skip


# ==========================================
# SOLVER SUITES
# ==========================================


def suite_constant(config) -> List[Dict]:
    cc = config.constants
    report = solve_constant(cc, config.params, config.radial_grid, config.options)
    rows = [_row("constant", "converged", report.converged, report.iterations)]

    for name, passed in report.invariant_checks(config.options.tol).items():
        rows.append(_row("constant", name, passed, report.level))

    norm_sq = report.norm_sq
    identities = energy_identity_residuals(report.functional, report.field)
    for name, residual in identities.items():
        rows.append(_row("constant", f"energy_identity_{name}",
                         abs(residual) <= 1e-8 * max(norm_sq, 1.0), residual))  # fmt: skip

    c_star = critical_level(config.params.a, config.params.b, config.S, cc.nu).c_star
    rows.append(_row("constant", "below_critical_level", 0 < report.level < c_star,
                     report.level, f"c* = {c_star!r}"))  # fmt: skip

    maxima = ray_sampling_bound(report.functional, report.field, _rng(config), config.draws)
    gap = float(maxima.min() - report.level)
    rows.append(_row("constant", "ray_maxima_above_level",
                     gap >= -config.options.tol * max(report.level, 1.0), gap,
                     f"{config.draws} random directions"))  # fmt: skip

    if report.alternate_levels:
        spread = max(report.alternate_levels) - min(report.alternate_levels)
        rows.append(_row("constant", "multistart_agreement", spread <= 1e-6 * report.level, spread))
    return rows


def suite_lattice(config) -> List[Dict]:
    values = config.lattice_values
    lattice = [ConstantCoefficients(*t) for t in itertools.product(values, repeat=3)]
    comparison = compare_levels(
        lattice, config.params, config.radial_grid, config.options, config.workers
    )
    pairs = comparison.pairs
    expected = _comparable_pair_count(len(set(values)))
    rows = [
        _row("lattice", "pair_count", len(pairs) == expected, len(pairs), f"expected {expected}"),
        _row("lattice", "monotone", bool(pairs["consistent"].all()),
             float(pairs["gap"].min()) if len(pairs) else 0.0, "min gap"),
        _row("lattice", "strict_gaps", bool(pairs["strict_ok"].all()),
             len(comparison.violations()), "violations"),
        _row("lattice", "all_converged", bool(comparison.levels["converged"].all()),
             int(comparison.levels["converged"].sum())),
    ]  # fmt: skip
    config.last_comparison = comparison
    return rows


def _comparable_pair_count(n: int) -> int:
    """Ordered pairs of distinct comparable triples in a product order of n^3 points."""
    per_axis = n * (n + 1) // 2
    return per_axis**3 - n**3


def suite_truncation(config) -> List[Dict]:
    spec = config.potential
    levels = config.truncation
    grid = config.cartesian_grid
    opts = config.options
    eps = config.epsilon

    variable = solve_variable(config.params, spec, eps, grid, opts)
    truncated = solve_truncated(levels, config.params, spec, eps, grid, opts)
    constant = solve_constant(
        ConstantCoefficients(levels.c, levels.d, levels.e), config.params, grid, opts
    )

    band = 100.0 * opts.tol * max(1.0, abs(variable.level))
    gap = truncated.level - variable.level
    return [
        _row("truncation", "variable_below_truncated", variable.level <= truncated.level + band,
             gap, f"c_eps={variable.level!r}; c_eps^cde={truncated.level!r}"),
        _row("truncation", "truncated_above_constant",
             truncated.level >= constant.level - band, truncated.level - constant.level,
             f"m*=({levels.c:g},{levels.d:g},{levels.e:g}) -> {constant.level!r}"),
        _row("truncation", "all_converged",
             variable.converged and truncated.converged and constant.converged,
             variable.iterations + truncated.iterations + constant.iterations),
    ]  # fmt: skip


def suite_sweep(config) -> List[Dict]:
    report = epsilon_sweep(
        config.params, config.potential, config.eps_list, config.policy,
        config.options, config.workers,
    )  # fmt: skip
    config.last_sweep = report
    rows = [
        _row("sweep", r.check, r.passed, r.value, f"branch {report.branch}")
        for r in sweep_trends(report).itertuples(index=False)
    ]

    bounds = level_bound_check(report, 100.0 * config.options.tol)
    rows.append(_row("sweep", "level_below_witness", bool(bounds.all()),
                     int((~bounds).sum()), "records above the translated-witness bound"))  # fmt: skip

    if report.profiles:
        envelope = uniform_decay_envelope(list(report.profiles.values()), report.policy.decay_window)
        rows.append(_row("sweep", "uniform_decay_envelope",
                         envelope["c"] > 0 and math.isfinite(envelope["C"]), envelope["c"],
                         f"C = {envelope['C']!r}"))  # fmt: skip
    return rows


def suite_translation(config) -> List[Dict]:
    grid = config.cartesian_grid
    offset = (2.0 * config.epsilon * grid.h, 0.0, 0.0)
    result = translation_check(
        config.params, config.potential, offset, config.epsilon, grid, config.options
    )
    return [
        _row("translation", "max_point_moves_with_shift", result["passed"], result["error"],
             f"shift {offset[0]!r}, cell {result['cell']!r}"),
        _row("translation", "level_invariant",
             result["level_gap"] <= 1e-6 * max(1.0, abs(result["level"])), result["level_gap"]),
    ]  # fmt: skip


def suite_potentials(config) -> List[Dict]:
    rows = []
    expectations = (
        ("aligned", "VQ", True),
        ("competing", "PQ", True),
        ("competing", "VQ", False),
        ("vq_competing", "VQ", True),
        ("constant", "PQ", False),
    )
    for name, branch, expected in expectations:
        spec = preset(name)
        grid = config.policy.check_grid(spec)
        report = check_conditions(spec, grid)
        passed = branch_passes(report, branch)
        witnessed = bool((report["witness"] != "").any())
        rows.append(_row("potentials", f"{name}_{branch}_{'passes' if expected else 'fails'}",
                         passed == expected and witnessed, float(passed)))  # fmt: skip

    # The constant triple fails exactly through the PQ2 gap clause
    constant = check_conditions(preset("constant"), config.policy.check_grid(preset("constant")))
    gap_row = constant[(constant["condition"] == "PQ2") & (constant["clause"] == "P_max > P_inf")]
    rows.append(_row("potentials", "constant_fails_PQ2_gap", not bool(gap_row["passed"].iloc[0]),
                     float(gap_row["value"].iloc[0])))  # fmt: skip

    for name in ("aligned", "competing", "vq_competing"):
        spec = preset(name)
        grid = config.policy.check_grid(spec)
        limits = verify_declared_limits(spec, grid)
        rows.append(_row("potentials", f"{name}_declared_limits", bool(limits["passed"].all()),
                         int(limits["passed"].sum())))  # fmt: skip

        sets = admissible_sets(spec, grid)
        tight = admissible_sets(spec, grid, tol_set=0.5 * sets.tol_set)
        nested = set(tight.A_V).issubset(sets.A_V) and set(tight.A_P).issubset(sets.A_P)
        rows.append(_row("potentials", f"{name}_sets_shrink_with_tolerance", nested,
                         sets.A_V.size + sets.A_P.size))  # fmt: skip
    return rows


# ==========================================
# RUNNER
# ==========================================

SUITES: Dict[str, Callable] = {
    "thresholds": suite_thresholds,
    "sobolev": suite_sobolev,
    "fibering": suite_fibering,
    "gradient": suite_gradient,
    "potentials": suite_potentials,
    "constant": suite_constant,
    "lattice": suite_lattice,
    "truncation": suite_truncation,
    "translation": suite_translation,
    "sweep": suite_sweep,
}

QUICK_SUITES = ("thresholds", "sobolev", "fibering", "gradient", "potentials")


def suite_names(suite: str) -> List[str]:
    if suite == "all":
        return list(SUITES)
    if suite == "quick":
        return list(QUICK_SUITES)
    names = [s.strip() for s in suite.split(",") if s.strip()]
    unknown = [s for s in names if s not in SUITES]
    if unknown or not names:
        raise ConfigParseError(
            f"Unknown suite '{suite}'. Available: all, quick, {', '.join(SUITES)}"
        )
    return names


def run_suites(config, suite: Optional[str] = None) -> pd.DataFrame:
    """Run the named suite(s) and collect their check rows."""
    rows: List[Dict] = []
    for name in suite_names(suite or config.suite):
        start = time.time()
        print(f"\n--- suite {name} ---")
        helper_functions.debug_print(f"verify: suite {name} started")
        suite_rows = SUITES[name](config)
        for row in suite_rows:
            tag = "[OK]  " if row["passed"] else "[FAIL]"
            print(f"{tag} {row['check']:<40} {row['value']!r}")
        print(f"suite {name} finished in {time.time() - start:.2f} s")
        rows.extend(suite_rows)
    return pd.DataFrame(rows, columns=VERIFY_COLUMNS)


def assert_passed(results: pd.DataFrame) -> None:
    """Raises PropertyViolation listing the failing checks."""
    failures = results[~results["passed"]]
    if len(failures):
        names = ", ".join(f"{r.suite}.{r.check}" for r in failures.itertuples(index=False))
        raise PropertyViolation(f"{len(failures)} check(s) failed: {names}", failures)
