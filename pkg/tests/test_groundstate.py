import numpy as np
import pytest

from src.errors import DomainError, PreconditionError, StructuralError
from src.functional import EnergyFunctional, energy_identity_residuals
from src.groundstate import (
    ConstantCoefficients,
    DescentOptions,
    Preconditioner,
    TruncationLevels,
    compare_levels,
    minimize_on_nehari,
    ray_sampling_bound,
    solve_constant,
    solve_truncated,
    solve_variable,
    translated_witness_level,
)
from src.model import CartesianGrid, Field, KirchhoffParams, RadialGrid, gaussian_field
from src.potentials import preset
from src.solver_monitor import TRACE_COLUMNS
from src.thresholds import BEST_SOBOLEV_CONSTANT, critical_level

# Desk-scale constants: with b = 0.05 the ground state fits a radius-15 ball
DESK = KirchhoffParams(a=1.0, b=0.05, p=5.0)
UNIT = ConstantCoefficients(1.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def radial():
    return RadialGrid(15.0, 300)


@pytest.fixture(scope="module")
def options():
    return DescentOptions(tol=1e-8, max_domain_retries=0, boundary_threshold=1e-3)


@pytest.fixture(scope="module")
def unit_report(radial, options):
    return solve_constant(UNIT, DESK, radial, options)


# ==========================================
# DOMAIN TYPES
# ==========================================


def test_constant_coefficients_must_be_positive():
    with pytest.raises(DomainError):
        ConstantCoefficients(1.0, 0.0, 1.0)


def test_dominance_order():
    low, high = ConstantCoefficients(1, 2, 1), ConstantCoefficients(2, 1, 1)
    assert high.dominates(low)
    assert not low.dominates(high)


def test_truncation_levels_inside_declared_ranges():
    spec = preset("competing")
    TruncationLevels(spec.V_min, spec.P_max, spec.Q_max).validate(spec)
    with pytest.raises(PreconditionError):
        TruncationLevels(spec.V_max + 1.0, spec.P_max, spec.Q_max).validate(spec)


@pytest.mark.parametrize("grid", [RadialGrid(10.0, 80), CartesianGrid(3.0, 9)])
def test_preconditioner_inverts_its_operator(grid, rng):
    F = EnergyFunctional.constant(DESK, grid, 1.0, 1.0, 1.0)
    v = gaussian_field(grid).values
    P = Preconditioner(F, v)
    x = np.where(grid.free_mask(), rng.normal(size=grid.shape), 0.0)
    np.testing.assert_allclose(P.solve(P.multiply(x)), x, atol=1e-10)


# ==========================================
# ENGINE
# ==========================================


def test_engine_rejects_bad_initial_fields(radial, options):
    F = EnergyFunctional.constant(DESK, radial, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        minimize_on_nehari(F, Field(radial, np.zeros(radial.shape)), options=options)
    with pytest.raises(StructuralError):
        minimize_on_nehari(F, gaussian_field(RadialGrid(15.0, 200)), options=options)
    with pytest.raises(DomainError):
        minimize_on_nehari(F, gaussian_field(radial), tol=0.0)


def test_constant_ground_state_invariants(unit_report, options):
    report = unit_report
    assert report.converged
    assert report.grad_sup < options.tol
    assert all(report.invariant_checks(options.tol).values())
    assert list(report.trace.columns) == TRACE_COLUMNS

    residuals = energy_identity_residuals(report.functional, report.field)
    assert abs(residuals["p_th"]) < 1e-8
    assert abs(residuals["quarter"]) < 1e-8


def test_constant_level_below_critical_level(unit_report):
    c_star = critical_level(DESK.a, DESK.b, BEST_SOBOLEV_CONSTANT, UNIT.nu).c_star
    assert 0.0 < unit_report.level < c_star


def test_restart_from_minimizer_is_a_fixed_point(unit_report, options):
    again = minimize_on_nehari(unit_report.functional, unit_report.field, options=options)
    assert again.iterations <= 2
    assert again.level == pytest.approx(unit_report.level, abs=1e-10)


def test_multistart_levels_agree(radial):
    opts = DescentOptions(tol=1e-8, seed_widths=(0.5, 2.0), max_domain_retries=0,
                          boundary_threshold=1e-3)  # fmt: skip
    report = solve_constant(UNIT, DESK, radial, opts)
    assert len(report.alternate_levels) == 1
    assert report.alternate_levels[0] == pytest.approx(report.level, abs=1e-6)


def test_level_below_sampled_ray_maxima(unit_report, rng):
    maxima = ray_sampling_bound(unit_report.functional, unit_report.field, rng, n_directions=50)
    assert unit_report.level <= maxima.min() + 1e-8 * unit_report.level


def test_budget_exhaustion_returns_unconverged_report(radial):
    opts = DescentOptions(tol=1e-12, max_iter=3, max_domain_retries=0, boundary_threshold=1.0)
    report = solve_constant(UNIT, DESK, radial, opts)
    assert not report.converged
    assert report.iterations == 3
    assert len(report.trace) == 4


# ==========================================
# LEVEL MONOTONICITY
# ==========================================


def test_four_point_lattice_is_ordered(radial, options):
    lattice = [UNIT, ConstantCoefficients(2, 1, 1), ConstantCoefficients(1, 2, 1),
               ConstantCoefficients(1, 1, 2)]  # fmt: skip
    comparison = compare_levels(lattice, DESK, radial, options, workers=2)

    assert comparison.consistent
    assert len(comparison.pairs) == 5
    assert comparison.pairs["strict"].all()
    assert (comparison.pairs["gap"] > 0).all()
    assert comparison.graph.number_of_edges() == 5
    assert comparison.graph.nodes[(1.0, 1.0, 1.0)]["level"] == pytest.approx(
        comparison.levels["level"].iloc[0]
    )


def test_identical_triples_compare_equal(radial, options):
    comparison = compare_levels([UNIT, UNIT], DESK, radial, options, workers=1)
    assert len(comparison.pairs) == 2
    assert (comparison.pairs["gap"].abs() < 1e-8).all()
    assert not comparison.pairs["strict"].any()
    assert comparison.consistent


# ==========================================
# VARIABLE AND TRUNCATED PROBLEMS
# ==========================================


@pytest.fixture(scope="module")
def box():
    return CartesianGrid(8.0, 17)


@pytest.fixture(scope="module")
def aligned_report(box, options):
    return solve_variable(DESK, preset("aligned"), 0.5, box, options)


def test_variable_solution_is_a_critical_point(aligned_report):
    assert aligned_report.converged
    assert aligned_report.epsilon == 0.5
    assert aligned_report.max_point == pytest.approx((0.0, 0.0, 0.0))
    assert abs(energy_identity_residuals(aligned_report.functional,
                                         aligned_report.field)["quarter"]) < 1e-8  # fmt: skip


def test_variable_level_below_translated_witness(aligned_report, box, radial, options):
    witness = translated_witness_level(
        DESK, preset("aligned"), 0.5, box, (0.0, 0.0, 0.0), radial_grid=radial, options=options
    )
    assert aligned_report.level <= witness + 1e-8 * witness


def test_inactive_truncation_reproduces_variable_level(aligned_report, box, options):
    spec = preset("aligned")
    levels = TruncationLevels(spec.V_min, spec.P_max, spec.Q_max)
    truncated = solve_truncated(levels, DESK, spec, 0.5, box, options)
    assert truncated.level == pytest.approx(aligned_report.level, abs=1e-10)


def test_active_truncation_raises_the_level(aligned_report, box, options):
    spec = preset("aligned")
    levels = TruncationLevels(spec.V_min, 0.5 * (spec.P_max + spec.P_inf), spec.Q_max)
    truncated = solve_truncated(levels, DESK, spec, 0.5, box, options)
    assert aligned_report.level <= truncated.level + 1e-6


def test_truncated_level_above_constant_level(box, options):
    spec = preset("aligned")
    levels = TruncationLevels(spec.V_min, 0.5 * (spec.P_max + spec.P_inf), spec.Q_max)
    truncated = solve_truncated(levels, DESK, spec, 0.5, box, options)
    constant = solve_constant(ConstantCoefficients(levels.c, levels.d, levels.e),
                              DESK, box, options)  # fmt: skip

    assert truncated.converged and constant.converged
    band = 100 * options.tol * max(1.0, abs(constant.level))
    assert truncated.level >= constant.level - band


def test_variable_solve_requires_a_condition_pair(box, options):
    with pytest.raises(PreconditionError, match="neither condition pair"):
        solve_variable(DESK, preset("constant"), 0.5, box, options)


def test_variable_solve_rejects_radial_grid(radial, options):
    with pytest.raises(StructuralError):
        solve_variable(DESK, preset("aligned"), 0.5, radial, options)


@pytest.mark.slow
def test_constant_triple_matches_radial_level():
    params = KirchhoffParams(1.0, 0.05, 5.0)
    opts = DescentOptions(max_domain_retries=2)
    box = CartesianGrid(12.0, 48)
    variable = solve_variable(params, preset("constant"), 1.0, box, opts,
                              require_conditions=False)  # fmt: skip
    radial_level = solve_constant(UNIT, params, RadialGrid(20.0, 2000), opts).level
    assert variable.level == pytest.approx(radial_level, rel=0.02)


@pytest.mark.slow
def test_reference_constant_ground_state():
    params = KirchhoffParams(1.0, 1.0, 5.0)
    report = solve_constant(UNIT, params, RadialGrid(20.0, 4000), DescentOptions())
    assert report.converged
    checks = report.invariant_checks(1e-8)
    assert all(checks.values()), checks
    residuals = energy_identity_residuals(report.functional, report.field)
    assert abs(residuals["p_th"]) < 1e-8
    assert report.level < critical_level(1.0, 1.0, BEST_SOBOLEV_CONSTANT, 1.0).c_star
