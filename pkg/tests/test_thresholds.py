import math

import numpy as np
import pandas as pd
import pytest

from src.errors import DomainError
from src.thresholds import (
    BEST_SOBOLEV_CONSTANT,
    THRESHOLD_COLUMNS,
    critical_level,
    dominance_check,
    fixed_point_ts,
    solve_ts_system,
    threshold_consistency,
    threshold_table,
)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def _draws(rng, n=100):
    return rng.uniform(0.1, 10.0, size=(n, 4))


def test_golden_ratio_case():
    sol = solve_ts_system(1.0, 1.0, 1.0, 1.0)
    assert sol.t0 == pytest.approx(1.6180339887, abs=1e-10)
    assert sol.s0 == pytest.approx(2.6180339887, abs=1e-10)
    assert sol.t0 + sol.s0 == pytest.approx(GOLDEN**3, rel=1e-14)


def test_fixed_point_residuals_for_random_draws(rng):
    for a, b, S, lam in _draws(rng):
        phi_rel, psi_rel = solve_ts_system(a, b, S, lam).residuals()
        assert phi_rel < 1e-12
        assert psi_rel < 1e-12


def test_doubling_lambda_lowers_both_thresholds():
    base = solve_ts_system(1.0, 1.0, BEST_SOBOLEV_CONSTANT, 1.0)
    doubled = solve_ts_system(1.0, 1.0, BEST_SOBOLEV_CONSTANT, 2.0)
    assert doubled.t0 < base.t0
    assert doubled.s0 < base.s0


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_solve_rejects_non_positive_input(bad):
    with pytest.raises(DomainError):
        solve_ts_system(1.0, bad, 1.0, 1.0)


def test_fixed_point_iteration_agrees_from_random_starts(rng):
    sol = solve_ts_system(1.0, 0.5, 2.0, 1.5)
    for start in rng.uniform(0.01, 100.0, size=(20, 2)):
        t, s, _ = fixed_point_ts(1.0, 0.5, 2.0, 1.5, start=tuple(start))
        assert t == pytest.approx(sol.t0, rel=1e-8)
        assert s == pytest.approx(sol.s0, rel=1e-8)


def test_dominance_examples():
    sol = solve_ts_system(1.0, 1.0, 1.0, 1.0)
    assert dominance_check(sol.t0, sol.s0, sol)
    assert dominance_check(2 * sol.t0, 2 * sol.s0, sol)
    assert not dominance_check(sol.t0 / 2, sol.s0 / 2, sol)


def test_dominance_implies_larger_pair(rng):
    sol = solve_ts_system(1.0, 1.0, BEST_SOBOLEV_CONSTANT, 1.0)
    t = rng.uniform(0.0, 4.0 * sol.t0, size=500) + 1e-6
    s = rng.uniform(0.0, 4.0 * sol.s0, size=500) + 1e-6
    for ti, si in zip(t, s):
        if dominance_check(ti, si, sol):
            assert ti >= sol.t0 * (1 - 1e-12)
            assert si >= sol.s0 * (1 - 1e-12)


def test_critical_level_formula():
    S = BEST_SOBOLEV_CONSTANT
    expected = S**3 / 4.0 + (S**4 + 4.0 * S) ** 1.5 / 24.0 + S**6 / 24.0
    assert critical_level(1.0, 1.0, S, 1.0).c_star == pytest.approx(expected, rel=1e-14)


def test_critical_level_decreasing_in_q():
    levels = [critical_level(1.0, 1.0, BEST_SOBOLEV_CONSTANT, q).c_star for q in (0.5, 1, 2, 4)]
    assert all(x > y for x, y in zip(levels, levels[1:]))


def test_critical_level_vanishes_with_S():
    assert critical_level(1.0, 1.0, 1e-6, 1.0).c_star < 1e-8


def test_consistency_residual_reference_and_random(rng):
    assert threshold_consistency(1.0, 1.0, 1.0, 1.0) < 1e-10
    for a, b, S, q in _draws(rng):
        assert threshold_consistency(a, b, S, q) < 1e-10


def test_consistency_residual_near_zero_b():
    assert threshold_consistency(1.0, 1e-8, BEST_SOBOLEV_CONSTANT, 1.0) < 1e-8


def test_threshold_table_matches_scalar_path(rng):
    rows = pd.DataFrame(_draws(rng, 10), columns=["a", "b", "S", "q"])
    table = threshold_table(rows)
    assert list(table.columns) == THRESHOLD_COLUMNS

    for row in table.itertuples(index=False):
        sol = solve_ts_system(row.a, row.b, row.S, row.q)
        # Same code path, so the numbers agree exactly
        assert row.t0 == sol.t0
        assert row.s0 == sol.s0
        assert row.c_star == critical_level(row.a, row.b, row.S, row.q).c_star
        assert row.consistency_residual == threshold_consistency(row.a, row.b, row.S, row.q)
    assert np.all(table["consistency_residual"] < 1e-10)


def test_threshold_table_empty_rows_keep_columns():
    table = threshold_table(pd.DataFrame(columns=["a", "b", "S", "q"]))
    assert table.empty
    assert list(table.columns) == THRESHOLD_COLUMNS


def test_threshold_table_rejects_missing_or_bad_columns():
    with pytest.raises(DomainError):
        threshold_table(pd.DataFrame({"a": [1.0], "b": [1.0], "S": [1.0]}))
    with pytest.raises(DomainError):
        threshold_table(pd.DataFrame({"a": [1.0], "b": [-1.0], "S": [1.0], "q": [1.0]}))
