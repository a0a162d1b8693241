import math

import numpy as np
import pytest

from src import concentration
from src.concentration import (
    SWEEP_COLUMNS,
    ConcentrationRecord,
    SweepGridPolicy,
    SweepReport,
    decay_fit,
    epsilon_sweep,
    half_width_at_half_max,
    level_bound_check,
    max_point,
    profile_distance,
    rescaled_profile,
    sweep_status,
    sweep_trends,
    translation_check,
    uniform_decay_envelope,
)
from src.errors import DomainError, InsufficientDataError, PreconditionError
from src.groundstate import DescentOptions
from src.model import (
    CartesianGrid,
    Field,
    KirchhoffParams,
    RadialGrid,
    gaussian_field,
    grad_norm_sq,
    integrate,
)
from src.potentials import preset

DESK = KirchhoffParams(a=1.0, b=0.05, p=5.0)
FAST = DescentOptions(tol=1e-8, max_domain_retries=0, boundary_threshold=1e-3)
# 17-node boxes at both eps, small limit and condition grids
COARSE = SweepGridPolicy(physical_half_width=2.0, rescaled_spacing=0.5, max_nodes=17,
                         profile_nodes=15, limit_R=15.0, limit_n=300,
                         check_nodes=17)  # fmt: skip


def _exponential(grid, C, rate, center=(0.0, 0.0, 0.0)):
    return Field(grid, C * np.exp(-rate * grid.radius(center)))


def _record(epsilon, dist, decay_c=1.0, profile=0.1, level=1.0, witness=2.0, status="ok"):
    return ConcentrationRecord(
        epsilon=epsilon,
        x_eps=(dist, 0.0, 0.0),
        dist_AV=dist,
        decay_C=1.0,
        decay_c=decay_c,
        profile_dist=profile,
        level=level,
        iterations=10,
        witness_level=witness,
        status=status,
    )


def _report(records):
    return SweepReport(
        records=records, branch="PQ", x0=(0.0, 0.0, 0.0), limit_level=1.0,
        policy=SweepGridPolicy(),
    )  # fmt: skip


# ==========================================
# PER-FIELD OPERATIONS
# ==========================================


def test_max_point_of_zero_field():
    grid = CartesianGrid(1.0, 5)
    with pytest.raises(DomainError):
        max_point(Field(grid, np.zeros(grid.shape)))


def test_max_point_finds_shifted_peak():
    grid = CartesianGrid(4.0, 17)
    u = gaussian_field(grid, center=(1.5, -0.5, 0.0))
    assert max_point(u) == pytest.approx((1.5, -0.5, 0.0))


def test_decay_fit_recovers_radial_exponential():
    fit = decay_fit(_exponential(RadialGrid(10.0, 1000), 3.0, 2.0), (0.0, 0.0, 0.0), 1.0)
    assert fit.rate == pytest.approx(2.0, rel=1e-10)
    assert fit.C == pytest.approx(3.0, rel=1e-9)
    assert fit.residual < 1e-10
    assert fit.envelope_C == pytest.approx(3.0, rel=1e-9)


def test_decay_fit_recovers_cartesian_exponential():
    grid = CartesianGrid(6.0, 25)
    u = _exponential(grid, 2.0, 1.5, center=(1.0, 0.0, 0.0))
    fit = decay_fit(u, (1.0, 0.0, 0.0), 0.5)
    assert fit.rate == pytest.approx(1.5, rel=1e-10)
    assert fit.C == pytest.approx(2.0, rel=1e-9)


def test_decay_fit_skips_the_boundary_layer():
    grid = CartesianGrid(3.0, 13)
    values = np.array(_exponential(grid, 1.0, 1.0).values)
    values[0, :, :] = 1e3
    fit = decay_fit(Field(grid, values), (0.0, 0.0, 0.0), 0.0)
    assert fit.rate == pytest.approx(1.0, rel=1e-10)


def test_decay_fit_needs_enough_nodes():
    with pytest.raises(InsufficientDataError):
        decay_fit(_exponential(RadialGrid(5.0, 50), 1.0, 1.0), (0.0, 0.0, 0.0), 4.9)


def test_profile_distance_is_an_h1_norm():
    grid = CartesianGrid(3.0, 13)
    f = gaussian_field(grid)
    zero = Field(grid, np.zeros(grid.shape))
    squared = grad_norm_sq(f) + integrate(Field(grid, f.values**2))
    assert profile_distance(f, zero) == pytest.approx(math.sqrt(squared), rel=1e-12)
    assert profile_distance(f, f) == 0.0
    with pytest.raises(DomainError):
        profile_distance(f, gaussian_field(CartesianGrid(3.0, 9)))


def test_rescaled_profile_is_centered_on_the_peak():
    source = CartesianGrid(4.0, 17)
    u = gaussian_field(source, width=0.5, center=(1.0, 0.0, 0.0))
    target = CartesianGrid(2.0, 9)
    profile = rescaled_profile(u, 0.5, (1.0, 0.0, 0.0), target)
    assert max_point(profile) == pytest.approx((0.0, 0.0, 0.0))
    assert profile.values[4, 4, 4] == pytest.approx(1.0)
    # eps x + x_tilde lands on source nodes at every other target node
    assert profile.values[8, 4, 4] == pytest.approx(u.values[12, 8, 8])


def test_rescaled_profile_at_unit_scale_copies_the_field():
    grid = CartesianGrid(3.0, 13)
    u = gaussian_field(grid, width=0.8, center=(0.5, -0.25, 0.0))
    copy = rescaled_profile(u, 1.0, (0.0, 0.0, 0.0), grid)
    assert copy.grid == grid
    np.testing.assert_array_equal(copy.values, u.values)


def test_rescaled_gaussian_widens_by_one_over_eps():
    width, eps, center = 1.0, 0.5, (0.5, 0.0, 0.0)
    u = gaussian_field(CartesianGrid(4.0, 81), width=width, center=center)
    target = CartesianGrid(2.0, 21)
    profile = rescaled_profile(u, eps, center, target)
    expected = gaussian_field(target, width=width / eps)
    np.testing.assert_allclose(profile.values, expected.values, atol=1e-2)


def test_rescaled_profile_rejects_targets_outside_the_box():
    u = gaussian_field(CartesianGrid(2.0, 9))
    with pytest.raises(DomainError):
        rescaled_profile(u, 1.0, (1.0, 0.0, 0.0), CartesianGrid(2.0, 9))
    radial = gaussian_field(RadialGrid(5.0, 50))
    with pytest.raises(DomainError):
        rescaled_profile(radial, 1.0, (0.0, 0.0, 0.0), CartesianGrid(1.0, 5))


def test_half_width_of_gaussian():
    width = 1.3
    hwhm = half_width_at_half_max(gaussian_field(RadialGrid(10.0, 2000), width=width))
    assert hwhm == pytest.approx(width * math.sqrt(2.0 * math.log(2.0)), abs=1e-4)


def test_uniform_envelope_bounds_every_profile():
    grid = CartesianGrid(5.0, 21)
    profiles = [_exponential(grid, 2.0, 1.0), _exponential(grid, 1.0, 1.5)]
    envelope = uniform_decay_envelope(profiles)
    assert envelope["c"] == pytest.approx(1.0, rel=1e-10)
    assert envelope["C"] == pytest.approx(2.0, rel=1e-9)

    bound = envelope["C"] * np.exp(-envelope["c"] * grid.radius())
    core = (slice(2, -2),) * 3
    for profile in profiles:
        assert np.all(profile.values[core] <= bound[core] * (1 + 1e-12))

    with pytest.raises(InsufficientDataError):
        uniform_decay_envelope([])


# ==========================================
# SWEEP PROPERTIES
# ==========================================


def test_sweep_frame_columns():
    report = _report([_record(0.4, 0.3), _record(0.2, 0.1)])
    assert list(report.to_frame().columns) == SWEEP_COLUMNS
    assert report.to_frame(extended=True).columns[-2:].tolist() == ["witness_level", "status"]


def test_trends_pass_on_converging_sweep():
    records = [_record(0.4, 0.3, profile=0.2), _record(0.2, 0.1, profile=0.1),
               _record(0.1, 0.05, profile=0.05)]  # fmt: skip
    trends = sweep_trends(_report(records)).set_index("check")
    assert trends["passed"].all()
    assert trends.loc["rate_ratio_0.2_0.1", "value"] == pytest.approx(2.0)
    assert "final_dist_within_2h" in trends.index


def test_trends_flag_growing_distance_and_ignore_failed_rows():
    records = [_record(0.4, 0.1), _record(0.3, 0.2), _record(0.2, 5.0, status="failed: x")]
    trends = sweep_trends(_report(records)).set_index("check")
    assert not trends.loc["dist_non_increasing", "passed"]
    assert trends.loc["dist_non_increasing", "value"] == pytest.approx(0.1)


def test_trends_flag_wrong_rate_ratio():
    records = [_record(0.4, 0.1, decay_c=1.0), _record(0.2, 0.1, decay_c=2.0)]
    trends = sweep_trends(_report(records)).set_index("check")
    assert not trends.loc["rate_ratio_0.4_0.2", "passed"]
    assert trends.loc["rate_ratio_0.4_0.2", "value"] == pytest.approx(4.0)


def test_level_bound_check():
    records = [
        _record(0.4, 0.1, level=1.0, witness=1.0),
        _record(0.2, 0.1, level=1.5, witness=1.0),
        _record(0.1, 0.1, level=float("nan")),
    ]
    assert level_bound_check(_report(records)).tolist() == [True, False, False]


def test_policy_grids():
    policy = SweepGridPolicy(physical_half_width=2.0, rescaled_spacing=0.5, max_nodes=33)
    grid = policy.grid_for(0.5)
    assert grid.half_width == pytest.approx(4.0)
    assert grid.m == 17
    assert policy.grid_for(0.1).m == 33
    assert policy.check_grid(preset("competing")).half_width == pytest.approx(
        2.0 * preset("competing").R_cond
    )


# ==========================================
# SWEEP DRIVER
# ==========================================


@pytest.mark.parametrize("eps_list", [[], [0.5, 0.5], [0.25, 0.5], [0.5, -0.1]])
def test_sweep_rejects_bad_epsilon_lists(eps_list):
    with pytest.raises(DomainError):
        epsilon_sweep(DESK, preset("aligned"), eps_list)


def test_sweep_rejects_triples_without_conditions():
    with pytest.raises(PreconditionError):
        epsilon_sweep(DESK, preset("constant"), [0.5])


def test_translation_moves_the_maximum_point():
    result = translation_check(
        DESK, preset("aligned"), (1.0, 0.0, 0.0), 0.5, CartesianGrid(8.0, 17), FAST
    )
    assert result["passed"]
    assert result["error"] <= result["cell"]
    assert result["level_gap"] < 1e-2 * result["level"]


def test_sweep_status_lists_every_problem():
    assert sweep_status([]) == "ok"
    assert sweep_status(["not converged", "profile: outside"]) == (
        "not converged; profile: outside"
    )


def test_unconverged_solve_keeps_its_status_after_a_failed_fit(monkeypatch):
    def no_fit(*args, **kwargs):
        raise InsufficientDataError("too few nodes")

    monkeypatch.setattr(concentration, "decay_fit", no_fit)
    budget = DescentOptions(tol=1e-8, max_iter=3, max_domain_retries=0,
                            boundary_threshold=1e-3)  # fmt: skip
    report = epsilon_sweep(DESK, preset("aligned"), [0.5], COARSE, budget, workers=1)

    status = report.records[0].status
    assert status.startswith("not converged; decay fit: ")
    assert "too few nodes" in status
    assert math.isnan(report.records[0].decay_c)
    assert math.isfinite(report.records[0].level)


def test_coarse_aligned_sweep_tracks_the_well():
    report = epsilon_sweep(DESK, preset("aligned"), [0.5, 0.25], COARSE, FAST, workers=2)

    frame = report.to_frame(extended=True)
    assert (frame["status"] == "ok").all(), frame["status"].tolist()
    assert report.x0 == pytest.approx((0.0, 0.0, 0.0))
    for record in report.records:
        assert record.x_eps == pytest.approx((0.0, 0.0, 0.0))
    assert np.allclose(frame["dist_AV"], 0.0)
    trends = sweep_trends(report).set_index("check")
    assert trends.loc["dist_non_increasing", "passed"]
    assert np.all(np.isfinite(frame["level"]))


@pytest.mark.slow
def test_aligned_sweep_concentrates_at_the_origin():
    policy = SweepGridPolicy(physical_half_width=2.0, rescaled_spacing=0.5, max_nodes=33,
                             limit_R=15.0, limit_n=600)  # fmt: skip
    report = epsilon_sweep(DESK, preset("aligned"), [0.5, 0.25], policy, FAST, workers=2)

    frame = report.to_frame(extended=True)
    assert (frame["status"] == "ok").all()
    assert report.branch == "PQ"
    assert report.x0 == pytest.approx((0.0, 0.0, 0.0))
    assert np.allclose(frame["dist_AV"], 0.0)
    assert level_bound_check(report, tol=1e-6).all()
    assert set(report.profiles) == {0.5, 0.25}
