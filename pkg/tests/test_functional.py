import math

import numpy as np
import pytest

from src.errors import DomainError, NoRootError, StructuralError
from src.functional import (
    EnergyFunctional,
    energy,
    energy_gradient,
    energy_identity_residuals,
    fibering,
    fibering_map,
    moments,
    nehari_project,
    nehari_residual,
    ray_maximum,
    sobolev_constant,
    talenti_quotient,
)
from src.model import CartesianGrid, Field, RadialGrid, gaussian_field, inner
from src.thresholds import BEST_SOBOLEV_CONSTANT
from src.verify import brute_force_fibering_max


@pytest.fixture
def F_radial(params, small_radial):
    return EnergyFunctional.constant(params, small_radial, 1.0, 1.0, 1.0)


@pytest.fixture
def profile(small_radial):
    return gaussian_field(small_radial, width=1.0)


# ==========================================
# ENERGY
# ==========================================


def test_energy_of_zero_field(F_radial, small_radial):
    assert energy(F_radial, Field(small_radial, np.zeros(small_radial.shape))) == 0.0


def test_energy_terms_match_quadrature_oracle(F_radial, profile):
    grid = profile.grid
    v = profile.values
    w = grid.weights
    m = moments(F_radial, profile)

    assert m.mass_p == pytest.approx(np.sum(w * v**5), rel=1e-12)
    assert m.mass_q == pytest.approx(np.sum(w * v**6), rel=1e-12)
    assert m.norm_sq == pytest.approx(m.grad_sq + np.sum(w * v**2), rel=1e-12)

    expected = 0.5 * m.norm_sq + 0.25 * m.grad_sq**2 - m.mass_p / 5.0 - m.mass_q / 6.0
    assert energy(F_radial, profile) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_fibering_matches_energy_of_scaled_field(F_radial, profile, t):
    assert fibering(F_radial, profile, t) == pytest.approx(
        energy(F_radial, profile.scaled(t)), rel=1e-12, abs=1e-12
    )


def test_fibering_geometry(F_radial, profile):
    assert 0.0 < fibering(F_radial, profile, 1e-3) < 1e-4
    T = 1.0
    while fibering(F_radial, profile, T) >= 0:
        T *= 2.0
    assert fibering(F_radial, profile, T) < 0
    with pytest.raises(DomainError):
        fibering(F_radial, profile, 0.0)


def test_functional_rejects_non_positive_coefficient(params, small_radial):
    with pytest.raises(DomainError):
        EnergyFunctional.constant(params, small_radial, 1.0, 0.0, 1.0)


def test_clamped_coefficients(params, small_box):
    x = small_box.axis
    V = Field(small_box, np.broadcast_to(1.0 + x[:, None, None] ** 2, small_box.shape))
    ones = Field(small_box, np.ones(small_box.shape))
    F = EnergyFunctional(params, V, ones, ones).clamped(V_floor=2.0, P_cap=0.5)
    assert F.Vfield.values.min() == 2.0
    assert F.Pfield.values.max() == 0.5
    assert F.Qfield.values.max() == 1.0


# ==========================================
# GRADIENT AND NEHARI RESIDUAL
# ==========================================


def test_gradient_of_zero_field(F_radial, small_radial):
    g = energy_gradient(F_radial, Field(small_radial, np.zeros(small_radial.shape)))
    assert np.all(g.values == 0.0)


def test_gradient_of_interior_constant(params, small_box):
    F = EnergyFunctional.constant(params, small_box, 1.0, 1.0, 1.0)
    v = np.full(small_box.shape, 0.7)
    g = energy_gradient(F, Field(small_box, v))

    # Two layers in from the boundary every stencil neighbour is constant
    core = (slice(2, -2),) * 3
    expected = 0.7 - 0.7**4 - 0.7**5
    np.testing.assert_allclose(g.values[core], expected, rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_central_differences(params, small_box, seed):
    rng = np.random.default_rng(seed)
    free = small_box.free_mask()
    x = small_box.axis
    V = Field(small_box, np.broadcast_to(1.0 + 0.2 * x[:, None, None] ** 2, small_box.shape))
    ones = Field(small_box, np.ones(small_box.shape))
    F = EnergyFunctional(params, V, ones, ones)

    v = Field(small_box, np.where(free, gaussian_field(small_box).values
                                  * (1.0 + 0.1 * rng.normal(size=small_box.shape)), 0.0))  # fmt: skip
    phi = Field(small_box, np.where(free, rng.normal(size=small_box.shape), 0.0))
    s = 1e-5
    fd = (energy(F, Field(small_box, v.values + s * phi.values))
          - energy(F, Field(small_box, v.values - s * phi.values))) / (2 * s)  # fmt: skip
    exact = inner(energy_gradient(F, v), phi)
    assert abs(fd - exact) <= 1e-6 * max(abs(exact), 1e-12)


def test_nehari_residual_is_gradient_pairing(F_radial, profile):
    expected = inner(energy_gradient(F_radial, profile), profile)
    assert nehari_residual(F_radial, profile) == pytest.approx(expected, rel=1e-10)


def test_nehari_residual_sign_sweep(F_radial, profile):
    assert nehari_residual(F_radial, profile.scaled(1e-3)) > 0
    assert nehari_residual(F_radial, profile.scaled(1e3)) < 0


def test_field_on_other_grid_is_rejected(F_radial, small_box):
    with pytest.raises(StructuralError):
        energy(F_radial, gaussian_field(small_box))


# ==========================================
# NEHARI PROJECTION
# ==========================================


def test_projection_lands_on_manifold(F_radial, profile):
    result = nehari_project(F_radial, profile)
    norm_sq = moments(F_radial, result.projected).norm_sq
    assert abs(nehari_residual(F_radial, result.projected)) <= 1e-10 * norm_sq


def test_projection_of_manifold_point_is_identity(F_radial, profile):
    on_manifold = nehari_project(F_radial, profile).projected
    assert nehari_project(F_radial, on_manifold).t_star == pytest.approx(1.0, abs=1e-10)


def test_projection_matches_brute_force_scan(params):
    grid = RadialGrid(12.0, 2400)
    F = EnergyFunctional.constant(params, grid, 1.0, 1.0, 1.0)
    v = gaussian_field(grid, width=1.0)
    t_star = nehari_project(F, v).t_star
    t_scan = brute_force_fibering_max(fibering_map(F, v))
    assert t_scan == pytest.approx(t_star, abs=1e-8)


def test_projection_is_ray_maximum(F_radial, profile, rng):
    result = nehari_project(F_radial, profile)
    g = fibering_map(F_radial, profile)
    samples = rng.uniform(0.0, 4.0 * result.t_star, size=200)
    samples = samples[samples > 0]
    assert np.all(g(result.t_star) >= g(samples))
    assert ray_maximum(F_radial, profile) == pytest.approx(g(result.t_star))


def test_transformed_residual_is_decreasing(F_radial, profile):
    g = fibering_map(F_radial, profile)
    t = np.geomspace(1e-3, 1e3, 10_000)
    assert np.all(np.diff(g.transformed(t)) < 0)


def test_projection_of_zero_field_has_no_root(F_radial, small_radial):
    with pytest.raises(NoRootError):
        nehari_project(F_radial, Field(small_radial, np.zeros(small_radial.shape)))


def test_energy_identities_hold_on_manifold(F_radial, profile):
    projected = nehari_project(F_radial, profile).projected
    residuals = energy_identity_residuals(F_radial, projected)
    assert abs(residuals["quarter"]) < 1e-8
    assert abs(residuals["p_th"]) < 1e-8


# ==========================================
# SOBOLEV CONSTANT
# ==========================================


def test_sobolev_constant_close_to_best_constant():
    assert sobolev_constant(RadialGrid(60.0, 12000)) == pytest.approx(
        BEST_SOBOLEV_CONSTANT, abs=1e-3
    )
    assert BEST_SOBOLEV_CONSTANT == pytest.approx(5.4779, abs=1e-4)


@pytest.mark.parametrize("scale", [0.5, 2.0])
def test_sobolev_quotient_dilation_invariant(scale):
    grid = RadialGrid(60.0, 12000)
    assert talenti_quotient(grid, scale) == pytest.approx(sobolev_constant(grid), abs=1e-3)


def test_sobolev_quotient_requires_radial_grid():
    with pytest.raises(StructuralError):
        talenti_quotient(CartesianGrid(1.0, 5))


def test_best_constant_closed_form():
    ratio = (3.0 * math.pi**2 / 4.0) / (math.pi**2 / 4.0) ** (1.0 / 3.0)
    assert BEST_SOBOLEV_CONSTANT == pytest.approx(ratio, rel=1e-14)
