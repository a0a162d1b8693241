"""
File: functional.py
Location: /src/functional.py
Description: Kirchhoff energy, its gradient, the Nehari constraint and fibering maps
Author: Patrick Jordan
Version: 2026-10

Energy of a field v on a grid with coefficient fields V, P, Q:

    J(v) = 1/2 |v|^2 + b/4 (int |grad v|^2)^2 - 1/p int P |v|^p - 1/6 int Q |v|^6
    |v|^2 = a int |grad v|^2 + int V v^2

The same functional serves the variable-coefficient problem, the
constant-coefficient problem (constant fields) and the truncated auxiliary
problems (clamped fields).

Key Components:
- EnergyFunctional: parameters plus sampled coefficient fields
- Moments / FiberingMap: the four ray moments and t -> J(t v)
- energy / energy_gradient / nehari_residual: discrete J, J' and <J'(v), v>
- nehari_project: unique t(v) > 0 with t(v) v on the Nehari manifold
- sobolev_constant / talenti_quotient: discrete best Sobolev constant
"""

# Standard library imports
import math
from dataclasses import dataclass
from typing import Dict, Optional, Union

# Third-party imports
import numpy as np
from scipy import optimize

# Local Imports
from src.errors import DomainError, NoRootError, StructuralError
from src.model import (
    FOUR_PI,
    Field,
    Grid,
    KirchhoffParams,
    RadialGrid,
    apply_stiffness,
    gradient_energy,
    quadrature,
)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class EnergyFunctional:
    """Discrete J for coefficient fields V, P, Q sampled on one grid.

    Raises:
        StructuralError: If the coefficient fields live on different grids
        DomainError: If a coefficient field has a non-positive entry
    """

    params: KirchhoffParams
    Vfield: Field
    Pfield: Field
    Qfield: Field

    def __post_init__(self):
        grid = self.Vfield.grid
        if self.Pfield.grid != grid or self.Qfield.grid != grid:
            raise StructuralError("Coefficient fields must share one grid")
        for name, field in (("V", self.Vfield), ("P", self.Pfield), ("Q", self.Qfield)):
            if np.any(field.values <= 0):
                raise DomainError(f"Coefficient {name} must be strictly positive")

    @property
    def grid(self) -> Grid:
        return self.Vfield.grid

    @classmethod
    def constant(
        cls, params: KirchhoffParams, grid: Grid, V: float, P: float, Q: float
    ) -> "EnergyFunctional":
        """Functional with constant coefficients (the k, tau, nu problem)."""
        return cls(
            params,
            Field(grid, np.full(grid.shape, float(V))),
            Field(grid, np.full(grid.shape, float(P))),
            Field(grid, np.full(grid.shape, float(Q))),
        )

    def clamped(
        self,
        V_floor: Optional[float] = None,
        P_cap: Optional[float] = None,
        Q_cap: Optional[float] = None,
    ) -> "EnergyFunctional":
        """Truncated coefficients max(c, V), min(d, P), min(e, Q)."""
        V = self.Vfield.values
        P = self.Pfield.values
        Q = self.Qfield.values
        if V_floor is not None:
            V = np.maximum(V_floor, V)
        if P_cap is not None:
            P = np.minimum(P_cap, P)
        if Q_cap is not None:
            Q = np.minimum(Q_cap, Q)
        grid = self.grid
        return EnergyFunctional(
            self.params, Field(grid, V), Field(grid, P), Field(grid, Q)
        )


@dataclass(frozen=True)
class Moments:
    """Ray moments of v: norm_sq = |v|^2, grad_sq = int|grad v|^2, mass_p, mass_q."""

    norm_sq: float
    grad_sq: float
    mass_p: float
    mass_q: float


@dataclass(frozen=True)
class FiberingMap:
    """g(t) = J(t v) assembled from precomputed moments; vectorized in t."""

    moments: Moments
    b: float
    p: float

    def __call__(self, t: ArrayLike) -> ArrayLike:
        m = self.moments
        t = np.asarray(t, dtype=np.float64)
        value = (
            0.5 * m.norm_sq * t**2
            + 0.25 * self.b * m.grad_sq**2 * t**4
            - m.mass_p * t**self.p / self.p
            - m.mass_q * t**6 / 6.0
        )
        return float(value) if value.ndim == 0 else value

    def derivative(self, t: ArrayLike) -> ArrayLike:
        m = self.moments
        t = np.asarray(t, dtype=np.float64)
        value = (
            m.norm_sq * t
            + self.b * m.grad_sq**2 * t**3
            - m.mass_p * t ** (self.p - 1.0)
            - m.mass_q * t**5
        )
        return float(value) if value.ndim == 0 else value

    def transformed(self, t: ArrayLike) -> ArrayLike:
        """g'(t) / t^3: strictly decreasing in t for v != 0."""
        m = self.moments
        t = np.asarray(t, dtype=np.float64)
        value = (
            m.norm_sq / t**2
            + self.b * m.grad_sq**2
            - m.mass_p * t ** (self.p - 4.0)
            - m.mass_q * t**2
        )
        return float(value) if value.ndim == 0 else value

    def transformed_slope(self, t: float) -> float:
        m = self.moments
        return float(
            -2.0 * m.norm_sq / t**3
            - (self.p - 4.0) * m.mass_p * t ** (self.p - 5.0)
            - 2.0 * m.mass_q * t
        )


@dataclass(frozen=True, eq=False)
class FiberingResult:
    """Nehari projection of v: t_star, the projected field and g'(t_star)."""

    t_star: float
    projected: Field
    residual: float


# ==========================================
# ARRAY-LEVEL KERNELS
# ==========================================


def signed_power(values: np.ndarray, exponent: float) -> np.ndarray:
    """sign(v) |v|^exponent via exp(exponent * log|v|), zero where v = 0."""
    magnitude = np.abs(values)
    result = np.zeros_like(magnitude)
    nonzero = magnitude > 0
    result[nonzero] = np.sign(values[nonzero]) * np.exp(
        exponent * np.log(magnitude[nonzero])
    )
    return result


def compute_moments(F: EnergyFunctional, values: np.ndarray) -> Moments:
    grid = F.grid
    params = F.params
    grad_sq = gradient_energy(grid, values)
    squares = values**2
    norm_sq = params.a * grad_sq + quadrature(grid, F.Vfield.values * squares)
    mass_p = quadrature(grid, F.Pfield.values * signed_power(np.abs(values), params.p))
    mass_q = quadrature(grid, F.Qfield.values * squares**3)
    return Moments(norm_sq, grad_sq, mass_p, mass_q)


def energy_from_moments(m: Moments, params: KirchhoffParams) -> float:
    return (
        0.5 * m.norm_sq
        + 0.25 * params.b * m.grad_sq**2
        - m.mass_p / params.p
        - m.mass_q / 6.0
    )


def dual_gradient(F: EnergyFunctional, values: np.ndarray) -> np.ndarray:
    """Partial derivatives dJ/dv_i, i.e. the quadrature weights times J'(v)."""
    grid = F.grid
    params = F.params
    kirchhoff = params.a + params.b * gradient_energy(grid, values)
    local = (
        F.Vfield.values * values
        - F.Pfield.values * signed_power(values, params.p - 1.0)
        - F.Qfield.values * values**5
    )
    return kirchhoff * apply_stiffness(grid, values) + grid.weights * local


def _require_grid(F: EnergyFunctional, v: Field) -> None:
    if v.grid != F.grid:
        raise StructuralError("Field and functional live on different grids")


# ==========================================
# PUBLIC OPERATIONS
# ==========================================


def moments(F: EnergyFunctional, v: Field) -> Moments:
    _require_grid(F, v)
    return compute_moments(F, v.values)


def energy(F: EnergyFunctional, v: Field) -> float:
    """Discrete J(v)."""
    return energy_from_moments(moments(F, v), F.params)


def energy_gradient(F: EnergyFunctional, v: Field) -> Field:
    """Field g with <g, phi> equal to the directional derivative of energy at v.

    g = -(a + b int|grad v|^2) Lap_h v + V v - P |v|^{p-2} v - Q |v|^4 v
    """
    _require_grid(F, v)
    return Field(F.grid, dual_gradient(F, v.values) / F.grid.weights)


def nehari_residual(F: EnergyFunctional, v: Field) -> float:
    """<J'(v), v> = |v|^2 + b (int|grad v|^2)^2 - int P|v|^p - int Q|v|^6."""
    m = moments(F, v)
    return m.norm_sq + F.params.b * m.grad_sq**2 - m.mass_p - m.mass_q


def fibering_map(F: EnergyFunctional, v: Field) -> FiberingMap:
    return FiberingMap(moments(F, v), F.params.b, F.params.p)


def fibering(F: EnergyFunctional, v: Field, t: float) -> float:
    """g(t) = J(t v).

    Raises:
        DomainError: If t is not positive
    """
    if t <= 0:
        raise DomainError(f"Fibering parameter must be positive, got {t}")
    return fibering_map(F, v)(t)


def _fibering_root(fmap: FiberingMap, rtol: float) -> float:
    h = fmap.transformed

    value = h(1.0)
    if value == 0.0:
        return 1.0

    # The transformed equation has a strictly decreasing left side, so one
    # doubling (or halving) sweep brackets the root.
    if value > 0:
        lo, hi = 1.0, 2.0
        while h(hi) > 0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e150:
                raise NoRootError("Fibering root escaped to infinity")
    else:
        lo, hi = 0.5, 1.0
        while h(lo) < 0:
            lo, hi = 0.5 * lo, lo
            if lo < 1e-150:
                raise NoRootError("Fibering root collapsed to zero")

    t = optimize.bisect(
        h, lo, hi, xtol=np.finfo(float).tiny, rtol=rtol, maxiter=500
    )

    # Newton polish, kept only while it stays inside the bracket and improves
    for _ in range(3):
        slope = fmap.transformed_slope(t)
        if not math.isfinite(slope) or slope >= 0:
            break
        candidate = t - h(t) / slope
        if not lo <= candidate <= hi or abs(h(candidate)) >= abs(h(t)):
            break
        t = candidate
    return t


def nehari_project(
    F: EnergyFunctional, v: Field, rtol: float = 1e-12
) -> FiberingResult:
    """Unique t* > 0 maximizing t -> J(t v); projected = t* v.

    Raises:
        NoRootError: If both nonlinear moments vanish
        DomainError: If v is identically zero
    """
    fmap = fibering_map(F, v)
    m = fmap.moments
    if m.mass_p <= 0 and m.mass_q <= 0:
        raise NoRootError("Nonlinear moments vanish; the fibering map has no maximum")
    if m.norm_sq <= 0:
        raise DomainError("Cannot project the zero field")

    t_star = _fibering_root(fmap, rtol)
    return FiberingResult(
        t_star=t_star, projected=v.scaled(t_star), residual=fmap.derivative(t_star)
    )


def ray_maximum(F: EnergyFunctional, v: Field) -> float:
    """max over t > 0 of J(t v)."""
    result = nehari_project(F, v)
    return fibering_map(F, v)(result.t_star)


def energy_identity_residuals(F: EnergyFunctional, v: Field) -> Dict[str, float]:
    """Residuals of the two energy identities used at critical points.

    - quarter: J - 1/4 I = 1/4 |v|^2 + (1/4 - 1/p) int P|v|^p + 1/12 int Q|v|^6
    - p_th: J - 1/p I = (1/2 - 1/p)|v|^2 + (1/4 - 1/p) b G^2 + (1/p - 1/6) int Q|v|^6
    """
    m = moments(F, v)
    p = F.params.p
    b = F.params.b
    J = energy_from_moments(m, F.params)
    I = m.norm_sq + b * m.grad_sq**2 - m.mass_p - m.mass_q

    quarter = (J - 0.25 * I) - (
        0.25 * m.norm_sq + (0.25 - 1.0 / p) * m.mass_p + m.mass_q / 12.0
    )
    p_th = (J - I / p) - (
        (0.5 - 1.0 / p) * m.norm_sq
        + (0.25 - 1.0 / p) * b * m.grad_sq**2
        + (1.0 / p - 1.0 / 6.0) * m.mass_q
    )
    return {"quarter": float(quarter), "p_th": float(p_th)}


# ==========================================
# SOBOLEV CONSTANT
# ==========================================


def talenti_quotient(grid: RadialGrid, scale: float = 1.0) -> float:
    """int|grad U|^2 / (int U^6)^{1/3} for U(r) = scale^{1/2} (1 + scale^2 r^2)^{-1/2}.

    Both integrals include the harmonic exterior closure beyond R_dom.
    """
    if not isinstance(grid, RadialGrid):
        raise StructuralError("The Talenti quotient is evaluated on radial grids")
    if scale <= 0:
        raise DomainError(f"Dilation must be positive, got {scale}")

    r = grid.nodes
    U = math.sqrt(scale) / np.sqrt(1.0 + (scale * r) ** 2)
    stiffness = gradient_energy(grid, U)
    sixth = quadrature(grid, U**6) + FOUR_PI * U[-1] ** 6 * grid.R_dom**3 / 3.0
    return stiffness / sixth ** (1.0 / 3.0)


def sobolev_constant(grid: RadialGrid) -> float:
    """Discrete best Sobolev constant from the Aubin-Talenti profile."""
    return talenti_quotient(grid, 1.0)
