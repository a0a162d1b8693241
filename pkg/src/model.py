"""
File: model.py
Location: /src/model.py
Description: Grids, discrete fields, quadrature and difference operators
Author: Patrick Jordan
Version: 2026-10

Shared numerical substrate of all solvers. Fields and grids are immutable after
construction and can be shared between worker threads.

Key Components:
- KirchhoffParams: the constants a, b and the exponent p
- RadialGrid / CartesianGrid: truncated discretizations of R^3
- Field: node values attached to a grid
- integrate / grad_norm_sq / weighted_norm_sq: discrete integrals
- laplacian: discrete Laplacian adjoint-consistent with grad_norm_sq
- resample_radial / resample_cartesian / to_physical: transfer between grids
- write_field / read_field: KGS1 text dumps

Discretization:
- Radial nodes r_i = i*h (i = 1..n). The value at r = 0 is the quadratic
  extrapolation (4 v_1 - v_2) / 3, which enforces v'(0) = 0 to second order.
- Gradient energy uses difference quotients at cell midpoints, so the
  quadratic form is a sum of squares without a sawtooth null mode.
- Radial gradient energy adds the exterior harmonic closure 4*pi*R*v(R)^2,
  the smallest Dirichlet energy of any decaying extension beyond R.
- Quadrature is the trapezoidal rule on the same nodes (tensor product on
  Cartesian grids).
"""

# Standard library imports
import math
import os
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple, Union

# Third-party imports
import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

# Local Imports
from src.errors import DomainError, PreconditionError, StructuralError

FOUR_PI = 4.0 * math.pi
FIELD_MAGIC = "KGS1"

Point = Tuple[float, float, float]


# ==========================================
# PARAMETER RECORD
# ==========================================


@dataclass(frozen=True)
class KirchhoffParams:
    """Constants of -(a + b int|grad u|^2) Lap u + V u = P |u|^{p-2} u + Q |u|^4 u.

    Raises:
        DomainError: If a or b is not strictly positive
        PreconditionError: If p lies outside the open interval (4, 6)
    """

    a: float
    b: float
    p: float

    def __post_init__(self):
        for name in ("a", "b", "p"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"Kirchhoff parameter {name} must be finite")
            object.__setattr__(self, name, value)

        if self.a <= 0 or self.b <= 0:
            raise DomainError(
                f"Kirchhoff constants must be positive (a={self.a}, b={self.b})"
            )
        if not 4.0 < self.p < 6.0:
            raise PreconditionError(
                f"p={self.p} violates the standing assumption p in (4,6)"
            )


# ==========================================
# GRIDS
# ==========================================


@dataclass(frozen=True)
class RadialGrid:
    """Radial nodes r_i = i*h, i = 1..n, on (0, R_dom] with h = R_dom / n."""

    R_dom: float
    n: int

    kind = "radial"

    def __post_init__(self):
        object.__setattr__(self, "R_dom", float(self.R_dom))
        object.__setattr__(self, "n", int(self.n))
        if not (math.isfinite(self.R_dom) and self.R_dom > 0):
            raise DomainError(f"Radial domain must be positive, got {self.R_dom}")
        if self.n < 3:
            raise StructuralError(f"Radial grid needs at least 3 nodes, got {self.n}")

    @property
    def h(self) -> float:
        return self.R_dom / self.n

    @property
    def size(self) -> int:
        return self.n

    @property
    def shape(self) -> Tuple[int]:
        return (self.n,)

    @cached_property
    def nodes(self) -> np.ndarray:
        # Scaling by R_dom / n keeps the last node exactly at R_dom
        r = self.R_dom * np.arange(1, self.n + 1, dtype=np.float64) / self.n
        r.setflags(write=False)
        return r

    @cached_property
    def weights(self) -> np.ndarray:
        w = FOUR_PI * self.nodes**2 * self.h
        w[-1] *= 0.5
        w.setflags(write=False)
        return w

    @cached_property
    def edge_coefficients(self) -> np.ndarray:
        """4*pi*r_{i+1/2}^2 / h for the n cells [r_i, r_{i+1}], i = 0..n-1."""
        midpoints = (np.arange(self.n, dtype=np.float64) + 0.5) * self.h
        return FOUR_PI * midpoints**2 / self.h

    @cached_property
    def difference_matrix(self) -> sp.csr_matrix:
        """Maps node values to the n cell differences (origin row uses extension)."""
        n = self.n
        rows = [0, 0]
        cols = [0, 1]
        vals = [-1.0 / 3.0, 1.0 / 3.0]
        interior = np.arange(1, n)
        rows += list(interior) + list(interior)
        cols += list(interior - 1) + list(interior)
        vals += [-1.0] * (n - 1) + [1.0] * (n - 1)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """Symmetric matrix K with v^T K v = grad_norm_sq(v)."""
        D = self.difference_matrix
        closure = np.zeros(self.n)
        closure[-1] = FOUR_PI * self.R_dom
        K = D.T @ sp.diags(self.edge_coefficients) @ D + sp.diags(closure)
        return K.tocsr()

    def differences(self, values: np.ndarray) -> np.ndarray:
        diffs = np.empty(self.n)
        diffs[0] = (values[1] - values[0]) / 3.0
        diffs[1:] = np.diff(values)
        return diffs

    def free_mask(self) -> np.ndarray:
        """Nodes left free by the Dirichlet condition at R_dom."""
        mask = np.ones(self.n, dtype=bool)
        mask[-1] = False
        return mask

    def radius(self, center: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
        return self.nodes

    def describe(self) -> str:
        return f"grid radial n={self.n} R={self.R_dom!r}"


@dataclass(frozen=True)
class CartesianGrid:
    """Box [-L, L]^3 with m nodes per axis and spacing h = 2L / (m - 1)."""

    half_width: float
    m: int

    kind = "cartesian"

    def __post_init__(self):
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "m", int(self.m))
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise DomainError(f"Box half-width must be positive, got {self.half_width}")
        if self.m < 3:
            raise StructuralError(f"Cartesian grid needs m >= 3, got {self.m}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.m - 1)

    @property
    def size(self) -> int:
        return self.m**3

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.m, self.m, self.m)

    @cached_property
    def axis(self) -> np.ndarray:
        x = np.linspace(-self.half_width, self.half_width, self.m)
        x.setflags(write=False)
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        w1 = np.full(self.m, self.h)
        w1[0] *= 0.5
        w1[-1] *= 0.5
        w = w1[:, None, None] * w1[None, :, None] * w1[None, None, :]
        w.setflags(write=False)
        return w

    def free_mask(self) -> np.ndarray:
        """Interior nodes; the boundary layer carries homogeneous Dirichlet data."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[1:-1, 1:-1, 1:-1] = True
        return mask

    def points(self) -> np.ndarray:
        """Node coordinates in row-major (x, y, z) order, shape (m^3, 3)."""
        X, Y, Z = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def radius(self, center: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
        cx, cy, cz = (float(c) for c in center)
        x = self.axis
        return np.sqrt(
            (x[:, None, None] - cx) ** 2
            + (x[None, :, None] - cy) ** 2
            + (x[None, None, :] - cz) ** 2
        )

    def node_point(self, index: Tuple[int, int, int]) -> Point:
        return tuple(float(self.axis[i]) for i in index)

    def describe(self) -> str:
        return f"grid cartesian m={self.m} L={self.half_width!r}"


Grid = Union[RadialGrid, CartesianGrid]


# ==========================================
# FIELD
# ==========================================


@dataclass(frozen=True, eq=False)
class Field:
    """Node values on a grid; values are copied, validated and frozen.

    Raises:
        StructuralError: If the value count does not match the grid or any value
            is not finite
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.size != self.grid.size:
            raise StructuralError(
                f"Field has {values.size} values but grid has {self.grid.size} nodes"
            )
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise StructuralError("Field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def scaled(self, factor: float) -> "Field":
        return Field(self.grid, factor * self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def _check_same_grid(*fields: Field) -> None:
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise StructuralError("Fields live on different grids")


# ==========================================
# ARRAY-LEVEL KERNELS
# ==========================================


def quadrature(grid: Grid, values: np.ndarray) -> float:
    """Trapezoidal integral of raw node values."""
    return float(np.sum(grid.weights * values))


def gradient_energy(grid: Grid, values: np.ndarray) -> float:
    """Discrete Dirichlet energy of raw node values."""
    if grid.kind == "radial":
        diffs = grid.differences(values)
        closure = FOUR_PI * grid.R_dom * values[-1] ** 2
        return float(np.sum(grid.edge_coefficients * diffs**2) + closure)

    total = 0.0
    for axis in range(3):
        total += float(np.sum(np.diff(values, axis=axis) ** 2))
    return grid.h * total


def apply_stiffness(grid: Grid, values: np.ndarray) -> np.ndarray:
    """K v, where v^T K v is the discrete Dirichlet energy."""
    if grid.kind == "radial":
        return grid.stiffness @ values

    result = np.zeros_like(values)
    for axis in range(3):
        d = np.diff(values, axis=axis)
        lower = [(0, 0)] * 3
        upper = [(0, 0)] * 3
        lower[axis] = (1, 0)
        upper[axis] = (0, 1)
        # (K v)_i = h * sum over axes of (d_{i-1} - d_i) with zero padding
        result += np.pad(d, lower) - np.pad(d, upper)
    return grid.h * result


# ==========================================
# PUBLIC OPERATIONS
# ==========================================


def integrate(f: Field) -> float:
    """Composite trapezoidal quadrature of f over the truncated domain.

    Radial fields carry the weight 4*pi*r^2, Cartesian fields the tensor
    trapezoidal weight (h^3 inside the box).
    """
    return quadrature(f.grid, f.values)


def inner(f: Field, g: Field) -> float:
    """Quadrature pairing <f, g> = int f g."""
    _check_same_grid(f, g)
    return quadrature(f.grid, f.values * g.values)


def grad_norm_sq(v: Field) -> float:
    """Discrete int |grad v|^2."""
    return gradient_energy(v.grid, v.values)


def weighted_norm_sq(v: Field, params: KirchhoffParams, Vfield: Field) -> float:
    """a * int |grad v|^2 + int V v^2.

    Raises:
        DomainError: If Vfield has a non-positive entry
    """
    _check_same_grid(v, Vfield)
    if np.any(Vfield.values <= 0):
        raise DomainError("Potential field must be strictly positive")
    return params.a * grad_norm_sq(v) + quadrature(v.grid, Vfield.values * v.values**2)


def laplacian(v: Field) -> Field:
    """Discrete Laplacian with <-laplacian(v), phi> = v^T K phi for every phi."""
    grid = v.grid
    return Field(grid, -apply_stiffness(grid, v.values) / grid.weights)


# ==========================================
# FIELD CONSTRUCTION AND RESAMPLING
# ==========================================


def gaussian_field(
    grid: Grid,
    width: float = 1.0,
    center: Sequence[float] = (0.0, 0.0, 0.0),
    amplitude: float = 1.0,
) -> Field:
    """exp(-|x - center|^2 / (2 width^2)); radial grids are centered at the origin."""
    if width <= 0:
        raise DomainError(f"Gaussian width must be positive, got {width}")
    r = grid.radius(center)
    return Field(grid, amplitude * np.exp(-(r**2) / (2.0 * width**2)))


def extended_radial(field: Field) -> Tuple[np.ndarray, np.ndarray]:
    """Radial nodes and values including r = 0 through the regularity extension."""
    v = field.values
    r = np.concatenate(([0.0], field.grid.nodes))
    values = np.concatenate(([(4.0 * v[0] - v[1]) / 3.0], v))
    return r, values


def radial_to_cartesian(
    field: Field, grid: CartesianGrid, center: Sequence[float] = (0.0, 0.0, 0.0)
) -> Field:
    """Sample a radial profile v(|x - center|) on a Cartesian grid (zero beyond R)."""
    r, values = extended_radial(field)
    rr = grid.radius(center)
    return Field(grid, np.interp(rr, r, values, right=0.0))


def resample_radial(field: Field, grid: RadialGrid) -> Field:
    """Linear interpolation of a radial field onto another radial grid."""
    r, values = extended_radial(field)
    return Field(grid, np.interp(grid.nodes, r, values, right=0.0))


def resample_cartesian(field: Field, grid: CartesianGrid) -> Field:
    """Trilinear interpolation of a Cartesian field onto another box (zero outside)."""
    axis = field.grid.axis
    interpolator = RegularGridInterpolator(
        (axis, axis, axis), field.values, bounds_error=False, fill_value=0.0
    )
    return Field(grid, interpolator(grid.points()).reshape(grid.shape))


def to_physical(field: Field, epsilon: float) -> Field:
    """u(x) = v(x / epsilon): the same node values on the box scaled by epsilon."""
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    grid = field.grid
    if grid.kind != "cartesian":
        raise StructuralError("Rescaling to physical variables needs a Cartesian field")
    return Field(CartesianGrid(epsilon * grid.half_width, grid.m), field.values)


def argmax_point(field: Field) -> Point:
    """Coordinates of the largest node value; ties go to the first index in C order.

    Radial fields report a point on the positive x-axis (the origin when the
    profile peaks at r = 0).
    """
    grid = field.grid
    if grid.kind == "radial":
        r, values = extended_radial(field)
        return (float(r[int(np.argmax(values))]), 0.0, 0.0)
    index = np.unravel_index(int(np.argmax(field.values)), grid.shape)
    return grid.node_point(index)


def boundary_ratio(field: Field, shell: float = 0.1) -> float:
    """max |v| over the outer shell of relative thickness `shell`, over max |v|."""
    peak = field.max_abs()
    if peak == 0.0:
        return 0.0

    grid = field.grid
    if grid.kind == "radial":
        outer = grid.nodes >= (1.0 - shell) * grid.R_dom
    else:
        a = np.abs(grid.axis) >= (1.0 - shell) * grid.half_width
        outer = a[:, None, None] | a[None, :, None] | a[None, None, :]
    return float(np.max(np.abs(field.values[outer])) / peak)


# ==========================================
# KGS1 FIELD DUMPS
# ==========================================

_HEADER_PATTERN = re.compile(
    r"^grid\s+(radial|cartesian)\s+(n|m)=(\d+)\s+(R|L)=(\S+)\s*$"
)


def write_field(path: str, field: Field) -> None:
    """Write a field in the KGS1 text format (17 significant digits per value)."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with open(path, "w", encoding="utf-8") as f:
        f.write(FIELD_MAGIC + "\n")
        f.write(field.grid.describe() + "\n")
        np.savetxt(f, field.values.ravel(), fmt="%.16e")


def read_field(path: str) -> Field:
    """Read a KGS1 dump back into a Field.

    Raises:
        StructuralError: If the header is malformed or the value count is wrong
    """
    with open(path, "r", encoding="utf-8") as f:
        magic = f.readline().strip()
        header = f.readline().strip()
        values = np.loadtxt(f, dtype=np.float64, ndmin=1)

    if magic != FIELD_MAGIC:
        raise StructuralError(f"Not a {FIELD_MAGIC} field dump: {path}")

    match = _HEADER_PATTERN.match(header)
    if not match:
        raise StructuralError(f"Malformed grid header in {path}: '{header}'")

    kind, count_key, count, size_key, size = match.groups()
    if kind == "radial" and (count_key, size_key) == ("n", "R"):
        grid = RadialGrid(float(size), int(count))
    elif kind == "cartesian" and (count_key, size_key) == ("m", "L"):
        grid = CartesianGrid(float(size), int(count))
    else:
        raise StructuralError(f"Inconsistent grid header in {path}: '{header}'")

    return Field(grid, values)
