"""
File: potentials.py
Location: /src/potentials.py
Description: Catalog potentials, standing-condition checks and admissible sets
Author: Patrick Jordan
Version: 2026-10

Potentials V, P, Q are built from a fixed catalog of smooth bounded shapes so
that their extremes and limits at infinity are known symbolically:

- constant(value)
- well(floor, rise, width, center)     floor + rise s^2 / (1 + s^2)
- bump(base, height, width, center)    base + height exp(-s^2)
- plateau(peak, tail, width, center)   peak - (peak - tail) tanh(s)

with s = |x - center| / width. Catalog expressions such as
"well(floor=1, rise=1, width=1, center=(0, 0, 0))" come from configuration
files and are parsed without evaluating user code.

Conditions checked on a Cartesian grid:
- PQ1: P-maximum and Q-maximum sets intersect
- PQ2: P_max > P_inf and V(x*) <= V(x) for all |x| >= R
- VQ1: V-minimum and Q-maximum sets intersect
- VQ2: V_inf > V_min and P(x*) >= P(x) for all |x| >= R
"""

# Standard library imports
import ast
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np
import pandas as pd

# Local Imports
from src.errors import ConfigParseError, DomainError, InconsistencyError, PreconditionError
from src.model import CartesianGrid, Field, Grid, Point

CONDITION_COLUMNS = ["condition", "clause", "passed", "witness", "value"]


def _as_point(value: Sequence[float]) -> Point:
    values = tuple(float(v) for v in value)
    if len(values) != 3 or not all(math.isfinite(v) for v in values):
        raise DomainError(f"Expected three finite coordinates, got {value}")
    return values


def format_point(point: Sequence[float]) -> str:
    return "(" + ", ".join(f"{float(c):.6g}" for c in point) + ")"


# ==========================================
# CATALOG SHAPES
# ==========================================


class Shape:
    """Bounded positive profile with symbolic extremes and limit at infinity."""

    kind = "shape"
    center: Point = (0.0, 0.0, 0.0)
    width: float = 1.0

    @property
    def minimum(self) -> float:
        raise NotImplementedError

    @property
    def maximum(self) -> float:
        raise NotImplementedError

    @property
    def limit(self) -> float:
        raise NotImplementedError

    def profile(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at an array of points with trailing dimension 3."""
        points = np.asarray(points, dtype=np.float64)
        s = np.linalg.norm(points - np.asarray(self.center), axis=-1) / self.width
        return self.profile(s)

    def at(self, point: Sequence[float]) -> float:
        return float(self.evaluate(np.asarray(point, dtype=np.float64)))

    def on_grid(self, grid: Grid, epsilon: float = 1.0) -> np.ndarray:
        """Values of x -> shape(epsilon x) on the grid nodes."""
        center = np.asarray(self.center) / epsilon
        s = epsilon * grid.radius(center) / self.width
        return self.profile(s)

    def shifted(self, offset: Sequence[float]) -> "Shape":
        moved = tuple(c + float(o) for c, o in zip(self.center, offset))
        return replace(self, center=moved)

    def expression(self) -> str:
        raise NotImplementedError


def _check_width(width: float) -> float:
    width = float(width)
    if not (math.isfinite(width) and width > 0):
        raise DomainError(f"Shape width must be positive, got {width}")
    return width


@dataclass(frozen=True)
class Constant(Shape):
    value: float

    kind = "constant"

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if not self.value > 0:
            raise DomainError(f"constant potential must be positive, got {self.value}")

    @property
    def minimum(self) -> float:
        return self.value

    @property
    def maximum(self) -> float:
        return self.value

    @property
    def limit(self) -> float:
        return self.value

    def profile(self, s: np.ndarray) -> np.ndarray:
        return np.full(np.shape(s), self.value)

    def on_grid(self, grid: Grid, epsilon: float = 1.0) -> np.ndarray:
        return np.full(grid.shape, self.value)

    def shifted(self, offset: Sequence[float]) -> "Shape":
        return self

    def expression(self) -> str:
        return f"constant({self.value!r})"


@dataclass(frozen=True)
class Well(Shape):
    floor: float
    rise: float
    width: float = 1.0
    center: Point = (0.0, 0.0, 0.0)

    kind = "well"

    def __post_init__(self):
        object.__setattr__(self, "floor", float(self.floor))
        object.__setattr__(self, "rise", float(self.rise))
        object.__setattr__(self, "width", _check_width(self.width))
        object.__setattr__(self, "center", _as_point(self.center))
        if self.floor <= 0 or self.rise < 0:
            raise DomainError("well needs floor > 0 and rise >= 0")

    @property
    def minimum(self) -> float:
        return self.floor

    @property
    def maximum(self) -> float:
        return self.floor + self.rise

    @property
    def limit(self) -> float:
        return self.floor + self.rise

    def profile(self, s: np.ndarray) -> np.ndarray:
        s2 = s * s
        return self.floor + self.rise * s2 / (1.0 + s2)

    def expression(self) -> str:
        return (
            f"well(floor={self.floor!r}, rise={self.rise!r}, "
            f"width={self.width!r}, center={self.center!r})"
        )


@dataclass(frozen=True)
class Bump(Shape):
    base: float
    height: float
    width: float = 1.0
    center: Point = (0.0, 0.0, 0.0)

    kind = "bump"

    def __post_init__(self):
        object.__setattr__(self, "base", float(self.base))
        object.__setattr__(self, "height", float(self.height))
        object.__setattr__(self, "width", _check_width(self.width))
        object.__setattr__(self, "center", _as_point(self.center))
        if self.base <= 0 or self.height < 0:
            raise DomainError("bump needs base > 0 and height >= 0")

    @property
    def minimum(self) -> float:
        return self.base

    @property
    def maximum(self) -> float:
        return self.base + self.height

    @property
    def limit(self) -> float:
        return self.base

    def profile(self, s: np.ndarray) -> np.ndarray:
        return self.base + self.height * np.exp(-s * s)

    def expression(self) -> str:
        return (
            f"bump(base={self.base!r}, height={self.height!r}, "
            f"width={self.width!r}, center={self.center!r})"
        )


@dataclass(frozen=True)
class Plateau(Shape):
    peak: float
    tail: float
    width: float = 1.0
    center: Point = (0.0, 0.0, 0.0)

    kind = "plateau"

    def __post_init__(self):
        object.__setattr__(self, "peak", float(self.peak))
        object.__setattr__(self, "tail", float(self.tail))
        object.__setattr__(self, "width", _check_width(self.width))
        object.__setattr__(self, "center", _as_point(self.center))
        if self.peak <= 0 or self.tail <= 0:
            raise DomainError("plateau needs peak > 0 and tail > 0")

    @property
    def minimum(self) -> float:
        return min(self.peak, self.tail)

    @property
    def maximum(self) -> float:
        return max(self.peak, self.tail)

    @property
    def limit(self) -> float:
        return self.tail

    def profile(self, s: np.ndarray) -> np.ndarray:
        return self.peak - (self.peak - self.tail) * np.tanh(s)

    def expression(self) -> str:
        return (
            f"plateau(peak={self.peak!r}, tail={self.tail!r}, "
            f"width={self.width!r}, center={self.center!r})"
        )


CATALOG: Dict[str, Callable[..., Shape]] = {
    "constant": Constant,
    "well": Well,
    "bump": Bump,
    "plateau": Plateau,
}


def parse_shape(expression: str) -> Shape:
    """Build a catalog shape from an expression like "bump(base=1, height=2)".

    Raises:
        ConfigParseError: If the expression is not a call of a catalog shape
            with literal arguments
    """
    if isinstance(expression, (int, float)):
        return Constant(float(expression))

    text = str(expression).strip()
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as e:
        raise ConfigParseError(f"Malformed potential expression '{text}': {e.msg}")

    call = tree.body
    if isinstance(call, ast.Constant) and isinstance(call.value, (int, float)):
        return Constant(float(call.value))
    if (
        not isinstance(call, ast.Call)
        or not isinstance(call.func, ast.Name)
        or call.func.id not in CATALOG
    ):
        raise ConfigParseError(
            f"Unknown potential expression '{text}'. "
            f"Catalog shapes are: {', '.join(CATALOG)}"
        )

    try:
        args = [ast.literal_eval(arg) for arg in call.args]
        kwargs = {kw.arg: ast.literal_eval(kw.value) for kw in call.keywords}
        return CATALOG[call.func.id](*args, **kwargs)
    except (ValueError, TypeError) as e:
        raise ConfigParseError(f"Invalid arguments in '{text}': {e}")


# ==========================================
# POTENTIAL TRIPLES
# ==========================================


@dataclass(frozen=True)
class PotentialTripleSpec:
    """Catalog potentials V, P, Q with declared x* and the exterior radius R_cond."""

    V: Shape
    P: Shape
    Q: Shape
    x_star: Point = (0.0, 0.0, 0.0)
    R_cond: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "x_star", _as_point(self.x_star))
        object.__setattr__(self, "R_cond", float(self.R_cond))
        if not self.R_cond > 0:
            raise DomainError(f"R_cond must be positive, got {self.R_cond}")

    V_min = property(lambda self: self.V.minimum)
    V_max = property(lambda self: self.V.maximum)
    V_inf = property(lambda self: self.V.limit)
    P_min = property(lambda self: self.P.minimum)
    P_max = property(lambda self: self.P.maximum)
    P_inf = property(lambda self: self.P.limit)
    Q_min = property(lambda self: self.Q.minimum)
    Q_max = property(lambda self: self.Q.maximum)
    Q_inf = property(lambda self: self.Q.limit)

    def declared_limits(self) -> Dict[str, float]:
        return {
            f"{name}_{kind}": getattr(self, f"{name}_{kind}")
            for name in ("V", "P", "Q")
            for kind in ("min", "max", "inf")
        }

    def coefficients_at(self, point: Sequence[float]) -> Tuple[float, float, float]:
        return self.V.at(point), self.P.at(point), self.Q.at(point)

    def sample(self, grid: Grid, epsilon: float = 1.0) -> Tuple[Field, Field, Field]:
        """Coefficient fields V(eps x), P(eps x), Q(eps x) on the grid nodes."""
        if epsilon <= 0:
            raise DomainError(f"epsilon must be positive, got {epsilon}")
        return (
            Field(grid, self.V.on_grid(grid, epsilon)),
            Field(grid, self.P.on_grid(grid, epsilon)),
            Field(grid, self.Q.on_grid(grid, epsilon)),
        )

    def shifted(self, offset: Sequence[float]) -> "PotentialTripleSpec":
        """The triple translated by offset (x* moves along)."""
        offset = _as_point(offset)
        return replace(
            self,
            V=self.V.shifted(offset),
            P=self.P.shifted(offset),
            Q=self.Q.shifted(offset),
            x_star=tuple(x + o for x, o in zip(self.x_star, offset)),
        )

    def describe(self) -> Dict[str, str]:
        return {
            "name": self.name,
            "V": self.V.expression(),
            "P": self.P.expression(),
            "Q": self.Q.expression(),
            "x_star": format_point(self.x_star),
            "R_cond": repr(self.R_cond),
        }


def shift(spec: PotentialTripleSpec, offset: Sequence[float]) -> PotentialTripleSpec:
    """V(. - offset), P(. - offset), Q(. - offset)."""
    return spec.shifted(offset)


def _preset_aligned() -> PotentialTripleSpec:
    return PotentialTripleSpec(
        V=Well(floor=1.0, rise=1.0, width=1.0),
        P=Plateau(peak=2.0, tail=1.0, width=1.0),
        Q=Bump(base=1.0, height=0.5, width=1.0),
        x_star=(0.0, 0.0, 0.0),
        R_cond=1.0,
        name="aligned",
    )


def _preset_competing() -> PotentialTripleSpec:
    return PotentialTripleSpec(
        V=Well(floor=1.0, rise=1.0, width=1.0, center=(1.5, 0.0, 0.0)),
        P=Plateau(peak=2.0, tail=1.0, width=1.0),
        Q=Bump(base=1.0, height=0.5, width=1.0),
        x_star=(0.0, 0.0, 0.0),
        R_cond=3.75,
        name="competing",
    )


def _preset_vq_competing() -> PotentialTripleSpec:
    return PotentialTripleSpec(
        V=Well(floor=1.0, rise=1.0, width=1.0),
        P=Bump(base=1.0, height=1.0, width=1.0, center=(1.5, 0.0, 0.0)),
        Q=Bump(base=1.0, height=0.5, width=1.0),
        x_star=(0.0, 0.0, 0.0),
        R_cond=3.75,
        name="vq_competing",
    )


def _preset_constant() -> PotentialTripleSpec:
    return PotentialTripleSpec(
        V=Constant(1.0), P=Constant(1.0), Q=Constant(1.0), R_cond=1.0, name="constant"
    )


PRESETS: Dict[str, Callable[[], PotentialTripleSpec]] = {
    "aligned": _preset_aligned,
    "competing": _preset_competing,
    "vq_competing": _preset_vq_competing,
    "constant": _preset_constant,
}


def preset(name: str) -> PotentialTripleSpec:
    """Named potential triple from the preset catalog.

    Raises:
        ConfigParseError: If the preset name is unknown
    """
    if name not in PRESETS:
        raise ConfigParseError(
            f"Unknown potential preset '{name}'. Available: {', '.join(PRESETS)}"
        )
    return PRESETS[name]()


def spec_from_config(section: Dict) -> PotentialTripleSpec:
    """Potential triple from a `potential` configuration section.

    Explicit V/P/Q expressions replace the matching preset component.
    """
    base = preset(section.get("preset") or "aligned")
    updates = {}
    for name in ("V", "P", "Q"):
        if section.get(name) is not None:
            updates[name] = parse_shape(section[name])
    if section.get("x_star") is not None:
        updates["x_star"] = _as_point(section["x_star"])
    if section.get("R_cond") is not None:
        updates["R_cond"] = float(section["R_cond"])
    if updates:
        updates["name"] = section.get("name") or f"{base.name}_custom"
    return replace(base, **updates)


# ==========================================
# CONDITION CHECKS
# ==========================================


def default_set_tolerance(values: Sequence[np.ndarray]) -> float:
    """1e-6 times the largest of (dynamic range, |max|) over the sampled fields."""
    scale = 0.0
    for v in values:
        vmax = float(np.max(v))
        scale = max(scale, float(np.max(v) - np.min(v)), abs(vmax))
    return 1e-6 * scale


def _sampled(spec: PotentialTripleSpec, grid: CartesianGrid):
    points = grid.points()
    V = spec.V.evaluate(points)
    P = spec.P.evaluate(points)
    Q = spec.Q.evaluate(points)
    return points, V, P, Q


def _first_extreme(values: np.ndarray, mask: np.ndarray, largest: bool) -> Optional[int]:
    """Index of the smallest (or largest) value inside mask, ties to the first node."""
    candidates = np.flatnonzero(mask)
    if candidates.size == 0:
        return None
    chosen = values[candidates]
    position = np.argmax(chosen) if largest else np.argmin(chosen)
    return int(candidates[position])


def check_conditions(spec: PotentialTripleSpec, grid: CartesianGrid) -> pd.DataFrame:
    """Pass/fail report with witnesses for PQ1, PQ2, VQ1 and VQ2.

    Returns:
        pd.DataFrame: one row per clause with columns condition, clause, passed,
            witness, value

    Raises:
        PreconditionError: If the grid does not cover the ball of radius 2 R_cond
    """
    if grid.half_width < 2.0 * spec.R_cond * (1.0 - 1e-12):
        raise PreconditionError(
            f"Condition grid half-width {grid.half_width} is below "
            f"2 R_cond = {2.0 * spec.R_cond}"
        )

    points, V, P, Q = _sampled(spec, grid)
    tol = default_set_tolerance((V, P, Q))
    Vset = V <= V.min() + tol
    Pset = P >= P.max() - tol
    Qset = Q >= Q.max() - tol
    exterior = np.linalg.norm(points, axis=1) >= spec.R_cond

    rows: List[Dict] = []

    # (PQ1) / (PQ2)
    PQ = Pset & Qset
    x_pq = _first_extreme(V, PQ, largest=False)
    rows.append(
        {
            "condition": "PQ1",
            "clause": "P_max and Q_max sets intersect",
            "passed": bool(PQ.any()),
            "witness": format_point(points[x_pq]) if x_pq is not None else "",
            "value": float(np.count_nonzero(PQ)),
        }
    )
    gap = spec.P_max - spec.P_inf
    rows.append(
        {
            "condition": "PQ2",
            "clause": "P_max > P_inf",
            "passed": bool(gap > tol),
            "witness": f"P_max={spec.P_max!r}; P_inf={spec.P_inf!r}",
            "value": gap,
        }
    )
    rows.append(_exterior_row("PQ2", V, x_pq, exterior, points, tol, minimum=True))

    # (VQ1) / (VQ2)
    VQ = Vset & Qset
    x_vq = _first_extreme(P, VQ, largest=True)
    rows.append(
        {
            "condition": "VQ1",
            "clause": "V_min and Q_max sets intersect",
            "passed": bool(VQ.any()),
            "witness": format_point(points[x_vq]) if x_vq is not None else "",
            "value": float(np.count_nonzero(VQ)),
        }
    )
    gap = spec.V_inf - spec.V_min
    rows.append(
        {
            "condition": "VQ2",
            "clause": "V_inf > V_min",
            "passed": bool(gap > tol),
            "witness": f"V_inf={spec.V_inf!r}; V_min={spec.V_min!r}",
            "value": gap,
        }
    )
    rows.append(_exterior_row("VQ2", P, x_vq, exterior, points, tol, minimum=False))

    return pd.DataFrame(rows, columns=CONDITION_COLUMNS)


def _exterior_row(condition, values, x_index, exterior, points, tol, minimum):
    """Exterior comparison: values(x*) <= values(x) (or >= when not minimum)."""
    name = "V(x*) <= V(x) for |x| >= R" if minimum else "P(x*) >= P(x) for |x| >= R"
    if x_index is None or not exterior.any():
        return {
            "condition": condition,
            "clause": name,
            "passed": False,
            "witness": "",
            "value": float("nan"),
        }

    margin = values[exterior] - values[x_index]
    if not minimum:
        margin = -margin
    worst = int(np.argmin(margin))
    worst_point = points[np.flatnonzero(exterior)[worst]]
    return {
        "condition": condition,
        "clause": name,
        "passed": bool(margin[worst] >= -tol),
        "witness": f"x*={format_point(points[x_index])}; worst={format_point(worst_point)}",
        "value": float(margin[worst]),
    }


def branch_passes(report: pd.DataFrame, branch: str) -> bool:
    """True iff every clause of (PQ1)+(PQ2) (branch "PQ") or (VQ1)+(VQ2) passed."""
    rows = report[report["condition"].str.startswith(branch)]
    return bool(len(rows) > 0 and rows["passed"].all())


def active_branch(report: pd.DataFrame) -> Optional[str]:
    """"PQ" if (PQ1)+(PQ2) hold, else "VQ" if (VQ1)+(VQ2) hold, else None."""
    for branch in ("PQ", "VQ"):
        if branch_passes(report, branch):
            return branch
    return None


# ==========================================
# ADMISSIBLE SETS
# ==========================================


@dataclass(frozen=True, eq=False)
class ConcentrationSets:
    """Discrete extremal and admissible node sets (flat indices into grid.points())."""

    grid: CartesianGrid
    Vset: np.ndarray
    Pset: np.ndarray
    Qset: np.ndarray
    A_V: np.ndarray
    A_P: np.ndarray
    tol_set: float
    x_star_V: Optional[Point] = None
    x_star_P: Optional[Point] = None
    _points: np.ndarray = field(default=None, repr=False)

    def points(self, nodes: np.ndarray) -> np.ndarray:
        return self._points[nodes]

    def distance(self, point: Sequence[float], which: str = "A_V") -> float:
        """Euclidean distance from point to the nearest member node of a set."""
        nodes = getattr(self, which)
        if nodes.size == 0:
            return float("inf")
        offsets = self._points[nodes] - np.asarray(point, dtype=np.float64)
        return float(np.min(np.linalg.norm(offsets, axis=1)))

    def admissible(self, branch: str) -> np.ndarray:
        return self.A_V if branch == "PQ" else self.A_P


def admissible_sets(
    spec: PotentialTripleSpec,
    grid: CartesianGrid,
    tol_set: Optional[float] = None,
    branch: Optional[str] = None,
) -> ConcentrationSets:
    """Discrete V-, P-, Q-extremal sets and the admissible sets A_V, A_P.

    V(x*) is the minimum of V over the discrete P-Q intersection; P(x*) the
    maximum of P over the discrete V-Q intersection.

    Raises:
        InconsistencyError: If the intersection required by `branch` is empty
    """
    points, V, P, Q = _sampled(spec, grid)
    if tol_set is None:
        tol_set = default_set_tolerance((V, P, Q))

    Vset = V <= V.min() + tol_set
    Pset = P >= P.max() - tol_set
    Qset = Q >= Q.max() - tol_set
    PQ = Pset & Qset
    VQ = Vset & Qset

    if branch == "PQ" and not PQ.any():
        raise InconsistencyError("Discrete P_max/Q_max intersection is empty")
    if branch == "VQ" and not VQ.any():
        raise InconsistencyError("Discrete V_min/Q_max intersection is empty")

    A_V = np.zeros_like(PQ)
    x_star_V = None
    x_pq = _first_extreme(V, PQ, largest=False)
    if x_pq is not None:
        level = V[x_pq]
        A_V = (PQ & (V <= level + tol_set)) | (~PQ & (V < level - tol_set))
        x_star_V = tuple(float(c) for c in points[x_pq])

    A_P = np.zeros_like(VQ)
    x_star_P = None
    x_vq = _first_extreme(P, VQ, largest=True)
    if x_vq is not None:
        level = P[x_vq]
        A_P = (VQ & (P >= level - tol_set)) | (~VQ & (P > level + tol_set))
        x_star_P = tuple(float(c) for c in points[x_vq])

    return ConcentrationSets(
        grid=grid,
        Vset=np.flatnonzero(Vset),
        Pset=np.flatnonzero(Pset),
        Qset=np.flatnonzero(Qset),
        A_V=np.flatnonzero(A_V),
        A_P=np.flatnonzero(A_P),
        tol_set=float(tol_set),
        x_star_V=x_star_V,
        x_star_P=x_star_P,
        _points=points,
    )


def best_candidate(
    spec: PotentialTripleSpec, sets: ConcentrationSets, branch: str
) -> Point:
    """Admissible node with the lowest V (branch PQ) or highest P (branch VQ)."""
    nodes = sets.admissible(branch)
    if nodes.size == 0:
        raise InconsistencyError(f"Admissible set for branch {branch} is empty")
    pts = sets.points(nodes)
    if branch == "PQ":
        position = int(np.argmin(spec.V.evaluate(pts)))
    else:
        position = int(np.argmax(spec.P.evaluate(pts)))
    return tuple(float(c) for c in pts[position])


def verify_declared_limits(
    spec: PotentialTripleSpec, grid: CartesianGrid, tol: float = 1e-6
) -> pd.DataFrame:
    """Compare declared extremes and limits with sampled values.

    Sampled values must lie inside [min - tol, max + tol]; the attained extreme
    is checked at the shape center and the limit far out along the x-axis.
    """
    points = grid.points()
    declared = spec.declared_limits()
    rows = []
    for name in ("V", "P", "Q"):
        shape: Shape = getattr(spec, name)
        low, high, limit = (declared[f"{name}_{kind}"] for kind in ("min", "max", "inf"))
        sampled = shape.evaluate(points)
        far = np.asarray(shape.center) + np.array([1e6 * shape.width, 0.0, 0.0])
        at_center = shape.at(shape.center)
        far_value = shape.at(far)
        rows.append(
            {
                "function": name,
                "sampled_min": float(sampled.min()),
                "sampled_max": float(sampled.max()),
                "declared_min": low,
                "declared_max": high,
                "declared_limit": limit,
                "far_value": far_value,
                "center_value": at_center,
                "passed": bool(
                    sampled.min() >= low - tol
                    and sampled.max() <= high + tol
                    and abs(far_value - limit) <= tol
                    and (abs(at_center - low) <= tol or abs(at_center - high) <= tol)
                ),
            }
        )
    return pd.DataFrame(rows)
