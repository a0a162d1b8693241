"""
File: validation.py
Location: /src/validation.py
Description: Input validation of the merged solver configuration
Author: Patrick Jordan
Version: 2026-10

Validates all solver inputs before a command runs:
- Kirchhoff constants (a, b > 0, p in (4,6)) and constant coefficients
- Concentration parameter, sweep epsilons and lattice values
- Solver tolerances and iteration limits
- Grid sizes
- Potential catalog expressions
- Output directory access

Raises PreconditionError (exit code 1) on the first fatal problem.
"""

import math
import os
from typing import Dict, Iterable

from src.errors import ConfigParseError, KirchhoffError, PreconditionError
from src.potentials import spec_from_config


def _number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _require_positive(config: Dict, keys: Iterable[str]) -> None:
    for key in keys:
        section, name = key.split(".")
        value = config.get(section, {}).get(name)
        if not _number(value) or value <= 0:
            raise PreconditionError(f"{key} must be a positive number, got {value!r}")


def validate_inputs(config: Dict) -> bool:
    """
    Validate the merged configuration before any solve starts.

    Performs hierarchical validation:
    1. Model parameters: a, b, k, tau, nu positive; p in the open interval (4,6)
    2. Numerical settings: epsilon > 0, tol in (0, 1e-2], iteration limits
    3. Grids: positive extents and enough nodes
    4. Potential: preset exists and catalog expressions parse
    5. Output configuration: base folder can be created

    Args:
        config: Merged configuration from ConfigurationManager

    Raises:
        PreconditionError: If a value lies outside its documented range

    Returns:
        bool: True if all validations pass
    """
    # Model parameters
    _require_positive(
        config, ("kirchhoff.a", "kirchhoff.b", "constants.k", "constants.tau", "constants.nu")
    )
    p = config.get("kirchhoff", {}).get("p")
    if not _number(p) or not 4.0 < p < 6.0:
        raise PreconditionError(
            f"p={p!r} violates the standing assumption p in (4,6)"
        )

    thresholds = config.get("thresholds", {})
    for name in ("S", "q", "lambda"):
        value = thresholds.get(name)
        if value is not None and (not _number(value) or value <= 0):
            raise PreconditionError(f"thresholds.{name} must be positive, got {value!r}")

    # Numerical settings
    epsilon = config.get("epsilon")
    if not _number(epsilon) or epsilon <= 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon!r}")

    solver = config.get("solver", {})
    tol = solver.get("tol")
    if not _number(tol) or not 0.0 < tol <= 1e-2:
        raise PreconditionError(f"solver.tol must lie in (0, 1e-2], got {tol!r}")
    if not isinstance(solver.get("max_iter"), int) or solver["max_iter"] <= 0:
        raise PreconditionError("solver.max_iter must be a positive integer")
    if not 0 < solver.get("bb_min", 0) < solver.get("bb_max", 0):
        raise PreconditionError("Barzilai-Borwein bounds need 0 < bb_min < bb_max")
    if solver.get("domain_growth", 0) <= 1.0:
        raise PreconditionError("solver.domain_growth must exceed 1")
    if not solver.get("seed_widths"):
        raise PreconditionError("solver.seed_widths must name at least one width")

    eps_list = config.get("sweep", {}).get("eps_list", [])
    if not eps_list or not all(_number(e) and e > 0 for e in eps_list):
        raise PreconditionError(f"sweep.eps_list must hold positive values, got {eps_list!r}")
    if len(set(eps_list)) != len(eps_list):
        raise PreconditionError("sweep.eps_list must not repeat values")

    lattice = config.get("lattice", {}).get("values", [])
    if not all(_number(v) and v > 0 for v in lattice):
        raise PreconditionError(f"lattice.values must be positive, got {lattice!r}")

    # Grids
    grid = config.get("grid", {})
    radial = grid.get("radial", {})
    if not _number(radial.get("R_dom")) or radial["R_dom"] <= 0:
        raise PreconditionError("grid.radial.R_dom must be positive")
    if not isinstance(radial.get("n"), int) or radial["n"] < 8:
        raise PreconditionError("grid.radial.n must be an integer >= 8")

    cartesian = grid.get("cartesian", {})
    if not _number(cartesian.get("half_width")) or cartesian["half_width"] <= 0:
        raise PreconditionError("grid.cartesian.half_width must be positive")
    if not isinstance(cartesian.get("m"), int) or cartesian["m"] < 5:
        raise PreconditionError("grid.cartesian.m must be an integer >= 5")
    if cartesian["m"] > cartesian.get("max_nodes", cartesian["m"]):
        raise PreconditionError(
            f"grid.cartesian.m={cartesian['m']} exceeds max_nodes={cartesian['max_nodes']}"
        )

    # Potential
    try:
        spec_from_config(config.get("potential", {}))
    except (ConfigParseError, KirchhoffError) as e:
        raise PreconditionError(f"Invalid potential configuration: {e}") from e

    # Output configuration
    base_output_path = config.get("output", {}).get("base_output_path", "./output")
    try:
        os.makedirs(base_output_path, exist_ok=True)
    except OSError as e:
        raise PreconditionError(f"Cannot create output directory: {e}") from e

    return True
