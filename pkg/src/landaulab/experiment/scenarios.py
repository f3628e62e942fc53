"""Catalog of initial densities.

Every builder takes the grid and keyword parameters and returns a field.
Gaussian scenarios are normalised analytically; the bump is normalised on
the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping

import numpy as np

from ..errors import CatalogError, ConfigError
from ..grid import VelocityGrid


def _gaussian(grid: VelocityGrid, center, temps) -> np.ndarray:
    v = grid.coords
    expo = np.zeros(grid.shape)
    norm = 1.0
    for i in range(grid.d):
        expo += (v[i] - center[i]) ** 2 / (2.0 * temps[i])
        norm *= 2.0 * math.pi * temps[i]
    return np.exp(-expo) / math.sqrt(norm)


def maxwellian(grid: VelocityGrid, M0: float = 1.0, T: float = 1.0, drift: list | None = None) -> np.ndarray:
    u = [0.0] * grid.d if drift is None else list(drift)
    if len(u) != grid.d:
        raise ConfigError(f"drift needs {grid.d} components, got {len(u)}", key="scenario.params.drift")
    return M0 * _gaussian(grid, u, [T] * grid.d)


def anisotropic_gaussian(
    grid: VelocityGrid, M0: float = 1.0, T1: float = 2.0, T2: float = 1.0, T3: float = 1.0
) -> np.ndarray:
    temps = [T1, T2, T3][: grid.d]
    return M0 * _gaussian(grid, [0.0] * grid.d, temps)


def gaussian_mixture(
    grid: VelocityGrid, M0: float = 1.0, T: float = 1.0, separation: float = 2.0, weight: float = 0.5
) -> np.ndarray:
    """Two Gaussians of temperature T centred at -/+ separation/2 along v_1."""
    if not 0.0 < weight < 1.0:
        raise ConfigError("weight must lie in (0, 1)", key="scenario.params.weight")
    c = [0.0] * grid.d
    c[0] = 0.5 * separation
    left = [-x for x in c]
    temps = [T] * grid.d
    return M0 * (weight * _gaussian(grid, left, temps) + (1.0 - weight) * _gaussian(grid, c, temps))


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity transition from 1 (x <= 0) to 0 (x >= 1)."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x < 1.0, np.exp(-1.0 / np.where(x < 1.0, 1.0 - x, 1.0)), 0.0)
        b = np.where(x > 0.0, np.exp(-1.0 / np.where(x > 0.0, x, 1.0)), 0.0)
    return a / (a + b)


def bump(grid: VelocityGrid, M0: float = 1.0, radius: float = 1.0, plateau: float = 0.5) -> np.ndarray:
    """Flat top on |v| <= plateau*radius, smooth compactly supported edge out to radius."""
    if not 0.0 <= plateau < 1.0:
        raise ConfigError("plateau must lie in [0, 1)", key="scenario.params.plateau")
    r = np.sqrt(grid.speed_sq)
    r0 = plateau * radius
    f = _smooth_step((r - r0) / (radius - r0))
    mass = grid.integrate(f)
    if mass <= 0:
        raise ConfigError("bump radius is below the grid resolution", key="scenario.params.radius")
    return (M0 / mass) * f


@dataclass(frozen=True)
class ScenarioSpec:
    builder: Callable[..., np.ndarray]
    positive: tuple[str, ...]
    nonnegative: tuple[str, ...] = ()


CATALOG: dict[str, ScenarioSpec] = {
    "maxwellian": ScenarioSpec(maxwellian, ("T",), ("M0",)),
    "anisotropic_gaussian": ScenarioSpec(anisotropic_gaussian, ("T1", "T2", "T3"), ("M0",)),
    "gaussian_mixture": ScenarioSpec(gaussian_mixture, ("T",), ("M0", "separation")),
    "bump": ScenarioSpec(bump, ("radius",), ("M0", "plateau")),
}


def scenario_parameters(name: str) -> dict[str, Any]:
    """Parameter names of a scenario with their defaults."""
    import inspect

    spec = _lookup(name)
    sig = inspect.signature(spec.builder)
    return {k: p.default for k, p in list(sig.parameters.items())[1:]}


def _lookup(name: str) -> ScenarioSpec:
    try:
        return CATALOG[name]
    except KeyError:
        raise CatalogError(f"unknown scenario {name!r}; catalog: {sorted(CATALOG)}") from None


def validate_parameters(name: str, params: Mapping[str, Any]) -> None:
    spec = _lookup(name)
    allowed = scenario_parameters(name)
    for key, val in params.items():
        path = f"scenario.params.{key}"
        if key not in allowed:
            raise ConfigError(f"unknown parameter for {name!r}; allowed: {sorted(allowed)}", key=path)
        if key == "drift":
            if not isinstance(val, (list, tuple)) or not all(_is_number(x) for x in val):
                raise ConfigError("drift must be a list of numbers", key=path)
            continue
        if not _is_number(val):
            raise ConfigError(f"expected a number, got {type(val).__name__}", key=path)
        if key in spec.positive and not val > 0:
            raise ConfigError(f"must be positive, got {val}", key=path)
        if key in spec.nonnegative and not val >= 0:
            raise ConfigError(f"must be non-negative, got {val}", key=path)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def build_scenario(grid: VelocityGrid, name: str, params: Mapping[str, Any] | None = None) -> np.ndarray:
    params = dict(params or {})
    validate_parameters(name, params)
    f = _lookup(name).builder(grid, **params)
    return grid.check_field(f)
