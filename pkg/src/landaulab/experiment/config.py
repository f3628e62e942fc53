"""Experiment configuration: a TOML document with strict keys.

Grammar (all sections are tables; keys not listed here are rejected)::

    [grid]          d, N, L                                   (required)
    [kernel]        gamma (required), R_trunc
    [solver]        t_end (required), form, cfl, output_every, dt_max,
                    recompute_coeffs_every_stage
    [diagnostics]   m_max, sigma_list, B, fit_window, entropy_floor,
                    mask_radius, identity_mu, identity_dt_fraction
    [scenario]      name (required); [scenario.params] builder keywords
    [output]        directory, formats, snapshot_every
    [thresholds]    pass/fail tolerances of the summary properties

Errors name the offending key as a dotted path, e.g. ``kernel.gamma``.
"""

from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass, field
from typing import Any

import tomli
import tomli_w

from ..errors import CatalogError, ConfigError
from ..grid import VelocityGrid
from ..kernel import KernelParams
from ..multiindex import MultiIndex
from ..solver import FORMS, SolverConfig
from .scenarios import CATALOG, validate_parameters

_REQUIRED = object()


@dataclass(frozen=True)
class GridSection:
    d: int = _REQUIRED
    N: int = _REQUIRED
    L: float = _REQUIRED


@dataclass(frozen=True)
class KernelSection:
    gamma: float = _REQUIRED
    R_trunc: float | None = None


@dataclass(frozen=True)
class SolverSection:
    t_end: float = _REQUIRED
    form: str = "flux"
    cfl: float = 0.5
    output_every: int = 10
    dt_max: float = 0.05
    recompute_coeffs_every_stage: bool = True


@dataclass(frozen=True)
class DiagnosticsSection:
    m_max: int = 6
    sigma_list: list[float] = field(default_factory=lambda: [1.0, 2.0])
    B: float = 4.0
    fit_window: list[float] | None = None
    entropy_floor: float = 1e-30
    mask_radius: float | None = None
    identity_mu: list[str] = field(default_factory=list)
    identity_dt_fraction: float = 0.1


@dataclass(frozen=True)
class ScenarioSection:
    name: str = _REQUIRED
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class OutputSection:
    directory: str = "runs/default"
    formats: list[str] = field(default_factory=lambda: ["csv", "json"])
    snapshot_every: int = 0


@dataclass(frozen=True)
class ThresholdSection:
    mass_rel: float = 1e-12
    entropy_rel: float = 1e-8
    positivity_rel: float = 1e-6
    identity_rel: float = 1e-4
    coercivity_rel: float = 1e-10
    sigma_drift: float = 0.05
    gevrey_ratio: float = 1.5
    qk_spread: float = 3.0


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSection
    kernel: KernelSection
    solver: SolverSection
    scenario: ScenarioSection
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    output: OutputSection = field(default_factory=OutputSection)
    thresholds: ThresholdSection = field(default_factory=ThresholdSection)

    # builders for the numerical objects --------------------------------------

    def make_grid(self) -> VelocityGrid:
        return VelocityGrid(self.grid.d, self.grid.N, self.grid.L)

    def make_kernel(self) -> KernelParams:
        return KernelParams(self.kernel.gamma, self.grid.d, self.kernel.R_trunc)

    def make_solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            form=s.form,
            cfl=s.cfl,
            t_end=s.t_end,
            output_every=s.output_every,
            gamma=self.kernel.gamma,
            recompute_coeffs_every_stage=s.recompute_coeffs_every_stage,
            dt_max=s.dt_max,
        )

    def identity_indices(self) -> list[MultiIndex]:
        d = self.grid.d
        if not self.diagnostics.identity_mu:
            return [MultiIndex.zero(d), MultiIndex.unit(d, 0)]
        return [MultiIndex.parse(s) for s in self.diagnostics.identity_mu]

    def to_dict(self) -> dict[str, Any]:
        return _prune_none(dataclasses.asdict(self))


SECTIONS: dict[str, type] = {
    "grid": GridSection,
    "kernel": KernelSection,
    "solver": SolverSection,
    "diagnostics": DiagnosticsSection,
    "scenario": ScenarioSection,
    "output": OutputSection,
    "thresholds": ThresholdSection,
}


def _prune_none(obj):
    if isinstance(obj, dict):
        return {k: _prune_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_prune_none(v) for v in obj]
    return obj


def _coerce(value, tp, key: str):
    """Check ``value`` against the annotation ``tp``; ints are accepted as floats."""
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union or (origin is not None and getattr(origin, "__name__", "") == "UnionType"):
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], key)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {type(value).__name__}", key=key)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {type(value).__name__}", key=key)
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {type(value).__name__}", key=key)
        if not math.isfinite(value):
            raise ConfigError("expected a finite number", key=key)
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {type(value).__name__}", key=key)
        return value
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"expected an array, got {type(value).__name__}", key=key)
        return [_coerce(v, args[0], f"{key}[{i}]") for i, v in enumerate(value)]
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"expected a table, got {type(value).__name__}", key=key)
        return dict(value)
    raise TypeError(f"unsupported annotation {tp!r}")


def _load_section(cls, table, name: str):
    if not isinstance(table, dict):
        raise ConfigError("expected a table", key=name)
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in table:
        if key not in names:
            raise ConfigError(f"unknown key; allowed: {sorted(names)}", key=f"{name}.{key}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        path = f"{name}.{f.name}"
        if f.name in table:
            kwargs[f.name] = _coerce(table[f.name], hints[f.name], path)
        elif f.default is _REQUIRED:
            raise ConfigError("missing required key", key=path)
    return cls(**kwargs)


def _validate(cfg: ExperimentConfig) -> None:
    g, k, s, dg, o, th = cfg.grid, cfg.kernel, cfg.solver, cfg.diagnostics, cfg.output, cfg.thresholds
    if g.d not in (2, 3):
        raise ConfigError(f"d must be 2 or 3, got {g.d}", key="grid.d")
    if g.N < 8 or g.N & (g.N - 1):
        raise ConfigError(f"N must be a power of two >= 8, got {g.N}", key="grid.N")
    if not g.L > 0:
        raise ConfigError("L must be positive", key="grid.L")
    if not 0.0 <= k.gamma <= 1.0:
        raise ConfigError(f"gamma must lie in [0, 1], got {k.gamma}", key="kernel.gamma")
    if k.R_trunc is not None and k.R_trunc < g.L / 2:
        raise ConfigError("R_trunc must be >= L/2", key="kernel.R_trunc")
    if s.form not in FORMS:
        raise ConfigError(f"form must be one of {FORMS}", key="solver.form")
    if not 0.0 < s.cfl <= 1.0:
        raise ConfigError("cfl must lie in (0, 1]", key="solver.cfl")
    if s.t_end < 0:
        raise ConfigError("t_end must be >= 0", key="solver.t_end")
    if s.output_every < 1:
        raise ConfigError("output_every must be >= 1", key="solver.output_every")
    if not s.dt_max > 0:
        raise ConfigError("dt_max must be positive", key="solver.dt_max")
    if not 1 <= dg.m_max <= g.N // 8:
        raise ConfigError(f"m_max must lie in [1, N/8={g.N // 8}]", key="diagnostics.m_max")
    if not dg.sigma_list or any(x < 1.0 for x in dg.sigma_list):
        raise ConfigError("sigma_list must be non-empty with entries >= 1", key="diagnostics.sigma_list")
    if not dg.B > 0:
        raise ConfigError("B must be positive", key="diagnostics.B")
    if dg.fit_window is not None and (len(dg.fit_window) != 2 or not 0 <= dg.fit_window[0] < dg.fit_window[1]):
        raise ConfigError("fit_window must be [lo, hi] with 0 <= lo < hi", key="diagnostics.fit_window")
    if not dg.entropy_floor > 0:
        raise ConfigError("entropy_floor must be positive", key="diagnostics.entropy_floor")
    if dg.mask_radius is not None and not dg.mask_radius > 0:
        raise ConfigError("mask_radius must be positive", key="diagnostics.mask_radius")
    if not 0 < dg.identity_dt_fraction <= 1:
        raise ConfigError("identity_dt_fraction must lie in (0, 1]", key="diagnostics.identity_dt_fraction")
    for i, spec in enumerate(dg.identity_mu):
        path = f"diagnostics.identity_mu[{i}]"
        try:
            mu = MultiIndex.parse(spec)
        except ValueError as exc:
            raise ConfigError(str(exc), key=path) from None
        if mu.d != g.d or mu.order > 4:
            raise ConfigError(f"multi-index must have {g.d} entries and order <= 4", key=path)
    if cfg.scenario.name not in CATALOG:
        raise ConfigError(f"unknown scenario {cfg.scenario.name!r}; catalog: {sorted(CATALOG)}", key="scenario.name")
    validate_parameters(cfg.scenario.name, cfg.scenario.params)
    bad = set(o.formats) - {"csv", "json"}
    if bad:
        raise ConfigError(f"unknown formats {sorted(bad)}", key="output.formats")
    if o.snapshot_every < 0:
        raise ConfigError("snapshot_every must be >= 0", key="output.snapshot_every")
    for f in dataclasses.fields(th):
        if not getattr(th, f.name) >= 0:
            raise ConfigError("thresholds must be non-negative", key=f"thresholds.{f.name}")


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    for key in data:
        if key not in SECTIONS:
            raise ConfigError(f"unknown section; allowed: {sorted(SECTIONS)}", key=key)
    sections = {}
    for name, cls in SECTIONS.items():
        if name in data:
            sections[name] = _load_section(cls, data[name], name)
        elif name in ("grid", "kernel", "solver", "scenario"):
            raise ConfigError("missing required section", key=name)
    cfg = ExperimentConfig(**sections)
    _validate(cfg)
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed document: {exc}") from None
    return config_from_dict(data)


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    return parse_config(raw.decode("utf-8"))


def serialize(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def with_overrides(cfg: ExperimentConfig, overrides: dict[str, Any]) -> ExperimentConfig:
    """Copy with dotted-key overrides, e.g. ``{"kernel.gamma": 0.5}``; revalidated."""
    data = cfg.to_dict()
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return config_from_dict(data)


__all__ = [
    "CatalogError",
    "ExperimentConfig",
    "config_from_dict",
    "load_config",
    "parse_config",
    "serialize",
    "with_overrides",
]
