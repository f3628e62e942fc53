"""Explicit RK4 time stepping of the homogeneous Landau equation.

Two semi-discretisations of the same operator are available:

* ``flux``:          d_t f = sum_j d_j ( sum_i abar_ij d_i f - f bbar_j )
* ``nondivergence``: d_t f = sum_ij abar_ij d_ij f - cbar f

All velocity derivatives are spectral. The flux form conserves discrete mass
to round-off because the zero Fourier mode of a spectral divergence is
exactly zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import BlowUpError, ConfigError
from .grid import VelocityGrid, _multiplier
from .kernel import CoefficientFields, KernelParams, get_assembler
from .symeig import sym_eigvalsh

FORMS = ("flux", "nondivergence")


class SupportLeakageWarning(RuntimeWarning):
    """Mass has spread close to the box boundary."""


class DegenerateCoefficientWarning(RuntimeWarning):
    """Diffusion matrix vanishes although the density does not."""


@dataclass(frozen=True)
class SolverConfig:
    """Time-integration settings.

    ``output_every`` is the number of equal output intervals in [0, t_end].
    ``stability_radius`` restricts the eigenvalue maximum used for the time
    step to |v| <= radius; ``None`` uses the whole grid, which is what keeps
    explicit stepping stable where abar is largest.
    """

    form: str = "flux"
    cfl: float = 0.5
    t_end: float = 1.0
    output_every: int = 10
    gamma: float = 0.0
    recompute_coeffs_every_stage: bool = True
    dt_max: float = 0.05
    stability_radius: float | None = None

    def __post_init__(self):
        if self.form not in FORMS:
            raise ConfigError(f"form must be one of {FORMS}, got {self.form!r}", key="solver.form")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}", key="solver.cfl")
        if not self.t_end >= 0.0:
            raise ConfigError(f"t_end must be >= 0, got {self.t_end}", key="solver.t_end")
        if int(self.output_every) != self.output_every or self.output_every < 1:
            raise ConfigError(f"output_every must be an integer >= 1, got {self.output_every}", key="solver.output_every")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}", key="solver.gamma")
        if not self.dt_max > 0:
            raise ConfigError("dt_max must be positive", key="solver.dt_max")


@dataclass(frozen=True)
class SolverState:
    t: float
    f: np.ndarray
    coeffs: CoefficientFields
    min_f: float
    steps: int = 0


class LandauSolver:
    """RHS evaluation, CFL time step and RK4 stepping on one grid."""

    def __init__(self, grid: VelocityGrid, config: SolverConfig, kernel: KernelParams | None = None):
        if kernel is None:
            kernel = KernelParams(config.gamma, grid.d)
        elif kernel.gamma != config.gamma:
            raise ConfigError("kernel gamma differs from solver gamma", key="solver.gamma")
        self.grid = grid
        self.config = config
        self.kernel = kernel
        self.assembler = get_assembler(grid, kernel)
        self._rhs_parts = "ab" if config.form == "flux" else "ac"

    # operator -------------------------------------------------------------------

    def coefficients(self, f: np.ndarray, parts: str = "abc") -> CoefficientFields:
        return self.assembler.assemble(f, parts)

    def initial_state(self, f0: np.ndarray, t: float = 0.0) -> SolverState:
        f0 = self.grid.check_field(f0).copy()
        return SolverState(float(t), f0, self.coefficients(f0), float(np.min(f0)))

    def rhs(self, f: np.ndarray, coeffs: CoefficientFields, form: str | None = None) -> np.ndarray:
        return rhs(self.grid, f, coeffs, form or self.config.form)

    def stable_dt(self, coeffs: CoefficientFields) -> float:
        return stable_dt(
            self.grid,
            coeffs,
            self.config.cfl,
            form=self.config.form,
            dt_max=self.config.dt_max,
            radius=self.config.stability_radius,
        )

    # stepping -------------------------------------------------------------------

    def step(self, state: SolverState, dt: float) -> SolverState:
        """One classical RK4 step; f is never clipped."""
        parts = self._rhs_parts
        f0, c0 = state.f, state.coeffs
        recompute = self.config.recompute_coeffs_every_stage

        def stage(f):
            if not np.all(np.isfinite(f)):
                raise BlowUpError(state.t, self._snapshot(state))
            return self.rhs(f, self.coefficients(f, parts) if recompute else c0)

        k1 = self.rhs(f0, c0)
        k2 = stage(f0 + 0.5 * dt * k1)
        k3 = stage(f0 + 0.5 * dt * k2)
        k4 = stage(f0 + dt * k3)
        f1 = f0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(f1)):
            raise BlowUpError(state.t, self._snapshot(state))
        return SolverState(
            state.t + dt,
            f1,
            self.coefficients(f1),
            min(state.min_f, float(np.min(f1))),
            state.steps + 1,
        )

    def advance(self, state: SolverState, t_target: float, on_step: Callable | None = None) -> SolverState:
        """Step from ``state.t`` to exactly ``t_target`` with CFL-limited steps."""
        while state.t < t_target:
            remaining = t_target - state.t
            dt_s = self.stable_dt(state.coeffs)
            n = max(1, math.ceil(remaining / dt_s * (1 - 1e-12)))
            dt = remaining / n
            state = self.step(state, dt)
            if n == 1:
                state = replace(state, t=t_target)
            if on_step is not None:
                on_step(state)
        return state

    def run(
        self,
        f0: np.ndarray,
        on_output: Callable | None = None,
        on_step: Callable | None = None,
    ) -> list[SolverState]:
        """States at t_k = k t_end / output_every, k = 0 .. output_every."""
        cfg = self.config
        state = self.initial_state(f0)
        m0 = self.grid.integrate(state.f)
        outputs = [state]
        if on_output is not None:
            on_output(state)
        if cfg.t_end == 0:
            return outputs
        for k in range(1, cfg.output_every + 1):
            state = self.advance(state, cfg.t_end * k / cfg.output_every, on_step)
            self._check_leakage(state, m0)
            outputs.append(state)
            if on_output is not None:
                on_output(state)
        return outputs

    def _check_leakage(self, state: SolverState, m0: float) -> None:
        leak = self.grid.mass_outside(state.f, self.grid.L / 3)
        if abs(m0) > 0 and leak > 1e-6 * abs(m0):
            warnings.warn(
                f"mass {leak:.3e} outside |v| <= L/3 at t={state.t:.4g}",
                SupportLeakageWarning,
                stacklevel=3,
            )

    def _snapshot(self, state: SolverState) -> dict:
        g = self.grid
        return {
            "t": state.t,
            "steps": state.steps,
            "mass": g.integrate(state.f),
            "min_f": float(np.min(state.f)),
            "max_f": float(np.max(state.f)),
        }


def rhs(grid: VelocityGrid, f: np.ndarray, coeffs: CoefficientFields, form: str = "flux") -> np.ndarray:
    """Landau collision operator evaluated with the given coefficients."""
    d = grid.d
    fhat = sfft.rfftn(f)
    unit = [tuple(int(k == i) for k in range(d)) for i in range(d)]
    if form == "nondivergence":
        out = -coeffs.cbar * f
        for i in range(d):
            for j in range(i, d):
                orders = tuple(unit[i][k] + unit[j][k] for k in range(d))
                dij = sfft.irfftn(fhat * _multiplier(grid, orders), s=grid.shape)
                out += (1.0 if i == j else 2.0) * coeffs.abar[i, j] * dij
        return out
    if form == "flux":
        grad = [sfft.irfftn(fhat * _multiplier(grid, unit[i]), s=grid.shape) for i in range(d)]
        div_hat = 0
        for j in range(d):
            flux = -f * coeffs.bbar[j]
            for i in range(d):
                flux += coeffs.abar[i, j] * grad[i]
            div_hat = div_hat + sfft.rfftn(flux) * _multiplier(grid, unit[j])
        return sfft.irfftn(div_hat, s=grid.shape)
    raise ConfigError(f"form must be one of {FORMS}, got {form!r}", key="solver.form")


def stable_dt(
    grid: VelocityGrid,
    coeffs: CoefficientFields,
    cfl: float,
    form: str = "flux",
    dt_max: float = 0.05,
    radius: float | None = None,
) -> float:
    """cfl h^2 / (2 d Lambda), Lambda = max lambda_max(abar); capped by dt_max.

    In flux form the step is also capped by cfl h / (2 max|bbar| + eps).
    """
    h, d = grid.h, grid.d
    lam = sym_eigvalsh(coeffs.matrices)[..., -1]
    region = np.ones(grid.shape, bool) if radius is None else grid.mask(radius)
    big = float(np.max(lam[region]))
    dt = dt_max
    if big > 0:
        dt = min(dt, cfl * h * h / (2 * d * big))
    elif np.any(coeffs.abar != 0):
        warnings.warn("abar has no positive eigenvalue", DegenerateCoefficientWarning, stacklevel=2)
    if form == "flux" and coeffs.bbar is not None:
        bmax = float(np.max(np.sqrt(np.sum(coeffs.bbar**2, axis=0))[region]))
        dt = min(dt, cfl * h / (2 * bmax + 1e-300))
    return dt
