"""Periodic velocity grid with spectral differentiation and quadrature.

The box is [-L/2, L/2)^d with N points per axis, ``v_k = -L/2 + k h``. A
field is a real array of shape ``(N,) * d`` in C (row-major) order. The DFT
convention is numpy's: forward unnormalised, inverse carries 1/N^d.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import DataIntegrityError, DimensionError, OrderError
from .multiindex import MultiIndex, as_multi_index


class Moments(NamedTuple):
    mass: float
    momentum: np.ndarray
    energy: float
    second: np.ndarray


@dataclass(frozen=True)
class VelocityGrid:
    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise DimensionError(f"d must be 2 or 3, got {self.d}")
        if self.N < 8 or self.N & (self.N - 1):
            raise DimensionError(f"N must be a power of two >= 8, got {self.N}")
        if not self.L > 0:
            raise DimensionError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @functools.cached_property
    def axis(self) -> np.ndarray:
        return -self.L / 2 + self.h * np.arange(self.N)

    @functools.cached_property
    def coords(self) -> np.ndarray:
        """Array of shape ``(d, N, ..., N)``; ``coords[i]`` is v_i."""
        out = np.stack(np.meshgrid(*([self.axis] * self.d), indexing="ij"))
        out.flags.writeable = False
        return out

    @functools.cached_property
    def speed_sq(self) -> np.ndarray:
        out = np.sum(self.coords**2, axis=0)
        out.flags.writeable = False
        return out

    @functools.cached_property
    def frequencies(self) -> np.ndarray:
        """Integer frequency vectors xi in numpy's full ``fftn`` layout."""
        xi = np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(int)
        return np.stack(np.meshgrid(*([xi] * self.d), indexing="ij"))

    def mask(self, radius: float | None = None) -> np.ndarray:
        """Ball |v| <= radius; default radius L/4."""
        r = self.L / 4 if radius is None else radius
        return self.speed_sq <= r * r

    def weight(self, s: float) -> np.ndarray:
        """(1 + |v|^2)^(s/2)."""
        if s == 0:
            return np.ones(self.shape)
        return (1.0 + self.speed_sq) ** (0.5 * s)

    def check_field(self, f: np.ndarray, finite: bool = True) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise DimensionError(f"field shape {f.shape} does not match grid {self.shape}")
        if finite and not np.all(np.isfinite(f)):
            raise DataIntegrityError("field contains NaN or Inf")
        return f

    # transforms ---------------------------------------------------------------

    def fft(self, f: np.ndarray) -> np.ndarray:
        return sfft.fftn(f)

    def ifft(self, fhat: np.ndarray) -> np.ndarray:
        return sfft.ifftn(fhat)

    def derivative(self, f: np.ndarray, alpha: MultiIndex | Sequence[int]) -> np.ndarray:
        """Spectral derivative d^alpha f.

        Each axis contributes (i 2 pi xi / L)^n; the Nyquist mode is dropped on
        axes of odd order so that real fields stay real.
        """
        alpha = self._check_order(alpha)
        if alpha.order == 0:
            return np.array(f, dtype=float, copy=True)
        fhat = sfft.rfftn(f)
        return sfft.irfftn(fhat * _multiplier(self, alpha.components), s=self.shape)

    def derivatives(self, f: np.ndarray, alphas: Iterable) -> dict[MultiIndex, np.ndarray]:
        """Several derivatives sharing one forward transform."""
        fhat = sfft.rfftn(f)
        out = {}
        for a in alphas:
            a = self._check_order(a)
            if a.order == 0:
                out[a] = np.array(f, dtype=float, copy=True)
            else:
                out[a] = sfft.irfftn(fhat * _multiplier(self, a.components), s=self.shape)
        return out

    def derivative_hat(self, fhat: np.ndarray, alpha: MultiIndex | Sequence[int]) -> np.ndarray:
        """Derivative from a precomputed ``rfftn`` of the field."""
        alpha = self._check_order(alpha)
        if alpha.order == 0:
            return sfft.irfftn(fhat, s=self.shape)
        return sfft.irfftn(fhat * _multiplier(self, alpha.components), s=self.shape)

    def _check_order(self, alpha) -> MultiIndex:
        alpha = as_multi_index(alpha)
        if alpha.d != self.d:
            raise DimensionError(f"multi-index {alpha} has wrong length for d={self.d}")
        if alpha.order > self.N // 4:
            raise OrderError(f"|alpha|={alpha.order} exceeds N/4={self.N // 4}")
        return alpha

    # quadrature -----------------------------------------------------------------

    def integrate(self, g: np.ndarray) -> float:
        return float(self.cell_volume * np.sum(g))

    def weighted_norm(self, f: np.ndarray, kind: str, s: float = 0.0) -> float:
        """Weighted L1 or L2 norm with weight (1 + |v|^2)^(s/2).

        For ``kind="L2s"`` the weight multiplies the squared integrand.
        """
        if s < 0:
            raise ValueError(f"weight exponent must be >= 0, got {s}")
        if kind == "L1s":
            if np.any(f < 0):
                warnings.warn("L1s norm of a field with negative values", RuntimeWarning, stacklevel=2)
            return self.integrate(f * self.weight(s))
        if kind == "L2s":
            return math.sqrt(max(self.integrate(f * f * self.weight(s)), 0.0))
        raise ValueError(f"unknown norm kind {kind!r}; expected 'L1s' or 'L2s'")

    def moments(self, f: np.ndarray) -> Moments:
        v = self.coords
        dv = self.cell_volume
        mass = dv * float(np.sum(f))
        vf = (v * f).reshape(self.d, -1)
        momentum = dv * vf.sum(axis=1)
        second = dv * (vf @ v.reshape(self.d, -1).T)
        energy = 0.5 * float(np.trace(second))
        return Moments(mass, momentum, energy, second)

    def entropy(self, f: np.ndarray, floor: float = 1e-30) -> float:
        """Quadrature of f log f over cells with f > floor."""
        if floor <= 0:
            raise ValueError("entropy floor must be positive")
        pos = f > floor
        return self.cell_volume * float(np.sum(f[pos] * np.log(f[pos])))

    def mass_outside(self, f: np.ndarray, radius: float) -> float:
        return self.cell_volume * float(np.sum(f[self.speed_sq > radius * radius]))


@functools.lru_cache(maxsize=256)
def _multiplier(grid: VelocityGrid, orders: tuple[int, ...]) -> np.ndarray:
    """Broadcast product of per-axis derivative symbols in ``rfftn`` layout."""
    d, N = grid.d, grid.N
    out = np.ones((1,) * d, dtype=complex)
    for ax, n in enumerate(orders):
        if n == 0:
            continue
        if ax == d - 1:
            xi = np.arange(N // 2 + 1, dtype=float)
        else:
            xi = np.fft.fftfreq(N, 1.0 / N)
        sym = (1j * 2 * math.pi * xi / grid.L) ** n
        if n % 2:
            sym[np.abs(xi) == N // 2] = 0.0
        shape = [1] * d
        shape[ax] = xi.size
        out = out * sym.reshape(shape)
    out.flags.writeable = False
    return out
