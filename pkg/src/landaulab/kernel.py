"""Landau kernel and the convolved coefficients abar = a*f, bbar = b*f, cbar = c*f.

Pointwise, for w in R^d,

    a_ij(w) = (delta_ij - w_i w_j / |w|^2) |w|^(gamma+2)
    b_i(w)  = sum_j d_j a_ij = (1 - d) |w|^gamma w_i
    c(w)    = sum_i d_i b_i  = (1 - d)(d + gamma) |w|^gamma

The convolutions are linear (not circular): the kernel is sampled on the
grid of pairwise differences, zeroed for |w| > R_trunc, and applied to the
zero-padded density with real FFTs. The padded length per axis is the
smallest fast FFT size >= N + R_trunc/h (at most 2N), which is enough to keep
the truncated kernel from wrapping around.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, DataIntegrityError, DimensionError, OrderError
from .grid import VelocityGrid
from .multiindex import MultiIndex, as_multi_index
from .symeig import sym_eigvalsh


@dataclass(frozen=True)
class KernelParams:
    """Kernel exponent ``gamma`` in [0, 1], dimension and truncation radius.

    ``R_trunc=None`` means L/2 of whatever grid the kernel is paired with.
    """

    gamma: float
    d: int = 3
    R_trunc: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}", key="kernel.gamma")
        if self.d not in (2, 3):
            raise DimensionError(f"d must be 2 or 3, got {self.d}")
        if self.R_trunc is not None and not self.R_trunc > 0:
            raise ConfigError("R_trunc must be positive", key="kernel.R_trunc")

    def truncation(self, grid: VelocityGrid) -> float:
        R = grid.L / 2 if self.R_trunc is None else float(self.R_trunc)
        if grid.d != self.d:
            raise ConfigError(f"kernel d={self.d} does not match grid d={grid.d}", key="kernel.d")
        if R < grid.L / 2 * (1 - 1e-12):
            raise ConfigError(f"R_trunc={R} is below L/2={grid.L / 2}", key="kernel.R_trunc")
        return R


def kernel_eval(v: np.ndarray, gamma: float):
    """Evaluate (a, b, c) at points ``v`` of shape ``(..., d)``.

    Returns arrays of shape ``(..., d, d)``, ``(..., d)`` and ``(...)``. The
    removable singularity at 0 is filled with a = 0, b = 0 and c = 0 for
    gamma > 0, c = (1 - d) d for gamma = 0 (|v|^0 := 1).
    """
    v = np.asarray(v, dtype=float)
    d = v.shape[-1]
    r2 = np.sum(v * v, axis=-1)
    r = np.sqrt(r2)
    zero = r2 == 0
    if gamma == 0:
        rg = np.ones_like(r)
    else:
        rg = np.where(zero, 0.0, r**gamma)
    eye = np.eye(d)
    # (delta_ij |v|^2 - v_i v_j) |v|^gamma, which is a(0) = 0 automatically
    a = (eye * r2[..., None, None] - v[..., :, None] * v[..., None, :]) * rg[..., None, None]
    b = (1 - d) * rg[..., None] * v
    c = (1 - d) * (d + gamma) * rg
    return a, b, c


@dataclass(frozen=True)
class CoefficientFields:
    """abar of shape (d, d, N, ..), bbar (d, N, ..), cbar (N, ..); parts may be None."""

    abar: np.ndarray | None
    bbar: np.ndarray | None
    cbar: np.ndarray | None

    @property
    def matrices(self) -> np.ndarray:
        """abar rearranged to ``(N, ..., d, d)``."""
        return np.moveaxis(self.abar, (0, 1), (-2, -1))

    def scaled(self, factor: float) -> CoefficientFields:
        return CoefficientFields(
            None if self.abar is None else factor * self.abar,
            None if self.bbar is None else factor * self.bbar,
            None if self.cbar is None else factor * self.cbar,
        )

    @classmethod
    def zeros(cls, grid: VelocityGrid) -> CoefficientFields:
        d, shape = grid.d, grid.shape
        return cls(np.zeros((d, d) + shape), np.zeros((d,) + shape), np.zeros(shape))


class CoefficientAssembler:
    """Precomputed kernel spectra for one (grid, kernel) pairing.

    Instances are immutable after construction and safe to share between
    threads.
    """

    def __init__(self, grid: VelocityGrid, params: KernelParams):
        self.grid = grid
        self.params = params
        self.R_trunc = params.truncation(grid)
        d, N, h = grid.d, grid.N, grid.h
        # kernel support spans at most r cells per axis; a circular transform of
        # length P >= N + r then reproduces the linear convolution on the grid
        r = min(int(math.floor(self.R_trunc / h * (1 + 1e-12))), N)
        self.n_pad = min(2 * N, sfft.next_fast_len(N + r, real=True))
        P = self.n_pad
        self._pad = (P,) * d
        self._axes = tuple(range(-d, 0))
        offsets = np.fft.fftfreq(P, 1.0 / P) * h
        w = np.stack(np.meshgrid(*([offsets] * d), indexing="ij"), axis=-1)
        a, b, c = kernel_eval(w, params.gamma)
        outside = np.sum(w * w, axis=-1) > self.R_trunc**2
        a[outside] = 0.0
        b[outside] = 0.0
        c[outside] = 0.0
        self.pairs = [(i, j) for i in range(d) for j in range(i, d)]
        comps = [a[..., i, j] for i, j in self.pairs] + [b[..., i] for i in range(d)] + [c]
        self._spectra = sfft.rfftn(np.stack(comps), s=self._pad, axes=self._axes)
        self._spectra.flags.writeable = False
        na = len(self.pairs)
        self._slices = {"a": slice(0, na), "b": slice(na, na + d), "c": slice(na + d, na + d + 1)}

    def _forward(self, g: np.ndarray) -> np.ndarray:
        # zero padding folded into the 1-D passes; same result as rfftn(g, s=pad)
        n2 = self.n_pad
        ghat = sfft.rfft(g, n=n2, axis=-1)
        for ax in range(self.grid.d - 2, -1, -1):
            ghat = sfft.fft(ghat, n=n2, axis=ax)
        return ghat

    def _inverse_block(self, spec: np.ndarray) -> np.ndarray:
        # only the first N outputs per axis are needed, so slice after each pass
        N, d = self.grid.N, self.grid.d
        out = spec
        for ax in range(d - 1):
            out = sfft.ifft(out, axis=ax)[(slice(None),) * ax + (slice(0, N),)]
        out = sfft.irfft(out, n=self.n_pad, axis=d - 1)[(slice(None),) * (d - 1) + (slice(0, N),)]
        return out * self.grid.cell_volume

    def _convolve(self, g: np.ndarray, parts: str) -> dict[str, np.ndarray]:
        ghat = self._forward(g)
        out = {}
        for p in parts:
            s = self._slices[p]
            out[p] = [self._inverse_block(self._spectra[k] * ghat) for k in range(s.start, s.stop)]
        return out

    def _pack(self, raw: dict[str, np.ndarray]) -> CoefficientFields:
        d = self.grid.d
        abar = bbar = cbar = None
        if "a" in raw:
            abar = np.empty((d, d) + self.grid.shape)
            for k, (i, j) in enumerate(self.pairs):
                abar[i, j] = raw["a"][k]
                abar[j, i] = raw["a"][k]
        if "b" in raw:
            bbar = np.stack(raw["b"])
        if "c" in raw:
            cbar = raw["c"][0]
        return CoefficientFields(abar, bbar, cbar)

    def assemble(self, f: np.ndarray, parts: str = "abc") -> CoefficientFields:
        """Convolve the truncated kernel with f; ``parts`` picks among a, b, c."""
        f = self.grid.check_field(f)
        return self._pack(self._convolve(f, parts))

    def derivative(self, f: np.ndarray, beta: MultiIndex | Sequence[int], parts: str = "abc") -> CoefficientFields:
        """d^beta of the coefficients, computed as kernel * (d^beta f).

        Differentiating the assembled fields spectrally would see the kink
        of their periodic extension at the box faces; moving the derivative
        onto the rapidly decaying density avoids that.
        """
        beta = as_multi_index(beta)
        f = self.grid.check_field(f)
        g = f if beta.order == 0 else self.grid.derivative(f, beta)
        return self._pack(self._convolve(g, parts))


@functools.lru_cache(maxsize=32)
def get_assembler(grid: VelocityGrid, params: KernelParams) -> CoefficientAssembler:
    return CoefficientAssembler(grid, params)


def assemble_coefficients(grid: VelocityGrid, f: np.ndarray, params: KernelParams, parts: str = "abc") -> CoefficientFields:
    return get_assembler(grid, params).assemble(f, parts)


def _resolve_mask(grid: VelocityGrid, mask) -> np.ndarray:
    if mask is None or isinstance(mask, (int, float)):
        return grid.mask(mask)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != grid.shape:
        raise DimensionError("mask shape does not match grid")
    return mask


def check_symmetric(coeffs: CoefficientFields, rtol: float = 1e-12) -> None:
    A = coeffs.abar
    scale = max(float(np.max(np.abs(A))), 1e-300)
    asym = float(np.max(np.abs(A - np.swapaxes(A, 0, 1))))
    if asym > rtol * scale:
        raise DataIntegrityError(f"abar not symmetric: max asymmetry {asym:.3e} (scale {scale:.3e})")


def eigenvalue_fields(coeffs: CoefficientFields) -> np.ndarray:
    """Ascending eigenvalues of abar, shape ``(N, ..., d)``."""
    return sym_eigvalsh(coeffs.matrices)


def ellipticity_constant(grid: VelocityGrid, coeffs: CoefficientFields, gamma: float, mask=None) -> float:
    """min over the mask of lambda_min(abar(v)) / (1 + |v|^2)^(gamma/2).

    ``mask`` is a radius (default L/4) or a boolean array.
    """
    check_symmetric(coeffs)
    m = _resolve_mask(grid, mask)
    lam = eigenvalue_fields(coeffs)[..., 0]
    ratio = lam[m] / grid.weight(gamma)[m]
    return float(np.min(ratio))


def ellipticity_argmin(grid: VelocityGrid, coeffs: CoefficientFields, gamma: float, mask=None) -> tuple[int, ...]:
    """Grid index attaining :func:`ellipticity_constant`."""
    m = _resolve_mask(grid, mask)
    lam = eigenvalue_fields(coeffs)[..., 0] / grid.weight(gamma)
    lam = np.where(m, lam, np.inf)
    return tuple(int(i) for i in np.unravel_index(np.argmin(lam), lam.shape))


def coefficient_growth_ratio(
    grid: VelocityGrid,
    f: np.ndarray,
    params: KernelParams,
    beta: MultiIndex | Sequence[int],
    component: str = "a11",
    mask=None,
) -> float:
    """max over the mask of |d^beta X(v)| / (1 + |v|^2)^(gamma/2).

    ``X`` is abar_11 (``component="a11"``) or cbar (``"c"``).
    """
    beta = as_multi_index(beta)
    if beta.order > grid.N // 8:
        raise OrderError(f"|beta|={beta.order} exceeds N/8={grid.N // 8}")
    asm = get_assembler(grid, params)
    if component == "a11":
        field = asm.derivative(f, beta, parts="a").abar[0, 0]
    elif component == "c":
        field = asm.derivative(f, beta, parts="c").cbar
    else:
        raise ValueError(f"component must be 'a11' or 'c', got {component!r}")
    m = _resolve_mask(grid, mask)
    return float(np.max(np.abs(field[m]) / grid.weight(params.gamma)[m]))


def direct_coefficients_at(grid: VelocityGrid, f: np.ndarray, gamma: float, v: np.ndarray, R_trunc: float = math.inf):
    """Brute-force quadrature of (abar, bbar, cbar) at a single point ``v``.

    Sums a(v - v*) f(v*) h^d over every grid point; used as an oracle for the
    FFT assembly.
    """
    pts = np.moveaxis(grid.coords, 0, -1).reshape(-1, grid.d)
    w = np.asarray(v, dtype=float)[None, :] - pts
    a, b, c = kernel_eval(w, gamma)
    keep = (np.sum(w * w, axis=-1) <= R_trunc**2) * f.reshape(-1) * grid.cell_volume
    return (
        np.einsum("kij,k->ij", a, keep),
        np.einsum("ki,k->i", b, keep),
        float(np.dot(c, keep)),
    )
