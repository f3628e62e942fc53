"""Closed-form eigenvalues of stacks of symmetric 2x2 and 3x3 matrices."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def sym_eigvalsh(A: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of symmetric matrices stacked along leading axes.

    ``A`` has shape ``(..., d, d)`` with d in {2, 3}; only the upper triangle
    is read. The 3x3 branch uses the trigonometric (Smith) formula with the
    argument of arccos clipped to [-1, 1]; exactly diagonal matrices are
    handled separately.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[-1]
    if A.shape[-2] != d:
        raise DimensionError(f"expected square matrices, got {A.shape[-2:]}")
    if d == 2:
        return _eig2(A)
    if d == 3:
        return _eig3(A)
    raise DimensionError(f"closed-form eigenvalues only for d in (2, 3), got {d}")


def _eig2(A):
    a, b, c = A[..., 0, 0], A[..., 0, 1], A[..., 1, 1]
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    return np.stack([mean - rad, mean + rad], axis=-1)


def _eig3(A):
    a00, a11, a22 = A[..., 0, 0], A[..., 1, 1], A[..., 2, 2]
    a01, a02, a12 = A[..., 0, 1], A[..., 0, 2], A[..., 1, 2]
    p1 = a01**2 + a02**2 + a12**2
    q = (a00 + a11 + a22) / 3.0
    b00, b11, b22 = a00 - q, a11 - q, a22 - q
    p2 = b00**2 + b11**2 + b22**2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    safe_p = np.where(p > 0, p, 1.0)
    # det(B) / 2 with B = (A - qI) / p
    det = (
        b00 * (b11 * b22 - a12 * a12)
        - a01 * (a01 * b22 - a12 * a02)
        + a02 * (a01 * a12 - b11 * a02)
    )
    r = np.clip(det / (2.0 * safe_p**3), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    e_hi = q + 2.0 * p * np.cos(phi)
    e_lo = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e_mid = 3.0 * q - e_hi - e_lo
    out = np.stack([e_lo, e_mid, e_hi], axis=-1)
    diag = p1 == 0
    if np.any(diag):
        out[diag] = np.sort(np.stack([a00, a11, a22], axis=-1)[diag], axis=-1)
    return out
