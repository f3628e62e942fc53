import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landaulab.errors import DataIntegrityError, DimensionError, OrderError
from landaulab.grid import VelocityGrid


@pytest.fixture(scope="module")
def g3():
    return VelocityGrid(3, 64, 16.0)


def std_normal(g):
    return np.exp(-g.speed_sq / 2) / (2 * math.pi) ** (g.d / 2)


@pytest.mark.parametrize("d, N, L", [(1, 16, 1.0), (4, 16, 1.0), (2, 12, 1.0), (2, 4, 1.0), (2, 16, 0.0)])
def test_grid_validation(d, N, L):
    with pytest.raises(DimensionError):
        VelocityGrid(d, N, L)


def test_coordinates():
    g = VelocityGrid(2, 8, 4.0)
    assert g.h == 0.5
    assert np.allclose(g.axis, -2.0 + 0.5 * np.arange(8))
    assert g.coords.shape == (2, 8, 8)
    assert np.all(g.coords[0][:, 0] == g.axis)
    with pytest.raises(ValueError):
        g.coords[0, 0, 0] = 1.0


def test_check_field():
    g = VelocityGrid(2, 8, 4.0)
    with pytest.raises(DimensionError):
        g.check_field(np.zeros((8, 4)))
    bad = np.zeros((8, 8))
    bad[1, 1] = np.nan
    with pytest.raises(DataIntegrityError):
        g.check_field(bad)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_fft_round_trip_and_hermitian(seed):
    g = VelocityGrid(2, 16, 3.0)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    fh = g.fft(f)
    back = g.ifft(fh)
    assert np.max(np.abs(back.real - f)) <= 10 * np.finfo(float).eps * g.N**g.d * np.max(np.abs(f))
    flipped = np.conj(np.roll(np.flip(fh, axis=(0, 1)), 1, axis=(0, 1)))
    assert np.allclose(fh, flipped, rtol=0, atol=1e-12 * np.max(np.abs(fh)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_parseval(seed):
    g = VelocityGrid(3, 8, 2.5)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    lhs = g.cell_volume * np.sum(f * f)
    rhs = g.L**g.d / g.N ** (2 * g.d) * np.sum(np.abs(g.fft(f)) ** 2)
    assert abs(lhs - rhs) <= 1e-12 * lhs


def test_derivative_of_eigenfunction():
    g = VelocityGrid(3, 16, 5.0)
    k = 2 * math.pi / g.L
    f = np.sin(k * g.coords[0])
    assert np.max(np.abs(g.derivative(f, (1, 0, 0)) - k * np.cos(k * g.coords[0]))) < 1e-13
    assert np.array_equal(g.derivative(f, (0, 0, 0)), f)


def test_second_derivative_of_gaussian(g3):
    f = np.exp(-g3.speed_sq / 2)
    exact = (g3.coords[0] ** 2 - 1) * f
    assert np.max(np.abs(g3.derivative(f, (2, 0, 0)) - exact)) < 1e-8


def test_derivative_commutes():
    g = VelocityGrid(2, 32, 8.0)
    rng = np.random.default_rng(3)
    f = np.exp(-g.speed_sq) * (1 + rng.standard_normal() * g.coords[0])
    two = g.derivative(g.derivative(f, (1, 0)), (0, 1))
    one = g.derivative(f, (1, 1))
    assert np.max(np.abs(two - one)) <= 1e-12 * np.max(np.abs(one))


def test_derivative_order_limit():
    g = VelocityGrid(2, 16, 1.0)
    with pytest.raises(OrderError):
        g.derivative(np.zeros(g.shape), (5, 0))
    with pytest.raises(DimensionError):
        g.derivative(np.zeros(g.shape), (1, 0, 0))


def test_batched_derivatives_match_single():
    g = VelocityGrid(2, 32, 8.0)
    f = np.exp(-((g.coords[0] - 0.3) ** 2) - 2 * g.coords[1] ** 2)
    many = g.derivatives(f, [(0, 0), (1, 0), (2, 1)])
    for a, val in many.items():
        assert np.array_equal(val, g.derivative(f, a))


def test_norm_examples(g3):
    n = std_normal(g3)
    assert abs(g3.weighted_norm(n, "L1s", 0) - 1.0) < 1e-10
    e = np.exp(-g3.speed_sq / 2)
    assert abs(g3.weighted_norm(e, "L2s", 0) - math.pi**0.75) < 1e-10
    z = np.zeros(g3.shape)
    for kind in ("L1s", "L2s"):
        for s in (0.0, 1.0, 3.0):
            assert g3.weighted_norm(z, kind, s) == 0.0


def test_norm_properties():
    g = VelocityGrid(2, 32, 8.0)
    f = np.exp(-g.speed_sq) * np.cos(g.coords[0])
    assert g.weighted_norm(f, "L2s", 0) == pytest.approx(math.sqrt(g.integrate(f * f)), rel=1e-15)
    vals = [g.weighted_norm(f, "L2s", s) for s in (0, 0.5, 1, 2, 4)]
    assert vals == sorted(vals)
    with pytest.warns(RuntimeWarning):
        g.weighted_norm(f, "L1s", 0)
    with pytest.raises(ValueError):
        g.weighted_norm(f, "H1", 0)


def test_moments_examples(g3):
    m = g3.moments(std_normal(g3))
    assert abs(m.mass - 1) < 1e-8
    assert np.max(np.abs(m.momentum)) < 1e-8
    assert abs(m.energy - 1.5) < 1e-8
    assert np.max(np.abs(m.second - np.eye(3))) < 1e-8
    shifted = np.exp(-((g3.coords[0] - 1) ** 2 + g3.coords[1] ** 2 + g3.coords[2] ** 2) / 2) / (2 * math.pi) ** 1.5
    m = g3.moments(shifted)
    assert np.allclose(m.momentum, [1, 0, 0], atol=1e-8)
    assert abs(m.energy - 2.0) < 1e-8
    z = g3.moments(np.zeros(g3.shape))
    assert z.mass == 0 and z.energy == 0 and not np.any(z.momentum)


def test_moment_quadrature_converges():
    errs = []
    for N in (8, 16, 32):
        g = VelocityGrid(2, N, 20.0)
        errs.append(abs(g.moments(std_normal(g)).energy - 1.0))
    assert errs[1] <= errs[0] / 4 or errs[1] < 1e-14
    assert errs[2] <= errs[1] / 4 or errs[2] < 1e-14


def test_entropy_examples(g3):
    exact = -1.5 * math.log(2 * math.pi) - 1.5
    assert abs(g3.entropy(std_normal(g3), 1e-30) - exact) < 1e-4
    assert g3.entropy(np.zeros(g3.shape)) == 0.0
    g = VelocityGrid(2, 16, 3.0)
    c = 1 / g.L**2
    assert g.entropy(np.full(g.shape, c)) == pytest.approx(math.log(c), rel=1e-14)


def test_mask_default_radius():
    g = VelocityGrid(2, 16, 8.0)
    assert np.array_equal(g.mask(), g.speed_sq <= 4.0)
