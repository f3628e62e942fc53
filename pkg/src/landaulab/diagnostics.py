"""Measurements along trajectories.

* conservation records (mass, momentum, energy, entropy, ellipticity);
* exhaustive derivative-norm tables and the Gevrey constant they imply;
* a Fourier-decay fit log S(r) = A - c r^(1/sigma) of shell maxima;
* the Leibniz decomposition of d/dt ||d^mu f||^2 checked against a finite
  difference in time;
* the (Q)_k functional: sup-in-time derivative norm plus the time-integrated
  weighted gradient norm.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import DataIntegrityError, FitDegenerateError, IndexRangeError, OrderError
from .grid import VelocityGrid
from .kernel import KernelParams, ellipticity_constant, get_assembler
from .multiindex import MultiIndex, as_multi_index, binomial, count_order, enumerate_indices
from .solver import SolverState


class IdentityAccuracyWarning(RuntimeWarning):
    """Time step too coarse for the central difference to resolve the derivative."""


# conservation -----------------------------------------------------------------


@dataclass(frozen=True)
class ConservationRecord:
    t: float
    M: float
    Ev: tuple[float, ...]
    E: float
    H: float
    min_f: float
    K_hat: float
    mass_outside_mask: float

    def as_row(self) -> list[float]:
        return [self.t, self.M, *self.Ev, self.E, self.H, self.min_f, self.K_hat, self.mass_outside_mask]

    @staticmethod
    def header(d: int) -> list[str]:
        return ["t", "M", *[f"Ev{i + 1}" for i in range(d)], "E", "H", "min_f", "K_hat", "mass_leak"]


def conservation_record(
    grid: VelocityGrid,
    state: SolverState,
    gamma: float,
    mask_radius: float | None = None,
    entropy_floor: float = 1e-30,
) -> ConservationRecord:
    f = state.f
    mom = grid.moments(f)
    radius = grid.L / 4 if mask_radius is None else mask_radius
    K = ellipticity_constant(grid, state.coeffs, gamma, radius)
    return ConservationRecord(
        t=state.t,
        M=mom.mass,
        Ev=tuple(float(x) for x in mom.momentum),
        E=mom.energy,
        H=grid.entropy(f, entropy_floor),
        min_f=float(np.min(f)),
        K_hat=K,
        mass_outside_mask=grid.mass_outside(f, radius),
    )


# derivative norms ---------------------------------------------------------------


@dataclass(frozen=True)
class DerivativeNormTable:
    """``entries[alpha] = (||d^alpha f||_L2, ||grad d^alpha f||_L2_gamma)`` for |alpha| <= m."""

    t: float
    m: int
    d: int
    gamma: float
    entries: dict[MultiIndex, tuple[float, float]] = field(repr=False)

    def of_order(self, k: int) -> dict[MultiIndex, tuple[float, float]]:
        return {a: v for a, v in self.entries.items() if a.order == k}

    @property
    def d_k(self) -> list[float]:
        """max_{|alpha|=k} ||d^alpha f||_L2 for k = 0..m."""
        return [max(v[0] for v in self.of_order(k).values()) for k in range(self.m + 1)]

    @property
    def grad_k(self) -> list[float]:
        """max_{|alpha|=k} ||grad d^alpha f||_L2_gamma for k = 0..m."""
        return [max(v[1] for v in self.of_order(k).values()) for k in range(self.m + 1)]


def _indices_up_to(d: int, m: int) -> list[MultiIndex]:
    return enumerate_indices(MultiIndex((m,) * d), 0, m)


def derivative_norm_table(grid: VelocityGrid, f: np.ndarray, m: int, gamma: float, t: float = 0.0) -> DerivativeNormTable:
    if m > grid.N // 8:
        raise OrderError(f"table order m={m} exceeds N/8={grid.N // 8}")
    d = grid.d
    alphas = _indices_up_to(d, m + 1)
    ders = grid.derivatives(f, alphas)
    w = grid.weight(gamma)
    sq = {a: grid.integrate(g * g) for a, g in ders.items()}
    sq_w = {a: grid.integrate(g * g * w) for a, g in ders.items() if a.order >= 1}
    entries = {}
    for a in alphas:
        if a.order > m:
            continue
        grad = sum(sq_w[a + MultiIndex.unit(d, i)] for i in range(d))
        entries[a] = (math.sqrt(max(sq[a], 0.0)), math.sqrt(max(grad, 0.0)))
    for k in range(m + 1):
        if sum(1 for a in entries if a.order == k) != count_order(d, k):
            raise DataIntegrityError(f"table incomplete at order {k}")
    return DerivativeNormTable(t, m, d, gamma, entries)


def gevrey_constant_witness(table: DerivativeNormTable | Sequence[float], sigma: float) -> float:
    """Smallest C with d_k <= C^(k+1) (k!)^sigma over the tabulated orders 1..m.

    Accepts a table or the list ``d_k`` (index k = order).
    """
    if not sigma >= 1:
        raise IndexRangeError(f"sigma must be >= 1, got {sigma}")
    dk = table.d_k if isinstance(table, DerivativeNormTable) else list(table)
    if len(dk) < 2:
        raise IndexRangeError("need tabulated orders 1..m with m >= 1")
    best = 0.0
    for k in range(1, len(dk)):
        if dk[k] <= 0:
            continue
        val = math.exp((math.log(dk[k]) - sigma * math.lgamma(k + 1)) / (k + 1))
        best = max(best, val)
    return best


# Fourier decay fit ----------------------------------------------------------------


@dataclass(frozen=True)
class GevreyFit:
    sigma_hat: float
    c_hat: float
    A: float
    residual: float
    window: tuple[float, float]
    n_shells: int
    C_hat: dict[float, float] = field(default_factory=dict)


def shell_maxima(grid: VelocityGrid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """S(r) = max over |xi| in [r, r+1) of |c_xi|, c_xi = DFT(f) / N^d.

    Returns integer shell radii and maxima; empty shells are dropped.
    """
    coef = np.abs(grid.fft(f)) / grid.N**grid.d
    r = np.sqrt(np.sum(grid.frequencies.astype(float) ** 2, axis=0))
    shell = np.floor(r + 1e-9).astype(int).ravel()
    S = np.full(shell.max() + 1, -1.0)
    np.maximum.at(S, shell, coef.ravel())
    radii = np.nonzero(S >= 0)[0]
    return radii.astype(float), S[radii]


def _rss_for_power(p: float, r: np.ndarray, y: np.ndarray):
    X = np.column_stack([np.ones_like(r), -(r**p)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    return float(res @ res), coef


def fit_gevrey_decay(
    r: Sequence[float],
    S: Sequence[float],
    window: tuple[float, float] | None = None,
    floor: float = 1e-14,
    power_bounds: tuple[float, float] = (0.1, 4.0),
) -> GevreyFit:
    """Least-squares fit of log S(r) = A - c r^(1/sigma).

    The exponent p = 1/sigma is found by a 1-D search (log-spaced scan, then
    bounded Brent, then a Gauss-Newton polish); A and c come from the linear
    subproblem at each p. Shells with S below ``floor`` times the largest
    value are discarded.
    """
    r = np.asarray(r, dtype=float)
    S = np.asarray(S, dtype=float)
    if S.size == 0 or not np.any(S > 0):
        raise FitDegenerateError("no positive shell maxima")
    keep = S > floor * np.max(S)
    if window is not None:
        keep &= (r >= window[0]) & (r <= window[1])
    keep &= r > 0
    r, S = r[keep], S[keep]
    if r.size < 4:
        raise FitDegenerateError(f"only {r.size} usable shells in window {window}")
    y = np.log(S)
    lo, hi = power_bounds
    scan = np.geomspace(lo, hi, 241)
    rss = np.array([_rss_for_power(p, r, y)[0] for p in scan])
    i = int(np.argmin(rss))
    a, b = scan[max(i - 1, 0)], scan[min(i + 1, scan.size - 1)]
    res = optimize.minimize_scalar(
        lambda p: _rss_for_power(p, r, y)[0], bounds=(a, b), method="bounded", options={"xatol": 1e-14}
    )
    p = float(res.x)
    _, (A, c) = _rss_for_power(p, r, y)

    def resid(theta):
        return theta[0] - theta[1] * r ** theta[2] - y

    # Gauss-Newton on (A, c, p), accepting only steps that lower the residual
    theta = np.array([A, c, p])
    cost = float(resid(theta) @ resid(theta))
    logr = np.log(r)
    for _ in range(30):
        rp = r ** theta[2]
        J = np.column_stack([np.ones_like(r), -rp, -theta[1] * rp * logr])
        step, *_ = np.linalg.lstsq(J, -resid(theta), rcond=None)
        trial = theta + step
        tc = float(resid(trial) @ resid(trial))
        if not (lo <= trial[2] <= hi) or not tc < cost:
            break
        theta, cost = trial, tc
    A, c, p = (float(v) for v in theta)
    rms = math.sqrt(float(np.mean(resid([A, c, p]) ** 2)))
    return GevreyFit(1.0 / p, float(c), float(A), rms, (float(r.min()), float(r.max())), int(r.size))


def gevrey_fit_fourier(
    grid: VelocityGrid,
    f: np.ndarray,
    window: tuple[float, float] | None = None,
    floor: float = 1e-14,
) -> GevreyFit:
    """Decay fit of the shell maxima of f's Fourier coefficients.

    The default window is r in [N/8, 3N/8].
    """
    if window is None:
        window = (grid.N / 8, 3 * grid.N / 8)
    r, S = shell_maxima(grid, f)
    return fit_gevrey_decay(r, S, window, floor)


# energy identity ------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyIdentityReport:
    mu: MultiIndex
    t: float
    dt: float
    lhs_fd: float
    terms: dict[str, float]
    I1: float
    I2: float
    K_hat: float
    grad_gamma_sq: float
    coercivity_violation: float
    scale: float
    mismatch: float
    fd_spread: float
    G_terms: list[float]
    C2_implied: float

    @property
    def rhs_total(self) -> float:
        return sum(self.terms.values())


def _fd_derivative(ts: Sequence[float], vals: Sequence[float]) -> tuple[float, float]:
    """Three-point derivative at the middle node and |forward - backward| difference."""
    t0, t1, t2 = ts
    g0, g1, g2 = vals
    h1, h2 = t1 - t0, t2 - t1
    deriv = -h2 / (h1 * (h1 + h2)) * g0 + (h2 - h1) / (h1 * h2) * g1 + h1 / (h2 * (h1 + h2)) * g2
    spread = abs((g2 - g1) / h2 - (g1 - g0) / h1)
    return deriv, spread


def energy_identity_check(
    grid: VelocityGrid,
    states: Sequence[SolverState],
    mu: MultiIndex | Sequence[int],
    params: KernelParams,
    sigma: float = 1.0,
    B: float = 4.0,
    mask_radius: float | None = None,
    spread_warn: float = 1e-2,
) -> EnergyIdentityReport:
    """Compare d/dt ||d^mu f||^2 (finite difference) with (I)+(II)+(III)+(IV).

    ``states`` are three consecutive states; the terms are evaluated at the
    middle one:

    (I)   = 2 sum_ij int abar_ij (d_ij d^mu f)(d^mu f)
    (II)  = 2 sum_ij sum_{|b|=1}        C(mu,b) int (d^b abar_ij)(d_ij d^(mu-b) f)(d^mu f)
    (III) = 2 sum_ij sum_{2<=|b|<=|mu|} C(mu,b) int (same integrand)
    (IV)  = -2 sum_{b<=mu} C(mu,b) int (d^(mu-b) cbar)(d^b f)(d^mu f)

    (I) is split by parts into (I)_1 = -2 int abar : (grad d^mu f)(grad d^mu f)
    and (I)_2 = -2 int bbar . (grad d^mu f) d^mu f; the coercivity check is
    (I)_1 + 2 K_hat ||grad d^mu f||^2_{L2_gamma} <= 0.
    """
    if len(states) != 3:
        raise ValueError("need exactly three consecutive states")
    mu = as_multi_index(mu)
    if mu.order > 4:
        raise OrderError("energy identity check limited to |mu| <= 4")
    d = grid.d
    gamma = params.gamma
    prev, mid, nxt = states
    asm = get_assembler(grid, params)

    norms = [grid.integrate(grid.derivative(s.f, mu) ** 2) for s in states]
    ts = [s.t for s in states]
    lhs, spread = _fd_derivative(ts, norms)

    f = mid.f
    n = mu.order
    units = [MultiIndex.unit(d, i) for i in range(d)]
    betas = enumerate_indices(mu, 0, n)
    need = set()
    for b in betas:
        need.add(b)
        for i in range(d):
            need.add(b + units[i])
            for j in range(d):
                need.add(b + units[i] + units[j])
    D = grid.derivatives(f, sorted(need, key=lambda a: a.components))
    Dmu = D[mu]
    dv = grid.cell_volume

    abar, bbar = mid.coeffs.abar, mid.coeffs.bbar
    term_I = 0.0
    for i in range(d):
        for j in range(d):
            term_I += 2 * dv * float(np.sum(abar[i, j] * D[mu + units[i] + units[j]] * Dmu))
    I1 = 0.0
    for i in range(d):
        for j in range(d):
            I1 -= 2 * dv * float(np.sum(abar[i, j] * D[mu + units[j]] * D[mu + units[i]]))
    I2 = 0.0
    for j in range(d):
        I2 -= 2 * dv * float(np.sum(bbar[j] * D[mu + units[j]] * Dmu))

    II = III = 0.0
    for b in betas:
        if b.order == 0:
            continue
        db = asm.derivative(f, b, parts="a").abar
        rest = mu - b
        acc = 0.0
        for i in range(d):
            for j in range(d):
                acc += float(np.sum(db[i, j] * D[rest + units[i] + units[j]] * Dmu))
        val = 2 * dv * binomial(mu, b) * acc
        if b.order == 1:
            II += val
        else:
            III += val

    IV = 0.0
    for b in betas:
        dc = asm.derivative(f, mu - b, parts="c").cbar
        IV -= 2 * dv * binomial(mu, b) * float(np.sum(dc * D[b] * Dmu))

    terms = {"I": term_I, "II": II, "III": III, "IV": IV}
    radius = grid.L / 4 if mask_radius is None else mask_radius
    K = ellipticity_constant(grid, mid.coeffs, gamma, radius)
    w = grid.weight(gamma)
    grad_sq = sum(grid.integrate(D[mu + u] ** 2 * w) for u in units)
    violation = I1 + 2 * K * grad_sq
    scale = sum(abs(v) for v in terms.values())
    total = sum(terms.values())
    mismatch = abs(lhs - total) / scale if scale > 0 else abs(lhs - total)
    spread_rel = spread * (ts[2] - ts[0]) / scale if scale > 0 else 0.0
    if spread_rel > spread_warn:
        warnings.warn(
            f"finite-difference spread {spread_rel:.2e} of scale; central difference may be dt-limited",
            IdentityAccuracyWarning,
            stacklevel=2,
        )

    # bookkeeping for the inequality: [G]_k and the implied constant C2
    def dmax(k: int, weighted: bool = False, grad: bool = False) -> float:
        best = 0.0
        for nu in enumerate_indices(mu, k, k):
            if grad:
                val = math.sqrt(sum(grid.integrate(D[nu + u] ** 2 * w) for u in units))
            elif weighted:
                val = math.sqrt(grid.integrate(D[nu] ** 2 * w))
            else:
                val = math.sqrt(grid.integrate(D[nu] ** 2))
            best = max(best, val)
        return best

    G = [dmax(k) + B**k * math.factorial(k) ** sigma for k in range(n + 1)]
    C2 = float("nan")
    if n >= 2:
        g1 = dmax(n - 1, grad=True)
        R = n * n * g1 * g1
        for b in betas:
            cb = binomial(mu, b)
            if b.order >= 2:
                R += cb * dmax(n - b.order + 1, grad=True) * g1 * G[b.order - 2]
            R += cb * math.sqrt(grid.integrate(D[b] ** 2 * w)) * g1 * G[n - b.order]
        if R > 0:
            C2 = max(lhs + 2 * K * grad_sq, 0.0) / R

    return EnergyIdentityReport(
        mu=mu,
        t=mid.t,
        dt=0.5 * (ts[2] - ts[0]),
        lhs_fd=lhs,
        terms=terms,
        I1=I1,
        I2=I2,
        K_hat=K,
        grad_gamma_sq=grad_sq,
        coercivity_violation=violation,
        scale=scale,
        mismatch=mismatch,
        fd_spread=spread_rel,
        G_terms=G,
        C2_implied=C2,
    )


# (Q)_k ------------------------------------------------------------------------------


def qk_functional(times: Sequence[float], tables: Sequence[DerivativeNormTable], k: int) -> float:
    """max_alpha sup_t ||d^alpha f|| + max_alpha' (int_0^T ||grad d^alpha' f||^2_gamma dt)^(1/2).

    The sup is the max over output times; the time integral is the trapezoid
    rule on the output times.
    """
    if not tables or len(tables) != len(times):
        raise DataIntegrityError("need one derivative table per output time")
    if any(k > tab.m for tab in tables):
        raise OrderError(f"k={k} exceeds tabulated order")
    alphas = list(tables[0].of_order(k))
    sup_term = max(max(tab.entries[a][0] for tab in tables) for a in alphas)
    ts = np.asarray(times, dtype=float)
    int_term = 0.0
    for a in alphas:
        g2 = np.array([tab.entries[a][1] ** 2 for tab in tables])
        integral = float(np.trapezoid(g2, ts)) if ts.size > 1 else 0.0
        int_term = max(int_term, math.sqrt(max(integral, 0.0)))
    return sup_term + int_term


def qk_witness(Q: Sequence[float], sigma: float) -> list[float]:
    """w_k = Q_k^(1/k) / ((k-1)!)^(sigma/k) for k = 1..len(Q); ``Q[k-1]`` is Q_k."""
    out = []
    for k, q in enumerate(Q, start=1):
        if q <= 0:
            out.append(0.0)
            continue
        out.append(math.exp((math.log(q) - sigma * math.lgamma(k)) / k))
    return out
