"""Multi-index combinatorics.

Multi-indices carry derivative orders. Everything here is exact integer or
rational arithmetic; floats appear only in the returned sums. Python integers
do not overflow, so factorials and binomials are always exact; conversion of
an out-of-range integer to float raises ``OverflowError``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import DimensionError, IndexRangeError

SUPPORTED_DIMS = (2, 3)


def _check_dim(d: int) -> None:
    if d not in SUPPORTED_DIMS:
        raise DimensionError(f"dimension must be 2 or 3, got {d}")


@dataclass(frozen=True)
class MultiIndex:
    """Tuple of non-negative derivative orders, one per velocity axis.

    ``a <= b`` is the componentwise partial order; ``<`` and ``>`` are not
    defined since the order is not total.
    """

    components: tuple[int, ...]

    def __post_init__(self):
        comps = tuple(int(c) for c in self.components)
        if any(c < 0 for c in comps):
            raise IndexRangeError(f"negative component in {comps}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def _trusted(cls, comps: tuple[int, ...]) -> MultiIndex:
        # internal constructor for tuples already known to be valid
        obj = object.__new__(cls)
        object.__setattr__(obj, "components", comps)
        return obj

    @classmethod
    def of(cls, *components: int) -> MultiIndex:
        return cls(tuple(components))

    @classmethod
    def zero(cls, d: int) -> MultiIndex:
        return cls((0,) * d)

    @classmethod
    def unit(cls, d: int, axis: int) -> MultiIndex:
        comps = [0] * d
        comps[axis] = 1
        return cls(tuple(comps))

    @classmethod
    def parse(cls, text: str) -> MultiIndex:
        """Parse ``"1,0,2"`` (or ``"(1, 0, 2)"``) into a multi-index."""
        stripped = text.strip().strip("()[]")
        try:
            return cls(tuple(int(p) for p in stripped.split(",") if p.strip()))
        except ValueError as exc:
            raise IndexRangeError(f"cannot parse multi-index {text!r}") from exc

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def order(self) -> int:
        return sum(self.components)

    def factorial(self) -> int:
        return math.prod(math.factorial(c) for c in self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[int]:
        return iter(self.components)

    def __getitem__(self, i: int) -> int:
        return self.components[i]

    def _same_dim(self, other: MultiIndex) -> None:
        if other.d != self.d:
            raise DimensionError(f"dimension mismatch: {self} vs {other}")

    def __le__(self, other: MultiIndex) -> bool:
        self._same_dim(other)
        return all(a <= b for a, b in zip(self.components, other.components))

    def __ge__(self, other: MultiIndex) -> bool:
        return other <= self

    def __add__(self, other: MultiIndex) -> MultiIndex:
        self._same_dim(other)
        return MultiIndex(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: MultiIndex) -> MultiIndex:
        self._same_dim(other)
        if not other <= self:
            raise IndexRangeError(f"{other} is not <= {self}")
        return MultiIndex(tuple(a - b for a, b in zip(self, other)))

    def __str__(self) -> str:
        return ",".join(str(c) for c in self.components)


def as_multi_index(alpha: MultiIndex | Sequence[int]) -> MultiIndex:
    return alpha if isinstance(alpha, MultiIndex) else MultiIndex(tuple(alpha))


def enumerate_indices(mu: MultiIndex | Sequence[int], lo: int, hi: int) -> list[MultiIndex]:
    """All beta <= mu with lo <= |beta| <= hi, in lexicographic order."""
    mu = as_multi_index(mu)
    if not 0 <= lo <= hi <= mu.order:
        raise IndexRangeError(f"need 0 <= lo <= hi <= |mu|, got lo={lo}, hi={hi}, |mu|={mu.order}")
    ranges = [range(c + 1) for c in mu]
    return [MultiIndex._trusted(b) for b in itertools.product(*ranges) if lo <= sum(b) <= hi]


def indices_of_order(d: int, order: int) -> list[MultiIndex]:
    """Every multi-index of the given order in d variables, lexicographic."""
    _check_dim(d)
    if order < 0:
        raise IndexRangeError(f"order must be >= 0, got {order}")
    out = [MultiIndex(c) for c in itertools.product(range(order + 1), repeat=d) if sum(c) == order]
    return out


def count_order(d: int, order: int) -> int:
    """Number of multi-indices of the given order in d variables."""
    _check_dim(d)
    if order < 0:
        raise IndexRangeError(f"order must be >= 0, got {order}")
    return math.comb(order + d - 1, d - 1)


def binomial(mu: MultiIndex | Sequence[int], beta: MultiIndex | Sequence[int]) -> int:
    """Multi-index binomial coefficient mu! / ((mu - beta)! beta!)."""
    mu, beta = as_multi_index(mu), as_multi_index(beta)
    if not beta <= mu:
        raise IndexRangeError(f"{beta} is not <= {mu}")
    return math.prod(math.comb(m, b) for m, b in zip(mu, beta))


def sub_index_counts(mu: MultiIndex | Sequence[int]) -> list[int]:
    """``counts[l]`` = #{beta <= mu : |beta| = l}.

    Coefficients of prod_i (1 + x + ... + x^mu_i); independent of
    :func:`enumerate_indices`.
    """
    mu = as_multi_index(mu)
    poly = [1]
    for m in mu:
        new = [0] * (len(poly) + m)
        for i, coef in enumerate(poly):
            for j in range(m + 1):
                new[i + j] += coef
        poly = new
    return poly


def inverse_order_sums(mu: MultiIndex | Sequence[int], exact: bool = False):
    """The two sub-index sums bounded by C_sigma |mu|^(sigma-1).

    ``sum1`` runs over beta <= mu with 1 <= |beta| <= |mu| of |beta|^-3 and
    ``sum2`` over 1 <= |beta| <= |mu| - 1 of 1 / (|beta|^2 (|mu| - |beta|)).
    Both are accumulated as fractions by direct enumeration; with
    ``exact=True`` the fractions are returned instead of floats.
    """
    mu = as_multi_index(mu)
    n = mu.order
    if n == 0:
        raise IndexRangeError("sums need |mu| >= 1")
    # integer numerators over the common denominator lcm(1..n)^3 keep the
    # enumeration exact without per-term Fraction arithmetic
    D = math.lcm(*range(1, n + 1)) ** 3
    n1 = n2 = 0
    for beta in enumerate_indices(mu, 1, n):
        b = beta.order
        n1 += D // (b * b * b)
        if b <= n - 1:
            n2 += D // (b * b * (n - b))
    s1, s2 = Fraction(n1, D), Fraction(n2, D)
    if exact:
        return s1, s2
    return float(s1), float(s2)


def grouped_order_sums(mu: MultiIndex | Sequence[int], exact: bool = False):
    """Same sums as :func:`inverse_order_sums`, grouped by |beta| = l."""
    mu = as_multi_index(mu)
    n = mu.order
    if n == 0:
        raise IndexRangeError("sums need |mu| >= 1")
    counts = sub_index_counts(mu)
    D = math.lcm(*range(1, n + 1)) ** 3
    s1 = Fraction(sum(counts[l] * (D // l**3) for l in range(1, n + 1)), D)
    s2 = Fraction(sum(counts[l] * (D // (l * l * (n - l))) for l in range(1, n)), D)
    if exact:
        return s1, s2
    return float(s1), float(s2)


def representatives(d: int, max_order: int, min_order: int = 1) -> Iterator[MultiIndex]:
    """One multi-index per permutation class, |mu| in [min_order, max_order].

    The sums and binomials here are symmetric under permuting components,
    so non-increasing tuples cover every case.
    """
    _check_dim(d)
    for n in range(min_order, max_order + 1):
        for comps in _partitions(n, d, n):
            yield MultiIndex(comps)


def _partitions(n: int, parts: int, cap: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        if n <= cap:
            yield (n,)
        return
    for first in range(min(n, cap), -1, -1):
        for rest in _partitions(n - first, parts - 1, first):
            yield (first,) + rest


def bound_ratios(sigma: float, max_order: int, d: int = 3):
    """Yield ``(mu, sum1 / |mu|^(sigma-1), sum2 / |mu|^(sigma-1))``."""
    for mu in representatives(d, max_order):
        s1, s2 = grouped_order_sums(mu)
        scale = mu.order ** (sigma - 1.0)
        yield mu, s1 / scale, s2 / scale


def fit_bound_constant(sigma: float, max_order: int, d: int = 3) -> float:
    """Smallest C with sum1, sum2 <= C |mu|^(sigma-1) for 1 <= |mu| <= max_order."""
    if sigma <= 1.0:
        raise IndexRangeError(f"sigma must exceed 1, got {sigma}")
    if max_order < 1:
        raise IndexRangeError(f"max_order must be >= 1, got {max_order}")
    return max(max(r1, r2) for _, r1, r2 in bound_ratios(sigma, max_order, d))
