"""Self-checks of the multi-index combinatorics, used by the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..multiindex import (
    MultiIndex,
    binomial,
    bound_ratios,
    count_order,
    enumerate_indices,
    grouped_order_sums,
    indices_of_order,
    inverse_order_sums,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _all_indices(d: int, lo: int, hi: int) -> list[MultiIndex]:
    return [a for a in enumerate_indices(MultiIndex((hi,) * d), lo, hi)]


def verify_combinatorics(
    max_order: int = 20,
    sigmas: Sequence[float] = (1.5, 2.0, 3.0),
    d: int = 3,
    count_order_max: int = 30,
    fit_order: int = 40,
) -> list[CheckResult]:
    out = []

    bad = [
        l
        for l in range(count_order_max + 1)
        if not count_order(d, l) == math.comb(l + d - 1, d - 1) == len(indices_of_order(d, l))
    ]
    out.append(CheckResult("count_order", not bad, f"orders 0..{count_order_max}, mismatches at {bad}"))

    mus = _all_indices(d, 1, max_order)
    bad_sums = [str(mu) for mu in mus if inverse_order_sums(mu, exact=True) != grouped_order_sums(mu, exact=True)]
    out.append(CheckResult("order_sums", not bad_sums, f"{len(mus)} indices with |mu| <= {max_order}, mismatches {bad_sums[:5]}"))

    bad_v = []
    for mu in mus:
        by_order = [0] * (mu.order + 1)
        for beta in enumerate_indices(mu, 0, mu.order):
            by_order[beta.order] += binomial(mu, beta)
        if by_order != [math.comb(mu.order, k) for k in range(mu.order + 1)]:
            bad_v.append(str(mu))
    out.append(CheckResult("vandermonde", not bad_v, f"sum_{{|beta|=k}} C(mu,beta) = C(|mu|,k), mismatches {bad_v[:5]}"))

    for sigma in sigmas:
        rows = list(bound_ratios(sigma, fit_order, d))
        C = max(max(r1, r2) for _, r1, r2 in rows)
        holds = all(r1 <= C and r2 <= C for _, r1, r2 in rows)
        tight = [(str(mu), "sum1" if r1 == C else "sum2") for mu, r1, r2 in rows if r1 == C or r2 == C]
        out.append(
            CheckResult(
                f"bound_constant[sigma={sigma:g}]",
                holds and bool(tight),
                f"C={C:.12g} over |mu| <= {fit_order}; equality at {tight[:3]}",
            )
        )
    return out
