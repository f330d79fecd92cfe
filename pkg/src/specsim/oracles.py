"""Exact-arithmetic oracles for the verification loop.

The enumeration here walks the full outcome tree of one speculative round in
rational arithmetic, independently of the floating-point engine: at every
reached position a drafted token x occurs with probability q(x), is accepted
with probability min(1, p(x)/q(x)), and a rejection terminates the round with
a correction token from the normalized positive part of p - q. The all-pass
branch appends a bonus token from p.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence

__all__ = [
    "exact_residual",
    "emitted_marginals",
    "simplex_grid",
    "losslessness_holds",
]


def exact_residual(p: Sequence[Fraction], q: Sequence[Fraction]) -> list:
    """Normalized max(0, p - q) in rational arithmetic."""
    raw = [max(Fraction(0), pi - qi) for pi, qi in zip(p, q)]
    norm = sum(raw)
    if norm == 0:
        raise ValueError("residual undefined for identical distributions")
    return [r / norm for r in raw]


def _accept_prob(px: Fraction, qx: Fraction) -> Fraction:
    return min(Fraction(1), px / qx)


def emitted_marginals(
    p: Sequence[Fraction],
    q: Sequence[Fraction],
    k: int,
    accept_prob: Callable[[Fraction, Fraction], Fraction] = _accept_prob,
) -> list:
    """Exact conditional marginal of each emitted position over the full tree.

    Returns k + 1 lists; entry j is the distribution of the j-th emitted token
    given the round emits at least j + 1 tokens. ``accept_prob`` is pluggable
    so corrupted acceptance rules can be shown to break losslessness.
    """
    V = len(p)
    support = [x for x in range(V) if q[x] > 0]
    identical = all(p[x] == q[x] for x in range(V))
    res = None if identical else exact_residual(p, q)

    marginals = []
    for j in range(k):
        # Position j is reached iff positions < j all accepted; by the
        # per-position i.i.d. structure the conditional law does not depend
        # on j, but we still assemble it from the branch probabilities.
        dist = [Fraction(0)] * V
        reject_mass = Fraction(0)
        for x in support:
            a = accept_prob(p[x], q[x])
            dist[x] += q[x] * a
            reject_mass += q[x] * (1 - a)
        if reject_mass > 0:
            if res is None:
                raise ValueError("rejection reachable but residual degenerate")
            for x in range(V):
                dist[x] += reject_mass * res[x]
        marginals.append(dist)
    # Bonus position, reached only when all k drafts pass.
    marginals.append([Fraction(pi) for pi in p])
    return marginals


def losslessness_holds(
    p: Sequence[Fraction],
    q: Sequence[Fraction],
    k: int,
    accept_prob: Callable[[Fraction, Fraction], Fraction] = _accept_prob,
) -> bool:
    """Every emitted position's conditional marginal equals p exactly."""
    for dist in emitted_marginals(p, q, k, accept_prob):
        if any(dist[x] != p[x] for x in range(len(p))):
            return False
    return True


def simplex_grid(V: int, denominator: int) -> list:
    """All rational distributions over V outcomes with the given denominator."""
    grids = []
    for cuts in combinations(range(denominator + V - 1), V - 1):
        parts = []
        prev = -1
        for c in list(cuts) + [denominator + V - 1]:
            parts.append(c - prev - 1)
            prev = c
        grids.append([Fraction(n, denominator) for n in parts])
    return grids
