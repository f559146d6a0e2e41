"""Higher-order moments of a circular complex Gaussian pair ``(y(t), y(t-tau))``.

``phi(i1, i2) = E[y(t)^(i1+1) y(t-tau)^i2 conj(y(t))^i1 conj(y(t-tau))^(i2+1)]``
reduces to a sum over ``p`` of integer weights times
``R(tau)^(p+1) conj(R(tau))^p R(0)^(i1+i2-2p)``.  The closed-form weights are
checked against brute-force enumeration of Isserlis pairings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

MAX_ORACLE_ORDER = 6


@dataclass(frozen=True)
class MomentWeights:
    i1: int
    i2: int
    weights: tuple

    def evaluate(self, r_tau: complex, r0: float) -> complex:
        q = self.i1 + self.i2
        return sum(
            w * r_tau ** (p + 1) * r_tau.conjugate() ** p * r0 ** (q - 2 * p)
            for p, w in enumerate(self.weights)
        )


@lru_cache(maxsize=None)
def moment_weights(i1: int, i2: int) -> MomentWeights:
    if i1 < 0 or i2 < 0:
        raise ValueError("term indices must be nonnegative")
    weights = tuple(
        comb(i2 + 1, p + 1) * comb(i1 + 1, p + 1) * comb(i2, p) * comb(i1, p)
        * factorial(p + 1) * factorial(p) * factorial(i2 - p) * factorial(i1 - p)
        for p in range(min(i1, i2) + 1)
    )
    return MomentWeights(i1, i2, weights)


def _pairings(i1: int, i2: int):
    """Yield, for every permutation, the count of (t-tau) -> conj(t) pairings
    and the list of pairwise expectation kinds."""
    s = i1 + i2 + 1
    if s > MAX_ORACLE_ORDER:
        raise ValueError(f"order i1+i2+1={s} exceeds the enumeration guard {MAX_ORACLE_ORDER}")
    # unconjugated factors: i1+1 at t, i2 at t-tau; conjugated: i1 at t, i2+1 at t-tau
    plain = [0] * (i1 + 1) + [1] * i2
    conj = [0] * i1 + [1] * (i2 + 1)
    for perm in itertools.permutations(range(s)):
        yield [(plain[perm[j]], conj[j]) for j in range(s)]


# E[y_a conj(y_b)] for a, b in {0: t, 1: t - tau}
def _pair_value(a, b, r_tau, r0):
    if a == b:
        return r0
    return r_tau if (a, b) == (0, 1) else r_tau.conjugate()


def moment_oracle(i1: int, i2: int, r_tau: complex, r0: float) -> complex:
    """Brute-force Isserlis sum over all ``(i1+i2+1)!`` permutations."""
    r_tau = complex(r_tau)
    total = 0j
    for pairs in _pairings(i1, i2):
        term = 1 + 0j
        for a, b in pairs:
            term *= _pair_value(a, b, r_tau, r0)
        total += term
    return total


def pairing_counts(i1: int, i2: int) -> list:
    """Number of permutations contributing ``R^(p+1) conj(R)^p`` for each p."""
    counts = [0] * (min(i1, i2) + 1)
    for pairs in _pairings(i1, i2):
        counts[sum(1 for a, b in pairs if (a, b) == (1, 0))] += 1
    return counts
