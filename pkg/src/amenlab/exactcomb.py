"""Exact combinatorics of signed permutation matrices.

Everything here is computed with Python integers and :class:`fractions.Fraction`,
so results are exact for any ``d``.  The group of interest is the
hyperoctahedral group ``{+-1}^d x| S(d)`` realised as signed permutation
matrices; its trace is ``sum of eps_i over the fixed points of sigma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import DomainError

__all__ = [
    "ExactDist",
    "derangements",
    "fixed_point_count",
    "sign_sum_tail",
    "sign_sum_dist",
    "char_tail_hyperoct",
    "char_dist_hyperoct",
    "fixed_point_dist",
    "ball_measure_hyperoct",
    "ball_measure_hyperoct_float",
    "hyperoct_order",
]


@dataclass(frozen=True)
class ExactDist:
    """Finite distribution on integers with exact rational probabilities."""

    support: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.support) != len(self.probs):
            raise DomainError("support and probs differ in length")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise DomainError("support must be strictly increasing")
        if any(p < 0 for p in self.probs):
            raise DomainError("negative probability")
        if sum(self.probs, Fraction(0)) != 1:
            raise DomainError("probabilities do not sum to 1")

    @classmethod
    def from_mapping(cls, mapping):
        items = sorted((k, Fraction(v)) for k, v in mapping.items() if v != 0)
        return cls(tuple(k for k, _ in items), tuple(p for _, p in items))

    def as_dict(self):
        return dict(zip(self.support, self.probs))

    def prob(self, m):
        return self.as_dict().get(m, Fraction(0))

    def tail(self, k):
        """P(X > k)."""
        return sum((p for m, p in zip(self.support, self.probs) if m > k), Fraction(0))

    def moment(self, power, absolute=True):
        total = Fraction(0)
        for m, p in zip(self.support, self.probs):
            total += p * (abs(m) if absolute else m) ** power
        return total

    def __len__(self):
        return len(self.support)


@lru_cache(maxsize=None)
def derangements(n: int) -> int:
    """Number of fixed-point-free permutations of ``n`` points, D(0) = 1."""
    if n < 0:
        raise DomainError(f"derangements needs n >= 0, got {n}")
    # iterative recurrence D(n) = (n-1)(D(n-1) + D(n-2)); avoids deep recursion
    a, b = 1, 0
    if n == 0:
        return a
    for m in range(2, n + 1):
        a, b = b, (m - 1) * (a + b)
    return b


def derangements_alternating(n: int) -> int:
    """D(n) from the inclusion-exclusion sum n! * sum (-1)^i / i!."""
    if n < 0:
        raise DomainError(f"derangements needs n >= 0, got {n}")
    total = sum(Fraction((-1) ** i, math.factorial(i)) for i in range(n + 1))
    value = math.factorial(n) * total
    assert value.denominator == 1
    return int(value)


def fixed_point_count(d: int, j: int) -> int:
    """X_j: permutations of ``d`` points with exactly ``j`` fixed points."""
    if d < 1:
        raise DomainError(f"d must be positive, got {d}")
    if not 0 <= j <= d:
        raise DomainError(f"need 0 <= j <= d, got j={j}, d={d}")
    return math.comb(d, j) * derangements(d - j)


def hyperoct_order(d: int) -> int:
    return 2**d * math.factorial(d)


def sign_sum_tail(j: int, k: int) -> Fraction:
    """P(S_j > k) for S_j a sum of ``j`` independent fair signs."""
    if j < 0:
        raise DomainError(f"j must be non-negative, got {j}")
    # S_j = j - 2r where r counts the minus signs
    count = sum(math.comb(j, r) for r in range(j + 1) if j - 2 * r > k)
    return Fraction(count, 2**j)


def sign_sum_dist(j: int) -> ExactDist:
    """Law of S_j on {-j, -j+2, ..., j}."""
    if j < 0:
        raise DomainError(f"j must be non-negative, got {j}")
    return ExactDist.from_mapping({j - 2 * r: Fraction(math.comb(j, r), 2**j) for r in range(j + 1)})


def char_tail_hyperoct(d: int, k: int) -> Fraction:
    """Haar measure of {u : tr(u) > k} in the signed permutation group."""
    if d < 1:
        raise DomainError(f"d must be positive, got {d}")
    if k >= d:
        return Fraction(0)
    total = Fraction(0)
    for j in range(max(0, k + 1), d + 1):
        total += fixed_point_count(d, j) * sign_sum_tail(j, k)
    return total / math.factorial(d)


@lru_cache(maxsize=256)
def char_dist_hyperoct(d: int) -> ExactDist:
    """Exact law of tr(u) for u uniform on the signed permutation group."""
    if d < 1:
        raise DomainError(f"d must be positive, got {d}")
    numer = {}
    for j in range(d + 1):
        x = fixed_point_count(d, j)
        if x == 0:
            continue
        for r in range(j + 1):
            m = j - 2 * r
            # X_j * C(j, r) / 2^j, common denominator d! 2^d
            numer[m] = numer.get(m, 0) + x * math.comb(j, r) * 2 ** (d - j)
    denom = hyperoct_order(d)
    return ExactDist.from_mapping({m: Fraction(c, denom) for m, c in numer.items()})


@lru_cache(maxsize=256)
def fixed_point_dist(d: int) -> ExactDist:
    """Law of the number of fixed points of a uniform permutation of ``d`` points.

    This is the character of the permutation matrix representation of S(d).
    """
    if d < 1:
        raise DomainError(f"d must be positive, got {d}")
    f = math.factorial(d)
    return ExactDist.from_mapping({j: Fraction(fixed_point_count(d, j), f) for j in range(d + 1)})


def _ball_threshold(d, eps):
    return d * (1 - eps * eps / 2)


def ball_measure_hyperoct(d: int, eps) -> Fraction:
    """Measure of the open delta_2 ball of radius ``eps`` about the identity.

    ``eps`` must be exact (int or Fraction; a float is read as its exact
    binary value).  Membership is ``tr(u) > d(1 - eps^2/2)`` with the strict
    inequality applied literally, so an integer threshold is excluded.
    """
    if d < 1:
        raise DomainError(f"d must be positive, got {d}")
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if eps > 2:
        return Fraction(1)
    t = _ball_threshold(d, eps)
    # traces are integers: tr > t  <=>  tr > floor(t)
    return char_tail_hyperoct(d, math.floor(t))


def ball_measure_hyperoct_float(d: int, eps: float):
    """Float-radius convenience wrapper.

    The threshold is evaluated in floating point and rounded down, so the
    returned measure can only overshoot; it is labelled an upper bound.
    Returns ``(measure, "upper-bound")``.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if eps > 2:
        return Fraction(1), "upper-bound"
    t = d * (1.0 - eps * eps / 2.0)
    k = math.floor(t - 1e-9 * max(1.0, abs(t)))
    return char_tail_hyperoct(d, k), "upper-bound"
