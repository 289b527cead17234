"""psi_2 (subgaussian Orlicz) norms.

With psi_2(x) = exp(x^2) - 1 the norm of F is the least c > 0 with
E psi_2(|F| / c) <= psi_2(1) = e - 1, i.e. E exp(|F|^2 / c^2) <= e.  The
left side is continuous and strictly decreasing in c, so bisection applies.
Everything is evaluated in log space, since exact character laws mix
probabilities near 1e-100 with values near d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from . import exactcomb
from . import groups as G
from .errors import DomainError, UnsupportedSpecError
from .exactcomb import ExactDist

ENUMERATION_LIMIT = 200_000


@dataclass(frozen=True)
class Psi2Result:
    norm: float
    bracket: tuple
    iterations: int

    def as_dict(self):
        return {"norm": self.norm, "lo": self.bracket[0], "hi": self.bracket[1], "iterations": self.iterations}


def _log_prob(p):
    if isinstance(p, Fraction):
        return math.log(p.numerator) - math.log(p.denominator)
    return math.log(p)


def _prepare(values, log_weights):
    values = np.abs(np.asarray(values, dtype=float))
    log_weights = np.asarray(log_weights, dtype=float)
    keep = np.isfinite(log_weights)
    values, log_weights = values[keep], log_weights[keep]
    # normalise so the weights sum to one exactly in log space
    log_weights = log_weights - logsumexp(log_weights)
    return values, log_weights


def log_orlicz_integral(values, log_weights, c):
    """log E exp(|F|^2 / c^2)."""
    return float(logsumexp(log_weights + (values / c) ** 2))


def _psi2(values, log_weights, rtol=1e-12):
    values, log_weights = _prepare(values, log_weights)
    top = float(np.max(values)) if values.size else 0.0
    if top == 0.0:
        return Psi2Result(0.0, (0.0, 0.0), 0)
    # the norm is homogeneous; bisect on max|F| = 1 so subnormal inputs cannot stall the loop
    values = values / top
    # at c = max|F| every term is <= e, so the condition holds
    hi = 1.0
    lo = 0.5
    it = 0
    while log_orlicz_integral(values, log_weights, lo) <= 1.0:
        hi, lo = lo, lo / 2.0
        it += 1
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if log_orlicz_integral(values, log_weights, mid) <= 1.0:
            hi = mid
        else:
            lo = mid
        it += 1
    return Psi2Result(top * (0.5 * (lo + hi)), (top * lo, top * hi), it)


def psi2_exact(dist: ExactDist) -> Psi2Result:
    """psi_2 norm of a finite exact distribution."""
    return _psi2([float(m) for m in dist.support], [_log_prob(p) for p in dist.probs])


def psi2_weighted(values, probs) -> Psi2Result:
    """psi_2 norm of the law putting mass probs[i] on |values[i]|."""
    return _psi2(np.abs(np.asarray(values, dtype=complex)), [_log_prob(p) if p > 0 else -math.inf for p in probs])


def psi2_empirical(samples) -> Psi2Result:
    """psi_2 norm of the empirical measure of the samples."""
    samples = np.abs(np.asarray(samples, dtype=complex)).ravel()
    if samples.size < 1:
        raise DomainError("need at least one sample")
    return _psi2(samples, np.full(samples.size, -math.log(samples.size)))


def orlicz_certificate(values, probs, c):
    """E psi_2(|F|/c) evaluated directly (not in log space), for cross-checks."""
    values = np.abs(np.asarray(values, dtype=float))
    probs = np.asarray([float(p) for p in probs])
    with np.errstate(over="ignore"):
        return float(np.sum(probs * np.expm1((values / c) ** 2)))


def moment_ratio(dist: ExactDist, n_max: int) -> float:
    """max over 1 <= n <= n_max of ||F||_{2n} / sqrt(2n); moments are exact."""
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    best = 0.0
    for n in range(1, n_max + 1):
        mom = dist.moment(2 * n)
        if mom == 0:
            continue
        log_norm = (math.log(mom.numerator) - math.log(mom.denominator)) / (2 * n)
        best = max(best, math.exp(log_norm) / math.sqrt(2 * n))
    return best


def moment_ratio_weighted(values, probs, n_max: int) -> float:
    values = np.abs(np.asarray(values, dtype=complex))
    probs = np.asarray([float(p) for p in probs])
    best = 0.0
    for n in range(1, n_max + 1):
        mom = float(np.sum(probs * values ** (2 * n)))
        if mom > 0:
            best = max(best, mom ** (1.0 / (2 * n)) / math.sqrt(2 * n))
    return best


def diag_roots_char_law(d, n):
    """Law of chi = sum_i w^{k_i} for k uniform on Z_n^d, grouped by root counts.

    Returns (values, probs) with exact Fraction probabilities.
    """
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    values, probs = [], []
    denom = n**d

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    for counts in compositions(d, n):
        mult = math.factorial(d)
        for c in counts:
            mult //= math.factorial(c)
        values.append(complex(np.dot(counts, roots)))
        probs.append(Fraction(mult, denom))
    return values, probs


def character_law(spec):
    """Exact law of the character: an ExactDist when integer valued, else (values, probs)."""
    if isinstance(spec, G.HyperOct):
        return exactcomb.char_dist_hyperoct(spec.d)
    if isinstance(spec, G.SymmetricAsUnitary):
        return exactcomb.fixed_point_dist(spec.d)
    if isinstance(spec, G.DiagSign):
        return exactcomb.sign_sum_dist(spec.d)
    if isinstance(spec, G.DiagRoots):
        if math.comb(spec.d + spec.n - 1, spec.n - 1) > ENUMERATION_LIMIT:
            raise UnsupportedSpecError(f"{spec.key()}: too many root-count classes; use psi2_empirical")
        return diag_roots_char_law(spec.d, spec.n)
    if isinstance(spec, G.EnumeratedGroup):
        if spec.order > ENUMERATION_LIMIT:
            raise UnsupportedSpecError(f"group of order {spec.order} too large to tabulate")
        chi = spec.characters()
        return list(chi), [Fraction(1, spec.order)] * spec.order
    raise UnsupportedSpecError(f"no exact character law for {spec!r}")


def c2_constant(spec) -> Psi2Result:
    """psi_2 norm of |chi| under the uniform measure on the group."""
    law = character_law(spec)
    if isinstance(law, ExactDist):
        return psi2_exact(law)
    return psi2_weighted(*law)


def c2_moment_ratio(spec, n_max=None) -> float:
    """Moment-ratio proxy for the psi_2 norm; n_max defaults to max(32, ceil(d ln d))."""
    if n_max is None:
        n_max = max(32, math.ceil(spec.d * math.log(max(spec.d, 2))))
    law = character_law(spec)
    if isinstance(law, ExactDist):
        return moment_ratio(law, n_max)
    return moment_ratio_weighted(*law, n_max)
