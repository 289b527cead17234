"""Metric entropy of finite groups in U(d).

Covering numbers are bracketed, never guessed.  Translation invariance gives
for the open ball B(eps) about the identity

    1 / m(B(eps)) <= N'(eps) <= 1 / m(B(eps / 2)),

where N' counts balls centred in the group.  Small groups also get a
farthest-point-first run, whose first k centres are both a cover (upper
bound) and a separated set (lower bound at 2 eps).
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from . import exactcomb
from . import groups as G
from .errors import DomainError
from .exactcomb import ExactDist
from .matcore import delta_inf

DEFAULT_BUDGET = 10_000


class MetricKind(enum.Enum):
    DELTA2 = "delta2"
    DELTA_INF = "delta_inf"
    SCALED_FROBENIUS = "scaled_frobenius"


def _kind(kind):
    return kind if isinstance(kind, MetricKind) else MetricKind(kind)


def group_metric(spec, s, t, kind=MetricKind.DELTA2) -> float:
    """Distance between pi(s) and pi(t)."""
    kind = _kind(kind)
    if kind is MetricKind.DELTA_INF:
        return delta_inf(spec.matrix(spec.check(s)), spec.matrix(spec.check(t)))
    chi = G.character(spec, G.compose(spec, G.inverse(spec, s), t))
    d2 = math.sqrt(max(0.0, 2.0 * (1.0 - chi.real / spec.d)))
    if kind is MetricKind.SCALED_FROBENIUS:
        return spec.d**0.25 * d2
    return d2


def default_eps_grid(points=64, eps_min=2.0**-6, eps_max=2.0):
    if points < 1 or not 0 < eps_min <= eps_max <= 2.0:
        raise DomainError("need 0 < eps_min <= eps_max <= 2 and points >= 1")
    if points == 1:
        return (float(eps_max),)
    return tuple(float(x) for x in np.geomspace(eps_min, eps_max, points))


# --------------------------------------------------------------------------
# ball measures


def _integer_trace_law(spec):
    if isinstance(spec, G.HyperOct):
        return exactcomb.char_dist_hyperoct(spec.d)
    if isinstance(spec, G.SymmetricAsUnitary):
        return exactcomb.fixed_point_dist(spec.d)
    if isinstance(spec, G.DiagSign):
        return exactcomb.sign_sum_dist(spec.d)
    return None


def _identity_distances(group: G.EnumeratedGroup, kind):
    """Distance from the identity to every element (float array)."""
    els = group.elements
    d = group.d
    if kind is MetricKind.DELTA_INF:
        return np.linalg.norm(els - np.eye(d)[None], ord=2, axis=(1, 2))
    d2 = _delta2_from_inner(np.trace(els, axis1=1, axis2=2).real, d)
    return d2 * d**0.25 if kind is MetricKind.SCALED_FROBENIUS else d2


def ball_measure(spec, eps, kind=MetricKind.DELTA2) -> Fraction:
    """Haar measure of the open ball of radius ``eps`` about the identity.

    Exact for integer-trace families under delta_2 (``eps`` read as an exact
    rational); counted from the element list for enumerated groups.
    """
    kind = _kind(kind)
    law = _integer_trace_law(spec)
    if law is not None and kind is not MetricKind.DELTA_INF:
        eps = Fraction(eps)
        if kind is MetricKind.SCALED_FROBENIUS:
            # delta_2 < eps d^(-1/4)  <=>  d (1 - delta_2^2 / 2) > d - eps^2 sqrt(d) / 2
            thr = spec.d - eps * eps * Fraction(math.sqrt(spec.d)) / 2
        else:
            thr = spec.d * (1 - eps * eps / 2)
        return law.tail(math.floor(thr))
    if isinstance(spec, G.DiagRoots) and kind is not MetricKind.DELTA_INF:
        from .orlicz import diag_roots_char_law

        values, probs = diag_roots_char_law(spec.d, spec.n)
        scale = spec.d**0.25 if kind is MetricKind.SCALED_FROBENIUS else 1.0
        total = Fraction(0)
        for v, p in zip(values, probs):
            if scale * math.sqrt(max(0.0, 2.0 * (1.0 - v.real / spec.d))) < float(eps):
                total += p
        return total
    if isinstance(spec, G.EnumeratedGroup):
        dist = _identity_distances(spec, kind)
        return Fraction(int(np.sum(dist < float(eps))), spec.order)
    if spec.order <= DEFAULT_BUDGET:
        return ball_measure(G.materialize(spec), eps, kind)
    raise DomainError(f"no ball measure for {spec!r} under {kind.value}")


# --------------------------------------------------------------------------
# farthest-point-first


# squared delta_2 values below this are rounding noise of tr(u* u) = d
_SQ_NOISE = 1e-13


def _delta2_from_inner(inner, d):
    sq = 2.0 * (1.0 - inner / d)
    return np.sqrt(np.where(sq < _SQ_NOISE, 0.0, sq))


def _flat(group):
    return group.elements.reshape(group.order, -1)


def _distances_from(group, c, kind, flat=None):
    els = group.elements
    d = group.d
    if kind is MetricKind.DELTA_INF:
        return np.linalg.norm(els - els[c][None], ord=2, axis=(1, 2))
    flat = _flat(group) if flat is None else flat
    d2 = _delta2_from_inner((flat @ flat[c].conj()).real, d)
    return d2 * d**0.25 if kind is MetricKind.SCALED_FROBENIUS else d2


def farthest_point_radii(group: G.EnumeratedGroup, kind=MetricKind.DELTA2, stop_below=0.0):
    """Covering radii r_0 >= r_1 >= ... of the farthest-point-first centres.

    r_k is the covering radius of the first k+1 centres (the identity first,
    ties to the lowest index).  Stops once the radius is below ``stop_below``.
    Returns (radii, centres).
    """
    kind = _kind(kind)
    flat = _flat(group) if kind is not MetricKind.DELTA_INF else None
    mind = _distances_from(group, 0, kind, flat)
    mind[0] = 0.0
    centres = [0]
    radii = []
    while True:
        c = int(np.argmax(mind))
        r = float(mind[c])
        radii.append(r)
        if r <= 0.0 or r < stop_below:
            break
        centres.append(c)
        mind = np.minimum(mind, _distances_from(group, c, kind, flat))
        mind[c] = 0.0
    return radii, centres


def greedy_cover_size(radii, eps):
    """Centres needed so every point is strictly within eps."""
    for k, r in enumerate(radii):
        if r < eps:
            return k + 1
    return None


def packing_size(radii, beta):
    """Size of the farthest-point-first prefix that is pairwise > beta apart."""
    for k, r in enumerate(radii):
        if r <= beta:
            return k + 1
    return len(radii)


# --------------------------------------------------------------------------
# covering curves


@dataclass(frozen=True)
class CoveringCurve:
    eps_grid: tuple
    n_lower: tuple
    n_upper: tuple
    method: tuple
    group_order: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "n_lower", "n_upper", "method"])
        for row in zip(self.eps_grid, self.n_lower, self.n_upper, self.method):
            w.writerow([repr(row[0]), str(row[1]), str(row[2]), row[3]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, group_order):
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            tuple(float(r["eps"]) for r in rows),
            tuple(int(r["n_lower"]) for r in rows),
            tuple(int(r["n_upper"]) for r in rows),
            tuple(r["method"] for r in rows),
            group_order,
        )

    def as_rows(self):
        return [
            {"eps": e, "n_lower": lo, "n_upper": hi, "method": m}
            for e, lo, hi, m in zip(self.eps_grid, self.n_lower, self.n_upper, self.method)
        ]


def known_abelian_index(spec):
    """Index of an abelian subgroup known in closed form, else None."""
    if isinstance(spec, G.HyperOct):
        return math.factorial(spec.d)
    if isinstance(spec, (G.DiagSign, G.DiagRoots)):
        return 1
    return None


def el1_upper(k, d, eps):
    """floor(k (2 pi / eps)^d), computed with 50 significant digits."""
    with mpmath.workdps(50):
        return int(mpmath.floor(mpmath.mpf(k) * (2 * mpmath.pi / mpmath.mpf(eps)) ** d))


def _ceil_inv(m: Fraction):
    return -(-m.denominator // m.numerator)


def _floor_inv(m: Fraction):
    return m.denominator // m.numerator


def covering_curve(spec, eps_grid=None, kind=MetricKind.DELTA2, budget=DEFAULT_BUDGET, abelian_index=None):
    """Two-sided brackets on N'(eps) for every eps in the grid.

    ``abelian_index=False`` leaves the el1 bound out of the upper bracket.
    """
    kind = _kind(kind)
    eps_grid = default_eps_grid() if eps_grid is None else tuple(float(e) for e in eps_grid)
    if not eps_grid or any(not 0 < e <= 2 for e in eps_grid) or list(eps_grid) != sorted(set(eps_grid)):
        raise DomainError("eps_grid must be strictly increasing inside (0, 2]")
    order = int(spec.order)
    if abelian_index is None:
        abelian_index = known_abelian_index(spec)
    elif abelian_index is False:
        abelian_index = None
    if kind is MetricKind.SCALED_FROBENIUS:
        abelian_index = None  # the el1 bound is stated for delta_2

    radii = None
    group = None
    if order <= budget:
        group = G.materialize(spec)
        radii, _ = farthest_point_radii(group, kind, stop_below=eps_grid[0])
        measure_source = group if isinstance(spec, G.EnumeratedGroup) else spec
    else:
        measure_source = spec

    lower, upper, lsrc, usrc = [], [], [], []
    for eps in eps_grid:
        m_eps = ball_measure(measure_source, eps, kind)
        m_half = ball_measure(measure_source, eps / 2.0, kind)
        lo = [(_ceil_inv(m_eps), "exact-measure")]
        hi = [(_floor_inv(m_half), "exact-measure"), (order, "order")]
        if radii is not None:
            lo.append((packing_size(radii, 2.0 * eps), "packing"))
            g = greedy_cover_size(radii, eps)
            if g is not None:
                hi.append((g, "greedy-cover"))
        if abelian_index is not None and eps < 2.0:
            hi.append((el1_upper(abelian_index, spec.d, eps), "el1"))
        lv, ls = max(lo, key=lambda t: t[0])
        hv, hs = min(hi, key=lambda t: t[0])
        lower.append(lv)
        upper.append(hv)
        lsrc.append(ls)
        usrc.append(hs)

    # N' is non-increasing: lower bounds propagate left, upper bounds right
    for i in range(len(lower) - 2, -1, -1):
        lower[i] = max(lower[i], lower[i + 1])
    for i in range(1, len(upper)):
        upper[i] = min(upper[i], upper[i - 1])
    bad = [e for e, lo, hi in zip(eps_grid, lower, upper) if lo > hi]
    if bad:
        raise AssertionError(f"covering bracket inverted at eps={bad[:3]}")
    method = tuple(f"{a}/{b}" for a, b in zip(lsrc, usrc))
    return CoveringCurve(eps_grid, tuple(lower), tuple(upper), method, order)


# --------------------------------------------------------------------------
# Dudley and Sudakov


@dataclass(frozen=True)
class EntropyReport:
    dudley_lower: float
    dudley_upper: float
    sudakov: float

    def as_dict(self):
        return {"dudley_lower": self.dudley_lower, "dudley_upper": self.dudley_upper, "sudakov": self.sudakov}


def _sqrt_log(n):
    return math.sqrt(math.log(n)) if n > 1 else 0.0


def dudley_sudakov(curve: CoveringCurve) -> EntropyReport:
    """Bracket int_0^2 sqrt(log N(eps)) d eps and the Sudakov functional.

    On [e_i, e_{i+1}] monotonicity gives N(e_{i+1}) <= N <= N(e_i).  The head
    (0, e_1) is bounded above by e_1 sqrt(log |G|); beyond the last grid point
    the lower sum adds nothing.
    """
    eps = list(curve.eps_grid)
    if not eps:
        raise DomainError("empty covering curve")
    lo = hi = 0.0
    for i in range(len(eps) - 1):
        w = eps[i + 1] - eps[i]
        lo += w * _sqrt_log(curve.n_lower[i + 1])
        hi += w * _sqrt_log(curve.n_upper[i])
    hi += eps[0] * _sqrt_log(curve.group_order)
    if eps[-1] < 2.0:
        hi += (2.0 - eps[-1]) * _sqrt_log(curve.n_upper[-1])
    sud = max(e * _sqrt_log(n) for e, n in zip(eps, curve.n_lower))
    return EntropyReport(lo, hi, sud)


# --------------------------------------------------------------------------
# separated sets


def _element_vectors(spec, elems):
    return np.stack([spec.matrix(g).ravel() for g in elems])


def separated_set(spec, beta, kind=MetricKind.DELTA2, cap=2000, rng=None):
    """Greedy packing: elements pairwise more than ``beta`` apart.

    Enumerated groups are swept in a random order over every element, so the
    result is maximal.  Structured groups draw ``cap`` uniform elements and
    keep the ones far from everything kept so far.
    """
    kind = _kind(kind)
    if beta <= 0:
        raise DomainError("beta must be positive")
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=0))
    if isinstance(spec, G.EnumeratedGroup):
        order = rng.permutation(spec.order)
        flat = _flat(spec) if kind is not MetricKind.DELTA_INF else None
        mind = np.full(spec.order, np.inf)
        chosen = []
        for c in order:
            c = int(c)
            if mind[c] > beta:
                chosen.append(c)
                mind = np.minimum(mind, _distances_from(spec, c, kind, flat))
        return chosen

    d = spec.d
    chosen, vecs = [], []
    for _ in range(cap):
        g = spec.sample(rng)
        m = spec.matrix(g)
        if vecs:
            arr = np.asarray(vecs)
            if kind is MetricKind.DELTA_INF:
                dist = np.linalg.norm(arr.reshape(-1, d, d) - m[None], ord=2, axis=(1, 2))
            else:
                inner = (arr @ m.ravel().conj()).real
                dist = np.sqrt(np.maximum(0.0, 2.0 * (1.0 - inner / d)))
                if kind is MetricKind.SCALED_FROBENIUS:
                    dist = dist * d**0.25
            if np.min(dist) <= beta:
                continue
        chosen.append(g)
        vecs.append(m.ravel())
    return chosen


def is_maximal_packing(group: G.EnumeratedGroup, chosen, beta, kind=MetricKind.DELTA2):
    """Every element within beta of some chosen point."""
    kind = _kind(kind)
    mind = np.full(group.order, np.inf)
    for c in chosen:
        mind = np.minimum(mind, _distances_from(group, c, kind))
    return bool(np.all(mind <= beta))
