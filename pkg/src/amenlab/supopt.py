"""Suprema of |tr(u pi(g))| over finite groups, and their Monte Carlo averages.

For signed permutation matrices v = (sigma, eps) one has
tr(u v) = sum_i eps_i u[sigma(i), i], and |z| = max_theta Re(e^{i theta} z), so

    sup_v |tr(u v)| = max_theta max_sigma sum_i |Re(e^{i theta} u[sigma(i), i])|.

The inner maximum is a linear assignment problem.  The outer one is swept on
a uniform grid; the grid error is bounded by a Lipschitz argument and reported
alongside every value, so each result is a certified interval.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import groups as G
from .errors import DomainError, PreconditionError
from .randmat import McEstimate, SeededRng, gaussian_matrix, haar_unitary, summarize

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LapResult:
    value: float
    assignment: tuple  # assignment[i] = row matched to column i


def lap_max(cost) -> LapResult:
    """Maximum-weight perfect matching: max over sigma of sum_i cost[sigma(i), i]."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise DomainError("cost must be square")
    if not np.all(np.isfinite(cost)):
        raise DomainError("cost has non-finite entries")
    # rows of cost.T are columns i; the matched column of row i is sigma(i)
    rows, cols = linear_sum_assignment(cost.T, maximize=True)
    sigma = tuple(int(c) for c in cols)
    return LapResult(float(cost[cols, rows].sum()), sigma)


def lap_max_bruteforce(cost) -> LapResult:
    import itertools

    cost = np.asarray(cost, dtype=float)
    d = cost.shape[0]
    best = None
    idx = np.arange(d)
    for p in itertools.permutations(range(d)):
        v = float(cost[list(p), idx].sum())
        if best is None or v > best.value:
            best = LapResult(v, tuple(p))
    return best


@dataclass(frozen=True)
class SupResult:
    value: float
    witness: object
    phase: float
    rigorous_error: float

    def as_dict(self):
        return {
            "value": self.value,
            "witness": _witness_json(self.witness),
            "phase": self.phase,
            "rigorous_error": self.rigorous_error,
        }


def _witness_json(w):
    if isinstance(w, G.SignedPermElement):
        return {"perm": list(w.perm), "signs": list(w.signs)}
    if isinstance(w, tuple):
        return list(w)
    return w


def default_angles(d: int) -> int:
    return max(64, math.ceil(8 * math.sqrt(d)) * 16)


def _trace_with(u, spec, g):
    return complex(np.trace(u @ spec.matrix(g)))


def _sweep(u, spec, angles, signed):
    """Grid sweep plus golden-section refinement in the winning cell."""
    d = u.shape[0]
    span = math.pi if signed else 2.0 * math.pi
    step = span / angles
    ut = u.T
    re, im = ut.real, ut.imag

    def evaluate(theta):
        c = math.cos(theta) * re - math.sin(theta) * im
        if signed:
            c = np.abs(c)
        rows, cols = linear_sum_assignment(c, maximize=True)
        return float(c[rows, cols].sum()), cols

    best_val, best_theta, best_cols = -math.inf, 0.0, None
    for k in range(angles):
        theta = k * step
        val, cols = evaluate(theta)
        if val > best_val:
            best_val, best_theta, best_cols = val, theta, cols

    candidates = [(best_theta, best_cols)]
    a, b = best_theta - step, best_theta + step
    x1, x2 = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
    f1, c1 = evaluate(x1)
    f2, c2 = evaluate(x2)
    for _ in range(20):
        if f1 >= f2:
            b, x2, f2, c2 = x2, x1, f1, c1
            x1 = b - _INV_PHI * (b - a)
            f1, c1 = evaluate(x1)
        else:
            a, x1, f1, c1 = x1, x2, f2, c2
            x2 = a + _INV_PHI * (b - a)
            f2, c2 = evaluate(x2)
    candidates += [(x1, c1), (x2, c2)]

    best = None
    idx = np.arange(d)
    for theta, cols in candidates:
        sigma = tuple(int(c) for c in cols)
        z = u[cols, idx]
        if signed:
            signs = tuple(1 if (math.cos(theta) * w.real - math.sin(theta) * w.imag) >= 0 else -1 for w in z)
            witness = G.SignedPermElement(sigma, signs)
            val = abs(complex(np.dot(np.asarray(signs, dtype=float), z)))
        else:
            witness = sigma
            val = abs(complex(z.sum()))
        if best is None or val > best[0]:
            best = (val, witness, theta % span)
    err = (math.pi / angles) * math.sqrt(d) * float(np.linalg.norm(u))
    return SupResult(best[0], best[1], best[2], err)


def _diag_roots_sup(z, n):
    """Exact max over k in Z_n^d of |sum_i z_i w^{k_i}|, w = exp(2 pi i / n).

    With theta = -arg S at the optimum, each k_i maximises Re(e^{i theta} z_i w^k),
    so the optimum is one of the patterns obtained on the arcs between the
    angles where some coordinate's best root switches.
    """
    mask = np.abs(z) > 0
    d = z.size
    if not np.any(mask):
        return 0.0, (0,) * d, 0.0
    args = np.angle(z[mask])
    period = 2.0 * math.pi / n
    bounds = np.sort(np.mod(math.pi / n - args, period))
    mids = (bounds + np.roll(bounds, -1) + np.where(np.arange(bounds.size) == bounds.size - 1, period, 0.0)) / 2.0
    mids = np.mod(mids, period)
    phase = mids[:, None] + np.angle(z)[None, :]
    ks = np.mod(np.rint(-phase / period), n).astype(int)
    roots = np.exp(1j * period * ks)
    sums = roots @ z
    j = int(np.argmax(np.abs(sums)))
    k = tuple(int(x) for x in ks[j])
    return float(abs(sums[j])), k, float(mids[j])


def sup_abs_trace(u, spec, angles=None) -> SupResult:
    """sup over g of |tr(u pi(g))| with a certified grid error."""
    u = np.asarray(u, dtype=complex)
    d = spec.d
    if u.shape != (d, d):
        raise DomainError(f"matrix is {u.shape}, group acts on dimension {d}")
    if angles is None:
        angles = default_angles(d)
    if angles < 4:
        raise DomainError("angles must be at least 4")
    if isinstance(spec, G.HyperOct):
        return _sweep(u, spec, angles, signed=True)
    if isinstance(spec, G.SymmetricAsUnitary):
        return _sweep(u, spec, angles, signed=False)
    if isinstance(spec, G.DiagSign):
        val, k, phase = _diag_roots_sup(np.diag(u).copy(), 2)
        return SupResult(val, tuple(1 - 2 * x for x in k), phase, 0.0)
    if isinstance(spec, G.DiagRoots):
        val, k, phase = _diag_roots_sup(np.diag(u).copy(), spec.n)
        return SupResult(val, k, phase, 0.0)
    if isinstance(spec, G.EnumeratedGroup):
        tr = np.einsum("ij,nji->n", u, spec.elements)
        j = int(np.argmax(np.abs(tr)))
        return SupResult(float(abs(tr[j])), j, float(np.mod(-np.angle(tr[j]), 2 * np.pi)), 0.0)
    raise DomainError(f"unsupported group spec {spec!r}")


def sup_abs_trace_exhaustive(u, spec, limit=50_000) -> SupResult:
    """Brute-force maximum over every group element (small groups only)."""
    if spec.order > limit:
        raise DomainError(f"group of order {spec.order} exceeds exhaustive limit {limit}")
    u = np.asarray(u, dtype=complex)
    if isinstance(spec, G.EnumeratedGroup):
        return sup_abs_trace(u, spec)
    best = None
    for g in spec.elements():
        v = abs(_trace_with(u, spec, g))
        if best is None or v > best[0]:
            best = (v, g)
    return SupResult(best[0], best[1], 0.0, 0.0)


# --------------------------------------------------------------------------
# Monte Carlo


def _sample_z(args):
    spec, randomization, angles, rng = args
    d = spec.d
    if randomization == "gaussian":
        u = gaussian_matrix(d, rng)
    else:
        u = np.asarray(haar_unitary(d, rng))
    return sup_abs_trace(u, spec, angles).value


def sample_Z(spec, randomization="gaussian", n_samples=400, angles=None, rng=None, threads=1):
    """Per-sample values of Z; sample i always uses substream rng.child(i)."""
    if randomization not in ("gaussian", "haar"):
        raise DomainError(f"randomization must be 'gaussian' or 'haar', got {randomization!r}")
    if rng is None:
        rng = SeededRng(0)
    if angles is None:
        angles = default_angles(spec.d)
    tasks = [(spec, randomization, angles, rng.child(i)) for i in range(n_samples)]
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(_sample_z, tasks, chunksize=max(1, n_samples // (4 * threads))))
    else:
        vals = [_sample_z(t) for t in tasks]
    return np.asarray(vals)


def estimate_EZ(spec, randomization="gaussian", n_samples=400, angles=None, rng=None, threads=1) -> McEstimate:
    """Monte Carlo mean of sup_g |tr(x pi(g))| for x Gaussian (g_d) or Haar."""
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    if rng is None:
        rng = SeededRng(0)
    vals = sample_Z(spec, randomization, n_samples, angles, rng, threads)
    return summarize(vals, rng.seed)


def c3_constant(spec, n_samples=400, angles=None, rng=None, threads=1, require_irreducible=True) -> McEstimate:
    """d divided by the Haar average of sup_g |tr(u pi(g))|.

    The standard error is the first-order delta-method value d * sem / mean^2.
    """
    if require_irreducible and not G.is_irreducible(spec):
        raise PreconditionError(f"{spec.key()} is reducible; C3 is defined for irreducible representations")
    ez = estimate_EZ(spec, "haar", n_samples, angles, rng, threads)
    d = spec.d
    return McEstimate(d / ez.mean, d * ez.sem / ez.mean**2, ez.n, ez.seed)


@dataclass(frozen=True)
class DefectResult:
    alpha: float
    alpha_lower: float
    witness: object
    phase: complex

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "alpha_lower": self.alpha_lower,
            "witness": _witness_json(self.witness),
            "phase": [self.phase.real, self.phase.imag],
        }


def density_defect(u, spec, angles=None) -> DefectResult:
    """Smallest alpha with tr|u - z pi(t)|^2 <= alpha^2 d over t in G, |z| = 1.

    ``alpha`` is attained by the returned (witness, phase); ``alpha_lower``
    accounts for the grid error of the supremum.
    """
    u = np.asarray(u, dtype=complex)
    d = spec.d
    ustar = u.conj().T
    res = sup_abs_trace(ustar, spec, angles)
    t = complex(np.trace(ustar @ spec.matrix(res.witness)))
    z = (t.conjugate() / abs(t)) if abs(t) > 0 else 1.0 + 0j
    alpha = math.sqrt(min(4.0, max(0.0, 2.0 * (1.0 - abs(t) / d))))
    alpha_lower = math.sqrt(min(4.0, max(0.0, 2.0 * (1.0 - (abs(t) + res.rigorous_error) / d))))
    return DefectResult(alpha, alpha_lower, res.witness, z)
