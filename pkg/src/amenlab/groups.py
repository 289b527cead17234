"""Finite subgroups of U(d).

Two flavours of group live here:

* structured families (signed permutations, permutation matrices, diagonal
  sign and root-of-unity matrices) whose elements are compact tuples and whose
  matrices are only built on request, so they scale to d ~ 100;
* :class:`EnumeratedGroup`, an explicit list of unitary matrices obtained by
  closing a generator set under products up to a tolerance.

Module-level functions (``group_order``, ``character``, ...) dispatch on the
spec type; they are the public surface the other modules use.
"""
from __future__ import annotations

import cmath
import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import networkx as nx
import numpy as np

from . import exactcomb
from .errors import CapExceededError, DomainError, PrecisionError
from .matcore import UNITARY_TOL, UnitaryMatrix, as_cmatrix, op_norm, unitarity_defect


@dataclass(frozen=True)
class SignedPermElement:
    """The matrix sum_i signs[i] e_{i, perm[i]} (0-based)."""

    perm: tuple
    signs: tuple

    def __post_init__(self):
        d = len(self.perm)
        if sorted(self.perm) != list(range(d)):
            raise DomainError(f"not a permutation: {self.perm}")
        if len(self.signs) != d or any(s not in (-1, 1) for s in self.signs):
            raise DomainError(f"signs must be a +-1 vector of length {d}")


def _check_perm(p, d):
    if len(p) != d or sorted(p) != list(range(d)):
        raise DomainError(f"not a permutation of {d} points: {p}")
    return tuple(int(i) for i in p)


def _compose_perm(p, q):
    # matrix product u_p u_q has entry (i, q[p[i]])
    return tuple(q[i] for i in p)


def _invert_perm(p):
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


# --------------------------------------------------------------------------
# structured specs


@dataclass(frozen=True)
class HyperOct:
    """Signed permutation matrices, {+-1}^d x| S(d), order 2^d d!."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("d must be positive")

    @property
    def order(self):
        return exactcomb.hyperoct_order(self.d)

    def identity(self):
        return SignedPermElement(tuple(range(self.d)), (1,) * self.d)

    def check(self, g):
        if not isinstance(g, SignedPermElement) or len(g.perm) != self.d:
            raise DomainError(f"invalid element for {self}: {g!r}")
        return g

    def matrix(self, g):
        m = np.zeros((self.d, self.d), dtype=complex)
        m[np.arange(self.d), g.perm] = g.signs
        return m

    def character(self, g):
        return complex(sum(s for i, (p, s) in enumerate(zip(g.perm, g.signs)) if p == i))

    def compose(self, g, h):
        perm = _compose_perm(g.perm, h.perm)
        signs = tuple(g.signs[i] * h.signs[g.perm[i]] for i in range(self.d))
        return SignedPermElement(perm, signs)

    def inverse(self, g):
        inv = _invert_perm(g.perm)
        return SignedPermElement(inv, tuple(g.signs[inv[j]] for j in range(self.d)))

    def sample(self, rng):
        perm = tuple(int(i) for i in rng.permutation(self.d))
        signs = tuple(int(s) for s in 1 - 2 * rng.integers(0, 2, size=self.d))
        return SignedPermElement(perm, signs)

    def elements(self):
        for perm in itertools.permutations(range(self.d)):
            for signs in itertools.product((1, -1), repeat=self.d):
                yield SignedPermElement(perm, signs)

    def generators(self):
        gens = []
        if self.d >= 2:
            gens.append(SignedPermElement((1, 0) + tuple(range(2, self.d)), (1,) * self.d))
            gens.append(SignedPermElement(tuple(range(1, self.d)) + (0,), (1,) * self.d))
        gens.append(SignedPermElement(tuple(range(self.d)), (-1,) + (1,) * (self.d - 1)))
        return gens

    def key(self):
        return f"hyperoct:{self.d}"


@dataclass(frozen=True)
class SymmetricAsUnitary:
    """Permutation matrices u_sigma = sum_i e_{i, sigma(i)}."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("d must be positive")

    @property
    def order(self):
        return math.factorial(self.d)

    def identity(self):
        return tuple(range(self.d))

    def check(self, g):
        return _check_perm(g, self.d)

    def matrix(self, g):
        m = np.zeros((self.d, self.d), dtype=complex)
        m[np.arange(self.d), g] = 1.0
        return m

    def character(self, g):
        return complex(sum(1 for i, p in enumerate(g) if p == i))

    def compose(self, g, h):
        return _compose_perm(g, h)

    def inverse(self, g):
        return _invert_perm(g)

    def sample(self, rng):
        return tuple(int(i) for i in rng.permutation(self.d))

    def elements(self):
        return itertools.permutations(range(self.d))

    def generators(self):
        if self.d == 1:
            return [(0,)]
        return [(1, 0) + tuple(range(2, self.d)), tuple(range(1, self.d)) + (0,)]

    def key(self):
        return f"sym:{self.d}"


@dataclass(frozen=True)
class DiagSign:
    """Diagonal matrices with +-1 entries, order 2^d."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("d must be positive")

    @property
    def order(self):
        return 2**self.d

    def identity(self):
        return (1,) * self.d

    def check(self, g):
        if len(g) != self.d or any(s not in (-1, 1) for s in g):
            raise DomainError(f"invalid sign vector for {self}: {g!r}")
        return tuple(g)

    def matrix(self, g):
        return np.diag(np.asarray(g, dtype=complex))

    def character(self, g):
        return complex(sum(g))

    def compose(self, g, h):
        return tuple(a * b for a, b in zip(g, h))

    def inverse(self, g):
        return tuple(g)

    def sample(self, rng):
        return tuple(int(s) for s in 1 - 2 * rng.integers(0, 2, size=self.d))

    def elements(self):
        return itertools.product((1, -1), repeat=self.d)

    def generators(self):
        return [tuple(-1 if j == i else 1 for j in range(self.d)) for i in range(self.d)]

    def key(self):
        return f"diag-sign:{self.d}"


@dataclass(frozen=True)
class DiagRoots:
    """Diagonal matrices diag(w^k_1, ..., w^k_d), w = exp(2 pi i / n); order n^d."""

    d: int
    n: int

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise DomainError("d and n must be positive")

    @property
    def order(self):
        return self.n**self.d

    def root(self, k):
        return cmath.exp(2j * math.pi * (k % self.n) / self.n)

    def identity(self):
        return (0,) * self.d

    def check(self, g):
        if len(g) != self.d:
            raise DomainError(f"invalid exponent vector for {self}: {g!r}")
        return tuple(int(k) % self.n for k in g)

    def matrix(self, g):
        return np.diag(np.exp(2j * np.pi * np.asarray(g, dtype=float) / self.n))

    def character(self, g):
        return complex(np.sum(np.exp(2j * np.pi * np.asarray(g, dtype=float) / self.n)))

    def compose(self, g, h):
        return tuple((a + b) % self.n for a, b in zip(g, h))

    def inverse(self, g):
        return tuple((-a) % self.n for a in g)

    def sample(self, rng):
        return tuple(int(k) for k in rng.integers(0, self.n, size=self.d))

    def elements(self):
        return itertools.product(range(self.n), repeat=self.d)

    def generators(self):
        return [tuple(1 if j == i else 0 for j in range(self.d)) for i in range(self.d)]

    def key(self):
        return f"diag-roots:{self.d}:{self.n}"


# --------------------------------------------------------------------------
# enumerated groups


def _projection_weights(d):
    # fixed pseudo-random unit-Frobenius weights; only used to bucket matrices
    rng = np.random.Generator(np.random.Philox(key=0x5EED + d))
    w = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return w / np.linalg.norm(w)


class _ElementIndex:
    """Near-duplicate lookup for matrices under the operator-norm metric.

    Each matrix is bucketed by a 2-D linear projection p(u) = <w, u>.  Since
    |p(u) - p(v)| <= ||u - v||_F <= sqrt(d) ||u - v||, every matrix within
    operator distance 2 tol of a query lands in the query's 3 x 3 block of cells.
    """

    def __init__(self, d, tol):
        self.d = d
        self.tol = tol
        self.w = _projection_weights(d)
        self.cell = 2.0 * math.sqrt(d) * tol
        self.buckets = {}
        self.mats = []

    def _cell(self, m):
        p = np.vdot(self.w, m)
        return (math.floor(p.real / self.cell), math.floor(p.imag / self.cell))

    def find(self, m):
        """Return (index, distance) of the stored match within tol, else (None, None).

        Raises PrecisionError if a stored element lies in [tol, 2 tol).
        """
        cx, cy = self._cell(m)
        best = None
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in self.buckets.get((cx + dx, cy + dy), ()):
                    diff = m - self.mats[idx]
                    fro = math.sqrt(np.vdot(diff, diff).real)
                    if fro < self.tol:
                        dist = op_norm(diff) if fro > 0 else 0.0
                    elif fro / math.sqrt(self.d) >= 2 * self.tol:
                        continue
                    else:
                        dist = op_norm(diff)
                    if dist < self.tol:
                        if best is None or dist < best[1]:
                            best = (idx, dist)
                    elif dist < 2 * self.tol:
                        raise PrecisionError(
                            f"element at ambiguous distance {dist:.3e} (tol {self.tol:.1e})", partial=len(self.mats)
                        )
        return best if best is not None else (None, None)

    def add(self, m):
        idx = len(self.mats)
        self.mats.append(m)
        self.buckets.setdefault(self._cell(m), []).append(idx)
        return idx


@dataclass(eq=False)
class EnumeratedGroup:
    """Explicit finite group: ``elements`` is an (order, d, d) complex array.

    Element handles are integer indices; index 0 is the identity.
    """

    elements: np.ndarray
    tol: float = 1e-8
    closure_defect: float = 0.0
    name: str = "enum"
    _index: _ElementIndex = field(default=None, repr=False)

    def __post_init__(self):
        self.elements = np.asarray(self.elements, dtype=complex)
        if self.elements.ndim != 3 or self.elements.shape[1] != self.elements.shape[2]:
            raise DomainError("elements must be an (n, d, d) array")
        self.elements.setflags(write=False)

    @property
    def d(self):
        return self.elements.shape[1]

    @property
    def order(self):
        return self.elements.shape[0]

    @property
    def index(self):
        if self._index is None:
            idx = _ElementIndex(self.d, self.tol)
            for m in self.elements:
                idx.add(m)
            self._index = idx
        return self._index

    def lookup(self, m):
        i, dist = self.index.find(np.asarray(m, dtype=complex))
        if i is None:
            raise DomainError("matrix is not an element of the group (within tol)")
        return i

    def identity(self):
        return 0

    def check(self, g):
        g = int(g)
        if not 0 <= g < self.order:
            raise DomainError(f"element index {g} out of range for order {self.order}")
        return g

    def matrix(self, g):
        return np.array(self.elements[g])

    def character(self, g):
        return complex(np.trace(self.elements[g]))

    def characters(self):
        return np.trace(self.elements, axis1=1, axis2=2)

    def compose(self, g, h):
        return self.lookup(self.elements[g] @ self.elements[h])

    def inverse(self, g):
        return self.lookup(self.elements[g].conj().T)

    def sample(self, rng):
        return int(rng.integers(0, self.order))

    def elements_iter(self):
        return iter(range(self.order))

    def key(self):
        return f"{self.name}:{self.order}"


GroupSpec = Union[HyperOct, SymmetricAsUnitary, DiagSign, DiagRoots, EnumeratedGroup]
STRUCTURED = (HyperOct, SymmetricAsUnitary, DiagSign, DiagRoots)


def _canonical_key(m, q):
    flat = np.round(np.concatenate([m.real.ravel(), m.imag.ravel()]) / q).astype(np.int64)
    return tuple(flat.tolist())


def enumerate_closure(generators, tol=1e-8, cap=10_000, name="enum") -> EnumeratedGroup:
    """Close a set of unitary generators under products.

    Breadth-first search from the identity, multiplying on the right by each
    generator.  Two matrices are identified when their operator distance is
    below ``tol``.  The stored order is identity first, then the remaining
    elements sorted by their quantised entries (cell tol / 4d).
    """
    gens = [as_cmatrix(g) for g in generators]
    if not gens:
        raise DomainError("need at least one generator")
    d = gens[0].shape[0]
    for g in gens:
        if g.shape != (d, d):
            raise DomainError("generators have different dimensions")
        if unitarity_defect(g) > max(tol, UNITARY_TOL):
            raise DomainError("generator is not unitary within tol")

    index = _ElementIndex(d, tol)
    index.add(np.eye(d, dtype=complex))
    queue = deque([0])
    defect = 0.0
    while queue:
        a = index.mats[queue.popleft()]
        for g in gens:
            p = a @ g
            i, dist = index.find(p)
            if i is None:
                if len(index.mats) >= cap:
                    raise CapExceededError(
                        f"closure exceeded cap={cap} elements (possibly infinite or too large)", len(index.mats)
                    )
                queue.append(index.add(p))
            else:
                defect = max(defect, dist)

    mats = index.mats
    q = tol / (4 * d)
    rest = sorted(range(1, len(mats)), key=lambda i: _canonical_key(mats[i], q))
    elements = np.stack([mats[0]] + [mats[i] for i in rest])
    group = EnumeratedGroup(elements, tol=tol, closure_defect=defect, name=name)
    spot = verify_closure(group, n_pairs=min(1000, group.order**2), seed=0)
    group.closure_defect = max(defect, spot)
    return group


def verify_closure(group: EnumeratedGroup, n_pairs=1000, seed=0) -> float:
    """Max distance from a product of two random elements to the stored set."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    worst = 0.0
    n = group.order
    for _ in range(n_pairs):
        a, b = rng.integers(0, n, size=2)
        i, dist = group.index.find(group.elements[a] @ group.elements[b])
        if i is None:
            return math.inf
        worst = max(worst, dist)
    return worst


def materialize(spec, tol=1e-8) -> EnumeratedGroup:
    """All elements of a small structured group as an EnumeratedGroup.

    Element order follows ``spec.elements()`` with the identity moved first.
    """
    if isinstance(spec, EnumeratedGroup):
        return spec
    elems = list(spec.elements())
    ident = spec.identity()
    elems.remove(ident)
    mats = np.stack([spec.matrix(ident)] + [spec.matrix(g) for g in elems])
    return EnumeratedGroup(mats, tol=tol, closure_defect=0.0, name=spec.key())


def conjugate_group(group: EnumeratedGroup, w) -> EnumeratedGroup:
    """The group w G w* (same handles)."""
    w = as_cmatrix(w)
    mats = np.einsum("ij,njk,lk->nil", w, group.elements, w.conj())
    return EnumeratedGroup(mats, tol=group.tol, closure_defect=group.closure_defect, name=group.name)


# --------------------------------------------------------------------------
# public dispatch


def group_order(spec) -> int:
    return spec.order


def element_matrix(spec, g) -> UnitaryMatrix:
    return UnitaryMatrix(spec.matrix(spec.check(g)))


def character(spec, g) -> complex:
    return spec.character(spec.check(g))


def compose(spec, g, h):
    return spec.compose(spec.check(g), spec.check(h))


def inverse(spec, g):
    return spec.inverse(spec.check(g))


def identity(spec):
    return spec.identity()


def sample_uniform(spec, rng):
    """Exactly uniform element; ``rng`` is a numpy Generator."""
    return spec.sample(rng)


def iter_elements(spec):
    if isinstance(spec, EnumeratedGroup):
        return spec.elements_iter()
    return spec.elements()


# --------------------------------------------------------------------------
# irreducibility


def mean_abs_char_sq(spec):
    """(1/|G|) sum_g |chi(g)|^2; exact Fraction for structured specs."""
    if isinstance(spec, HyperOct):
        return exactcomb.char_dist_hyperoct(spec.d).moment(2)
    if isinstance(spec, SymmetricAsUnitary):
        return exactcomb.fixed_point_dist(spec.d).moment(2)
    if isinstance(spec, DiagSign):
        return Fraction(spec.d)
    if isinstance(spec, DiagRoots):
        # cross terms average to zero unless every root is 1
        return Fraction(spec.d if spec.n >= 2 else spec.d**2)
    chi = spec.characters()
    return float(np.mean(np.abs(chi) ** 2))


def is_irreducible(spec, tol=1e-8) -> bool:
    m = mean_abs_char_sq(spec)
    if isinstance(m, Fraction):
        return m == 1
    return abs(m - 1.0) <= tol


# --------------------------------------------------------------------------
# abelian subgroups


@dataclass
class AbelianIndexResult:
    index: int
    witness: list
    exact: bool
    normal: bool | None
    max_commutator: float

    def as_dict(self):
        return {
            "index": self.index,
            "witness": list(self.witness),
            "exact": self.exact,
            "normal": self.normal,
            "max_commutator": self.max_commutator,
        }


def _commutes_with(group, g, tol):
    a = group.elements[g]
    left = np.einsum("ij,njk->nik", a, group.elements)
    right = np.einsum("nij,jk->nik", group.elements, a)
    return np.max(np.abs(left - right), axis=(1, 2)) < tol


def _is_normal(group, members):
    members = set(members)
    els = group.elements
    for g in range(group.order):
        ginv = els[g].conj().T
        for c in members:
            j, _ = group.index.find(els[g] @ els[c] @ ginv)
            if j not in members:
                return False
    return True


def _max_commutator(group, members):
    worst = 0.0
    for a, b in itertools.combinations(members, 2):
        x, y = group.elements[a], group.elements[b]
        worst = max(worst, float(np.max(np.abs(x @ y - y @ x))))
    return worst


def abelian_index_upper(group: EnumeratedGroup, exhaustive_cap=200, commute_tol=None) -> AbelianIndexResult:
    """Index of a large abelian subgroup.

    A maximal set of pairwise commuting elements is closed under products and
    inverses, so abelian subgroups are exactly the cliques of the commuting
    graph.  Up to ``exhaustive_cap`` elements every maximal clique is listed and
    the largest one wins (a normal one is preferred on ties); the index is then
    the true minimum.  Larger groups get a greedy centraliser-intersection
    search and the result is only an upper bound.
    """
    if not isinstance(group, EnumeratedGroup):
        raise DomainError("abelian_index_upper needs an EnumeratedGroup (use materialize)")
    tol = group.tol if commute_tol is None else commute_tol
    n = group.order
    if n <= exhaustive_cap:
        comm = np.stack([_commutes_with(group, g, tol) for g in range(n)])
        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        rows, cols = np.nonzero(np.triu(comm, 1))
        graph.add_edges_from(zip(rows.tolist(), cols.tolist()))
        cliques = [sorted(c) for c in nx.find_cliques(graph)]
        size = max(len(c) for c in cliques)
        best = sorted(c for c in cliques if len(c) == size)
        witness, normal = best[0], None
        for c in best:
            if _is_normal(group, c):
                witness, normal = c, True
                break
        else:
            normal = False
        return AbelianIndexResult(n // size, witness, True, normal, _max_commutator(group, witness))

    rows = {}

    def commutes(g):
        if g not in rows:
            rows[g] = _commutes_with(group, g, tol)
        return rows[g]

    best = None
    seeds = list(range(min(n, 8)))
    for seed in seeds:
        members = [0] if seed == 0 else [0, seed]
        cand = np.ones(n, dtype=bool)
        for m in members:
            cand &= commutes(m)
        while True:
            pool = [int(i) for i in np.nonzero(cand)[0] if int(i) not in members]
            if not pool:
                break
            scored = []
            for c in pool[:32]:
                scored.append((int(np.sum(cand & commutes(c))), -c, c))
            _, _, pick = max(scored)
            members.append(pick)
            cand &= commutes(pick)
        if best is None or len(members) > len(best):
            best = sorted(members)
    index = n // len(best) if n % len(best) == 0 else -(-n // len(best))
    return AbelianIndexResult(index, best, False, None, _max_commutator(group, best))


# --------------------------------------------------------------------------
# named groups, file I/O and spec strings


def quaternion_generators():
    return [np.array([[1j, 0], [0, -1j]]), np.array([[0, 1], [-1, 0]], dtype=complex)]


def quaternion_group() -> EnumeratedGroup:
    return enumerate_closure(quaternion_generators(), name="q8")


def trivial_group(d) -> EnumeratedGroup:
    return EnumeratedGroup(np.eye(d, dtype=complex)[None], name="trivial")


def matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(rows, d=None):
    m = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    if d is not None and m.shape != (d, d):
        raise DomainError(f"matrix has shape {m.shape}, expected ({d}, {d})")
    return as_cmatrix(m)


def load_generators(path):
    """Read ``{"d", "tol", "generators": [[[re, im], ...], ...]}``."""
    with open(path) as fh:
        data = json.load(fh)
    try:
        d = int(data["d"])
        tol = float(data.get("tol", 1e-8))
        gens = [matrix_from_json(g, d) for g in data["generators"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed generator file {path}: {exc}") from exc
    return d, tol, gens


def save_generators(path, generators, tol=1e-8):
    gens = [np.asarray(g, dtype=complex) for g in generators]
    payload = {"d": gens[0].shape[0], "tol": tol, "generators": [matrix_to_json(g) for g in gens]}
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_matrix(path):
    """Single-matrix variant: ``{"d": int, "matrix": [[[re, im], ...], ...]}``."""
    with open(path) as fh:
        data = json.load(fh)
    try:
        d = int(data["d"])
        rows = data["matrix"] if "matrix" in data else data["generators"][0]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise DomainError(f"malformed matrix file {path}: {exc}") from exc
    return matrix_from_json(rows, d)


def save_matrix(path, m):
    m = np.asarray(m, dtype=complex)
    with open(path, "w") as fh:
        json.dump({"d": m.shape[0], "matrix": matrix_to_json(m)}, fh)


def parse_group_spec(text, cap=10_000):
    """Parse ``hyperoct:16``, ``sym:32``, ``diag-sign:64``, ``diag-roots:8:3``,
    ``q8``, ``trivial:4`` or ``enum:FILE``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "hyperoct":
            return HyperOct(int(rest))
        if kind == "sym":
            return SymmetricAsUnitary(int(rest))
        if kind == "diag-sign":
            return DiagSign(int(rest))
        if kind == "diag-roots":
            d, n = rest.split(":")
            return DiagRoots(int(d), int(n))
        if kind == "q8":
            return quaternion_group()
        if kind == "trivial":
            return trivial_group(int(rest))
    except ValueError as exc:
        raise DomainError(f"bad group spec {text!r}: {exc}") from exc
    if kind == "enum":
        _, tol, gens = load_generators(rest)
        return enumerate_closure(gens, tol=tol, cap=cap, name="enum")
    raise DomainError(f"unknown group spec {text!r}")
