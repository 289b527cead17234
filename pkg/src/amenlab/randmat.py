"""Reproducible Gaussian and Haar random matrices.

Every draw comes from a :class:`SeededRng`, a (seed, stream) pair mapped to a
counter-based Philox generator.  Monte Carlo loops give sample ``i`` the
substream ``rng.child(i)``, so results do not depend on how samples are split
across workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .matcore import UnitaryMatrix, op_norm

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeededRng:
    seed: int
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream", int(self.stream) & _MASK64)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "SeededRng":
        """Independent substream for task ``index``; a pure function of the inputs."""
        ss = np.random.SeedSequence([self.stream, int(index)], spawn_key=(self.seed, 0xC0FFEE))
        return SeededRng(self.seed, int(ss.generate_state(1, np.uint64)[0]))


def _as_generator(rng):
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise DomainError(f"expected SeededRng or numpy Generator, got {type(rng).__name__}")


def complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard complex normals (real, imag iid N(0, 1)) by Box-Muller."""
    size = int(np.prod(shape))
    u1 = 1.0 - gen.random(size)  # (0, 1]
    u2 = gen.random(size)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    return (r * np.cos(theta) + 1j * r * np.sin(theta)).reshape(shape)


def gaussian_matrix(d: int, rng) -> np.ndarray:
    """d x d matrix of iid complex Gaussians with E|g_ij|^2 = 1/d."""
    if d < 1:
        raise DomainError("d must be positive")
    gen = _as_generator(rng)
    return complex_normal(gen, (d, d)) * math.sqrt(1.0 / (2.0 * d))


def haar_unitary(d: int, rng) -> UnitaryMatrix:
    """Haar-distributed unitary via QR of a Ginibre matrix.

    Column k of Q is multiplied by r_kk / |r_kk| so that the implied R has a
    positive diagonal; without this fix the law of Q depends on the QR routine.
    """
    if d < 1:
        raise DomainError("d must be positive")
    gen = _as_generator(rng)
    for _ in range(3):
        z = complex_normal(gen, (d, d))
        q, r = np.linalg.qr(z)
        diag = np.diag(r)
        mod = np.abs(diag)
        if np.min(mod) <= 1e-12 * max(1.0, float(np.max(mod))):
            continue
        return UnitaryMatrix(q * (diag / mod)[None, :])
    raise NumericError("degenerate Ginibre draw in three consecutive attempts")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    sem: float
    n: int
    seed: int

    def as_dict(self):
        return {"mean": self.mean, "sem": self.sem, "n": self.n, "seed": self.seed}


def summarize(values, seed) -> McEstimate:
    """Mean and standard error; numpy's pairwise summation in index order."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 1:
        raise DomainError("need at least one sample")
    mean = float(np.sum(values) / n)
    sem = float(np.sqrt(np.sum((values - mean) ** 2) / (n - 1)) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(mean, sem, n, int(seed))


def op_norm_estimate(d: int, n_samples: int, rng: SeededRng) -> McEstimate:
    """Monte Carlo estimate of E||g_d||."""
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    vals = []
    for i in range(n_samples):
        g = gaussian_matrix(d, rng.child(i))
        try:
            vals.append(op_norm(g))
        except NumericError:
            # clustered top singular values; retry once with a 10x longer cap
            vals.append(op_norm(g, max_iter=100 * d + 1000))
    return summarize(vals, rng.seed)
