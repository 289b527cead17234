"""Dense complex matrices and the metrics used on U(d).

Matrices are plain ``numpy`` complex arrays.  ``UnitaryMatrix`` is a thin
checked wrapper used where unitarity is a precondition.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, NumericError

UNITARY_TOL = 1e-9


def as_cmatrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def unitarity_defect(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))))


class UnitaryMatrix:
    """A d x d matrix certified unitary to ``UNITARY_TOL`` (max-entry norm)."""

    __slots__ = ("inner",)

    def __init__(self, a, tol=UNITARY_TOL):
        a = as_cmatrix(a)
        defect = unitarity_defect(a)
        if defect > tol:
            raise DomainError(f"matrix is not unitary (defect {defect:.3e} > {tol:.1e})")
        a.setflags(write=False)
        self.inner = a

    @property
    def dim(self):
        return self.inner.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.inner if dtype is None else self.inner.astype(dtype)

    def __matmul__(self, other):
        return np.asarray(self) @ np.asarray(other)

    def __repr__(self):
        return f"UnitaryMatrix(dim={self.dim})"


def _pair(u, v):
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise DomainError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return u, v


def trace(a) -> complex:
    return complex(np.trace(np.asarray(a, dtype=complex)))


def delta2(u, v) -> float:
    """Normalised Hilbert-Schmidt distance (d^-1 tr|u - v|^2)^(1/2)."""
    u, v = _pair(u, v)
    diff = u - v
    return float(np.sqrt(np.vdot(diff, diff).real / u.shape[0]))


def scaled_frobenius(a) -> float:
    """(d^-1/2 tr|a|^2)^(1/2); note the d^-1/2, not d^-1, normalisation."""
    a = np.asarray(a, dtype=complex)
    return float(np.sqrt(np.vdot(a, a).real / np.sqrt(a.shape[0])))


def op_norm(a, rtol=1e-10, max_iter=None) -> float:
    """Largest singular value by power iteration on a* a.

    Step k multiplies by (a* a)^(2^k), kept as a Frobenius-normalised running
    square, so a gap ratio r between the top two singular values shrinks like
    r^(2^k) instead of r^k; near-degenerate spectra (differences of random
    unitaries) then converge in a few dozen steps.  The start vector is the
    all-ones vector, slightly tilted by a fixed irregular vector so it is never
    exactly orthogonal to the top singular vector of a structured matrix.  Stops
    when the Rayleigh quotient of a* a changes by at most ``rtol`` relative;
    raises ``NumericError`` (carrying the last estimate) after ``10 d + 100``
    steps.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[1]
    if max_iter is None:
        max_iter = 10 * d + 100
    fro = np.sqrt(np.vdot(a, a).real)
    if fro == 0.0:
        return 0.0
    x = np.ones(d, dtype=complex) + 1e-2 * np.sin(np.arange(1, d + 1) * 0.6180339887498949)
    x /= np.linalg.norm(x)
    gram = a.conj().T @ a
    power = gram / np.linalg.norm(gram)
    rho = float(np.vdot(x, gram @ x).real)
    restarted = False
    for _ in range(max_iter):
        y = power @ x
        ny = np.linalg.norm(y)
        if ny == 0.0 and not restarted:
            # start vector in the kernel; restart from a fixed non-symmetric vector
            x = np.arange(1, d + 1, dtype=complex)
            x /= np.linalg.norm(x)
            restarted = True
            continue
        if ny == 0.0:
            power = gram / np.linalg.norm(gram)
            continue
        x = y / ny
        rho_new = float(np.vdot(x, gram @ x).real)
        if abs(rho_new - rho) <= rtol * abs(rho_new):
            return float(np.sqrt(max(rho_new, 0.0)))
        rho = rho_new
        sq = power @ power
        nsq = np.linalg.norm(sq)
        if nsq > 0.0 and np.isfinite(nsq):
            power = sq / nsq
    raise NumericError(
        f"power iteration did not converge in {max_iter} steps", partial=float(np.sqrt(max(rho, 0.0)))
    )


def delta_inf(u, v, rtol=1e-10) -> float:
    """Operator-norm distance ||u - v||."""
    u, v = _pair(u, v)
    return op_norm(u - v, rtol=rtol)
