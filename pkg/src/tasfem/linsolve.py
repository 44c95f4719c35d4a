"""Preconditioned conjugate gradients for the assembled SPD systems.

Matrices are ``scipy.sparse`` CSR arrays; only the matrix-vector product and
triangular solves are delegated to scipy, the iteration itself is here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

from .exceptions import NotSPDError

PRECONDITIONERS = ("none", "jacobi", "ssor")
DEFAULT_RTOL = 1e-7


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    converged: bool
    final_relative_residual: float


def default_max_iter(n):
    return int(10 * math.sqrt(n)) + 100


def _as_csr(A):
    if not sp.issparse(A):
        A = sp.csr_matrix(np.asarray(A, dtype=float))
    A = sp.csr_matrix(A)
    A.sort_indices()
    return A


class _Jacobi:
    def __init__(self, A):
        d = A.diagonal()
        if np.any(d <= 0):
            raise NotSPDError("nonpositive diagonal entry; matrix is not SPD")
        self.inv = 1.0 / d

    def __call__(self, r):
        return self.inv * r


class _SSOR:
    def __init__(self, A, omega=1.0):
        d = A.diagonal()
        if np.any(d <= 0):
            raise NotSPDError("nonpositive diagonal entry; matrix is not SPD")
        self.omega = omega
        D = sp.diags(d / omega)
        self.lower = (sp.tril(A, k=-1) + D).tocsr()
        self.upper = (sp.triu(A, k=1) + D).tocsr()
        self.mid = d / omega
        self.scale = (2.0 - omega) / omega

    def __call__(self, r):
        y = spsolve_triangular(self.lower, r, lower=True)
        z = spsolve_triangular(self.upper, self.mid * y, lower=False)
        return self.scale * z


def make_preconditioner(A, kind="jacobi"):
    if kind == "none":
        return lambda r: r
    if kind == "jacobi":
        return _Jacobi(A)
    if kind == "ssor":
        return _SSOR(A)
    raise ValueError(f"unknown preconditioner {kind!r}; choose from {PRECONDITIONERS}")


def pcg(A, b, rtol=DEFAULT_RTOL, max_iter=None, precond="jacobi", x0=None, callback=None):
    """Solve A x = b until ||b - A x|| / ||b|| <= rtol.

    Raises NotSPDError on breakdown (p^T A p <= 0).  Hitting ``max_iter``
    returns a report with ``converged=False``.  ``callback(it, rel)`` sees
    the recurrence residual after every iteration.
    """
    if not 0.0 < rtol < 1.0:
        raise ValueError(f"rtol must lie in (0, 1), got {rtol}")
    A = _as_csr(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    if max_iter is None:
        max_iter = default_max_iter(n)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = float(np.linalg.norm(b))
    if n == 0 or bnorm == 0.0:
        return SolveReport(np.zeros(n), 0, True, 0.0)
    M = make_preconditioner(A, precond)

    r = b - A @ x
    z = M(r)
    p = z.copy()
    rz = float(r @ z)
    it = 0
    rel = float(np.linalg.norm(r)) / bnorm
    while it < max_iter:
        if rel <= rtol:
            # confirm with the true residual to guard against recurrence drift
            r = b - A @ x
            rel = float(np.linalg.norm(r)) / bnorm
            if rel <= rtol:
                return SolveReport(x, it, True, rel)
            z = M(r)
            p = z.copy()
            rz = float(r @ z)
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise NotSPDError(f"CG breakdown at iteration {it}: p^T A p = {pAp:.3e}")
        step = rz / pAp
        x += step * p
        r -= step * Ap
        z = M(r)
        rz_new = float(r @ z)
        p *= rz_new / rz
        p += z
        rz = rz_new
        it += 1
        rel = float(np.linalg.norm(r)) / bnorm
        if callback is not None:
            callback(it, rel)
    rel = float(np.linalg.norm(b - A @ x)) / bnorm
    return SolveReport(x, it, rel <= rtol, rel)
