"""Dense symmetric-matrix helpers.

Everything here is O(n^3) and meant for the modest grid sizes of the
verification suite; the tridiagonal structure of the closed-form precision
matrices is deliberately not exploited.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, FactorizationError

__all__ = ["is_symmetric", "cholesky", "invert_dense", "kron_with_identity"]


def is_symmetric(A, rtol: float = 1e-13) -> bool:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    scale = max(np.max(np.abs(A)), np.finfo(float).tiny) if A.size else 1.0
    return bool(np.max(np.abs(A - A.T), initial=0.0) <= rtol * scale)


def _square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    return A


def cholesky(A, jitter: float = 0.0) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == A + jitter * I``.

    Column-by-column Cholesky-Banachiewicz so the failing pivot can be
    reported.  Jitter is never escalated behind the caller's back.
    """
    A = _square(A)
    if jitter < 0:
        raise DomainError(f"jitter must be >= 0, got {jitter}")
    if not is_symmetric(A):
        raise DomainError("matrix is not symmetric")
    n = A.shape[0]
    M = A + jitter * np.eye(n)
    L = np.zeros_like(M)
    for j in range(n):
        d = M[j, j] - np.dot(L[j, :j], L[j, :j])
        if not d > 0:
            raise FactorizationError(j, float(d))
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1 :, j] = (M[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def invert_dense(A) -> np.ndarray:
    """Inverse of a symmetric matrix, symmetrized on output."""
    A = _square(A)
    n = A.shape[0]
    if n == 0:
        return A.copy()
    if np.linalg.cond(A) > 1.0 / (64 * np.finfo(float).eps):
        raise np.linalg.LinAlgError("matrix is singular to working precision")
    inv = np.linalg.solve(A, np.eye(n))
    return 0.5 * (inv + inv.T)


def kron_with_identity(C, N: int) -> np.ndarray:
    """``C ⊗ I_N``: time-major layout, coordinate ``k * N + i``."""
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N}")
    return np.kron(_square(C), np.eye(int(N)))
