"""Hermite functions and Gauss-Hermite quadrature.

The normalized Hermite functions

    h_m(x) = (sqrt(pi) 2^m m!)^(-1/2) exp(-x^2/2) H_m(x)

are evaluated by the three-term recurrence on the normalized functions
themselves, so neither H_m nor m! is ever formed.  The Gaussian factor is
applied at the very end together with a running log-scale, which keeps the
recurrence finite far outside the range where exp(-x^2/2) underflows.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "HERMITE_SUP_BOUND",
    "MAX_DEGREE",
    "hermite_function",
    "hermite_functions",
    "scaled_hermite_function",
    "scaled_hermite_functions",
    "tensor_hermite",
    "gauss_hermite_rule",
    "gauss_hermite_integrate",
]

# Uniform bound on sup_x |h_m(x)|, checked by a sweep over m <= 200 in the tests.
HERMITE_SUP_BOUND = 0.82

# Per-axis truncation bound for multi-indices.
MAX_DEGREE = 200

# Tensor rules beyond this many nodes should be factorized by the caller.
MAX_QUAD_NODES = 4_000_000

_PI_M14 = np.pi ** -0.25
_RESCALE = 1e150


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("Hermite functions need finite arguments")
    return x


def hermite_functions(max_degree: int, x) -> np.ndarray:
    """All normalized Hermite functions ``h_0 .. h_max_degree`` at ``x``.

    Returns an array of shape ``(max_degree + 1,) + np.shape(x)``.
    """
    if max_degree < 0:
        raise DomainError(f"degree must be >= 0, got {max_degree}")
    x = _check_finite(x)
    out = np.empty((max_degree + 1,) + x.shape)

    # Recurrence without the Gaussian factor; log_scale collects rescalings.
    log_scale = np.zeros(x.shape)
    prev = np.zeros(x.shape)
    cur = np.full(x.shape, _PI_M14)
    gauss = -0.5 * x * x
    out[0] = cur * np.exp(gauss)
    for m in range(max_degree):
        nxt = x * np.sqrt(2.0 / (m + 1)) * cur - np.sqrt(m / (m + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            cur = np.where(big, cur / _RESCALE, cur)
            prev = np.where(big, prev / _RESCALE, prev)
            log_scale = np.where(big, log_scale + np.log(_RESCALE), log_scale)
        out[m + 1] = cur * np.exp(gauss + log_scale)
    return out


def hermite_function(m: int, x):
    """Normalized Hermite function ``h_m(x)``; scalar in, scalar out."""
    m = int(m)
    if m < 0:
        raise DomainError(f"degree must be >= 0, got {m}")
    val = hermite_functions(m, x)[m]
    return float(val) if val.ndim == 0 else val


def _check_rate(lam):
    if not (np.isfinite(lam) and lam > 0):
        raise DomainError(f"lambda must be positive, got {lam}")


def scaled_hermite_functions(max_degree: int, lam: float, x) -> np.ndarray:
    """``lam**(1/4) * h_m(sqrt(lam) * x)`` for ``m = 0 .. max_degree``."""
    _check_rate(lam)
    return lam ** 0.25 * hermite_functions(max_degree, np.sqrt(lam) * np.asarray(x, dtype=float))


def scaled_hermite_function(m: int, lam: float, x):
    _check_rate(lam)
    return lam ** 0.25 * hermite_function(m, np.sqrt(lam) * np.asarray(x, dtype=float))


def tensor_hermite(m, lam: float, x):
    """Product of scaled Hermite functions, one factor per axis.

    ``x`` has shape ``(..., N)`` and ``m`` is a length-``N`` multi-index.
    """
    m = np.asarray(m, dtype=int)
    x = np.asarray(x, dtype=float)
    if m.ndim != 1 or x.shape[-1:] != m.shape:
        raise DomainError(
            f"multi-index of length {m.size} does not match point dimension {x.shape[-1:]}"
        )
    if np.any(m < 0):
        raise DomainError("multi-index entries must be >= 0")
    _check_rate(lam)
    out = np.ones(x.shape[:-1])
    for j, mj in enumerate(m):
        out = out * scaled_hermite_functions(int(mj), lam, x[..., j])[mj]
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def gauss_hermite_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and full-line weights for integrals over the real line.

    ``sum(w * f(z))`` approximates ``int f(z) dz``; the ``exp(-z^2)`` weight
    of the classical rule is folded into ``w``.
    """
    if order < 2:
        raise DomainError(f"quadrature order must be >= 2, got {order}")
    z, w = np.polynomial.hermite.hermgauss(order)
    w = w * np.exp(z * z)
    z.flags.writeable = False
    w.flags.writeable = False
    return z, w


def gauss_hermite_integrate(f, dim: int, order: int = 128, scale=1.0, center=0.0) -> float:
    """Tensor Gauss-Hermite approximation of ``int_{R^dim} f(x) dx``.

    ``f`` receives an array of points of shape ``(K, dim)`` and returns ``K``
    values.  Nodes are placed at ``center + scale * z`` per axis; ``scale``
    should roughly match the Gaussian width of the integrand.
    """
    if order ** dim > MAX_QUAD_NODES:
        raise DomainError(f"{order}^{dim} quadrature nodes exceed the limit of {MAX_QUAD_NODES}")
    z, w = gauss_hermite_rule(order)
    scale = np.broadcast_to(np.asarray(scale, dtype=float), (dim,))
    center = np.broadcast_to(np.asarray(center, dtype=float), (dim,))
    grids = np.meshgrid(*([z] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1) * scale + center
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1) * np.prod(scale)
    vals = np.asarray(f(pts), dtype=float)
    return float(np.dot(wts, vals))
