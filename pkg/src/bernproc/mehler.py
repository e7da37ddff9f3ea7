"""Mehler's kernel for the harmonic-oscillator heat equation.

``g(x, t, y)`` is the Green function of

    d_t u = 1/2 Lap u - lam^2 |x|^2 / 2 * u

on R^N.  It is evaluated in closed form through a log-domain helper, and
as a truncated Hermite-function series whose per-axis factorization keeps
the cost linear in N.  The remaining functions are numerical certificates:
finite-difference PDE residuals, the semigroup law by quadrature, the
delta-limit as t -> 0, and the root identity behind the series.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .special_functions import (
    HERMITE_SUP_BOUND,
    gauss_hermite_integrate,
    scaled_hermite_functions,
)

__all__ = [
    "HarmonicParams",
    "SeriesResult",
    "log_sinh",
    "log_mehler",
    "mehler_closed",
    "mehler_series",
    "semigroup_residual",
    "pde_residual",
    "delta_limit_error",
    "root_identity_residuals",
]

DEFAULT_TRUNCATION = 80
DEFAULT_QUAD_ORDER = 128

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class HarmonicParams:
    """Oscillator rate ``lam``, horizon ``T`` and spatial dimension ``N``."""

    lam: float = 1.0
    T: float = 1.0
    N: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"lam must be positive, got {self.lam}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise DomainError(f"T must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))


def log_sinh(z):
    """``log(sinh(z))`` for ``z > 0`` without overflow."""
    z = np.asarray(z, dtype=float)
    return z + np.log(-np.expm1(-2.0 * z)) - np.log(2.0)


def _as_points(x, N):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != N:
        raise DomainError(f"point dimension {x.shape[-1]} does not match N = {N}")
    return x


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise DomainError("Mehler's kernel needs t > 0")
    return t


def log_mehler(x, t, y, p: HarmonicParams):
    """Natural log of Mehler's kernel.

    Uses ``cosh(z)(|x|^2+|y|^2) - 2<x,y> = |x-y|^2 + (cosh z - 1)(|x|^2+|y|^2)``
    and ``(cosh z - 1)/sinh z = tanh(z/2)``, which is stable for both tiny
    and huge ``z = lam t``.
    """
    x = _as_points(x, p.N)
    y = _as_points(y, p.N)
    t = _check_time(t)
    z = p.lam * t
    d2 = np.sum((x - y) ** 2, axis=-1)
    s2 = np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1)
    log_pref = 0.5 * p.N * (np.log(p.lam / (2.0 * np.pi)) - log_sinh(z))
    expo = -p.lam * d2 * np.exp(-log_sinh(z)) / 2.0 - p.lam * np.tanh(z / 2.0) * s2 / 2.0
    out = log_pref + expo
    return float(out) if out.ndim == 0 else out


def mehler_closed(x, t, y, p: HarmonicParams):
    """Closed-form Mehler kernel ``g_lam(x, t, y)``.

    Points carry the spatial dimension on the last axis and broadcast
    against each other and against ``t``.
    """
    out = np.exp(log_mehler(x, t, y, p))
    return float(out) if np.ndim(out) == 0 else out


class SeriesResult(NamedTuple):
    value: float
    tail_bound: float


def _axis_series(xj, yj, t, lam, M):
    hx = scaled_hermite_functions(M, lam, xj)
    hy = scaled_hermite_functions(M, lam, yj)
    decay = np.exp(-(np.arange(M + 1) + 0.5) * lam * t)
    terms = decay.reshape((-1,) + (1,) * np.ndim(hx[0])) * hx * hy
    return terms.sum(axis=0), np.abs(terms).sum(axis=0)


def mehler_series(x, t, y, p: HarmonicParams, M: int = DEFAULT_TRUNCATION) -> SeriesResult:
    """Hermite expansion of Mehler's kernel truncated at ``m_j <= M`` per axis.

    The N-dimensional sum is the product of N one-dimensional partial sums.
    ``tail_bound`` bounds ``|series - kernel|``: the geometric truncation
    tail (using the uniform Hermite bound) plus a floating-point allowance
    proportional to the sum of absolute terms.
    """
    if M < 0:
        raise DomainError(f"truncation order must be >= 0, got {M}")
    t = float(t)
    if not t > 0:
        raise DomainError("the Hermite series of Mehler's kernel diverges at t <= 0")
    x = _as_points(x, p.N)
    y = _as_points(y, p.N)
    x, y = np.broadcast_arrays(x, y)
    lam = p.lam

    partial = []
    abs_sums = []
    for j in range(p.N):
        s, a = _axis_series(x[..., j], y[..., j], t, lam, M)
        partial.append(s)
        abs_sums.append(a)

    # One-axis truncation tail: sum_{m > M} e^{-(m+1/2) lam t} |h_{m,lam}(x) h_{m,lam}(y)|.
    q = np.exp(-lam * t)
    r = np.sqrt(lam) * HERMITE_SUP_BOUND ** 2 * np.exp(-0.5 * lam * t) * q ** (M + 1) / (-np.expm1(-lam * t))

    value = np.ones(x.shape[:-1])
    upper = np.ones(x.shape[:-1])
    lower = np.ones(x.shape[:-1])
    abs_prod = np.ones(x.shape[:-1])
    for s, a in zip(partial, abs_sums):
        value = value * s
        upper = upper * (np.abs(s) + r)
        lower = lower * np.abs(s)
        abs_prod = abs_prod * a
    rounding = 4.0 * (M + 2) * p.N * _EPS * abs_prod
    bound = (upper - lower) + rounding
    if value.ndim == 0:
        return SeriesResult(float(value), float(bound))
    return SeriesResult(value, bound)


def _kernel_scale(lam, t):
    # Width of exp(-lam tanh(lam t / 2) |z|^2 / 2 - ...) along the diagonal.
    return 1.0 / np.sqrt(lam * np.tanh(lam * t / 2.0))


def semigroup_residual(x, s, t, y, p: HarmonicParams, quad_order: int = DEFAULT_QUAD_ORDER) -> float:
    """Relative gap in ``int g(x,s,z) g(z,t,y) dz = g(x,s+t,y)``.

    The integral over ``z`` is a tensor Gauss-Hermite rule centred at the
    origin with a width taken from the two kernels.
    """
    if quad_order < 2:
        raise DomainError(f"quadrature order must be >= 2, got {quad_order}")
    s = float(s)
    t = float(t)
    if not (s > 0 and t > 0):
        raise DomainError("semigroup law needs s, t > 0")
    x = _as_points(x, p.N)
    y = _as_points(y, p.N)
    lam = p.lam
    # Precision of z in the product: lam (coth(lam s) + coth(lam t)).
    prec = lam * (1.0 / np.tanh(lam * s) + 1.0 / np.tanh(lam * t))
    scale = np.sqrt(2.0 / prec)
    integral = gauss_hermite_integrate(
        lambda z: mehler_closed(x, s, z, p) * mehler_closed(z, t, y, p),
        p.N,
        quad_order,
        scale=scale,
    )
    target = mehler_closed(x, s + t, y, p)
    return abs(integral - target) / target


def pde_residual(x, t, y, p: HarmonicParams, h: float) -> float:
    """Centered-difference residual of ``d_t g - 1/2 Lap_x g + lam^2|x|^2/2 g``."""
    t = float(t)
    if not (t > h > 0):
        raise DomainError(f"need t > h > 0, got t={t}, h={h}")
    x = _as_points(x, p.N).astype(float)
    y = _as_points(y, p.N)

    def g(xx, tt):
        return mehler_closed(xx, tt, y, p)

    g0 = g(x, t)
    dt = (g(x, t + h) - g(x, t - h)) / (2.0 * h)
    lap = 0.0
    for j in range(p.N):
        e = np.zeros(p.N)
        e[j] = h
        lap = lap + (g(x + e, t) - 2.0 * g0 + g(x - e, t)) / (h * h)
    res = dt - 0.5 * lap + 0.5 * p.lam ** 2 * np.sum(x * x, axis=-1) * g0
    return float(np.max(np.abs(res)))


def delta_limit_error(f, x, t, p: HarmonicParams, quad_order: int = DEFAULT_QUAD_ORDER) -> float:
    """``|int g(x,t,y) f(y) dy - f(x)|`` for a smooth test function ``f``.

    ``f`` maps points of shape ``(K, N)`` to ``K`` values.  The quadrature
    is centred at ``x`` with the kernel's own width, so it stays resolved
    as ``t -> 0``.
    """
    t = float(t)
    if not t > 0:
        raise DomainError("delta-limit harness needs t > 0")
    x = _as_points(x, p.N)
    lam = p.lam
    scale = np.sqrt(2.0 * np.sinh(lam * t) / lam)
    integral = gauss_hermite_integrate(
        lambda yy: mehler_closed(x, t, yy, p) * f(yy), p.N, quad_order, scale=scale, center=x
    )
    return abs(integral - float(np.asarray(f(x[None, :]))[0]))


def root_identity_residuals(lam: float, t: float) -> tuple[float, float]:
    """Relative residuals of the two coefficient-matching conditions at ``gamma = e^{-lam t}``.

    ``(1 + g^2)/(1 - g^2) = coth(lam t)`` and ``g/(1 - g^2) = 1/(2 sinh(lam t))``.
    """
    z = lam * t
    if not z > 0:
        raise DomainError("need lam * t > 0")
    gamma = np.exp(-z)
    one_minus = -np.expm1(-2.0 * z)
    first = (1.0 + gamma * gamma) / one_minus
    second = gamma / one_minus
    coth = 1.0 / np.tanh(z)
    inv2sinh = 0.5 / np.sinh(z)
    return abs(first - coth) / coth, abs(second - inv2sinh) / inv2sinh
