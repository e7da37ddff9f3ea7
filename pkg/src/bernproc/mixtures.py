"""Eigenmode measures and their geometric mixtures.

Each multi-index ``m`` gives a pair of initial/final data proportional to the
tensor Hermite function ``h_m``; the resulting endpoint measures have unit
total mass but change sign when ``m != 0``.  Mixing them with the geometric
weights ``p_m`` produces a positive, non-Markovian endpoint density

    mu(x, y) = (2 (cosh(lam (theta+1) T) - 1))^{N/2} g(x, T, y) g(x, theta T, y).

Quadratures below factor per axis whenever the integrand is a tensor
product, which every integral here is.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .mehler import HarmonicParams, log_mehler, mehler_closed, mehler_series
from .special_functions import gauss_hermite_integrate, scaled_hermite_functions, tensor_hermite

__all__ = [
    "MAX_MODE_GROWTH",
    "MixtureParams",
    "eigenmode_datum",
    "signed_measure_total_mass",
    "log_mixture_weight",
    "mixture_weight",
    "mixture_weight_partial_sum",
    "mixture_weight_tail_bound",
    "mixture_density_closed",
    "mixture_density_series",
    "mixture_mass",
    "kernel_pair_trace",
    "limiting_measure_diag_check",
    "limiting_measure_mass",
    "nonmarkov_witness",
]

# Signed-mass quadratures lose about exp(|m| lam T) * eps to cancellation.
MAX_MODE_GROWTH = 20.0


@dataclass(frozen=True)
class MixtureParams:
    params: HarmonicParams
    theta: float

    def __post_init__(self):
        if not (np.isfinite(self.theta) and self.theta > 0):
            raise DomainError(f"theta must be > 0 for the mixture density, got {self.theta}")

    @property
    def period(self) -> float:
        return (self.theta + 1.0) * self.params.T


def _multi_index(m, N):
    m = np.atleast_1d(np.asarray(m, dtype=int))
    if m.shape != (N,):
        raise DomainError(f"multi-index {m.tolist()} does not have length N = {N}")
    if np.any(m < 0):
        raise DomainError("multi-index entries must be >= 0")
    return m


def _log_prefactor(lam, L, N):
    # log (2 (cosh(lam L) - 1))^{N/2} = N log(2 sinh(lam L / 2))
    z = lam * L / 2.0
    return N * (z + np.log(-np.expm1(-2.0 * z)))


def eigenmode_datum(m, p: HarmonicParams, x):
    """Common value of the initial and final data for mode ``m``:
    ``e^{(|m| + N/2) lam T / 2} h_m(x)``."""
    m = _multi_index(m, p.N)
    return np.exp(0.5 * (m.sum() + 0.5 * p.N) * p.lam * p.T) * tensor_hermite(m, p.lam, x)


def signed_measure_total_mass(m, p: HarmonicParams, quad_order: int = 128) -> float:
    """``int int phi_m(x) psi_m(y) g(x, T, y) dx dy``; equals one for every ``m``.

    The integrand factors over axes, so this is a product of ``N``
    two-dimensional Gauss-Hermite quadratures.
    """
    m = _multi_index(m, p.N)
    if m.sum() * p.lam * p.T > MAX_MODE_GROWTH:
        raise DomainError(
            f"|m| lam T = {m.sum() * p.lam * p.T:.3g} exceeds {MAX_MODE_GROWTH}; "
            "the quadrature would cancel terms of size exp(|m| lam T)"
        )
    if quad_order < 2 * int(m.max()) + 16:
        raise DomainError(f"quadrature order {quad_order} is too low for degree {int(m.max())}")
    lam, T = p.lam, p.T
    p1 = HarmonicParams(lam, T, 1)
    # Along x = y the integrand decays like exp(-lam (1 + tanh(lam T / 2)) x^2 / 2).
    scale = np.sqrt(2.0 / (lam * (1.0 + np.tanh(lam * T / 2.0))))
    total = 1.0
    for mj in m:
        def f(pts, mj=mj):
            x, y = pts[:, :1], pts[:, 1:]
            return (
                eigenmode_datum([mj], p1, x)
                * eigenmode_datum([mj], p1, y)
                * mehler_closed(x, T, y, p1)
            )

        total *= gauss_hermite_integrate(f, 2, quad_order, scale=scale)
    return total


def log_mixture_weight(m, mp: MixtureParams) -> float:
    p = mp.params
    m = _multi_index(m, p.N)
    L = mp.period
    return float(_log_prefactor(p.lam, L, p.N) - (m.sum() + 0.5 * p.N) * p.lam * L)


def mixture_weight(m, mp: MixtureParams) -> float:
    """Geometric weight ``p_m = (2(cosh(lam L) - 1))^{N/2} e^{-(|m| + N/2) lam L}``, ``L = (theta+1) T``."""
    return math.exp(log_mixture_weight(m, mp))


def mixture_weight_partial_sum(mp: MixtureParams, M: int) -> float:
    """Sum of ``p_m`` over all multi-indices with ``m_j <= M``, by enumeration."""
    N = mp.params.N
    return math.fsum(
        mixture_weight(m, mp) for m in itertools.product(range(M + 1), repeat=N)
    )


def mixture_weight_tail_bound(mp: MixtureParams, M: int) -> float:
    """Union bound ``N e^{-(M+1) lam L} / (1 - e^{-lam L})`` on the omitted mass."""
    z = mp.params.lam * mp.period
    return mp.params.N * math.exp(-(M + 1) * z) / -math.expm1(-z)


def mixture_density_closed(x, y, mp: MixtureParams):
    p = mp.params
    L = mp.period
    out = np.exp(
        _log_prefactor(p.lam, L, p.N)
        + log_mehler(x, p.T, y, p)
        + log_mehler(x, mp.theta * p.T, y, p)
    )
    return float(out) if np.ndim(out) == 0 else out


def mixture_density_series(x, y, mp: MixtureParams, M: int = 60):
    """``sum_{m_j <= M} p_m phi_m(x) psi_m(y) g(x, T, y)`` and its error bound.

    Enumerates multi-indices explicitly.  The bound comes from the Hermite
    series of ``g(x, theta T, y)``, which the mode sum reproduces term by
    term, scaled by the positive prefactor.
    """
    p = mp.params
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = mehler_closed(x, p.T, y, p)
    # Per-axis products h_k(x_j) h_k(y_j), each of shape (M + 1,) + batch.
    hx = [scaled_hermite_functions(M, p.lam, x[..., j]) for j in range(p.N)]
    hy = [scaled_hermite_functions(M, p.lam, y[..., j]) for j in range(p.N)]
    pair = [a * b for a, b in zip(hx, hy)]
    acc = 0.0
    for m in itertools.product(range(M + 1), repeat=p.N):
        # p_m * phi_m(x) * psi_m(y) with the exponentials combined in log space
        log_w = log_mixture_weight(m, mp) + (sum(m) + 0.5 * p.N) * p.lam * p.T
        term = np.exp(log_w)
        for j, mj in enumerate(m):
            term = term * pair[j][mj]
        acc = acc + term
    value = acc * g
    tail = mehler_series(x, mp.theta * p.T, y, p, M).tail_bound
    bound = np.exp(_log_prefactor(p.lam, mp.period, p.N)) * g * tail
    return value, bound


def _pair_scale(lam, t1, t2):
    return 1.0 / np.sqrt(lam * (np.tanh(lam * t1 / 2.0) + np.tanh(lam * t2 / 2.0)))


def kernel_pair_trace(mp: MixtureParams, quad_order: int = 128) -> float:
    """``int int g(x, T, y) g(x, theta T, y) dx dy`` by Gauss-Hermite quadrature.

    Both kernels factor over axes, so the ``2N``-dimensional integral is the
    ``N``-th power of a two-dimensional one.
    """
    p = mp.params
    p1 = HarmonicParams(p.lam, p.T, 1)
    scale = _pair_scale(p.lam, p.T, mp.theta * p.T)

    def f(pts):
        x, y = pts[:, :1], pts[:, 1:]
        return mehler_closed(x, p.T, y, p1) * mehler_closed(x, mp.theta * p.T, y, p1)

    return gauss_hermite_integrate(f, 2, quad_order, scale=scale) ** p.N


def mixture_mass(mp: MixtureParams, quad_order: int = 128) -> float:
    """Total mass of the mixture density; should be one."""
    p = mp.params
    return math.exp(_log_prefactor(p.lam, mp.period, p.N)) * kernel_pair_trace(mp, quad_order)


def limiting_measure_diag_check(x, p: HarmonicParams):
    """Diagonal density ``(2(cosh(lam T) - 1))^{N/2} g(x, T, x)`` of the theta -> 0 limit."""
    out = np.exp(_log_prefactor(p.lam, p.T, p.N) + log_mehler(x, p.T, x, p))
    return float(out) if np.ndim(out) == 0 else out


def limiting_measure_mass(p: HarmonicParams, quad_order: int = 128) -> float:
    """``int limiting_measure_diag_check(x) dx`` by quadrature; should be one."""
    # g(x, T, x) = c * exp(-lam tanh(lam T / 2) |x|^2)
    scale = 1.0 / np.sqrt(p.lam * np.tanh(p.lam * p.T / 2.0))
    return gauss_hermite_integrate(
        lambda x: limiting_measure_diag_check(x, p), p.N, quad_order, scale=scale
    )


def nonmarkov_witness(mp: MixtureParams, x, y, delta: float = 1.0) -> float:
    """Mixed second difference of ``log(mu(x, y) / g(x, T, y))`` along axis 0.

    A Markov endpoint measure makes this ratio a product ``f(x) h(y)``, whose
    log has zero mixed difference.
    """
    p = mp.params
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    e = np.zeros(p.N)
    e[0] = delta

    def r(a, b):
        return math.log(mixture_density_closed(a, b, mp)) - log_mehler(a, p.T, b, p)

    return abs(r(x + e, y + e) - r(x + e, y) - r(x, y + e) + r(x, y))
