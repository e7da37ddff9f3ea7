"""Finite-dimensional Gaussian laws of the harmonic Bernstein processes.

Five process laws share the oscillator parameters ``(lam, T, N)``:

* ``stationary``: stationary Ornstein-Uhlenbeck, variance ``1/(2 lam)``;
* ``pinned``: Ornstein-Uhlenbeck started at the origin;
* ``reversed``: its time reversal, ending at the origin at ``t = T``;
* ``bridge``: the Bernstein bridge from the origin to an endpoint ``a``;
* ``periodic``: the stationary non-Markovian family indexed by
  ``theta >= 0``, a periodic Ornstein-Uhlenbeck process of period
  ``(theta + 1) T`` watched on ``[0, T]``.

Components are independent and identically distributed, so every law is
described by one scalar covariance function; the ``nN``-dimensional
covariance is its Gram matrix tensored with ``I_N``.

All hyperbolic expressions go through ``expm1`` / ``log_sinh`` forms, which
stay accurate as ``lam * |t - s| -> 0`` and do not overflow for large
``lam * T``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .linalg import kron_with_identity
from .mehler import HarmonicParams, log_sinh
from .special_functions import gauss_hermite_integrate

__all__ = [
    "Kind",
    "ProcessSpec",
    "TimeGrid",
    "GaussianLaw",
    "covariance_scalar",
    "covariance_gram",
    "mean_function",
    "marginal_law",
    "precision_matrix",
    "fdd_law",
    "solution_u",
    "solution_v",
    "pde_residual_uv",
    "duality_mass",
    "brownian_bridge_limit_check",
    "markov_factorization_gap",
    "periodic_covariance_cosh",
    "periodic_covariance_exp",
]


class Kind(str, enum.Enum):
    STATIONARY = "stationary"
    PINNED = "pinned"
    REVERSED = "reversed"
    BRIDGE = "bridge"
    PERIODIC = "periodic"


MARKOV_KINDS = (Kind.STATIONARY, Kind.PINNED, Kind.REVERSED, Kind.BRIDGE)


@dataclass(frozen=True)
class ProcessSpec:
    """One of the five process laws, tied to its oscillator parameters.

    Prefer the constructors :meth:`stationary`, :meth:`pinned`,
    :meth:`reversed`, :meth:`bridge` and :meth:`periodic`.
    """

    params: HarmonicParams
    kind: Kind
    endpoint: tuple[float, ...] | None = None
    theta: float | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Kind.BRIDGE:
            if self.endpoint is None:
                raise DomainError("bridge needs an endpoint")
            a = tuple(float(v) for v in np.atleast_1d(self.endpoint))
            if len(a) != self.params.N:
                raise DomainError(f"endpoint has length {len(a)}, expected N = {self.params.N}")
            object.__setattr__(self, "endpoint", a)
        elif self.endpoint is not None:
            raise DomainError(f"{kind.value} takes no endpoint")
        if kind is Kind.PERIODIC:
            theta = 0.0 if self.theta is None else float(self.theta)
            if not (np.isfinite(theta) and theta >= 0):
                raise DomainError(f"theta must be >= 0, got {self.theta}")
            object.__setattr__(self, "theta", theta)
        elif self.theta is not None:
            raise DomainError(f"{kind.value} takes no theta")

    @classmethod
    def stationary(cls, params):
        return cls(params, Kind.STATIONARY)

    @classmethod
    def pinned(cls, params):
        return cls(params, Kind.PINNED)

    @classmethod
    def reversed(cls, params):
        return cls(params, Kind.REVERSED)

    @classmethod
    def bridge(cls, params, endpoint):
        return cls(params, Kind.BRIDGE, endpoint=endpoint)

    @classmethod
    def periodic(cls, params, theta=0.0):
        return cls(params, Kind.PERIODIC, theta=theta)

    @property
    def lam(self) -> float:
        return self.params.lam

    @property
    def T(self) -> float:
        return self.params.T

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def is_markov(self) -> bool:
        return self.kind in MARKOV_KINDS

    @property
    def period(self) -> float:
        """``(theta + 1) T`` for the periodic family."""
        if self.kind is not Kind.PERIODIC:
            raise DomainError(f"{self.kind.value} has no period")
        return (self.theta + 1.0) * self.T

    @property
    def endpoint_array(self) -> np.ndarray:
        if self.endpoint is None:
            return np.zeros(self.N)
        return np.asarray(self.endpoint, dtype=float)

    def describe(self) -> dict:
        d = {"kind": self.kind.value, "lambda": self.lam, "T": self.T, "N": self.N}
        if self.endpoint is not None:
            d["endpoint"] = list(self.endpoint)
        if self.theta is not None:
            d["theta"] = self.theta
        return d


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing observation times."""

    times: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        if t.size == 0:
            raise DomainError("time grid is empty")
        if not np.all(np.isfinite(t)):
            raise DomainError("time grid has non-finite entries")
        if np.any(np.diff(t) <= 0):
            raise DomainError("time grid must be strictly increasing")
        object.__setattr__(self, "times", tuple(float(v) for v in t))

    @classmethod
    def linspace(cls, start: float, stop: float, n: int):
        return cls(tuple(np.linspace(start, stop, n)))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.times)

    def __len__(self):
        return len(self.times)

    def check_within(self, T: float):
        if self.times[0] < 0 or self.times[-1] > T:
            raise DomainError(f"grid [{self.times[0]}, {self.times[-1]}] leaves [0, {T}]")


@dataclass(frozen=True, eq=False)
class GaussianLaw:
    """Joint law of ``(Z_{t_1}, ..., Z_{t_n})`` flattened time-major.

    Coordinate ``k * N + i`` is component ``i`` at time ``t_k``.  Entries of
    ``deterministic`` are pinned to their mean and have zero rows/columns in
    ``covariance``.
    """

    mean: np.ndarray
    covariance: np.ndarray
    deterministic: tuple[int, ...] = ()
    n: int = 1
    N: int = 1
    spec: ProcessSpec | None = None
    grid: TimeGrid | None = None
    free: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dim = self.n * self.N
        if self.mean.shape != (dim,) or self.covariance.shape != (dim, dim):
            raise DomainError("mean/covariance shapes do not match n * N")
        mask = np.ones(dim, dtype=bool)
        mask[list(self.deterministic)] = False
        object.__setattr__(self, "free", np.flatnonzero(mask))

    @property
    def dim(self) -> int:
        return self.n * self.N

    def free_covariance(self) -> np.ndarray:
        return self.covariance[np.ix_(self.free, self.free)]


def _times(*ts):
    return [np.asarray(t, dtype=float) for t in ts]


def _check_in_horizon(spec, *ts):
    for t in ts:
        if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > spec.T):
            raise DomainError(f"times must lie in [0, {spec.T}]")


def _one_minus_exp(z):
    # 1 - e^{-z}, accurate for small z
    return -np.expm1(-z)


def _stationary_cov(lam, s, t):
    return np.exp(-lam * np.abs(t - s)) / (2.0 * lam)


def _pinned_cov(lam, s, t):
    lo = np.minimum(s, t)
    return np.exp(-lam * np.abs(t - s)) * _one_minus_exp(2.0 * lam * lo) / (2.0 * lam)


def _bridge_cov(lam, T, s, t):
    lo = np.minimum(s, t)
    a = T - np.maximum(s, t)
    # sinh(lam a) sinh(lam lo) / (lam sinh(lam T)) with every sinh split as e^z (1 - e^{-2z}) / 2
    return (
        np.exp(lam * (a + lo - T))
        * _one_minus_exp(2.0 * lam * a)
        * _one_minus_exp(2.0 * lam * lo)
        / (2.0 * lam * _one_minus_exp(2.0 * lam * T))
    )


def periodic_covariance_exp(lam, L, d):
    """``(e^{-lam d} + e^{-lam (L - d)}) / (2 lam (1 - e^{-lam L}))``."""
    d = np.asarray(d, dtype=float)
    return (np.exp(-lam * d) + np.exp(-lam * (L - d))) / (2.0 * lam * _one_minus_exp(lam * L))


def periodic_covariance_cosh(lam, L, d):
    """``cosh(lam (d - L/2)) / (2 lam sinh(lam L / 2))``, the textbook form."""
    d = np.asarray(d, dtype=float)
    return np.cosh(lam * (d - L / 2.0)) / (2.0 * lam * np.sinh(lam * L / 2.0))


def covariance_scalar(spec: ProcessSpec, s, t):
    """Per-component covariance ``E[(Z^i_s - m^i_s)(Z^i_t - m^i_t)]``.

    Broadcasts over array-valued ``s`` and ``t``.
    """
    s, t = _times(s, t)
    _check_in_horizon(spec, s, t)
    lam, T = spec.lam, spec.T
    kind = spec.kind
    if kind is Kind.STATIONARY:
        out = _stationary_cov(lam, s, t)
    elif kind is Kind.PINNED:
        out = _pinned_cov(lam, s, t)
    elif kind is Kind.REVERSED:
        out = _pinned_cov(lam, T - s, T - t)
    elif kind is Kind.BRIDGE:
        out = _bridge_cov(lam, T, s, t)
    else:
        out = periodic_covariance_exp(lam, spec.period, np.abs(t - s))
    return float(out) if np.ndim(out) == 0 else out


def covariance_gram(spec: ProcessSpec, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    return np.asarray(covariance_scalar(spec, t[:, None], t[None, :]))


def mean_function(spec: ProcessSpec, t):
    """Mean of ``Z_t``; shape ``np.shape(t) + (N,)``."""
    (t,) = _times(t)
    _check_in_horizon(spec, t)
    if spec.kind is not Kind.BRIDGE:
        return np.zeros(t.shape + (spec.N,))
    lam, T = spec.lam, spec.T
    # sinh(lam t) / sinh(lam T)
    ratio = np.exp(lam * (t - T)) * _one_minus_exp(2.0 * lam * t) / _one_minus_exp(2.0 * lam * T)
    return ratio[..., None] * spec.endpoint_array


def marginal_law(spec: ProcessSpec, t):
    """``(mean, variance)`` of ``Z_t``; the variance is per component."""
    return mean_function(spec, t), covariance_scalar(spec, t, t)


def _deterministic_times(spec: ProcessSpec, t: np.ndarray) -> dict[int, np.ndarray]:
    """Grid indices whose value is pinned, mapped to the pinned point."""
    pinned = {}
    origin = np.zeros(spec.N)
    if spec.kind in (Kind.PINNED, Kind.BRIDGE) and t[0] == 0.0:
        pinned[0] = origin
    if spec.kind is Kind.REVERSED and t[-1] == spec.T:
        pinned[len(t) - 1] = origin
    if spec.kind is Kind.BRIDGE and t[-1] == spec.T:
        pinned[len(t) - 1] = spec.endpoint_array
    return pinned


def _check_precision_grid(spec: ProcessSpec, grid: TimeGrid):
    grid.check_within(spec.T)
    t = grid.array
    if len(t) < 2:
        raise DomainError("precision matrices need at least two times")
    if _deterministic_times(spec, t):
        raise DomainError(f"{spec.kind.value} grid contains a pinned endpoint")
    if spec.kind is Kind.PERIODIC and not t[-1] - t[0] < spec.period:
        raise DomainError("periodic grid spans a full period; the law is degenerate")


def _tridiagonal_core(lam, t):
    n = len(t)
    dt = np.diff(t)
    P = np.zeros((n, n))
    off = -lam * np.exp(-log_sinh(lam * dt))
    idx = np.arange(n - 1)
    P[idx, idx + 1] = off
    P[idx + 1, idx] = off
    for k in range(1, n - 1):
        P[k, k] = lam * np.exp(
            log_sinh(lam * (t[k + 1] - t[k - 1])) - log_sinh(lam * dt[k - 1]) - log_sinh(lam * dt[k])
        )
    return P


def _stationary_end(lam, d):
    # lam e^{lam d} / sinh(lam d)
    return 2.0 * lam / _one_minus_exp(2.0 * lam * d)


def _pinned_start(lam, t1, t2):
    return lam * np.exp(log_sinh(lam * t2) - log_sinh(lam * (t2 - t1)) - log_sinh(lam * t1))


def precision_matrix(spec: ProcessSpec, grid: TimeGrid) -> np.ndarray:
    """One-component precision matrix ``C^{-1}`` on ``grid``, in closed form.

    Tridiagonal for the Markov laws; the periodic family adds the two
    corner entries, and for ``n = 2`` its off-diagonal merges the direct
    and wrap-around links.
    """
    _check_precision_grid(spec, grid)
    lam, T = spec.lam, spec.T
    t = grid.array
    n = len(t)
    kind = spec.kind

    if kind is Kind.REVERSED:
        # Time reversal of the pinned law: reflect the grid, reverse the order.
        reflected = TimeGrid(tuple(T - t[::-1]))
        return precision_matrix(ProcessSpec.pinned(spec.params), reflected)[::-1, ::-1].copy()

    if kind is Kind.PERIODIC:
        return _periodic_precision(lam, spec.period, t)

    P = _tridiagonal_core(lam, t)
    if kind is Kind.STATIONARY:
        P[0, 0] = _stationary_end(lam, t[1] - t[0])
        P[-1, -1] = _stationary_end(lam, t[-1] - t[-2])
    elif kind is Kind.PINNED:
        P[0, 0] = _pinned_start(lam, t[0], t[1])
        P[-1, -1] = _stationary_end(lam, t[-1] - t[-2])
    elif kind is Kind.BRIDGE:
        P[0, 0] = _pinned_start(lam, t[0], t[1])
        P[-1, -1] = lam * np.exp(
            log_sinh(lam * (T - t[-2])) - log_sinh(lam * (T - t[-1])) - log_sinh(lam * (t[-1] - t[-2]))
        )
    return P


def _periodic_precision(lam, L, t):
    n = len(t)
    span = t[-1] - t[0]
    wrap = L - span
    if n == 2:
        d = t[1] - t[0]
        diag = lam * np.exp(log_sinh(lam * L) - log_sinh(lam * d) - log_sinh(lam * (L - d)))
        off = -lam * np.exp(-log_sinh(lam * d)) - lam * np.exp(-log_sinh(lam * (L - d)))
        return np.array([[diag, off], [off, diag]])
    P = _tridiagonal_core(lam, t)
    P[0, 0] = lam * np.exp(
        log_sinh(lam * (L - (t[-1] - t[1]))) - log_sinh(lam * (t[1] - t[0])) - log_sinh(lam * wrap)
    )
    P[-1, -1] = lam * np.exp(
        log_sinh(lam * (L - (t[-2] - t[0]))) - log_sinh(lam * (t[-1] - t[-2])) - log_sinh(lam * wrap)
    )
    corner = -lam * np.exp(-log_sinh(lam * wrap))
    P[0, -1] = P[-1, 0] = corner
    return P


def fdd_law(spec: ProcessSpec, grid: TimeGrid) -> GaussianLaw:
    """Joint Gaussian law of the process on ``grid``."""
    grid.check_within(spec.T)
    t = grid.array
    n, N = len(t), spec.N
    if spec.kind is Kind.PERIODIC and n > 1 and not t[-1] - t[0] < spec.period:
        raise DomainError(
            "periodic law on a grid spanning a full period repeats a coordinate; "
            "drop one of the two endpoints"
        )
    mean = mean_function(spec, t).reshape(-1)
    cov = kron_with_identity(covariance_gram(spec, t), N)
    det = []
    for k, value in _deterministic_times(spec, t).items():
        coords = [k * N + i for i in range(N)]
        cov[coords, :] = 0.0
        cov[:, coords] = 0.0
        mean[coords] = value
        det.extend(coords)
    return GaussianLaw(mean, cov, tuple(sorted(det)), n, N, spec, grid)


# -- forward/backward solution pairs ------------------------------------------------


def _points(x, N):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != N:
        raise DomainError(f"point dimension {x.shape[-1]} does not match N = {N}")
    return x


def _coth(z):
    return 1.0 / np.tanh(z)


def _require_markov(spec):
    if not spec.is_markov:
        raise DomainError("forward/backward solution pairs exist only for the Markov laws")


def _log_bridge_norm(spec):
    lam, T, N = spec.lam, spec.T, spec.N
    a2 = float(np.dot(spec.endpoint_array, spec.endpoint_array))
    return 0.25 * N * (np.log(lam / (2.0 * np.pi)) + log_sinh(lam * T)) + lam * _coth(lam * T) * a2 / 4.0


def log_solution_u(spec: ProcessSpec, x, t):
    _require_markov(spec)
    x = _points(x, spec.N)
    t = float(t)
    lam, T, N = spec.lam, spec.T, spec.N
    if not 0 <= t <= T:
        raise DomainError(f"t must lie in [0, {T}]")
    r2 = np.sum(x * x, axis=-1)
    kind = spec.kind
    if kind in (Kind.STATIONARY, Kind.REVERSED):
        pre = 0.25 * N * (np.log(lam / np.pi) + lam * T) if kind is Kind.STATIONARY else 0.25 * N * lam * T
        return pre - lam * (r2 + N * t) / 2.0
    if t <= 0:
        raise DomainError("the forward solution starts from a Dirac mass; need t > 0")
    if kind is Kind.PINNED:
        pre = 0.5 * N * (np.log(lam / (2.0 * np.pi)) + lam * T / 2.0 - log_sinh(lam * t))
        return pre - lam * _coth(lam * t) * r2 / 2.0
    return _log_bridge_norm(spec) - 0.5 * N * log_sinh(lam * t) - lam * _coth(lam * t) * r2 / 2.0


def log_solution_v(spec: ProcessSpec, x, t):
    _require_markov(spec)
    x = _points(x, spec.N)
    t = float(t)
    lam, T, N = spec.lam, spec.T, spec.N
    if not 0 <= t <= T:
        raise DomainError(f"t must lie in [0, {T}]")
    r2 = np.sum(x * x, axis=-1)
    kind = spec.kind
    if kind in (Kind.STATIONARY, Kind.PINNED):
        pre = 0.25 * N * (np.log(lam / np.pi) + lam * T) if kind is Kind.STATIONARY else 0.25 * N * lam * T
        return pre - lam * (r2 + N * (T - t)) / 2.0
    tau = T - t
    if tau <= 0:
        raise DomainError("the backward solution ends at a Dirac mass; need t < T")
    if kind is Kind.REVERSED:
        pre = 0.5 * N * (np.log(lam / (2.0 * np.pi)) + lam * T / 2.0 - log_sinh(lam * tau))
        return pre - lam * _coth(lam * tau) * r2 / 2.0
    a = spec.endpoint_array
    a2 = float(np.dot(a, a))
    alpha = lam * _coth(lam * tau)
    cross = lam * np.exp(-log_sinh(lam * tau)) * (x @ a)
    return (
        _log_bridge_norm(spec)
        - alpha * a2 / 2.0
        - 0.5 * N * log_sinh(lam * tau)
        - 0.5 * (alpha * r2 - 2.0 * cross)
    )


def solution_u(spec: ProcessSpec, x, t):
    """Positive forward solution ``u(x, t)`` of the spec's boundary problem."""
    out = np.exp(log_solution_u(spec, x, t))
    return float(out) if np.ndim(out) == 0 else out


def solution_v(spec: ProcessSpec, x, t):
    """Positive backward solution ``v(x, t)`` of the spec's boundary problem."""
    out = np.exp(log_solution_v(spec, x, t))
    return float(out) if np.ndim(out) == 0 else out


def pde_residual_uv(spec: ProcessSpec, x, t, h: float) -> tuple[float, float]:
    """Centered-difference residuals of the forward equation for ``u`` and the
    backward equation for ``v`` at ``(x, t)``."""
    x = _points(x, spec.N)
    t = float(t)
    if not (h > 0 and t - h > 0 and t + h < spec.T):
        raise DomainError("need an interior point with t - h > 0 and t + h < T")
    pot = 0.5 * spec.lam ** 2 * np.sum(x * x, axis=-1)

    def lap(f):
        f0 = f(x, t)
        out = 0.0
        for j in range(spec.N):
            e = np.zeros(spec.N)
            e[j] = h
            out = out + (f(x + e, t) - 2.0 * f0 + f(x - e, t)) / (h * h)
        return f0, out

    def u(xx, tt):
        return solution_u(spec, xx, tt)

    def v(xx, tt):
        return solution_v(spec, xx, tt)

    u0, lap_u = lap(u)
    du = (u(x, t + h) - u(x, t - h)) / (2.0 * h)
    res_u = du - 0.5 * lap_u + pot * u0

    v0, lap_v = lap(v)
    dv = (v(x, t + h) - v(x, t - h)) / (2.0 * h)
    res_v = -dv - 0.5 * lap_v + pot * v0
    return float(np.max(np.abs(res_u))), float(np.max(np.abs(res_v)))


def duality_mass(spec: ProcessSpec, t: float, quad_order: int = 128) -> float:
    """``int u(x, t) v(x, t) dx`` by Gauss-Hermite quadrature; should be 1."""
    _require_markov(spec)
    var = covariance_scalar(spec, t, t)
    if not var > 0:
        raise DomainError(f"{spec.kind.value} is deterministic at t = {t}")
    return gauss_hermite_integrate(
        lambda x: solution_u(spec, x, t) * solution_v(spec, x, t),
        spec.N,
        quad_order,
        scale=np.sqrt(2.0 * var),
    )


def brownian_bridge_limit_check(s, t, T: float, lambda_small: float) -> float:
    """Gap between the bridge covariance at a small rate and the Brownian bridge."""
    spec = ProcessSpec.bridge(HarmonicParams(lambda_small, T, 1), (0.0,))
    s, t = _times(s, t)
    brownian = (T - np.maximum(s, t)) * np.minimum(s, t) / T
    gap = np.abs(covariance_scalar(spec, s, t) - brownian)
    return float(np.max(gap))


def markov_factorization_gap(spec: ProcessSpec, s: float, r: float, t: float) -> float:
    """Relative gap in ``Cov(s,t) Var(r) = Cov(s,r) Cov(r,t)`` for ``s < r < t``.

    Zero (to rounding) for Gaussian Markov covariances.
    """
    if not s < r < t:
        raise DomainError("need s < r < t")
    c = lambda a, b: covariance_scalar(spec, a, b)  # noqa: E731
    lhs = c(s, t) * c(r, r)
    rhs = c(s, r) * c(r, t)
    scale = max(abs(lhs), abs(rhs))
    if scale == 0.0:
        return 0.0
    return abs(lhs - rhs) / scale
