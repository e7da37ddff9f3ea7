"""Registry of numerical identity checks behind ``bernproc verify``.

Every check returns a :class:`CheckResult` whose ``passed`` flag is
``error <= tolerance``.  Checks that assert a quantity is *large* report
its reciprocal as the error so the same rule applies.

``perturb`` multiplies selected computed quantities by ``1 + perturb``.
It exists only to show that the harness notices a wrong answer.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .mehler import (
    HarmonicParams,
    delta_limit_error,
    mehler_closed,
    mehler_series,
    pde_residual,
    root_identity_residuals,
    semigroup_residual,
)
from .mixtures import (
    MAX_MODE_GROWTH,
    MixtureParams,
    kernel_pair_trace,
    limiting_measure_mass,
    mixture_density_closed,
    mixture_density_series,
    mixture_mass,
    mixture_weight_partial_sum,
    nonmarkov_witness,
    signed_measure_total_mass,
)
from .processes import (
    ProcessSpec,
    TimeGrid,
    brownian_bridge_limit_check,
    covariance_gram,
    duality_mass,
    markov_factorization_gap,
    pde_residual_uv,
    periodic_covariance_cosh,
    periodic_covariance_exp,
    precision_matrix,
)
from .special_functions import HERMITE_SUP_BOUND, MAX_DEGREE, hermite_functions

__all__ = ["VERIFY_SEED", "CheckResult", "VerifyConfig", "random_grid", "all_specs", "run_checks"]

VERIFY_SEED = 20240531


@dataclass(frozen=True)
class CheckResult:
    name: str
    identity: str
    error: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class VerifyConfig:
    lam: float = 1.0
    T: float = 1.0
    N: int = 1
    theta: float = 1.0
    endpoint: tuple[float, ...] | None = None
    truncation: int = 80
    quad_order: int = 128
    perturb: float = 0.0

    @property
    def params(self) -> HarmonicParams:
        return HarmonicParams(self.lam, self.T, self.N)

    @property
    def endpoint_array(self) -> np.ndarray:
        if self.endpoint is None:
            return np.full(self.N, 0.5)
        a = np.asarray(self.endpoint, dtype=float)
        if a.shape != (self.N,):
            raise DomainError(f"endpoint needs {self.N} components, got {a.size}")
        return a


def _result(name, identity, error, tol):
    error = float(error)
    return CheckResult(name, identity, error, float(tol), bool(error <= tol))


def random_grid(rng: np.random.Generator, n: int, T: float, min_gap: float, lo=None, hi=None) -> TimeGrid:
    """Sorted uniform times in ``(lo, hi)`` with neighbours at least ``min_gap`` apart."""
    lo = min_gap if lo is None else lo
    hi = T - min_gap if hi is None else hi
    for _ in range(10_000):
        t = np.sort(rng.uniform(lo, hi, n))
        if n < 2 or np.min(np.diff(t)) >= min_gap:
            return TimeGrid(tuple(t))
    raise DomainError(f"could not place {n} times with gap {min_gap} in ({lo}, {hi})")


def all_specs(p: HarmonicParams, endpoint, theta: float) -> list[ProcessSpec]:
    return [
        ProcessSpec.stationary(p),
        ProcessSpec.pinned(p),
        ProcessSpec.reversed(p),
        ProcessSpec.bridge(p, tuple(endpoint)),
        ProcessSpec.periodic(p, theta),
    ]


# -- individual checks --------------------------------------------------------


def _hermite_bound(cfg):
    x = np.linspace(-25.0, 25.0, 20001)
    sup = np.max(np.abs(hermite_functions(MAX_DEGREE, x)))
    return [_result("hermite_sup_bound", "uniform bound on normalized Hermite functions", sup, HERMITE_SUP_BOUND)]


def _kernel_series(cfg):
    p = cfg.params
    side = np.linspace(-3.0, 3.0, 9) / np.sqrt(cfg.lam)
    worst = 0.0
    for t in (0.5 * cfg.T, cfg.T, 2.0 * cfg.T):
        for xv, yv in itertools.product(side, side):
            x = np.full(p.N, xv)
            y = np.full(p.N, yv)
            s = mehler_series(x, t, y, p, cfg.truncation)
            diff = abs(s.value * (1 + cfg.perturb) - mehler_closed(x, t, y, p))
            worst = max(worst, diff / s.tail_bound)
    return [_result("kernel_series_tail", "Hermite expansion within its tail bound (ratio)", worst, 1.0)]


def _semigroup(cfg):
    p = cfg.params
    rng = np.random.default_rng(VERIFY_SEED)
    worst = 0.0
    for _ in range(10):
        x, y = rng.uniform(-2, 2, (2, p.N)) / np.sqrt(cfg.lam)
        s, t = rng.uniform(0.1, 1.0, 2) * cfg.T
        r = semigroup_residual(x, s, t, y, p, cfg.quad_order)
        worst = max(worst, abs((1 + cfg.perturb) * (1 + r) - 1) if cfg.perturb else r)
    return [_result("kernel_semigroup", "kernel composition law", worst, 1e-8)]


def _steps(cfg):
    h = 0.02 * min(cfg.T, 1.0 / cfg.lam)
    return h, h / 2.0


def _kernel_pde(cfg):
    p = cfg.params
    rng = np.random.default_rng(VERIFY_SEED + 1)
    h1, h2 = _steps(cfg)
    worst = 0.0
    for _ in range(10):
        x, y = rng.uniform(-1.5, 1.5, (2, p.N)) / np.sqrt(cfg.lam)
        t = rng.uniform(0.3, 1.0) * cfg.T
        worst = max(worst, pde_residual(x, t, y, p, h2) / pde_residual(x, t, y, p, h1))
    return [_result("kernel_pde_order", "heat-equation residual halving ratio", worst, 1 / 3.5)]


def _kernel_delta(cfg):
    p = cfg.params
    f = lambda z: np.exp(-0.5 * np.sum(z * z, axis=-1)) * np.cos(z[:, 0])  # noqa: E731
    x = np.full(p.N, 0.3)
    ts = np.array([1e-2, 5e-3, 2.5e-3]) / cfg.lam
    errs = [delta_limit_error(f, x, t, p, cfg.quad_order) for t in ts]
    ratio = max(errs[1] / errs[0], errs[2] / errs[1])
    return [_result("kernel_delta_limit", "initial-value limit, error halving ratio", ratio, 0.6)]


def _root_identity(cfg):
    worst = max(max(root_identity_residuals(cfg.lam, t)) for t in np.linspace(0.05, 3.0, 25) * cfg.T)
    return [_result("kernel_root_identity", "coefficient matching at gamma = exp(-lam t)", worst, 1e-13)]


def _markov_specs(cfg):
    return [s for s in all_specs(cfg.params, cfg.endpoint_array, cfg.theta) if s.is_markov]


def _uv_pde(cfg):
    rng = np.random.default_rng(VERIFY_SEED + 2)
    h1, h2 = _steps(cfg)
    out = []
    for spec in _markov_specs(cfg):
        worst = 0.0
        for _ in range(10):
            x = rng.uniform(-1.5, 1.5, spec.N) / np.sqrt(cfg.lam)
            t = rng.uniform(0.2, 0.8) * cfg.T
            # u or v is singular at an end of [0, T]; keep h well inside.
            shrink = min(1.0, min(t, cfg.T - t) / cfg.T / 0.5)
            a1, b1 = pde_residual_uv(spec, x, t, h1 * shrink)
            a2, b2 = pde_residual_uv(spec, x, t, h2 * shrink)
            worst = max(worst, a2 / a1, b2 / b1)
        out.append(_result(f"uv_pde_order_{spec.kind.value}", "forward/backward residual halving ratio", worst, 1 / 3.5))
    return out


def _duality(cfg):
    out = []
    for spec in _markov_specs(cfg):
        worst = 0.0
        for t in np.linspace(0.1, 0.9, 5) * cfg.T:
            worst = max(worst, abs(duality_mass(spec, t, cfg.quad_order) * (1 + cfg.perturb) - 1))
        out.append(_result(f"duality_mass_{spec.kind.value}", "int u v dx = 1", worst, 1e-8))
    return out


def _precision(cfg):
    rng = np.random.default_rng(VERIFY_SEED + 3)
    out = []
    for spec in all_specs(cfg.params, cfg.endpoint_array, cfg.theta):
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(2, 11))
            grid = random_grid(rng, n, cfg.T, 0.01 * cfg.T)
            C = covariance_gram(spec, grid.array)
            P = precision_matrix(spec, grid) * (1 + cfg.perturb)
            worst = max(worst, np.linalg.norm(C @ P - np.eye(n), np.inf))
        out.append(_result(f"precision_inverse_{spec.kind.value}", "closed-form precision times covariance = I", worst, 1e-8))
    return out


def _bb_limit(cfg):
    T = cfg.T
    ts = np.linspace(0.1, 0.9, 5) * T
    s, t = np.meshgrid(ts, ts)
    gap = brownian_bridge_limit_check(s, t, T, 1e-6)
    return [_result("bridge_brownian_limit", "small-rate bridge covariance vs Brownian bridge", gap, 1e-5)]


def _cov_equality(cfg):
    rng = np.random.default_rng(VERIFY_SEED + 4)
    worst = 0.0
    for _ in range(50):
        lam = rng.uniform(0.1, 5.0)
        T = rng.uniform(0.1, 5.0)
        L = (cfg.theta + 1.0) * T
        d = rng.uniform(0.0, T)
        a, b = periodic_covariance_cosh(lam, L, d), periodic_covariance_exp(lam, L, d)
        worst = max(worst, abs(a - b) / abs(b))
    return [_result("periodic_covariance_forms", "cosh and exponential forms of the periodic covariance", worst, 1e-12)]


def _factorization(cfg):
    rng = np.random.default_rng(VERIFY_SEED + 5)
    out = []
    for spec in all_specs(cfg.params, cfg.endpoint_array, cfg.theta):
        triples = [np.sort(rng.uniform(0.05, 0.95, 3)) * cfg.T for _ in range(10)]
        gap = max(markov_factorization_gap(spec, *tr) for tr in triples)
        if spec.is_markov:
            out.append(_result(f"markov_factorization_{spec.kind.value}", "Cov(s,t) Var(r) = Cov(s,r) Cov(r,t)", gap, 1e-10))
        else:
            out.append(
                _result(
                    f"markov_factorization_{spec.kind.value}",
                    "factorization fails (reciprocal of largest gap)",
                    1.0 / gap if gap > 0 else np.inf,
                    1e3,
                )
            )
    return out


def _mixtures(cfg):
    p = cfg.params
    mp = MixtureParams(p, cfg.theta)
    out = [
        _result("mixture_weight_sum", "geometric weights sum to one", abs(mixture_weight_partial_sum(mp, 40) - 1), 1e-12),
    ]
    if p.N <= 2:
        worst = 0.0
        for m in itertools.product(range(7), repeat=p.N):
            if sum(m) <= 6 and sum(m) * cfg.lam * cfg.T <= MAX_MODE_GROWTH:
                worst = max(worst, abs(signed_measure_total_mass(m, p, cfg.quad_order) - 1))
        out.append(_result("mixture_signed_mass", "eigenmode measures have unit mass (resolvable modes)", worst, 1e-7))
    trace = kernel_pair_trace(mp, cfg.quad_order) * (1 + cfg.perturb)
    target = (2.0 * np.sinh(cfg.lam * mp.period / 2.0)) ** (-p.N)
    out.append(_result("mixture_pair_trace", "double integral of the kernel product", abs(trace / target - 1), 1e-7))
    out.append(_result("mixture_mass", "mixture density has unit mass", abs(mixture_mass(mp, cfg.quad_order) - 1), 1e-7))
    rng = np.random.default_rng(VERIFY_SEED + 6)
    worst = 0.0
    for _ in range(5):
        x, y = rng.uniform(-1.5, 1.5, (2, p.N)) / np.sqrt(cfg.lam)
        v, bound = mixture_density_series(x, y, mp, 60)
        worst = max(worst, abs(v - mixture_density_closed(x, y, mp)) / bound)
    out.append(_result("mixture_series_tail", "mode sum within its tail bound (ratio)", worst, 1.0))
    out.append(_result("mixture_limit_mass", "diagonal limiting measure has unit mass", abs(limiting_measure_mass(p, cfg.quad_order) - 1), 1e-7))
    w = nonmarkov_witness(mp, np.zeros(p.N), np.zeros(p.N), 1.0 / np.sqrt(cfg.lam))
    out.append(_result("mixture_nonmarkov_witness", "reciprocal of mixed log-difference", 1.0 / w if w > 0 else np.inf, 1e3))
    return out


CHECK_GROUPS = (
    _hermite_bound,
    _kernel_series,
    _semigroup,
    _kernel_pde,
    _kernel_delta,
    _root_identity,
    _uv_pde,
    _duality,
    _precision,
    _bb_limit,
    _cov_equality,
    _factorization,
    _mixtures,
)


def run_checks(cfg: VerifyConfig = VerifyConfig(), n_jobs: int = 1) -> list[CheckResult]:
    """Run every check group; results sorted by name whatever the scheduling."""
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            groups = list(pool.map(lambda g: g(cfg), CHECK_GROUPS))
    else:
        groups = [g(cfg) for g in CHECK_GROUPS]
    return sorted((r for grp in groups for r in grp), key=lambda r: r.name)
