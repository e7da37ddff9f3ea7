"""Path sampling and Monte Carlo moment estimation.

Three samplers:

* :func:`sample_exact` draws ``mean + L xi`` from a :class:`GaussianLaw`;
* :func:`sample_ou_recursion` iterates the exact Ornstein-Uhlenbeck
  transition between grid times;
* :func:`sample_periodic_ou` evaluates the explicit solution of the
  periodic Ornstein-Uhlenbeck equation from one stream of Wiener
  increments on a refined mesh.

RNG contract: numpy's ``PCG64`` bit generator.  Paths are produced in
blocks of :data:`BLOCK_SIZE`; block ``b`` draws from
``SeedSequence(seed, spawn_key=(b,))``.  Blocks are independent streams and
are concatenated in block order, so the output depends only on
``(seed, count)`` and not on ``n_jobs``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .linalg import cholesky
from .mehler import HarmonicParams
from .processes import GaussianLaw, ProcessSpec, TimeGrid

__all__ = [
    "BLOCK_SIZE",
    "RNG_ALGORITHM",
    "DEFAULT_SUBSTEPS",
    "PathBatch",
    "MomentReport",
    "sample_exact",
    "sample_ou_recursion",
    "sample_periodic_ou",
    "empirical_covariance",
    "streaming_covariance",
]

BLOCK_SIZE = 8192
RNG_ALGORITHM = "numpy.PCG64/SeedSequence(seed, spawn_key=(block,))"
DEFAULT_SUBSTEPS = 64


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Sampled paths, shape ``(count, n, N)``, plus what produced them."""

    spec: ProcessSpec
    grid: TimeGrid
    paths: np.ndarray
    seed: int
    sampler_tag: str
    substeps: int | None = None
    rng: str = RNG_ALGORITHM

    @property
    def count(self) -> int:
        return self.paths.shape[0]

    def flat(self) -> np.ndarray:
        """Paths as ``(count, n * N)`` in the time-major coordinate order."""
        return self.paths.reshape(self.count, -1)


@dataclass(frozen=True, eq=False)
class MomentReport:
    mean: np.ndarray
    covariance: np.ndarray
    mean_se: np.ndarray
    covariance_se: np.ndarray
    count: int


def _check_seed(seed):
    if int(seed) != seed or seed < 0:
        raise DomainError(f"seed must be a non-negative integer, got {seed}")
    return int(seed)


def _blocked(count: int, seed: int, draw: Callable[[np.random.Generator, int], np.ndarray], n_jobs: int = 1):
    if int(count) != count or count < 1:
        raise DomainError(f"count must be a positive integer, got {count}")
    seed = _check_seed(seed)
    sizes = [BLOCK_SIZE] * (count // BLOCK_SIZE)
    if count % BLOCK_SIZE:
        sizes.append(count % BLOCK_SIZE)

    def run(b):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(b,))))
        return draw(rng, sizes[b])

    if n_jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    return np.concatenate(parts, axis=0)


def sample_exact(law: GaussianLaw, count: int, seed: int, n_jobs: int = 1) -> PathBatch:
    """Draw ``count`` i.i.d. vectors from ``law``.

    Deterministic coordinates are set to their pinned values exactly; the
    rest use a jitter-free Cholesky factor of the free block.
    """
    free = law.free
    L = cholesky(law.free_covariance()) if free.size else np.zeros((0, 0))
    mean = law.mean

    def draw(rng, m):
        out = np.broadcast_to(mean, (m, law.dim)).copy()
        if free.size:
            xi = rng.standard_normal((m, free.size))
            out[:, free] += xi @ L.T
        return out

    flat = _blocked(count, seed, draw, n_jobs)
    return PathBatch(law.spec, law.grid, flat.reshape(count, law.n, law.N), int(seed), "exact")


def sample_ou_recursion(
    p: HarmonicParams,
    grid: TimeGrid,
    initial: str = "stationary",
    count: int = 1,
    seed: int = 0,
    n_jobs: int = 1,
) -> PathBatch:
    """Ornstein-Uhlenbeck paths from the exact Gaussian transition.

    ``X_{k+1} = e^{-lam D} X_k + sqrt((1 - e^{-2 lam D}) / (2 lam)) xi_k``.
    ``initial="stationary"`` draws ``X`` at the first grid time from
    ``N(0, 1/(2 lam))``; ``initial="origin"`` starts at ``X_0 = 0`` and steps
    to the first grid time if it is positive.
    """
    grid.check_within(p.T)
    if initial not in ("stationary", "origin"):
        raise DomainError(f"initial must be 'stationary' or 'origin', got {initial!r}")
    lam, N = p.lam, p.N
    t = grid.array
    if initial == "origin":
        spec = ProcessSpec.pinned(p)
        knots = np.concatenate([[0.0], t]) if t[0] > 0 else t
    else:
        spec = ProcessSpec.stationary(p)
        knots = t
    dts = np.diff(knots)
    decay = np.exp(-lam * dts)
    noise = np.sqrt(-np.expm1(-2.0 * lam * dts) / (2.0 * lam))
    skip = len(knots) - len(t)

    def draw(rng, m):
        path = np.empty((m, len(knots), N))
        if initial == "stationary":
            path[:, 0] = rng.standard_normal((m, N)) / np.sqrt(2.0 * lam)
        else:
            path[:, 0] = 0.0
        for k in range(len(dts)):
            path[:, k + 1] = decay[k] * path[:, k] + noise[k] * rng.standard_normal((m, N))
        return path[:, skip:]

    paths = _blocked(count, seed, draw, n_jobs)
    return PathBatch(spec, grid, paths, int(seed), "ou_recursion")


def _refined_mesh(t, T, substeps):
    knots = np.unique(np.concatenate([[0.0], t, [T]]))
    pieces = [np.linspace(a, b, substeps + 1)[:-1] for a, b in zip(knots[:-1], knots[1:])]
    mesh = np.concatenate(pieces + [[T]])
    return mesh, np.searchsorted(mesh, t)


def sample_periodic_ou(
    p: HarmonicParams,
    grid: TimeGrid,
    count: int = 1,
    seed: int = 0,
    substeps: int = DEFAULT_SUBSTEPS,
    theta: float = 0.0,
    n_jobs: int = 1,
) -> PathBatch:
    """Periodic Ornstein-Uhlenbeck paths from the explicit solution.

    With period ``L = (theta + 1) T``,

        X_t = e^{-lam t} / (1 - e^{-lam L}) * int_0^L e^{-lam (L - s)} dW_s
              + int_0^t e^{-lam (t - s)} dW_s.

    Both stochastic integrals share one Wiener path sampled on a mesh that
    splits every interval between ``0``, the grid times and ``L`` into
    ``substeps`` pieces (plus ``T .. L`` when ``theta > 0``); integrands are
    evaluated at the left end of each piece.  ``X_0 = X_L`` holds exactly
    for every discretized path.
    """
    if int(substeps) != substeps or substeps < 1:
        raise DomainError(f"substeps must be a positive integer, got {substeps}")
    grid.check_within(p.T)
    spec = ProcessSpec.periodic(p, theta)
    L = spec.period
    lam, N = p.lam, p.N
    t = grid.array
    mesh, at = _refined_mesh(np.concatenate([t, [p.T]]) if L > p.T else t, L, int(substeps))
    at = at[: len(t)]
    dts = np.diff(mesh)
    decay = np.exp(-lam * dts)
    sqrt_dt = np.sqrt(dts)
    scale0 = 1.0 / -np.expm1(-lam * L)

    def draw(rng, m):
        # J_k = sum_{i<k} e^{-lam (mesh_k - mesh_i)} dW_i, left-point rule.
        J = np.zeros((m, N))
        hist = np.empty((m, len(mesh), N))
        hist[:, 0] = 0.0
        for i in range(len(dts)):
            J = decay[i] * (J + sqrt_dt[i] * rng.standard_normal((m, N)))
            hist[:, i + 1] = J
        J_L = hist[:, -1]
        x = np.exp(-lam * mesh[at])[None, :, None] * (scale0 * J_L)[:, None, :] + hist[:, at]
        return x

    paths = _blocked(count, seed, draw, n_jobs)
    return PathBatch(spec, grid, paths, int(seed), "periodic_explicit", substeps=int(substeps))


def empirical_covariance(batch) -> MomentReport:
    """Unbiased sample mean and covariance over paths, with standard errors.

    ``mean_se`` is the sample standard deviation over ``sqrt(count)``;
    ``covariance_se[k, l]`` is the sample standard deviation of the centred
    products ``(X_k - m_k)(X_l - m_l)`` over ``sqrt(count)``.
    """
    X = batch.flat() if isinstance(batch, PathBatch) else np.asarray(batch, dtype=float)
    if X.ndim != 2:
        X = X.reshape(X.shape[0], -1)
    n = X.shape[0]
    if n < 2:
        raise DomainError("need at least two paths")
    mean = X.mean(axis=0)
    # Pinned coordinates: exact mean, so their centred values are exactly zero.
    const = np.all(X == X[0], axis=0)
    mean[const] = X[0, const]
    D = X - mean
    cov = D.T @ D / (n - 1)
    sq = (D * D).T @ (D * D)
    prod_mean = D.T @ D / n
    prod_var = np.maximum(sq / n - prod_mean ** 2, 0.0) * n / (n - 1)
    cov_se = np.sqrt(prod_var / n)
    mean_se = np.sqrt(np.diag(cov) / n)
    return MomentReport(mean, cov, mean_se, cov_se, n)


def streaming_covariance(rows) -> tuple[np.ndarray, np.ndarray, int]:
    """One-pass Welford mean/covariance over an iterable of vectors."""
    n = 0
    mean = None
    M2 = None
    for x in rows:
        x = np.asarray(x, dtype=float).ravel()
        if mean is None:
            mean = np.zeros_like(x)
            M2 = np.zeros((x.size, x.size))
        n += 1
        delta = x - mean
        mean = mean + delta / n
        M2 = M2 + np.outer(delta, x - mean)
    if n < 2:
        raise DomainError("need at least two paths")
    return mean, M2 / (n - 1), n
