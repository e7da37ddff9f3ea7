import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bernproc.errors import DomainError
from bernproc.linalg import cholesky
from bernproc.mehler import HarmonicParams
from bernproc.processes import (
    Kind,
    ProcessSpec,
    TimeGrid,
    brownian_bridge_limit_check,
    covariance_gram,
    covariance_scalar,
    duality_mass,
    fdd_law,
    marginal_law,
    markov_factorization_gap,
    mean_function,
    pde_residual_uv,
    periodic_covariance_cosh,
    periodic_covariance_exp,
    precision_matrix,
    solution_u,
    solution_v,
)

mp.mp.dps = 30
LAM, T = 1.7, 1.3
P = HarmonicParams(LAM, T, 1)
A = 0.6


def _oracle(kind, s, t, L=None):
    """Textbook hyperbolic forms at 30 digits."""
    lam, s, t, TT = mp.mpf(LAM), mp.mpf(s), mp.mpf(t), mp.mpf(T)
    lo, hi = min(s, t), max(s, t)
    if kind == "stationary":
        return mp.e ** (-lam * (hi - lo)) / (2 * lam)
    if kind == "pinned":
        return mp.e ** (-lam * (hi - lo)) * mp.sinh(lam * lo) / (lam * mp.e ** (lam * lo))
    if kind == "reversed":
        return _oracle("pinned", TT - hi, TT - lo)
    if kind == "bridge":
        return mp.sinh(lam * lo) * mp.sinh(lam * (TT - hi)) / (lam * mp.sinh(lam * TT))
    L = mp.mpf(L)
    return mp.cosh(lam * (hi - lo - L / 2)) / (2 * lam * mp.sinh(lam * L / 2))


SPECS = {
    "stationary": ProcessSpec.stationary(P),
    "pinned": ProcessSpec.pinned(P),
    "reversed": ProcessSpec.reversed(P),
    "bridge": ProcessSpec.bridge(P, (A,)),
    "periodic": ProcessSpec.periodic(P, 0.5),
}


@pytest.mark.parametrize("kind", list(SPECS))
def test_covariance_against_hyperbolic_oracle(kind):
    spec = SPECS[kind]
    for s, t in [(0.1, 0.2), (0.4, 1.1), (1.0, 0.3), (0.05, 1.25), (0.7, 0.7)]:
        expected = float(_oracle(kind, s, t, spec.period if kind == "periodic" else None))
        assert covariance_scalar(spec, s, t) == pytest.approx(expected, rel=1e-13)


def test_bridge_mean_and_endpoints():
    spec = SPECS["bridge"]
    t = np.array([0.0, 0.4, T])
    m = mean_function(spec, t)[:, 0]
    expected = A * np.sinh(LAM * t) / np.sinh(LAM * T)
    np.testing.assert_allclose(m, expected, rtol=1e-14, atol=0)
    law = fdd_law(spec, TimeGrid(tuple(t)))
    assert law.deterministic == (0, 2)
    assert law.mean[0] == 0.0 and law.mean[2] == A
    assert np.all(law.covariance[[0, 2]] == 0.0)


def test_reversed_ends_at_origin_and_pinned_starts_there():
    grid = TimeGrid((0.0, 0.5, T))
    assert fdd_law(SPECS["pinned"], grid).deterministic == (0,)
    assert fdd_law(SPECS["reversed"], grid).deterministic == (2,)
    assert fdd_law(SPECS["stationary"], grid).deterministic == ()


def test_multidimensional_law_layout():
    spec = ProcessSpec.bridge(HarmonicParams(LAM, T, 2), (A, -A))
    law = fdd_law(spec, TimeGrid((0.3, 0.9)))
    C1 = covariance_gram(spec, [0.3, 0.9])
    assert law.covariance.shape == (4, 4)
    assert law.covariance[1, 3] == C1[0, 1] and law.covariance[0, 3] == 0.0
    assert law.mean[1] == pytest.approx(-law.mean[0])


@pytest.mark.parametrize("kind", list(SPECS))
def test_precision_against_numerical_inverse(kind):
    spec = SPECS[kind]
    grid = TimeGrid((0.07, 0.3, 0.31, 0.8, 1.2))
    P_closed = precision_matrix(spec, grid)
    P_num = np.linalg.inv(covariance_gram(spec, grid.array))
    np.testing.assert_allclose(P_closed, P_num, rtol=1e-9, atol=1e-9 * np.abs(P_num).max())
    off = np.abs(np.subtract.outer(np.arange(5), np.arange(5))) > 1
    if kind == "periodic":
        off[0, -1] = off[-1, 0] = False
        assert P_closed[0, -1] < 0
    assert np.all(P_closed[off] == 0.0)


def test_periodic_two_point_precision():
    spec = SPECS["periodic"]
    grid = TimeGrid((0.2, 1.0))
    np.testing.assert_allclose(
        precision_matrix(spec, grid) @ covariance_gram(spec, grid.array), np.eye(2), atol=1e-13
    )


def test_invalid_grids():
    with pytest.raises(DomainError):
        precision_matrix(SPECS["pinned"], TimeGrid((0.0, 0.5)))
    with pytest.raises(DomainError):
        precision_matrix(SPECS["stationary"], TimeGrid((0.5,)))
    with pytest.raises(DomainError):
        fdd_law(ProcessSpec.periodic(P, 0.0), TimeGrid((0.0, T)))
    with pytest.raises(DomainError):
        fdd_law(SPECS["stationary"], TimeGrid((0.5, T + 0.1)))
    with pytest.raises(DomainError):
        TimeGrid((0.5, 0.5))
    with pytest.raises(DomainError):
        ProcessSpec.bridge(HarmonicParams(1.0, 1.0, 2), (1.0,))
    with pytest.raises(DomainError):
        ProcessSpec.periodic(P, -0.1)


@settings(max_examples=30, deadline=None)
@given(
    kind=st.sampled_from(list(SPECS)),
    times=st.lists(st.floats(0.01, T - 0.01), min_size=1, max_size=8, unique=True),
)
def test_gram_is_positive_definite(kind, times):
    t = np.sort(np.array(times))
    if len(t) > 1 and np.min(np.diff(t)) < 1e-3:
        return
    cholesky(covariance_gram(SPECS[kind], t))


def test_marginal_law():
    mean, var = marginal_law(SPECS["bridge"], 0.5)
    assert var == pytest.approx(covariance_scalar(SPECS["bridge"], 0.5, 0.5))
    assert mean[0] == pytest.approx(A * np.sinh(LAM * 0.5) / np.sinh(LAM * T))


@pytest.mark.parametrize("kind", ["stationary", "pinned", "reversed", "bridge"])
def test_duality_and_marginal_density(kind):
    spec = SPECS[kind]
    for t in (0.2, 0.65, 1.1):
        assert duality_mass(spec, t) == pytest.approx(1.0, abs=1e-12)
    # u v is the Gaussian marginal density.
    t, x = 0.65, np.array([[0.3]])
    mean, var = marginal_law(spec, t)
    dens = np.exp(-((x[0, 0] - mean[0]) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)
    assert solution_u(spec, x, t) * solution_v(spec, x, t) == pytest.approx(dens, rel=1e-12)


@pytest.mark.parametrize("kind", ["stationary", "pinned", "reversed", "bridge"])
def test_uv_pde_second_order(kind):
    a1, b1 = pde_residual_uv(SPECS[kind], [0.4], 0.6, 4e-3)
    a2, b2 = pde_residual_uv(SPECS[kind], [0.4], 0.6, 2e-3)
    assert a1 / a2 >= 3.5 and b1 / b2 >= 3.5


def test_periodic_has_no_solution_pair():
    with pytest.raises(DomainError):
        duality_mass(SPECS["periodic"], 0.5)


def test_brownian_bridge_limit():
    s, t = np.meshgrid(np.linspace(0.1, 0.9, 5), np.linspace(0.1, 0.9, 5))
    assert brownian_bridge_limit_check(s, t, 1.0, 1e-6) < 1e-12


def test_markov_factorization():
    for kind in ("stationary", "pinned", "reversed", "bridge"):
        assert markov_factorization_gap(SPECS[kind], 0.1, 0.5, 1.2) < 1e-13
    assert markov_factorization_gap(SPECS["periodic"], 0.1, 0.5, 1.2) > 1e-3
    with pytest.raises(DomainError):
        markov_factorization_gap(SPECS["stationary"], 0.5, 0.1, 1.2)


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(0.01, 20.0), L=st.floats(0.01, 20.0), frac=st.floats(0.0, 1.0))
def test_periodic_forms_agree(lam, L, frac):
    d = frac * L
    assert periodic_covariance_cosh(lam, L, d) == pytest.approx(periodic_covariance_exp(lam, L, d), rel=1e-12)


def test_spec_metadata():
    spec = SPECS["periodic"]
    assert spec.kind is Kind.PERIODIC and not spec.is_markov
    assert spec.period == pytest.approx(1.5 * T)
    assert spec.describe() == {"kind": "periodic", "lambda": LAM, "T": T, "N": 1, "theta": 0.5}
