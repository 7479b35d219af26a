import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from excursion.gauss import phi
from excursion.quadform import (
    FieldModel,
    QuadFormProblem,
    conditioned_hessian_covariance,
    conditioned_hessian_sampler,
    hessian_abs_det,
    hessian_negdef_bound,
    hessian_problem,
    liwei_expectation,
)

RHO2 = (0.25, 0.5, 1.0, 2.0)
LEVELS = (0.0, 0.5, 1.0, 2.0, 4.0)


def univariate_oracle(a, b, c):
    """E|a Z^2 + b Z + c| by quadrature split at the real roots."""
    roots = sorted(r.real for r in np.roots([a, b, c]) if abs(r.imag) < 1e-14) if a or b else []
    edges = [-40.0] + [r for r in roots if -40 < r < 40] + [40.0]
    f = lambda z: abs(a * z * z + b * z + c) * phi(z)
    return sum(integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
               for lo, hi in zip(edges[:-1], edges[1:]))


def chi2_mad(k):
    # mean absolute deviation of a chi-square(k) variable around its mean
    a = k / 2
    return 4 * math.exp(a * math.log(a) - a - special.gammaln(a))


@pytest.mark.parametrize("a,b,c", [
    (1.0, 0.0, 0.0), (1.0, 0.0, -1.0), (1.0, 0.7, -2.0), (-0.3, 0.7, 5.0),
    (2.0, -1.0, 0.1), (0.0, 1.0, 0.0), (0.0, 1.5, -0.4), (-1.0, 0.0, 3.0),
])
def test_univariate_against_quadrature(a, b, c):
    p = QuadFormProblem([[1.0]], [[a]], [b], c)
    assert liwei_expectation(p) == pytest.approx(univariate_oracle(a, b, c), abs=2e-9)


@pytest.mark.parametrize("k", [1, 2, 3, 5, 8])
def test_chi_square_mean_absolute_deviation(k):
    rng = np.random.default_rng(k)
    Q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    S = Q @ np.diag(rng.uniform(0.5, 2.0, k)) @ Q.T
    # Y ~ N(0, S) and A = S^{-1} give <Y, AY> ~ chi-square(k)
    p = QuadFormProblem(S, np.linalg.inv(S), np.zeros(k), -k)
    assert liwei_expectation(p) == pytest.approx(chi2_mad(k), abs=1e-8)


def test_deterministic_problem():
    assert liwei_expectation(QuadFormProblem([[1.0]], [[0.0]], [0.0], -5.0)) == 5.0


def test_random_problem_against_monte_carlo():
    rng = np.random.default_rng(3)
    n = 3
    G = rng.standard_normal((n, n))
    S = G @ G.T + n * np.eye(n)
    A = rng.standard_normal((n, n))
    A = 0.5 * (A + A.T)
    b = rng.standard_normal(n)
    p = QuadFormProblem(S, A, b, 0.7)
    Y = rng.multivariate_normal(np.zeros(n), S, size=2_000_000)
    q = np.abs(np.einsum("ij,jk,ik->i", Y, A, Y) + Y @ b + 0.7)
    se = q.std() / math.sqrt(len(q))
    assert abs(liwei_expectation(p) - q.mean()) <= 4 * se


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 5))
def test_scaling_and_jensen(a, b, c, s):
    p = QuadFormProblem([[1.0, 0.3], [0.3, 1.0]], [[a, 0.2], [0.2, -0.5]], [b, 0.1], c)
    ps = QuadFormProblem(p.sigma, s * p.A, s * p.b, s * p.c0)
    e = liwei_expectation(p)
    assert e >= abs(p.mean()) - 1e-8
    assert liwei_expectation(ps) == pytest.approx(s * e, rel=1e-7, abs=1e-8)


def test_problem_validation():
    with pytest.raises(ValueError, match="symmetric"):
        QuadFormProblem(np.eye(2), [[0, 1], [0, 0]], [0, 0], 0)
    with pytest.raises(ValueError, match="positive definite"):
        QuadFormProblem([[1, 2], [2, 1]], np.eye(2), [0, 0], 0)
    with pytest.raises(ValueError, match="dimensions"):
        QuadFormProblem(np.eye(2), np.eye(3), [0, 0], 0)
    with pytest.raises(ValueError, match="finite"):
        QuadFormProblem(np.eye(1), [[math.nan]], [0], 0)
    with pytest.raises(ValueError):
        liwei_expectation(QuadFormProblem(np.eye(1), [[1.0]], [0], 0), tol=1e-2)


def test_json_round_trip():
    p = hessian_problem(1.5, FieldModel(0.5))
    q = QuadFormProblem.from_json(p.to_json())
    assert np.array_equal(p.sigma, q.sigma) and np.array_equal(p.A, q.A)
    assert np.array_equal(p.b, q.b) and p.c0 == q.c0


def test_field_model_boundary():
    with pytest.raises(ValueError, match="normalization violated"):
        FieldModel(1 / 12)
    with pytest.raises(ValueError):
        FieldModel.from_c(0.0)


@settings(max_examples=100)
@given(st.floats(0.01, 50))
def test_field_model_c_round_trip(c):
    assert FieldModel.from_c(c).c == pytest.approx(c, rel=1e-12)


def test_hessian_identities_through_c():
    for r in RHO2:
        c = FieldModel(r).c
        assert 8 * r == pytest.approx(2 * (c * c + 1) / 3, rel=1e-14)
        assert 24 * r - 2 == pytest.approx(2 * c * c, rel=1e-14)


@pytest.mark.parametrize("rho2", RHO2)
@pytest.mark.parametrize("u", LEVELS)
def test_closed_form_against_fourier_inversion(u, rho2):
    m = FieldModel(rho2)
    assert abs(hessian_abs_det(u, m) - liwei_expectation(hessian_problem(u, m))) <= 1e-8


def test_conditioned_covariance_is_spd_only_above_one_eighth():
    assert np.all(np.linalg.eigvalsh(conditioned_hessian_covariance(FieldModel(0.13))) > 0)
    assert np.linalg.eigvalsh(conditioned_hessian_covariance(FieldModel(0.12))).min() < 0


@pytest.mark.parametrize("u,rho2", [(0.0, 0.25), (1.0, 0.5), (2.5, 1.0)])
def test_sampler_against_closed_forms(u, rho2):
    m = FieldModel(rho2)
    s = conditioned_hessian_sampler(u, m, 1_000_000, seed=11)
    assert abs(s.abs_det - hessian_abs_det(u, m)) <= 4 * s.abs_det_se
    assert abs(s.det - (u * u - 1)) <= 4 * s.det_se
    # |det| 1{negative definite} <= det^+ = (|det| + det) / 2
    assert s.negdef_abs_det <= hessian_negdef_bound(u, m) + 4 * s.negdef_abs_det_se


def test_sampler_is_deterministic():
    m = FieldModel(0.25)
    a = conditioned_hessian_sampler(1.0, m, 300_000, seed=5)
    b = conditioned_hessian_sampler(1.0, m, 300_000, seed=5)
    assert a == b


def test_negdef_bound_is_mean_of_abs_and_signed():
    for r in RHO2:
        m = FieldModel(r)
        u = np.linspace(0, 6, 31)
        assert np.allclose(hessian_negdef_bound(u, m), 0.5 * (hessian_abs_det(u, m) + u * u - 1),
                           rtol=1e-14, atol=1e-14)
