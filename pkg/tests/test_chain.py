import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from dressing_chain.chain import (
    ChainParams,
    ChainState,
    QuarticCurve,
    chain_rhs,
    curve_invariants,
    g_coordinates,
    integral_A,
    integral_C,
    quartic_coefficients,
    quartic_for_state,
    uniformization_parameter,
)
from dressing_chain.elliptic import weierstrass_p_and_prime
from dressing_chain.errors import EvenPeriod
from dressing_chain.integrator import integrate_chain

from oracles import SAMPLE_MU, SAMPLE_SIGMA, random_real_problems, symbolic_quartic, trajectory_fit_quartic, wp_inverse_quadrature

# frozen from the quadrature oracle (2|nu| = integral_a^inf dt / sqrt(4t^3 - G2 t - G3))
SAMPLE_NU = -0.5220315684758348

real = st.floats(-3, 3, allow_nan=False)


def test_params_alpha_telescopes():
    p = ChainParams((0.3, -1.2, 2.5, 0.1, 4.0))
    assert p.n == 5
    assert abs(sum(p.alpha)) < 1e-15
    np.testing.assert_allclose(p.alpha, [1.5, -3.7, 2.4, -3.9, 3.7])


@pytest.mark.parametrize(
    "sigma,mu,expected",
    [
        ((0, 0, 0), (1, 2, 3), (1, -2, 1)),
        ((1, 2, 3), (0, 0, 0), (5, -8, 3)),
        ((0.7, 0.7, 0.7), (-1.5, -1.5, -1.5), (0, 0, 0)),
    ],
)
def test_chain_rhs_examples(sigma, mu, expected):
    np.testing.assert_array_equal(chain_rhs(ChainState(sigma), ChainParams(mu)), expected)


def test_chain_rhs_even_period():
    with pytest.raises(EvenPeriod):
        chain_rhs(ChainState((1, 2, 3, 4)), ChainParams((0, 0, 0, 0)))


def test_chain_rhs_length_mismatch():
    with pytest.raises(ValueError):
        chain_rhs(ChainState((1, 2)), ChainParams((0, 0, 0)))


@given(st.tuples(real, real, real), st.tuples(real, real, real))
def test_chain_rhs_sum_is_zero(sigma, mu):
    assert sum(chain_rhs(ChainState(sigma), ChainParams(mu))) == pytest.approx(0, abs=1e-13)


@given(st.tuples(real, real, real), st.tuples(real, real, real))
def test_cyclic_covariance(sigma, mu):
    rot = lambda v: tuple(v[1:]) + (v[0],)  # noqa: E731
    lhs = chain_rhs(ChainState(rot(sigma)), ChainParams(rot(mu)))
    rhs = rot(tuple(chain_rhs(ChainState(sigma), ChainParams(mu))))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@given(st.integers(1, 4).map(lambda k: 2 * k + 1).flatmap(
    lambda n: st.tuples(st.lists(real, min_size=n, max_size=n), st.lists(real, min_size=n, max_size=n))
))
def test_general_rhs_solves_chain_equations(data):
    sigma, mu = np.array(data[0]), np.array(data[1])
    ds = chain_rhs(ChainState(sigma), ChainParams(mu))
    # (s_i + s_{i+1})' = s_i^2 - s_{i+1}^2 + mu_i - mu_{i+1}
    lhs = ds + np.roll(ds, -1)
    rhs = sigma**2 - np.roll(sigma, -1) ** 2 + mu - np.roll(mu, -1)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_integrals_examples():
    assert integral_C(ChainState((1, 1, 1))) == 3
    assert integral_C(ChainState((1, -2, 1))) == 0
    assert integral_A(ChainState((1, 1, 1)), ChainParams((0, 0, 0))) == 8
    assert integral_A(ChainState((1, 0, 0)), ChainParams((1, 2, 3))) == 5
    np.testing.assert_array_equal(g_coordinates(ChainState((1, 2, 3))), (3, 5, 4))
    np.testing.assert_array_equal(g_coordinates(ChainState((0, 0, 0))), (0, 0, 0))


def test_quartic_coefficients_examples():
    assert quartic_coefficients(0.0, 0.7, ChainParams((1.3, 1.3, 1.3))).a == pytest.approx(0, abs=1e-15)
    assert quartic_coefficients(3.0, 0.0, ChainParams((0, 0, 0))).a == 3


def test_quartic_symbolic_elimination():
    residual, _, _ = symbolic_quartic()
    assert residual == 0


def test_quartic_coefficients_match_symbolic(rng):
    _, (a, b, d), syms = symbolic_quartic()
    f = sp.lambdify(syms, (a, b, d))
    for _ in range(10):
        mu = rng.uniform(-2, 2, size=3)
        c, A = rng.uniform(-2, 2, size=2)
        q = quartic_coefficients(c, A, ChainParams(mu))
        np.testing.assert_allclose((q.a, q.b, q.d), f(*mu, c, A), rtol=1e-13, atol=1e-13)


def test_quartic_coefficients_trajectory_fit(rng):
    for mu, s0 in random_real_problems(rng, 10):
        params, state = ChainParams(mu), ChainState(s0)
        q = quartic_for_state(state, params)
        fit = trajectory_fit_quartic(params, state, x_end=0.5)
        np.testing.assert_allclose(fit, (q.a, q.b, q.d), atol=1e-7, rtol=0)


def test_quartic_curve_degenerate_flag():
    assert QuarticCurve(0.0, 0.0, 0.0).degenerate
    assert not QuarticCurve(1.16333, 1.264, 0.6409).degenerate


@pytest.mark.parametrize(
    "abd,expected",
    [((1.0, 0.0, 0.0), (3.0, 1.0)), ((0.0, 1.0, 0.0), (0.0, -1.0)), ((0.5, 0.2, -1.0), (-0.25, 0.585))],
)
def test_curve_invariants(abd, expected):
    inv = curve_invariants(QuarticCurve(*abd))
    assert abs(inv.g2 - expected[0]) < 1e-15 and abs(inv.g3 - expected[1]) < 1e-15


@given(real, real, real)
def test_curve_membership_identity(a, b, d):
    inv = curve_invariants(QuarticCurve(a, b, d))
    assert abs(b * b - (4 * a**3 - inv.g2 * a - inv.g3)) <= 1e-12 * (1 + abs(a) ** 3 + b * b + abs(a * d))


def test_uniformization_parameter_sample():
    params, state = ChainParams(SAMPLE_MU), ChainState(SAMPLE_SIGMA)
    c, A = integral_C(state), integral_A(state, params)
    nu = uniformization_parameter(params, c, A)
    q = quartic_coefficients(c, A, params)
    inv = curve_invariants(q)
    p, dp = weierstrass_p_and_prime(2 * nu, inv)
    assert abs(p - q.a) < 1e-9
    assert abs(dp - q.b) < 1e-9
    assert abs(nu - SAMPLE_NU) < 1e-12
    assert abs(2 * abs(nu) - wp_inverse_quadrature(q.a, inv.g2.real, inv.g3.real)) < 1e-11


def test_uniformization_parameter_random(rng):
    for mu, s0 in random_real_problems(rng, 10):
        params, state = ChainParams(mu), ChainState(s0)
        c, A = integral_C(state), integral_A(state, params)
        q = quartic_coefficients(c, A, params)
        inv = curve_invariants(q)
        p, dp = weierstrass_p_and_prime(2 * uniformization_parameter(params, c, A), inv)
        assert abs(p - q.a) < 1e-9 * (1 + abs(q.a))
        assert abs(dp - q.b) < 1e-9 * (1 + abs(q.b))


def test_conservation_along_rk4(rng):
    for mu, s0 in random_real_problems(rng, 4):
        params = ChainParams(mu)
        traj = integrate_chain(params, ChainState(s0), 1.0, 1e-3, blowup_threshold=50.0)
        s = traj.states
        c = s.sum(axis=1)
        assert np.max(np.abs(c - c[0])) < 1e-9 * (1 + np.max(np.abs(s)))
        q = quartic_for_state(ChainState(s0), params)
        ds1 = np.array([chain_rhs(ChainState(x), params)[0] for x in s])
        assert np.max(np.abs(ds1**2 - q(s[:, 0]))) < 1e-7 * (1 + np.max(s[:, 0] ** 4))
