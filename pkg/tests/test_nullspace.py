import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_stable_model
from wnsf.exceptions import SingularMatrixError
from wnsf.hoar import MarkovEstimate, estimate_hoar
from wnsf.model import StateSpaceModel, markov_parameters
from wnsf.nullspace import (
    NullSpaceEstimate,
    Weighting,
    build_hankel,
    build_weighting,
    estimate_alpha_ols,
    estimate_alpha_wls,
    toeplitz_operator,
)
from wnsf.simulate import simulate


def _identity_markov(g):
    n = len(g)
    return MarkovEstimate(np.asarray(g, float), np.eye(n), np.eye(n), n, 1.0, 1.0)


def test_hankel_examples():
    h = build_hankel([1.7, -1.53, 1.377], 1)
    np.testing.assert_array_equal(h.H_plus, [[1.7, -1.53]])
    np.testing.assert_array_equal(h.H_minus, [-1.53, 1.377])
    assert h.p == 2

    h = build_hankel([1, 2, 3, 4, 5], 2)
    np.testing.assert_array_equal(h.H_plus, [[1, 2, 3], [2, 3, 4]])
    np.testing.assert_array_equal(h.H_minus, [3, 4, 5])

    h = build_hankel(np.zeros(5), 2)
    assert not h.full.any()


def test_hankel_structure():
    g = np.arange(1.0, 12.0)
    H = build_hankel(g, 3).full
    i, j = np.indices(H.shape)
    np.testing.assert_array_equal(H, g[i + j])


def test_hankel_too_short():
    with pytest.raises(ValueError, match="at least 5"):
        build_hankel(np.ones(4), 2)


def test_ols_exact_examples(arma_model):
    est = estimate_alpha_ols(build_hankel(markov_parameters(arma_model, 21), 1))
    np.testing.assert_allclose(est.alpha, [0.9], atol=1e-12)
    assert est.stage == "ols"

    m2 = StateSpaceModel([-1.3, 0.4], [1.0, 0.0])
    est = estimate_alpha_ols(build_hankel(markov_parameters(m2, 21), 2))
    np.testing.assert_allclose(est.alpha, [-1.3, 0.4], atol=1e-10)

    g = np.zeros(7)
    g[0] = 1.0
    np.testing.assert_array_equal(estimate_alpha_ols(build_hankel(g, 1)).alpha, [0.0])


def test_ols_order_too_high_is_singular(arma_model):
    g = markov_parameters(arma_model, 30)
    with pytest.raises(SingularMatrixError) as info:
        estimate_alpha_ols(build_hankel(g, 2))
    assert info.value.condition > 1e12


def test_alpha_vec_ordering():
    est = NullSpaceEstimate(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(est.alpha_vec, [3.0, 2.0, 1.0])


def test_toeplitz_examples():
    T = toeplitz_operator([0.9], 3)
    np.testing.assert_array_equal(T, [[0.9, 0.0], [1.0, 0.9], [0.0, 1.0]])
    T0 = toeplitz_operator([0.0], 4)
    np.testing.assert_array_equal(T0, np.eye(4)[:, 1:])
    T2 = toeplitz_operator([0.5, -0.2], 6)
    np.testing.assert_array_equal(T2[:, 0], [-0.2, 0.5, 1, 0, 0, 0])
    np.testing.assert_array_equal(T2[0], [-0.2, 0, 0, 0])


def test_weighting_examples():
    W = build_weighting([0.9], np.eye(3), 1.0, 3)
    np.testing.assert_allclose(W.matrix, [[1.81, 0.9], [0.9, 1.81]], atol=1e-15)
    # zero coefficients: Lambda is the trailing sub-block of sigma2 R_n^-1
    rng = np.random.default_rng(0)
    B = rng.normal(size=(5, 5))
    R = B @ B.T + 5 * np.eye(5)
    U = np.linalg.cholesky(R).T
    W0 = build_weighting([0.0], U, 2.0, 5)
    np.testing.assert_allclose(W0.matrix, 2.0 * np.linalg.inv(R)[1:, 1:], rtol=1e-12)


def test_weighting_solve_and_whiten_agree_with_inverse():
    rng = np.random.default_rng(1)
    n = 12
    B = rng.normal(size=(n, n))
    U = np.linalg.cholesky(B @ B.T + n * np.eye(n)).T
    W = Weighting([0.4, -0.3], U, 1.0, n)
    X = rng.normal(size=(3, W.p))
    inv = np.linalg.inv(W.matrix)
    np.testing.assert_allclose(W.solve(X.T), inv @ X.T, rtol=1e-9, atol=1e-12)
    Xw = W.whiten(X)
    np.testing.assert_allclose(Xw @ Xw.T, X @ inv @ X.T, rtol=1e-9, atol=1e-12)
    assert not W.degraded


def test_weighting_falls_back_to_identity():
    W = Weighting([0.2], np.eye(6), 1.0, 6)
    W.matrix = -np.eye(W.p)
    W._chol = W._factor()
    assert W._chol is None
    X = np.ones((2, W.p))
    np.testing.assert_array_equal(W.whiten(X), X)
    np.testing.assert_array_equal(W.solve(X.T), X.T)


def test_weighting_needs_enough_parameters():
    with pytest.raises(ValueError):
        Weighting([0.1, 0.2], np.eye(4), 1.0, 4)


@settings(max_examples=80, deadline=None)
@given(
    arrays(np.float64, st.integers(1, 4), elements=st.floats(-2, 2)),
    st.integers(0, 6),
    st.randoms(use_true_random=False),
)
def test_toeplitz_rewriting_identity(alpha, extra, rnd):
    n_x = alpha.size
    n = 2 * n_x + 1 + extra
    dg = np.array([rnd.uniform(-1, 1) for _ in range(n)])
    lhs = np.concatenate((alpha[::-1], [1.0])) @ build_hankel(dg, n_x).full
    rhs = dg @ toeplitz_operator(alpha, n)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13)


@pytest.mark.parametrize("n_x", [1, 2, 3, 4])
def test_nullspace_identity_and_exact_recovery(n_x):
    rng = np.random.default_rng(20 + n_x)
    for _ in range(15):
        m = random_stable_model(rng, n_x)
        n = 4 * n_x + 2 + 8
        h = build_hankel(markov_parameters(m, n), n_x)
        resid = m.alpha[::-1] @ h.H_plus + h.H_minus
        assert np.max(np.abs(resid)) < 1e-10
        np.testing.assert_allclose(estimate_alpha_ols(h).alpha, m.alpha, atol=1e-9)


def test_wls_on_exact_data_is_fixed_point(arma_model):
    g = markov_parameters(arma_model, 21)
    h = build_hankel(g, 1)
    ols = estimate_alpha_ols(h)
    wls = estimate_alpha_wls(h, ols, _identity_markov(g), iterations=1)
    np.testing.assert_allclose(wls.alpha, ols.alpha, atol=1e-12)
    assert wls.stage == "wls" and wls.iteration == 1


def test_wls_with_unit_weighting_equals_ols():
    rng = np.random.default_rng(5)
    g = rng.normal(size=15)
    h = build_hankel(g, 2)
    prior = NullSpaceEstimate(np.zeros(2))
    wls = estimate_alpha_wls(h, prior, _identity_markov(g), iterations=1)
    np.testing.assert_allclose(wls.alpha, estimate_alpha_ols(h).alpha, atol=1e-12)


def test_wls_iterations_stop_on_convergence(arma_model):
    y = simulate(arma_model, 2000, seed=8)
    markov = estimate_hoar(y, 40)
    h = build_hankel(markov.g_hat, 1)
    ols = estimate_alpha_ols(h)
    one = estimate_alpha_wls(h, ols, markov, 1)
    many = estimate_alpha_wls(h, ols, markov, 50)
    assert many.converged and many.iteration < 50
    assert len(many.history) == many.iteration + 1
    np.testing.assert_array_equal(many.history[1], one.alpha)
    assert abs(many.history[-1][0] - many.history[-2][0]) < 1e-10


def test_wls_rejects_bad_arguments(arma_model):
    g = markov_parameters(arma_model, 9)
    h = build_hankel(g, 1)
    with pytest.raises(ValueError):
        estimate_alpha_wls(h, estimate_alpha_ols(h), _identity_markov(g), 0)
    with pytest.raises(ValueError):
        estimate_alpha_wls(h, estimate_alpha_ols(h), _identity_markov(g[:7]), 1)


def _alpha_errors(model, N, n, trials, base=0):
    ols, wls = [], []
    for s in range(base, base + trials):
        markov = estimate_hoar(simulate(model, N, seed=s), n)
        h = build_hankel(markov.g_hat, 1)
        o = estimate_alpha_ols(h)
        w = estimate_alpha_wls(h, o, markov, 1)
        ols.append((o.alpha[0] - model.alpha[0]) ** 2)
        wls.append((w.alpha[0] - model.alpha[0]) ** 2)
    return np.array(ols), np.array(wls)


@pytest.mark.slow
def test_wls_no_worse_than_ols(arma_model):
    ols, wls = _alpha_errors(arma_model, 1000, 50, 500)
    assert np.median(wls) <= np.median(ols)
