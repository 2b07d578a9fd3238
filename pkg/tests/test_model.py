import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_stable_model
from wnsf.exceptions import UnstableModelError
from wnsf.model import (
    StateSpaceModel,
    build_observer_canonical,
    characteristic_roots,
    from_arma,
    gain_from_markov,
    impulse_response,
    markov_parameters,
    to_arma,
)


def test_arma_model_is_scalar_predictor(arma_model):
    m = build_observer_canonical([0.9], [1.7], 1.0)
    assert m.A_K.tolist() == [[-0.9]]
    assert m.K.tolist() == [[1.7]]
    assert m.C.tolist() == [[1.0]]
    np.testing.assert_allclose(arma_model.alpha, [0.9])
    np.testing.assert_allclose(arma_model.k_gain, [1.7], rtol=1e-15)


def test_zero_coefficients_give_nilpotent_shift():
    m = build_observer_canonical([0, 0], [0, 0], 1.0)
    np.testing.assert_array_equal(m.A_K, [[0, 1], [0, 0]])
    assert m.spectral_radius == 0.0


def test_unstable_predictor_rejected():
    with pytest.raises(UnstableModelError, match="spectral radius 2") as info:
        build_observer_canonical([-2.0], [1.0], 1.0)
    assert info.value.spectral_radius == pytest.approx(2.0)


@pytest.mark.parametrize("alpha,k,s2", [([0.1], [0.1, 0.2], 1.0), ([], [], 1.0), ([0.1], [0.1], 0.0)])
def test_invalid_arguments(alpha, k, s2):
    with pytest.raises(ValueError):
        StateSpaceModel(alpha, k, s2)


def test_model_is_immutable(arma_model):
    with pytest.raises(ValueError):
        arma_model.alpha[0] = 0.1
    with pytest.raises(AttributeError):
        arma_model.sigma2_e = 2.0


def test_companion_structure():
    m = build_observer_canonical([0.5, -0.2, 0.1], [1, 2, 3], 1.0)
    np.testing.assert_array_equal(m.A_K[:, 0], [-0.5, 0.2, -0.1])
    np.testing.assert_array_equal(np.diag(m.A_K, 1), [1, 1])
    assert np.count_nonzero(m.A_K[:, 1:]) == 2


def test_markov_parameters_examples(arma_model):
    np.testing.assert_allclose(markov_parameters(arma_model, 3), [1.7, -1.53, 1.377], rtol=1e-14)
    assert not markov_parameters(StateSpaceModel([0.3, 0.1], [0, 0]), 6).any()
    np.testing.assert_array_equal(
        markov_parameters(StateSpaceModel([0, 0], [0.4, -1.3]), 3), [0.4, -1.3, 0.0]
    )


def test_impulse_response_examples(arma_model):
    np.testing.assert_allclose(impulse_response(arma_model, 3), [1, 1.7, 1.36], rtol=1e-14)
    np.testing.assert_array_equal(impulse_response(StateSpaceModel([0.2], [0.0]), 5), [1, 0, 0, 0, 0])
    np.testing.assert_array_equal(
        impulse_response(StateSpaceModel([0.0], [0.5]), 4), [1, 0.5, 0.25, 0.125]
    )


def test_count_must_be_positive(arma_model):
    with pytest.raises(ValueError):
        markov_parameters(arma_model, 0)
    with pytest.raises(ValueError):
        impulse_response(arma_model, 0)


def test_characteristic_roots_examples(arma_model):
    np.testing.assert_allclose(characteristic_roots(arma_model).roots, [-0.9])
    np.testing.assert_array_equal(characteristic_roots(StateSpaceModel([0, 0], [1, 0])).roots, [0, 0])
    r = np.sort(characteristic_roots(StateSpaceModel([-1.3, 0.4], [1, 0])).roots.real)
    np.testing.assert_allclose(r, [0.5, 0.8], atol=1e-12)


def _brute_markov(model, count):
    A_K, K, C = model.A_K, model.K, model.C
    return np.array([(C @ np.linalg.matrix_power(A_K, i) @ K).item() for i in range(count)])


def _brute_impulse(model, count):
    # feed a unit innovation impulse through x+ = A x + K e, y = C x + e
    A, K = model.A, model.k_gain
    x = np.zeros(model.n_x)
    out = []
    for k in range(count):
        e = 1.0 if k == 0 else 0.0
        out.append(x[0] + e)
        x = A @ x + K * e
    return np.array(out)


@pytest.mark.parametrize("n_x", [1, 2, 3, 4])
def test_markov_and_impulse_match_state_propagation(n_x):
    rng = np.random.default_rng(100 + n_x)
    for _ in range(10):
        m = random_stable_model(rng, n_x)
        np.testing.assert_allclose(markov_parameters(m, 20), _brute_markov(m, 20), atol=1e-12)
        np.testing.assert_allclose(impulse_response(m, 20), _brute_impulse(m, 20), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=4),
       st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_roots_round_trip_and_first_markov(poles, k):
    alpha = np.poly(poles)[1:]
    m = build_observer_canonical(alpha, k[: len(poles)], 1.0)
    got = characteristic_roots(m).roots
    # repeated roots are ill conditioned, so compare the polynomial they rebuild
    np.testing.assert_allclose(np.poly(got).real, np.concatenate(([1.0], alpha)), atol=1e-8)
    assert np.all(np.abs(got) < 1)
    assert markov_parameters(m, 1)[0] == m.k_gain[0]


def test_arma_round_trip():
    m = from_arma([-1.3, 0.4], [0.2])
    a, c = to_arma(m)
    np.testing.assert_allclose(a, [-1.3, 0.4])
    np.testing.assert_allclose(c, [0.2, 0.0])


def test_gain_from_markov_inverts_markov():
    rng = np.random.default_rng(3)
    for n_x in (1, 2, 3, 4):
        m = random_stable_model(rng, n_x)
        g = markov_parameters(m, n_x)
        np.testing.assert_allclose(gain_from_markov(m.alpha, g), m.k_gain, atol=1e-12)
