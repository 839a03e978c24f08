import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian
from oracles import ka_reference, rho_cov, rho_trace_form, rho_vector_form
from locsme.evaluation import RunConfig, run_trial
from locsme.scenario import ScenarioConfig
from locsme.shrinkage import (
    KaParams,
    OasCovState,
    OasVectorState,
    ka_init,
    ka_update,
    oas_cov_update,
    oas_vector_coefficient,
    oas_vector_init,
    oas_vector_update,
    sigmoid,
)


def _cvec(rng, M):
    return rng.standard_normal(M) + 1j * rng.standard_normal(M)


def _vec_state(l_hat, rho, count):
    return OasVectorState(l_hat=l_hat, d_hat=np.zeros_like(l_hat), rho=rho, count=count)


def test_vector_no_shrinkage(rng):
    x, y = _cvec(rng, 6), 0.3 - 1.2j
    new = oas_vector_update(oas_vector_init(6, rho0=0.0), x, y)
    np.testing.assert_array_equal(new.d_hat, new.l_hat)
    np.testing.assert_allclose(new.l_hat, x * np.conj(y))


def test_vector_full_shrinkage(rng):
    st0 = _vec_state(_cvec(rng, 5), 1.0, 3)
    new = oas_vector_update(st0, _cvec(rng, 5), 0.7j)
    np.testing.assert_allclose(new.d_hat, np.full(5, new.l_hat.mean()), atol=1e-15)


def test_vector_running_mean(rng):
    st0 = _vec_state(_cvec(rng, 4), 0.4, 2)
    x, y = _cvec(rng, 4), 1.0 + 0.5j
    new = oas_vector_update(st0, x, y)
    np.testing.assert_allclose(new.l_hat, (2 * st0.l_hat + x * np.conj(y)) / 3)
    assert new.count == 3


def test_vector_coefficient_fixture():
    # M = 4, snapshot i = 3
    l_prev = np.array([0.5 + 0.2j, -0.1 + 0.4j, 0.3 - 0.3j, 0.05 + 0.0j])
    x = np.array([1.0 + 0.5j, -0.2 + 0.1j, 0.4 - 0.9j, 0.3 + 0.3j])
    y = 0.8 - 0.6j
    new = oas_vector_update(_vec_state(l_prev, 0.35, 2), x, y)
    l_ref = (2 * l_prev + x * np.conj(y)) / 3
    d_ref = 0.35 * l_ref.mean() + 0.65 * l_ref
    np.testing.assert_allclose(new.d_hat, d_ref, atol=1e-15)
    expected = min(max(rho_vector_form(list(d_ref), list(l_ref), 3), 0.0), 1.0)
    assert new.rho == pytest.approx(expected, abs=1e-12)


def test_vector_trace_and_inner_product_forms_agree(rng):
    for _ in range(1000):
        M = int(rng.integers(2, 20))
        l = _cvec(rng, M)
        rho = rng.uniform()
        d = rho * l.mean() + (1 - rho) * l
        i = int(rng.integers(1, 600))
        num, den = oas_vector_coefficient(d, l, i)
        assert num / den == pytest.approx(rho_trace_form(d, l, i), abs=1e-12)
        assert rho_vector_form(list(d), list(l), i) == pytest.approx(rho_trace_form(d, l, i), abs=1e-12)


def test_vector_zero_correlation_skips_update():
    st0 = oas_vector_init(4, rho0=0.3)
    new = oas_vector_update(st0, np.zeros(4, dtype=complex), 1.0)
    assert new.rho == 0.3 and not np.any(new.d_hat)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rho0=st.floats(0.0, 1.0))
def test_coefficients_stay_in_unit_interval(seed, rho0):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(2, 12))
    vs, cs = oas_vector_init(M, rho0), OasCovState(np.zeros((M, M), complex), np.zeros((M, M), complex), rho0, 0)
    for _ in range(40):
        x = _cvec(rng, M) * rng.exponential()
        vs = oas_vector_update(vs, x, complex(*rng.standard_normal(2)))
        cs = oas_cov_update(cs, x)
        assert 0.0 <= vs.rho <= 1.0
        assert 0.0 <= cs.rho0 <= 1.0


def _cov_state(scm, rho0, count):
    return OasCovState(scm=scm, r_tilde=np.zeros_like(scm), rho0=rho0, count=count)


def test_cov_full_shrinkage(rng):
    A = random_hermitian(rng, 4)
    scm = A @ A.conj().T
    new = oas_cov_update(_cov_state(scm, 1.0, 3), _cvec(rng, 4))
    np.testing.assert_allclose(new.r_tilde, np.trace(new.scm).real / 4 * np.eye(4), atol=1e-12)


def test_cov_no_shrinkage(rng):
    new = oas_cov_update(_cov_state(np.eye(3, dtype=complex), 0.0, 1), _cvec(rng, 3))
    np.testing.assert_array_equal(new.r_tilde, new.scm)


def test_cov_coefficient_fixture():
    # M = 3, snapshot i = 5
    scm_prev = np.array([[2.0, 0.3 + 0.1j, -0.2j], [0.3 - 0.1j, 1.5, 0.4], [0.2j, 0.4, 1.0]])
    x = np.array([0.7 - 0.2j, 1.1 + 0.4j, -0.5 + 0.9j])
    new = oas_cov_update(_cov_state(scm_prev, 0.25, 4), x)
    R_hat = (4 * scm_prev + np.outer(x, x.conj())) / 5
    R_tilde = 0.25 * np.trace(R_hat).real / 3 * np.eye(3) + 0.75 * R_hat
    np.testing.assert_allclose(new.r_tilde, R_tilde, atol=1e-14)
    expected = min(max(rho_cov(R_tilde, R_hat, 5), 0.0), 1.0)
    assert new.rho0 == pytest.approx(expected, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rho0=st.floats(0.0, 1.0))
def test_cov_shrunk_matrix_spectrum(seed, rho0):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(2, 10))
    B = random_hermitian(rng, M)
    scm = B @ B.conj().T
    new = oas_cov_update(_cov_state(scm, rho0, int(rng.integers(0, 50))), _cvec(rng, M))
    np.testing.assert_allclose(new.r_tilde, new.r_tilde.conj().T, atol=1e-12)
    floor = rho0 * np.trace(new.scm).real / M
    assert np.linalg.eigvalsh(new.r_tilde).min() >= floor - 1e-10


def _ka_params(**kw):
    base = dict(mu_eps=1.0, sigma_eps=0.001, lambda_q=0.99, r0=10 * np.eye(3))
    base.update(kw)
    return KaParams(**base)


def test_ka_midpoint(rng):
    R_hat = random_hermitian(rng, 3)
    r_tilde, _ = ka_update(ka_init(_ka_params()), R_hat, _cvec(rng, 3), _cvec(rng, 3))
    np.testing.assert_allclose(r_tilde, (10 * np.eye(3) + R_hat) / 2)


def test_ka_zero_difference_fixed_point(rng):
    a1, x = _cvec(rng, 3), _cvec(rng, 3)
    state = ka_init(_ka_params(), epsilon0=0.7, q0=2.0)
    _, new = ka_update(state, 10 * np.eye(3), a1, x)
    assert new.epsilon == 0.7
    assert new.q == pytest.approx(0.99 * 2.0, rel=1e-15)


def test_ka_fixture():
    R_hat = np.array([[2.0, 0.5 - 0.5j, 0.1], [0.5 + 0.5j, 1.0, -0.3j], [0.1, 0.3j, 3.0]])
    a1 = np.array([0.6, 0.5 + 0.3j, -0.2 + 0.5j])
    x = np.array([1.0 - 0.4j, 0.2 + 0.8j, -0.7 + 0.1j])
    params = _ka_params()
    state = ka_init(params, epsilon0=0.2, q0=0.5)
    r_tilde, new = ka_update(state, R_hat, a1, x)
    eta, eps_ref, q_ref = ka_reference(10 * np.eye(3), R_hat, a1, x, 0.2, 0.5, 1.0, 0.001, 0.99)
    assert state.eta == pytest.approx(eta, abs=1e-12)
    assert new.epsilon == pytest.approx(eps_ref, abs=1e-12)
    assert new.q == pytest.approx(q_ref, abs=1e-12)
    np.testing.assert_allclose(r_tilde, eta * 10 * np.eye(3) + (1 - eta) * R_hat, atol=1e-12)


def test_ka_literal_q_has_no_memory(rng):
    a1, x = _cvec(rng, 3), _cvec(rng, 3)
    R_hat = random_hermitian(rng, 3)
    params = _ka_params(literal_q=True)
    _, new = ka_update(ka_init(params, q0=123.0), R_hat, a1, x)
    diff = np.vdot(10 * a1, x) - np.vdot(R_hat @ a1, x)
    assert new.q == pytest.approx(0.99 * 0.01 * abs(diff) ** 2, rel=1e-12)


@pytest.mark.parametrize("eps", [-800.0, -30.0, -1.0, 0.0, 2.5, 30.0, 800.0])
def test_sigmoid(eps):
    eta = sigmoid(eps)
    assert 0.0 <= eta <= 1.0
    if abs(eps) < 30:
        assert 0.0 < eta < 1.0
        assert eta == pytest.approx(1 / (1 + math.exp(-eps)), rel=1e-15)


def test_rho_converges_in_coherent_scenario():
    config = RunConfig(scenario=ScenarioConfig(mismatch="coherent"), algorithms=("locsme",), n_trials=1)
    for trial in range(3):
        rhos = []
        run_trial(config, trial, observer=lambda name, i, bf: rhos.append(bf.state.oas_vec.rho))
        assert np.abs(np.diff(rhos))[200:].max() < 1e-4
