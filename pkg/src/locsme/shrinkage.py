"""Shrinkage estimators used by the beamformers.

* OAS shrinkage of the sample correlation vector between the array data and
  the beamformer output, toward its mean entry.
* OAS shrinkage of the sample covariance matrix toward a scaled identity.
* Knowledge-aided (KA) shrinkage of a rank-one interference-plus-noise
  estimate toward a prior matrix, with the mixing weight adapted through a
  sigmoid.

The update functions take a state and return a new one; states are never
mutated in place.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "OasVectorState",
    "OasCovState",
    "KaParams",
    "KaState",
    "oas_vector_init",
    "oas_vector_update",
    "oas_vector_coefficient",
    "oas_cov_init",
    "oas_cov_update",
    "oas_cov_coefficient",
    "sigmoid",
    "ka_init",
    "ka_filter_outputs",
    "ka_step",
    "ka_update",
]


def _clamp(rho, name):
    if not 0.0 <= rho <= 1.0:
        log.debug("%s=%.6g outside [0, 1], clamped", name, rho)
    return min(max(rho, 0.0), 1.0)


def _ratio(num, den, fallback):
    if den == 0.0 or not np.isfinite(num / den):
        return fallback
    return num / den


@dataclass(frozen=True)
class OasVectorState:
    """Running sample correlation vector and its shrunk version.

    ``rho`` is the coefficient that the *next* update will use.
    """

    l_hat: np.ndarray
    d_hat: np.ndarray
    rho: float
    count: int


def oas_vector_init(M, rho0=0.5):
    zero = np.zeros(M, dtype=complex)
    return OasVectorState(l_hat=zero, d_hat=zero.copy(), rho=float(rho0), count=0)


def oas_vector_coefficient(d_hat, l_hat, i):
    """Unclamped next shrinkage coefficient after ``i`` snapshots.

    Works with the inner product ``d^H l`` and ``|sum(d)|^2`` in O(M).
    """
    M = d_hat.size
    inner = np.vdot(d_hat, l_hat).real
    tr2 = abs(d_hat.sum()) ** 2
    num = (1.0 - 2.0 / M) * inner + tr2
    den = (i + 1.0 - 2.0 / M) * inner + (1.0 - i / M) * tr2
    return num, den


def oas_vector_update(state, x, y):
    """Absorb snapshot ``x`` and beamformer output ``y``."""
    i = state.count + 1
    l_hat = ((i - 1) * state.l_hat + x * np.conj(y)) / i
    nu = l_hat.mean()
    rho = state.rho
    d_hat = rho * nu + (1.0 - rho) * l_hat
    if not np.any(l_hat):
        return OasVectorState(l_hat=l_hat, d_hat=d_hat, rho=rho, count=i)
    num, den = oas_vector_coefficient(d_hat, l_hat, i)
    rho_next = _clamp(_ratio(num, den, rho), "rho")
    return OasVectorState(l_hat=l_hat, d_hat=d_hat, rho=rho_next, count=i)


@dataclass(frozen=True)
class OasCovState:
    """Running sample covariance matrix and its OAS-shrunk version."""

    scm: np.ndarray
    r_tilde: np.ndarray
    rho0: float
    count: int


def oas_cov_init(M, rho0=0.5):
    zero = np.zeros((M, M), dtype=complex)
    return OasCovState(scm=zero, r_tilde=zero.copy(), rho0=float(rho0), count=0)


def oas_cov_coefficient(r_tilde, scm, i):
    """Numerator and denominator of the next covariance shrinkage coefficient."""
    M = scm.shape[0]
    # tr(A B) for Hermitian A, B without forming the product
    tr_prod = np.sum(r_tilde * scm.conj()).real
    tr2 = np.trace(r_tilde).real ** 2
    num = (1.0 - 2.0 / M) * tr_prod + tr2
    den = (i + 1.0 - 2.0 / M) * tr_prod + (1.0 - i / M) * tr2
    return num, den


def oas_cov_update(state, x):
    """Absorb snapshot ``x`` into the sample covariance and shrink it."""
    i = state.count + 1
    M = x.size
    scm = ((i - 1) * state.scm + np.outer(x, x.conj())) / i
    scm = 0.5 * (scm + scm.conj().T)
    nu0 = np.trace(scm).real / M
    rho0 = state.rho0
    r_tilde = (1.0 - rho0) * scm
    r_tilde[np.diag_indices(M)] += rho0 * nu0
    num, den = oas_cov_coefficient(r_tilde, scm, i)
    rho_next = _clamp(_ratio(num, den, rho0), "rho0")
    return OasCovState(scm=scm, r_tilde=r_tilde, rho0=rho_next, count=i)


def sigmoid(eps):
    """``1 / (1 + exp(-eps))`` without overflow for large ``|eps|``."""
    if eps >= 0:
        return 1.0 / (1.0 + np.exp(-eps))
    z = np.exp(eps)
    return z / (1.0 + z)


@dataclass(frozen=True)
class KaParams:
    """Knowledge-aided shrinkage settings.

    Attributes:
        mu_eps: Step size of the sigmoid pre-image update.
        sigma_eps: Small positive regularizer of the normalized step.
        lambda_q: Forgetting factor of the output-difference power.
        r0: Prior interference-plus-noise matrix.
        literal_q: Use ``q <- lambda_q * (1 - lambda_q) * |diff|^2`` (no
            memory) instead of the exponentially weighted average.
    """

    mu_eps: float
    sigma_eps: float
    lambda_q: float
    r0: np.ndarray
    literal_q: bool = False


@dataclass(frozen=True)
class KaState:
    epsilon: float
    q: float
    params: KaParams

    @property
    def eta(self):
        return sigmoid(self.epsilon)


def ka_init(params, epsilon0=0.0, q0=1.0):
    return KaState(epsilon=float(epsilon0), q=float(q0), params=params)


def ka_filter_outputs(r0, r_hat_inc, a1, x):
    """Outputs ``[R0 a1]^H x`` and ``[R a1]^H x`` of the two component filters."""
    return np.vdot(r0 @ a1, x), np.vdot(r_hat_inc @ a1, x)


def ka_step(state, y0f, yhf):
    """Advance ``(epsilon, q)`` from the two filter outputs.

    Returns the new state and the mixing weight ``eta`` that was in force
    for this snapshot.
    """
    p = state.params
    eta = sigmoid(state.epsilon)
    diff = y0f - yhf
    diff2 = abs(diff) ** 2
    grad = (eta * diff2 + (diff * np.conj(yhf)).real) * eta * (1.0 - eta)
    eps = state.epsilon - p.mu_eps / (p.sigma_eps + state.q) * grad
    if p.literal_q:
        q = p.lambda_q * (1.0 - p.lambda_q) * diff2
    else:
        q = p.lambda_q * state.q + (1.0 - p.lambda_q) * diff2
    return replace(state, epsilon=float(eps), q=float(q)), eta


def ka_update(state, r_hat_inc, a1, x):
    """Shrink ``r_hat_inc`` toward the prior and adapt the mixing weight.

    Returns:
        ``(r_tilde_inc, new_state)`` with
        ``r_tilde_inc = eta R0 + (1 - eta) r_hat_inc``.
    """
    r0 = state.params.r0
    y0f, yhf = ka_filter_outputs(r0, r_hat_inc, a1, x)
    new_state, eta = ka_step(state, y0f, yhf)
    return eta * r0 + (1.0 - eta) * r_hat_inc, new_state
