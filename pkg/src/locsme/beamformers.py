"""Adaptive beamformers driven one snapshot at a time.

``Locsme`` and ``LocsmeSG`` estimate the desired steering vector by
projecting an OAS-shrunk output/data correlation vector onto the sector
subspace, then estimate the desired power from it. They differ in how the
interference-plus-noise covariance and the weights are obtained:

* ``Locsme`` shrinks the sample covariance, subtracts the desired rank-one
  term and solves the MVDR system (O(M^3) per snapshot).
* ``LocsmeSG`` runs a constrained stochastic-gradient weight update and a
  knowledge-aided shrinkage of the instantaneous interference-plus-noise
  estimate (O(M^2) per snapshot, no factorization).

``SMI`` and ``StandardSG`` are the presumed-steering baselines.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .numerics import SingularSystemError, solve_regularized
from .shrinkage import (
    KaParams,
    KaState,
    OasCovState,
    OasVectorState,
    ka_init,
    ka_step,
    oas_cov_init,
    oas_cov_update,
    oas_vector_init,
    oas_vector_update,
)

log = logging.getLogger(__name__)

__all__ = [
    "DegenerateEstimateError",
    "BeamformerState",
    "estimate_steering",
    "estimate_power",
    "constrained_sg_update",
    "mvdr_weights",
    "locsme_weights",
    "smi_weights",
    "Locsme",
    "LocsmeSG",
    "SMI",
    "StandardSG",
]


class DegenerateEstimateError(ArithmeticError):
    """The projected correlation vector vanished; no steering estimate exists."""


@dataclass(frozen=True)
class BeamformerState:
    """Adaptive state shared by the beamformers.

    Attributes:
        w: Current weight vector.
        a1_hat: Unit-norm estimate of the desired steering vector.
        sigma1_sq_hat: Desired-power estimate.
        oas_vec: Correlation-vector shrinkage state (LOCSME family).
        oas_cov: Covariance shrinkage state (LOCSME).
        ka: Knowledge-aided shrinkage state (LOCSME-SG).
        r_tilde_inc: Latest interference-plus-noise estimate, for diagnostics.
        count: Snapshots processed.
    """

    w: np.ndarray
    a1_hat: np.ndarray
    sigma1_sq_hat: float = 0.0
    oas_vec: Optional[OasVectorState] = None
    oas_cov: Optional[OasCovState] = None
    ka: Optional[KaState] = None
    r_tilde_inc: Optional[np.ndarray] = None
    count: int = 0


def estimate_steering(projection, d_hat):
    """Unit-norm projection of ``d_hat`` onto the sector subspace."""
    v = projection.apply(d_hat)
    nrm = np.linalg.norm(v)
    if nrm < 1e-14:
        raise DegenerateEstimateError("projected correlation vector is numerically zero")
    return v / nrm


def estimate_power(a1_hat, x, noise_power):
    """Instantaneous desired-power estimate, floored at zero.

    ``(|a^H x|^2 - a^H a * noise_power) / |a^H a|^2``. The estimate refers to
    the power carried along ``a1_hat``; with a unit-norm ``a1_hat`` and an
    ``M``-element steering vector it targets ``M`` times the per-element
    power.
    """
    aa = np.vdot(a1_hat, a1_hat).real
    val = (abs(np.vdot(a1_hat, x)) ** 2 - aa * noise_power) / aa**2
    return max(0.0, float(val))


def constrained_sg_update(w, x, a1, sigma1_sq, mu):
    """One gradient step on ``w^H (x x^H - s a a^H) w`` keeping ``w^H a = 1``.

    The Lagrange multiplier is chosen so the constraint holds exactly after
    the step, which amounts to projecting the unconstrained step onto the
    affine set ``{w : a^H w = 1}``. O(M).
    """
    y = np.vdot(w, x)
    grad = x * np.conj(y) - sigma1_sq * a1 * np.vdot(a1, w)
    v = w - mu * grad
    return v - a1 * ((np.vdot(a1, v) - 1.0) / np.vdot(a1, a1).real)


def mvdr_weights(R, a, loading=0.0):
    """``R^{-1} a / (a^H R^{-1} a)`` via :func:`solve_regularized`."""
    z = solve_regularized(R, a, loading)
    return z / np.vdot(a, z)


def locsme_weights(r_tilde, a1_hat, sigma1_sq, fallback_loading=None):
    """MVDR weights on ``r_tilde - sigma1_sq a1 a1^H``.

    The subtracted matrix may be indefinite, which the solve tolerates. If it
    is numerically singular the solve is retried once with
    ``fallback_loading`` (default ``1e-3 tr(r_tilde)/M``).
    """
    r_inc = r_tilde - sigma1_sq * np.outer(a1_hat, a1_hat.conj())
    try:
        return mvdr_weights(r_inc, a1_hat), r_inc
    except SingularSystemError:
        if fallback_loading is None:
            fallback_loading = 1e-3 * np.trace(r_tilde).real / r_tilde.shape[0]
        return mvdr_weights(r_inc, a1_hat, fallback_loading), r_inc


def smi_weights(scm, a_presumed, count=None):
    """Sample-matrix-inversion weights.

    A loading of ``1e-6 tr(R)/M`` is applied while fewer than ``M``
    snapshots have been seen (``count < M``).
    """
    M = scm.shape[0]
    loading = 0.0
    if count is not None and count < M:
        loading = 1e-6 * np.trace(scm).real / M
    return mvdr_weights(scm, a_presumed, loading)


class _Base:
    name = ""

    def __init__(self, a_presumed):
        a = np.asarray(a_presumed, dtype=complex)
        self.a_presumed = a
        self.state = BeamformerState(w=a / a.size, a1_hat=a / np.linalg.norm(a))

    @property
    def w(self):
        return self.state.w

    def run(self, X):
        """Process the rows of ``X`` and return the weight history, shape (N, M)."""
        return np.array([self.step(x).copy() for x in X])


class _NormalizedStep:
    """Step size ``mu``, optionally divided by the running mean of ``||x||^2``.

    The running mean equals ``tr(R_hat)`` and costs O(M) per snapshot.
    """

    def __init__(self, mu, normalize=True):
        if not mu > 0:
            raise ValueError(f"step size must be positive, got {mu}")
        self.mu = mu
        self.normalize = normalize
        self.power = 0.0
        self.count = 0

    def __call__(self, x):
        if not self.normalize:
            return self.mu
        self.count += 1
        self.power += (np.vdot(x, x).real - self.power) / self.count
        return self.mu / self.power if self.power > 0 else 0.0


class _SteeringEstimator(_Base):
    def __init__(self, a_presumed, projection, noise_power, rho0=0.5, power_smoothing=0.0):
        super().__init__(a_presumed)
        self.projection = projection
        self.noise_power = noise_power
        self.power_smoothing = power_smoothing
        self.state = replace(self.state, oas_vec=oas_vector_init(self.a_presumed.size, rho0))

    def _front_end(self, st, x):
        y = np.vdot(st.w, x)
        oas_vec = oas_vector_update(st.oas_vec, x, y)
        try:
            a1 = estimate_steering(self.projection, oas_vec.d_hat)
        except DegenerateEstimateError:
            log.debug("degenerate steering estimate at snapshot %d; keeping previous", st.count + 1)
            a1 = st.a1_hat
        s2 = estimate_power(a1, x, self.noise_power)
        if self.power_smoothing and st.count > 0:
            s2 = self.power_smoothing * st.sigma1_sq_hat + (1.0 - self.power_smoothing) * s2
        return oas_vec, a1, s2


class Locsme(_SteeringEstimator):
    """Shrinkage-based mismatch estimation with a direct MVDR solve.

    Args:
        a_presumed: Presumed steering vector (initializes the weights).
        projection: :class:`~locsme.array_model.ProjectionBasis` of the sector.
        noise_power: Known noise power per element.
        rho0: Initial correlation-vector shrinkage coefficient.
        rho0_cov: Initial covariance shrinkage coefficient.
        power_smoothing: Optional exponential smoothing of the power estimate
            (0 disables it).
    """

    name = "locsme"

    def __init__(self, a_presumed, projection, noise_power, rho0=0.5, rho0_cov=0.5,
                 power_smoothing=0.0):
        super().__init__(a_presumed, projection, noise_power, rho0, power_smoothing)
        self.state = replace(self.state, oas_cov=oas_cov_init(self.a_presumed.size, rho0_cov))

    def step(self, x):
        st = self.state
        oas_vec, a1, s2 = self._front_end(st, x)
        oas_cov = oas_cov_update(st.oas_cov, x)
        w, r_inc = locsme_weights(oas_cov.r_tilde, a1, s2)
        self.state = BeamformerState(
            w=w, a1_hat=a1, sigma1_sq_hat=s2, oas_vec=oas_vec, oas_cov=oas_cov,
            r_tilde_inc=r_inc, count=st.count + 1,
        )
        return w


class LocsmeSG(_SteeringEstimator):
    """Stochastic-gradient variant with knowledge-aided INC shrinkage.

    Args:
        a_presumed: Presumed steering vector (initializes the weights).
        projection: Sector projection basis.
        noise_power: Known noise power per element.
        mu: Weight step size.
        ka_params: :class:`~locsme.shrinkage.KaParams`.
        rho0: Initial correlation-vector shrinkage coefficient.
        epsilon0, q0: Initial KA sigmoid pre-image and difference power.
        power_smoothing: Optional smoothing of the power estimate.
        normalize_step: Divide ``mu`` by the running mean of ``||x||^2``.
        keep_inc: Store the shrunk INC matrix in the state each snapshot. This
            is an O(M^2) outer product kept only for diagnostics.
    """

    name = "locsme-sg"

    def __init__(self, a_presumed, projection, noise_power, mu, ka_params, rho0=0.5,
                 epsilon0=0.0, q0=1.0, power_smoothing=0.0, keep_inc=False, normalize_step=True):
        super().__init__(a_presumed, projection, noise_power, rho0, power_smoothing)
        self.step_size = _NormalizedStep(mu, normalize_step)
        self.keep_inc = keep_inc
        self.state = replace(self.state, ka=ka_init(ka_params, epsilon0, q0))

    def step(self, x):
        st = self.state
        oas_vec, a1, s2 = self._front_end(st, x)
        # modified array observation; R_hat_inc = x_in x_in^H is never formed
        x_in = x - np.sqrt(s2) * a1
        r0 = st.ka.params.r0
        y0f = np.vdot(r0 @ a1, x)
        yhf = np.conj(np.vdot(x_in, a1)) * np.vdot(x_in, x)
        ka, eta = ka_step(st.ka, y0f, yhf)
        r_inc = None
        if self.keep_inc:
            r_inc = eta * r0 + (1.0 - eta) * np.outer(x_in, x_in.conj())
        w = constrained_sg_update(st.w, x, a1, s2, self.step_size(x))
        self.state = BeamformerState(
            w=w, a1_hat=a1, sigma1_sq_hat=s2, oas_vec=oas_vec, ka=ka,
            r_tilde_inc=r_inc, count=st.count + 1,
        )
        return w


class SMI(_Base):
    """Sample-matrix-inversion beamformer steered to the presumed direction."""

    name = "smi"

    def __init__(self, a_presumed):
        super().__init__(a_presumed)
        M = self.a_presumed.size
        self.scm = np.zeros((M, M), dtype=complex)

    def step(self, x):
        i = self.state.count + 1
        self.scm = ((i - 1) * self.scm + np.outer(x, x.conj())) / i
        w = smi_weights(self.scm, self.a_presumed, count=i)
        self.state = replace(self.state, w=w, count=i)
        return w


class StandardSG(_Base):
    """Constrained LMS (Frost) beamformer with the presumed steering vector.

    ``mu`` is divided by the running mean of ``||x||^2`` unless
    ``normalize_step`` is False.
    """

    name = "sg"

    def __init__(self, a_presumed, mu, normalize_step=True):
        super().__init__(a_presumed)
        self.step_size = _NormalizedStep(mu, normalize_step)
        a = self.a_presumed
        self.state = replace(self.state, w=a / np.vdot(a, a).real)

    def step(self, x):
        w = constrained_sg_update(self.state.w, x, self.a_presumed, 0.0, self.step_size(x))
        self.state = replace(self.state, w=w, count=self.state.count + 1)
        return w
