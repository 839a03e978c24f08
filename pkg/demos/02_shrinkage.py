"""
OAS and knowledge-aided shrinkage
=================================

How the shrinkage coefficients behave as snapshots accumulate.
"""

# %%
import numpy as np

from locsme.shrinkage import KaParams, ka_init, ka_update, oas_cov_init, oas_cov_update

rng = np.random.default_rng(0)
M = 12
L = np.linalg.cholesky(np.eye(M) + 0.5 * np.diag(np.ones(M - 1), 1) + 0.5 * np.diag(np.ones(M - 1), -1))

# %%
# Covariance shrinkage toward a scaled identity: heavy at first, fading as
# the sample covariance becomes reliable.
state = oas_cov_init(M)
for i in range(1, 201):
    x = L @ (rng.standard_normal(M) + 1j * rng.standard_normal(M)) / np.sqrt(2)
    state = oas_cov_update(state, x)
    if i in (1, 5, 20, 50, 200):
        print(f"i={i:4d}  rho0={state.rho0:.3f}")

# %%
# Knowledge-aided mixing. eta is the weight on the prior R0 and adapts with
# the disagreement between the prior-based and data-based filter outputs.
a1 = np.ones(M) / np.sqrt(M)
true_cov = L @ L.conj().T
for label, r0 in (("matched prior", true_cov), ("prior 10 I", 10 * np.eye(M))):
    ka = ka_init(KaParams(mu_eps=1.0, sigma_eps=1e-3, lambda_q=0.99, r0=r0))
    history = []
    for i in range(300):
        x = L @ (rng.standard_normal(M) + 1j * rng.standard_normal(M)) / np.sqrt(2)
        _, ka = ka_update(ka, np.outer(x, x.conj()), a1, x)
        history.append(ka.eta)
    print(f"{label:14s} eta at i=10, 100, 300: " + ", ".join(f"{history[k]:.3f}" for k in (9, 99, 299)))
