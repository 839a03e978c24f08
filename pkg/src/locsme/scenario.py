"""Snapshot generation under local-scattering steering mismatch.

Every random draw comes from a Philox counter-based generator whose key is
derived from ``(seed, trial_index)``. Trial-level draws (scatter angles and
phases) use counter block 0 and snapshot ``i`` uses its own counter block, so
any snapshot can be regenerated on its own and streams never depend on the
order in which trials or snapshots are produced.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .array_model import ArrayGeometry, steering_vector
from .numerics import InvalidInputError

__all__ = [
    "RNG_ALGORITHM",
    "MISMATCH_MODES",
    "ScenarioConfig",
    "TrialContext",
    "GroundTruth",
    "new_trial",
    "snapshot",
    "snapshots",
    "ground_truth",
]

RNG_ALGORITHM = "numpy Philox4x64-10, key=SeedSequence(seed, trial), counter=(0, snapshot+1, 0, 0)"
MISMATCH_MODES = ("none", "coherent", "incoherent")
SCATTER_DISTRIBUTIONS = ("uniform", "gaussian")


@dataclass(frozen=True)
class ScenarioConfig:
    """Array, sources and mismatch model for one experiment.

    Powers are linear: the desired power is ``noise_power * 10**(snr_db/10)``
    and every interferer sits ``sir_db`` below the desired signal.
    """

    geom: ArrayGeometry = field(default_factory=ArrayGeometry)
    desired_doa: float = 10.0
    interferer_doas: tuple = (50.0, 90.0)
    snr_db: float = 10.0
    sir_db: float = 20.0
    noise_power: float = 1.0
    mismatch: str = "coherent"
    n_scatter: int = 4
    scatter_std_deg: float = 2.0
    scatter_distribution: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "interferer_doas", tuple(float(t) for t in self.interferer_doas))
        doas = (self.desired_doa,) + self.interferer_doas
        if len(set(doas)) != len(doas):
            raise InvalidInputError(f"DoAs must be pairwise distinct, got {doas}")
        if not (np.isfinite(self.snr_db) and np.isfinite(self.sir_db)):
            raise InvalidInputError("snr_db and sir_db must be finite")
        if not self.noise_power > 0:
            raise InvalidInputError(f"noise_power must be positive, got {self.noise_power}")
        if self.mismatch not in MISMATCH_MODES:
            raise InvalidInputError(f"mismatch must be one of {MISMATCH_MODES}, got {self.mismatch!r}")
        if self.n_scatter < 0:
            raise InvalidInputError(f"n_scatter must be >= 0, got {self.n_scatter}")
        if self.scatter_distribution not in SCATTER_DISTRIBUTIONS:
            raise InvalidInputError(
                f"scatter_distribution must be one of {SCATTER_DISTRIBUTIONS}, "
                f"got {self.scatter_distribution!r}"
            )

    @property
    def desired_power(self):
        return self.noise_power * 10.0 ** (self.snr_db / 10.0)

    @property
    def interferer_power(self):
        return self.desired_power / 10.0 ** (self.sir_db / 10.0)


@dataclass(frozen=True)
class TrialContext:
    """Per-trial randomness that stays fixed over all snapshots."""

    config: ScenarioConfig
    rng_seed: int
    trial_index: int
    key: np.ndarray
    effective_direct: np.ndarray
    scatter_angles: np.ndarray
    scatter_phases: np.ndarray
    coherent_steering: Optional[np.ndarray]

    @property
    def scatter_vectors(self):
        """Steering vectors of the scattered paths, shape (M, n_scatter)."""
        return steering_vector(self.config.geom, self.scatter_angles)


@dataclass(frozen=True)
class GroundTruth:
    """Quantities used to score output SINR.

    Attributes:
        true_inc: Interference-plus-noise covariance.
        desired_power: Desired signal power (direct path).
        effective_steering: Steering vector actually seen by the array; for
            incoherent scattering this is the direct path only.
        desired_cov: Desired-signal covariance, set for incoherent scattering.
    """

    true_inc: np.ndarray
    desired_power: float
    effective_steering: np.ndarray
    desired_cov: Optional[np.ndarray] = None


def _trial_key(seed, trial_index):
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial_index)])
    return ss.generate_state(2, dtype=np.uint64)


def _generator(key, block):
    return np.random.Generator(np.random.Philox(key=key, counter=[0, block, 0, 0]))


def _complex_normal(rng, size, power):
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def _scatter_angles(rng, config):
    n, mean, std = config.n_scatter, config.desired_doa, config.scatter_std_deg
    if config.scatter_distribution == "gaussian":
        return mean + std * rng.standard_normal(n)
    half = np.sqrt(3.0) * std
    return rng.uniform(mean - half, mean + half, n)


def new_trial(config, seed, trial_index=0):
    """Draw the per-trial scatter geometry.

    Scatter angles have mean ``desired_doa`` and standard deviation
    ``scatter_std_deg`` (uniform by default). For coherent scattering the
    phases are uniform on [0, 2 pi) and the effective steering vector is the
    direct path plus the phase-rotated scattered paths, without
    renormalization.
    """
    key = _trial_key(seed, trial_index)
    rng = _generator(key, 0)
    direct = steering_vector(config.geom, config.desired_doa)
    if config.mismatch == "none":
        angles = np.empty(0)
    else:
        angles = _scatter_angles(rng, config)
    phases = np.empty(0)
    coherent = None
    if config.mismatch == "coherent":
        phases = rng.uniform(0.0, 2.0 * np.pi, config.n_scatter)
        coherent = direct + steering_vector(config.geom, angles) @ np.exp(1j * phases)
    return TrialContext(
        config=config,
        rng_seed=int(seed),
        trial_index=int(trial_index),
        key=key,
        effective_direct=direct,
        scatter_angles=angles,
        scatter_phases=phases,
        coherent_steering=coherent,
    )


def snapshot(trial, i, rng=None):
    """Array snapshot ``x(i)`` for snapshot index ``i`` (0-based).

    Without ``rng`` the draws come from the counter block reserved for
    ``(trial, i)``, so the result depends on nothing else.
    """
    cfg = trial.config
    if rng is None:
        rng = _generator(trial.key, i + 1)
    M = cfg.geom.n_sensors
    if cfg.mismatch == "incoherent":
        n = cfg.n_scatter + 1
        gains = _complex_normal(rng, n, cfg.desired_power / n)
        x = gains[0] * trial.effective_direct
        if n > 1:
            x = x + trial.scatter_vectors @ gains[1:]
    else:
        s1 = _complex_normal(rng, 1, cfg.desired_power)[0]
        a = trial.coherent_steering if cfg.mismatch == "coherent" else trial.effective_direct
        x = s1 * a
    if cfg.interferer_doas:
        s = _complex_normal(rng, len(cfg.interferer_doas), cfg.interferer_power)
        x = x + steering_vector(cfg.geom, cfg.interferer_doas) @ s
    return x + _complex_normal(rng, M, cfg.noise_power)


def snapshots(trial, n):
    """The first ``n`` snapshots stacked as rows, shape (n, M)."""
    return np.array([snapshot(trial, i) for i in range(n)])


def ground_truth(trial):
    """Interference-plus-noise covariance and desired-signal description."""
    cfg = trial.config
    M = cfg.geom.n_sensors
    R = cfg.noise_power * np.eye(M, dtype=complex)
    if cfg.interferer_doas:
        A = steering_vector(cfg.geom, cfg.interferer_doas)
        R = R + cfg.interferer_power * (A @ A.conj().T)
    desired_cov = None
    if cfg.mismatch == "coherent":
        a_eff = trial.coherent_steering
    else:
        a_eff = trial.effective_direct
    if cfg.mismatch == "incoherent":
        B = np.column_stack([trial.effective_direct, trial.scatter_vectors])
        desired_cov = (cfg.desired_power / B.shape[1]) * (B @ B.conj().T)
    return GroundTruth(
        true_inc=R,
        desired_power=cfg.desired_power,
        effective_steering=a_eff,
        desired_cov=desired_cov,
    )
