"""Robust adaptive beamforming with shrinkage-based steering mismatch estimation.

The package provides the LOCSME and LOCSME-SG beamformers, the SMI and
constrained-LMS baselines, a local-scattering array simulator and a seeded
Monte Carlo harness that scores output SINR.
"""

__version__ = "0.1.0"

from .array_model import (
    ArrayGeometry,
    ProjectionBasis,
    SectorSpec,
    projection_basis,
    sector_covariance,
    steering_vector,
)
from .beamformers import SMI, Locsme, LocsmeSG, StandardSG, estimate_power, estimate_steering
from .evaluation import (
    ALGORITHMS,
    RunConfig,
    SinrCurve,
    emit_csv,
    monte_carlo,
    output_sinr,
    read_csv,
    run_trial,
)
from .scenario import ScenarioConfig, ground_truth, new_trial, snapshot, snapshots
