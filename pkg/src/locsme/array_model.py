"""Uniform linear array model, sector covariance and subspace projector."""

from dataclasses import dataclass

import numpy as np

from .numerics import InvalidInputError, hermitian_part, top_eigenpairs

__all__ = [
    "ArrayGeometry",
    "SectorSpec",
    "ProjectionBasis",
    "steering_vector",
    "sector_covariance",
    "default_rank",
    "projection_basis",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array.

    Attributes:
        n_sensors: Number of sensors M (at least 2).
        spacing: Element spacing in wavelengths.
    """

    n_sensors: int = 12
    spacing: float = 0.5

    def __post_init__(self):
        if int(self.n_sensors) != self.n_sensors or self.n_sensors < 2:
            raise InvalidInputError(f"n_sensors must be an integer >= 2, got {self.n_sensors}")
        if not self.spacing > 0:
            raise InvalidInputError(f"spacing must be positive, got {self.spacing}")


@dataclass(frozen=True)
class SectorSpec:
    """Angular sector ``[center - half_width, center + half_width]`` in degrees."""

    center: float
    half_width: float = 5.0
    quadrature_nodes: int = 64

    def __post_init__(self):
        if not self.half_width > 0:
            raise InvalidInputError(f"half_width must be positive, got {self.half_width}")
        if self.quadrature_nodes < 8:
            raise InvalidInputError(f"need at least 8 quadrature nodes, got {self.quadrature_nodes}")

    @property
    def bounds(self):
        return self.center - self.half_width, self.center + self.half_width


@dataclass(frozen=True)
class ProjectionBasis:
    """Projector onto the ``rank`` principal eigenvectors of a sector covariance.

    Attributes:
        P: The (M, M) projection matrix.
        rank: Number of retained eigenvectors p.
        eigenvalues: The retained eigenvalues, descending.
        basis: The retained eigenvectors as columns, shape (M, p).
    """

    P: np.ndarray
    rank: int
    eigenvalues: np.ndarray
    basis: np.ndarray

    def apply(self, v):
        # U (U^H v) is O(M p) rather than O(M^2)
        return self.basis @ (self.basis.conj().T @ v)


def steering_vector(geom, theta_deg):
    """Steering vector of a plane wave from ``theta_deg`` (broadside = 0).

    Entry m is ``exp(j 2 pi spacing m sin(theta))``. Accepts a scalar angle
    (returns shape (M,)) or an array of angles (returns shape (M, n)).
    """
    theta = np.deg2rad(np.asarray(theta_deg, dtype=float))
    m = np.arange(geom.n_sensors)
    phase = 2.0 * np.pi * geom.spacing * np.multiply.outer(m, np.sin(theta))
    return np.exp(1j * phase)


def sector_covariance(geom, sector):
    """Integral of ``a(theta) a(theta)^H`` over the sector (theta in radians).

    Uses Gauss-Legendre quadrature with ``sector.quadrature_nodes`` nodes.
    """
    lo, hi = np.deg2rad(sector.bounds)
    nodes, weights = np.polynomial.legendre.leggauss(sector.quadrature_nodes)
    half = 0.5 * (hi - lo)
    theta = np.rad2deg(half * nodes + 0.5 * (hi + lo))
    A = steering_vector(geom, theta)
    C = (A * (half * weights)) @ A.conj().T
    return hermitian_part(C)


def default_rank(eigenvalues, energy=0.99):
    """Smallest p whose leading eigenvalues hold ``energy`` of the total."""
    vals = np.clip(np.sort(np.asarray(eigenvalues, dtype=float))[::-1], 0.0, None)
    cum = np.cumsum(vals)
    return int(np.searchsorted(cum, energy * cum[-1] * (1 - 1e-12)) + 1)


def projection_basis(C, p=None):
    """Projector onto the ``p`` principal eigenvectors of ``C``.

    When ``p`` is None it is chosen by :func:`default_rank`.
    """
    C = np.asarray(C, dtype=complex)
    M = C.shape[0]
    if p is None:
        p = default_rank(np.linalg.eigvalsh(hermitian_part(C)))
    if not 1 <= p <= M:
        raise InvalidInputError(f"p must lie in [1, {M}], got {p}")
    vals, vecs = top_eigenpairs(C, p)
    P = hermitian_part(vecs @ vecs.conj().T)
    return ProjectionBasis(P=P, rank=p, eigenvalues=vals, basis=vecs)
