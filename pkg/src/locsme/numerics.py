"""Small dense complex linear algebra used throughout the package.

Matrices here are at most 64 x 64, so everything is dense and backed by
LAPACK through numpy. The wrappers add the input validation and the
singularity reporting the beamformers rely on.
"""

import numpy as np

MAX_DIM = 64

__all__ = [
    "InvalidInputError",
    "SingularSystemError",
    "hermitian_part",
    "check_hermitian",
    "top_eigenpairs",
    "solve_regularized",
]


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when a regularized system cannot be solved reliably.

    Attributes:
        condition: Ratio of the largest to the smallest eigenvalue magnitude
            of the loaded matrix (``inf`` when exactly singular).
    """

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


def hermitian_part(A):
    """Return ``(A + A^H) / 2``."""
    A = np.asarray(A)
    return 0.5 * (A + A.conj().T)


def _relative_asymmetry(A):
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return 0.0
    return np.linalg.norm(A - A.conj().T) / scale


def check_hermitian(A, tol=1e-9):
    """Validate a square Hermitian matrix and return it as a complex array."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_DIM:
        raise InvalidInputError(f"dimension {A.shape[0]} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    asym = _relative_asymmetry(A)
    if asym > tol:
        raise InvalidInputError(f"matrix is not Hermitian (relative asymmetry {asym:.3g})")
    return A


def top_eigenpairs(A, k):
    """Return the ``k`` largest eigenpairs of a Hermitian matrix.

    Args:
        A: Hermitian matrix of shape (M, M).
        k: Number of eigenpairs, ``1 <= k <= M``.

    Returns:
        Tuple ``(eigenvalues, eigenvectors)`` where ``eigenvalues`` has shape
        (k,) in descending order and ``eigenvectors`` has shape (M, k) with
        orthonormal columns.
    """
    A = check_hermitian(A)
    M = A.shape[0]
    if not 1 <= k <= M:
        raise InvalidInputError(f"k must lie in [1, {M}], got {k}")
    vals, vecs = np.linalg.eigh(hermitian_part(A))
    order = np.argsort(vals)[::-1][:k]
    return vals[order], vecs[:, order]


def solve_regularized(A, b, loading=0.0):
    """Solve ``(A + loading * I) x = b`` for Hermitian ``A``.

    The loaded matrix may be indefinite; it only has to be numerically
    nonsingular, i.e. its smallest eigenvalue magnitude must exceed
    ``1e-12 * ||A + loading * I||``.

    Raises:
        InvalidInputError: ``loading`` is negative or shapes disagree.
        SingularSystemError: the loaded matrix is numerically singular.
    """
    A = check_hermitian(A)
    b = np.asarray(b, dtype=complex)
    if loading < 0:
        raise InvalidInputError(f"loading must be nonnegative, got {loading}")
    if b.shape != (A.shape[0],):
        raise InvalidInputError(f"rhs shape {b.shape} does not match {A.shape}")
    B = hermitian_part(A) + loading * np.eye(A.shape[0])
    mags = np.abs(np.linalg.eigvalsh(B))
    big, small = mags.max(), mags.min()
    if big == 0.0 or small <= 1e-12 * big:
        condition = np.inf if small == 0.0 else big / small
        raise SingularSystemError(
            f"loaded matrix is numerically singular (condition {condition:.3g})", condition
        )
    return np.linalg.solve(B, b)
