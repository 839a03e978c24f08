"""
Steering vectors and the sector projector
=========================================

A 12-element half-wavelength array, the covariance of steering vectors over
a +-5 degree sector around 10 degrees, and the low-rank projector that the
mismatch estimators use.
"""

# %%
import numpy as np

from locsme.array_model import ArrayGeometry, SectorSpec, projection_basis, sector_covariance, steering_vector

geom = ArrayGeometry(n_sensors=12, spacing=0.5)
a = steering_vector(geom, 10.0)
print("||a(10 deg)||^2 =", np.vdot(a, a).real)

# %%
# Eigenvalues of the sector covariance fall off quickly, so a few
# eigenvectors span almost all steering vectors in the sector.
sector = SectorSpec(center=10.0, half_width=5.0)
C = sector_covariance(geom, sector)
basis = projection_basis(C)
print("retained eigenvalues:", np.round(basis.eigenvalues[:5], 4))
print("default rank (99% energy):", basis.rank)

# %%
# Directions inside the sector are nearly preserved by the projector,
# directions outside it are not.
for theta in (6.0, 10.0, 14.0, 30.0, 50.0):
    v = steering_vector(geom, theta)
    kept = np.linalg.norm(basis.apply(v)) ** 2 / np.linalg.norm(v) ** 2
    print(f"theta={theta:5.1f}  fraction of energy kept {kept:.3f}")
