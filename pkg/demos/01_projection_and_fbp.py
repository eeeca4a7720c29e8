"""
Forward projection and filtered backprojection
===============================================

A smooth disk is scanned with a parallel-beam geometry and reconstructed
with filtered backprojection at a few view counts. Fewer views leave
streaks, so the interior error grows as the scan gets sparser.
"""

import numpy as np
from scipy.special import erf

from weightedprior.analytic import fbp_reconstruct
from weightedprior.projector import back_project, forward_project, parallel_geometry

size = 64
c = (size - 1) / 2
yy, xx = np.mgrid[:size, :size]
radius = np.hypot(xx - c, yy - c)
disk = 0.5 * (1 - erf((radius - 0.3 * size) / 1.5))
interior = radius <= 0.45 * size

# The projector is a sparse matrix; its transpose is the back projector, so
# the dot-product test holds to rounding error.
geom = parallel_geometry((size, size), 45)
rng = np.random.default_rng(0)
x = rng.standard_normal(geom.image_shape)
sino = forward_project(x, geom)
y = rng.standard_normal(geom.sinogram_shape)
lhs = np.vdot(sino.data, y)
rhs = np.vdot(x, back_project(type(sino)(geom, y)))
print(f"adjoint gap: {abs(lhs - rhs) / abs(lhs):.2e}")

for views in (12, 45, 180):
    geom = parallel_geometry((size, size), views)
    recon = fbp_reconstruct(forward_project(disk, geom))
    err = np.sqrt(np.mean((recon - disk)[interior] ** 2))
    print(f"{views:4d} views: interior RMSE {err:.4f}")
