"""Smooth and discrete views of the same spectral measure.

The density-integrated distribution function is compared with the exact law
(2/pi) arctan(exp(pi t / 2)) and with the step function of the truncation
quadrature.  For b_n = n + 1 the quadrature nodes near zero stay about half a
unit apart even at N = 3000, so the step function cannot resolve the
distribution to better than roughly one weight.
"""

import numpy as np

from jacobi_spectra import CoefficientModel
from jacobi_spectra.density import cdf_from_density, limit_density
from jacobi_spectra.oracle import compare_cdfs, empirical_cdf, truncate_quadrature

model = CoefficientModel.power(1.0, 1.0)
grid = np.round(np.arange(-80, 81) * 5e-2, 12)
d = limit_density(model, grid, (800,), interval=(-4.0, 4.0))
smooth = cdf_from_density(grid, d.f_final, grid)

exact = (2 / np.pi) * np.arctan(np.exp(np.pi * grid / 2))
exact -= exact[0]
print("density CDF vs exact law:   ", f"{compare_cdfs(smooth, exact, grid):.2e}")

for N in (500, 1000, 3000):
    q = truncate_quadrature(model, N)
    step = empirical_cdf(q, grid) - empirical_cdf(q, grid[0])
    inside = np.abs(q.nodes) <= 4
    gap = np.diff(q.nodes[inside]).max()
    print(f"N={N:5d}: sup gap to quadrature CDF {compare_cdfs(smooth, step, grid):.3f}, "
          f"max weight {q.weights[inside].max():.3f}, max node spacing {gap:.3f}")
