"""Growing coefficients: b_n = n + 1, a_n = 0.

The spectral density is known in closed form, f(x) = sech(pi x / 2) / 2.
The constant-tail approximations f_n converge to it as n doubles, and the
continued-fraction boundary value gives an independent estimate.
"""

import numpy as np

from jacobi_spectra import CoefficientModel
from jacobi_spectra.density import limit_density
from jacobi_spectra.oracle import stieltjes_density

model = CoefficientModel.power(1.0, 1.0)
x = np.linspace(-4, 4, 9)
exact = 0.5 / np.cosh(np.pi * x / 2)

d = limit_density(model, x, (100, 200, 400, 800, 1600, 3200), interval=(-4.0, 4.0))
print("sup |f_2n - f_n| per doubling:", np.array2string(np.asarray(d.sup_diffs), precision=3))
print("converged:", d.converged)

cf = stieltjes_density(model, x, depth_tol=1e-5)
print("\nx      exact       f_final     extrapolated  stieltjes")
for row in zip(x, exact, d.f_final, d.extrapolated, cf):
    print("{:+.1f}  {:.8f}  {:.8f}  {:.8f}    {:.8f}".format(*row))
