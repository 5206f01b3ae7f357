"""Truncation quadrature: eigenvalues and first-component weights of J_N.

The nodes interlace as N grows, the weights sum to one and the quadrature
integrates low moments of the spectral measure exactly.
"""

import numpy as np

from jacobi_spectra import CoefficientModel
from jacobi_spectra.oracle import truncate_quadrature

free = CoefficientModel.constant(0.0, 0.5)
q2 = truncate_quadrature(free, 2)
print("N=2 nodes", q2.nodes, "weights", q2.weights)

# semicircle moments on [-1, 1]: m_{2k} = Catalan(k) / 4^k
catalan = [1, 1, 2, 5]
q = truncate_quadrature(free, 8)
for k in range(4):
    print(f"m_{2 * k}: quadrature {q.moment(2 * k):.15f}  exact {catalan[k] / 4**k:.15f}")

lin = CoefficientModel.power(1.0, 1.0)
for N in (100, 400, 1600):
    m = truncate_quadrature(lin, N)
    near = np.abs(m.nodes) < 1
    print(f"b_n=n+1, N={N}: |sum w - 1| = {abs(m.weights.sum() - 1):.1e}, nodes in (-1,1): {near.sum()}")
