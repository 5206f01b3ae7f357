"""Constant coefficients: every approximation already equals the semicircle.

For ``a_n = 0, b_n = 1/2`` the tail kernel is the same at every level, so the
Turan-determinant density ``f_n`` reproduces ``(2/pi) sqrt(1 - x^2)`` for any n.
"""

import numpy as np

from jacobi_spectra import CoefficientModel
from jacobi_spectra.density import fn_table, turan_forms

model = CoefficientModel.constant(0.0, 0.5)
x = np.linspace(-0.95, 0.95, 9)
exact = (2 / np.pi) * np.sqrt(1 - x**2)

f = fn_table(model, x, [1, 5, 25, 50])
print("x       exact      max_n |f_n - exact|")
for xi, e, col in zip(x, exact, f.T):
    print(f"{xi:+.3f}  {e:.8f}  {np.abs(col - e).max():.2e}")

forms = turan_forms(model, x, 50)
print("\nlargest gap between the two Turan forms:", float(forms.mismatch().max()))
