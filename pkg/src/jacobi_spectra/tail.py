"""Closed forms for a constant-coefficient tail ``a_k = a, b_k = b``.

The tail operator has the semicircle spectral weight on
``[a - 2b, a + 2b]`` and its resolvent element ``K`` solves
``K = 1 / (a - lam - b**2 K)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError

__all__ = [
    "TailKernel",
    "kernel_at",
    "k_complex",
    "k_boundary",
    "free_density",
    "interval_at",
]


@dataclass(frozen=True)
class TailKernel:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ModelError("tail coefficients must be finite")
        if not self.b > 0:
            raise ModelError("b must be positive")

    @property
    def interval(self):
        return (self.a - 2.0 * self.b, self.a + 2.0 * self.b)

    @property
    def width(self):
        return 4.0 * self.b


def kernel_at(model, n):
    """Tail kernel frozen at the ``n``-th coefficients of ``model``."""
    a_n, b_n = model.at(n)
    return TailKernel(float(a_n), float(b_n))


def interval_at(model, n):
    """``I_n = [a_n - 2 b_n, a_n + 2 b_n]``."""
    return kernel_at(model, n).interval


def k_complex(kernel, lam):
    """Resolvent element of the tail at non-real ``lam`` (scalar or array).

    Both roots of ``b**2 K**2 - (a - lam) K + 1 = 0`` are formed without
    cancellation (the larger one directly, the smaller from ``K1 K2 = 1/b**2``)
    and the one whose imaginary part has the sign of ``Im lam`` is returned.
    """
    lam_arr = np.asarray(lam, dtype=complex)
    if np.any(lam_arr.imag == 0):
        raise ValueError("k_complex needs Im(lam) != 0; use k_boundary on the real axis")
    a, b = kernel.a, kernel.b
    z = a - lam_arr
    s = np.sqrt(z * z - 4.0 * b * b)
    # choose the sign that avoids cancellation in z + s
    s = np.where((z.real * s.real + z.imag * s.imag) < 0, -s, s)
    big = (z + s) / (2.0 * b * b)
    small = 1.0 / (b * b * big)
    up = lam_arr.imag > 0
    keep_big = np.where(up, big.imag > 0, big.imag < 0)
    out = np.where(keep_big, big, small)
    return complex(out) if out.ndim == 0 else out


def _boundary(a, b, x):
    x = np.asarray(x, dtype=float)
    z = a - x
    inside = np.abs(z) <= 2.0 * b
    root_in = np.sqrt(np.where(inside, 4.0 * b * b - z * z, 0.0))
    root_out = np.sqrt(np.where(inside, 0.0, z * z - 4.0 * b * b))
    # outside: the root of smaller modulus, |D| <= 1/b
    with np.errstate(divide="ignore", invalid="ignore"):
        d_out = 2.0 / (z + np.sign(z) * root_out)
    D = np.where(inside, z / (2.0 * b * b), d_out)
    B = np.where(inside, root_in / (2.0 * b * b), 0.0)
    return D, B


def k_boundary(kernel, x):
    """Boundary values ``(D(x), B(x))`` of ``K(x + i0)``.

    Inside the interval ``D = (a - x)/(2b^2)`` and
    ``B = sqrt(4b^2 - (a - x)^2)/(2b^2)``; outside ``B = 0`` and ``D`` is the
    root with ``+`` before the square root for ``x - a > 2b`` and ``-`` for
    ``a - x > 2b``.  Exact endpoints use the inside formula.
    """
    D, B = _boundary(kernel.a, kernel.b, x)
    if D.ndim == 0:
        return float(D), float(B)
    return D, B


def free_density(kernel, x):
    """Semicircle weight of the tail, ``B(x)/pi``."""
    _, B = _boundary(kernel.a, kernel.b, x)
    f = B / math.pi
    return float(f) if f.ndim == 0 else f
