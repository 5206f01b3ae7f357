"""Composite Simpson integration on (possibly non-uniform) grids."""

from __future__ import annotations

import numpy as np

__all__ = ["cumulative_simpson", "simpson", "integral_to"]


def _antider(t, p, q):
    # antiderivative of (t - p)(t - q)
    return t**3 / 3.0 - (p + q) * t**2 / 2.0 + p * q * t


def _quadratic_piece(x0, x1, x2, f0, f1, f2, lo, hi):
    """Integral over [lo, hi] of the parabola through three points."""
    # shift to x0 to limit cancellation
    s1, s2 = x1 - x0, x2 - x0
    l, h = lo - x0, hi - x0
    w0 = (_antider(h, s1, s2) - _antider(l, s1, s2)) / ((0.0 - s1) * (0.0 - s2))
    w1 = (_antider(h, 0.0, s2) - _antider(l, 0.0, s2)) / ((s1 - 0.0) * (s1 - s2))
    w2 = (_antider(h, 0.0, s1) - _antider(l, 0.0, s1)) / ((s2 - 0.0) * (s2 - s1))
    return w0 * f0 + w1 * f1 + w2 * f2


def cumulative_simpson(x, f):
    """Running integral ``F[i] = int_{x[0]}^{x[i]} f``.

    Even nodes accumulate Simpson panels over interval pairs.  Odd nodes add
    the parabola of the surrounding pair over its first half; a trailing odd
    interval uses the parabola through the last three nodes.  Half-panel
    contributions are clipped to ``[0, panel]`` so that a non-negative
    integrand always gives a non-decreasing result.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    n = x.size
    if n != f.size:
        raise ValueError("x and f must have the same length")
    if n < 2:
        return np.zeros(n)
    if np.any(np.diff(x) <= 0):
        raise ValueError("grid must be strictly increasing")
    F = np.zeros(n)
    if n == 2:
        F[1] = 0.5 * (x[1] - x[0]) * (f[0] + f[1])
        return F
    i0 = np.arange(0, n - 2, 2)
    panels = _quadratic_piece(
        x[i0], x[i0 + 1], x[i0 + 2], f[i0], f[i0 + 1], f[i0 + 2], x[i0], x[i0 + 2]
    )
    F[i0 + 2] = np.cumsum(panels)
    halves = _quadratic_piece(
        x[i0], x[i0 + 1], x[i0 + 2], f[i0], f[i0 + 1], f[i0 + 2], x[i0], x[i0 + 1]
    )
    nonneg = np.all(f >= 0)
    if nonneg:
        halves = np.clip(halves, 0.0, np.maximum(panels, 0.0))
    F[i0 + 1] = F[i0] + halves
    if (n - 1) % 2 == 1:
        k = n - 1
        piece = _quadratic_piece(
            x[k - 2], x[k - 1], x[k], f[k - 2], f[k - 1], f[k], x[k - 1], x[k]
        )
        F[k] = F[k - 1] + (max(piece, 0.0) if nonneg else piece)
    return F


def simpson(x, f):
    """Composite Simpson integral over the whole grid."""
    F = cumulative_simpson(x, f)
    return float(F[-1]) if F.size else 0.0


def integral_to(x, f, lam, cumulative=None):
    """Integral from ``x[0]`` to ``lam``.

    Inside the cell ``[x_k, x_{k+1}]`` containing ``lam`` the node increment
    ``F[k+1] - F[k]`` is shared out in proportion to the trapezoid integral of
    the linearly interpolated integrand, which keeps the result continuous and
    monotone for a non-negative integrand.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if not x[0] <= lam <= x[-1]:
        raise ValueError(f"lam={lam} lies outside the grid [{x[0]}, {x[-1]}]")
    F = cumulative_simpson(x, f) if cumulative is None else cumulative
    k = int(np.searchsorted(x, lam, side="right")) - 1
    k = min(k, x.size - 1)
    if x[k] == lam:
        return float(F[k])
    t = (lam - x[k]) / (x[k + 1] - x[k])
    f_lam = f[k] + t * (f[k + 1] - f[k])
    part = 0.5 * t * (f[k] + f_lam)
    whole = 0.5 * (f[k] + f[k + 1])
    share = part / whole if whole != 0 else t
    return float(F[k] + share * (F[k + 1] - F[k]))
