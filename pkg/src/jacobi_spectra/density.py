"""Approximant densities ``f_n``, Turan determinants and resolvent values.

Replacing the coefficients beyond index ``n`` by the constant tail
``(a_n, b_n)`` gives an operator ``A_n`` that is absolutely continuous on
``I_n`` with weight

    f_n(x) = sqrt(4 b_n^2 - (a_n - x)^2) / (2 pi b_n Delta_n(x)),

where ``Delta_n = b_n P_n^2 - b_{n-1} P_{n-1} P_{n+1}``.  Along a centered
family of intervals ``f_n`` converges uniformly to the density of the full
operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationError, InconsistencyError, NumericFailure, PoleError
from .integrate import cumulative_simpson, integral_to
from .recurrence import ScaledArray, eval_polys, poly_table, scaled_sum
from .tail import k_complex, kernel_at

__all__ = [
    "DensityGrid",
    "ResolventValue",
    "turan_delta",
    "turan_forms",
    "fn_density",
    "fn_table",
    "cf_approximant",
    "resolvent_Rn",
    "limit_density",
    "cdf_from_density",
    "DEFAULT_SCHEDULE",
]

DEFAULT_SCHEDULE = (50, 100, 200, 400, 800)
# relative (to the term magnitudes) agreement required of the two Turan forms
FORM_TOL = 1e-11
# use the symmetric denominator when |x - a_n| <= SYMMETRIC_FRACTION * 2 b_n
SYMMETRIC_FRACTION = 0.999


# ---------------------------------------------------------------------------
# Turan determinants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TuranForms:
    """Both evaluations of ``Delta_n`` on a set of rows, with a size yardstick."""

    n: np.ndarray
    direct: ScaledArray
    symmetric: ScaledArray
    scale: ScaledArray

    def mismatch(self):
        """``|direct - symmetric| / scale`` (dimensionless)."""
        diff = scaled_sum([(1.0, [self.direct]), (-1.0, [self.symmetric])])
        return _ratio(diff, self.scale)


def _ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore", under="ignore", over="ignore"):
        e = np.clip(num.exponent - den.exponent, -2000, 2000).astype(np.int32)
        return np.ldexp(np.abs(num.mantissa) / np.abs(den.mantissa), e)


def _forms(P, a, b, x, ns):
    ns = np.asarray(ns, dtype=np.int64)
    shape = (-1,) + (1,) * x.ndim
    bn = b[ns].reshape(shape)
    bm = b[ns - 1].reshape(shape)
    shift = x[None, ...] - a[ns].reshape(shape)
    Pm, P0, P1 = P[ns - 1], P[ns], P[ns + 1]
    direct_terms = [(bn, [P0, P0]), (-bm, [Pm, P1])]
    symmetric_terms = [(bn, [P1, P1]), (bn, [P0, P0]), (-shift, [P1, P0])]
    scale = scaled_sum(
        [
            (bn, [_absf(P0), _absf(P0)]),
            (bm, [_absf(Pm), _absf(P1)]),
            (bn, [_absf(P1), _absf(P1)]),
            (np.abs(shift), [_absf(P1), _absf(P0)]),
        ]
    )
    return TuranForms(ns, scaled_sum(direct_terms), scaled_sum(symmetric_terms), scale)


def _absf(s):
    return ScaledArray(np.abs(s.mantissa), s.exponent)


def turan_forms(model, x, n_max, table=None):
    """Both Turan forms for ``n = 1..n_max`` at every point of ``x``.

    Returns a :class:`TuranForms` whose arrays have shape
    ``(n_max,) + shape(x)``.
    """
    x = np.asarray(x, dtype=float)
    n_max = int(n_max)
    if n_max < 1:
        raise ValueError("n must be at least 1")
    P = poly_table(model, x, n_max + 1) if table is None else table
    a, b = model.coefficients(n_max + 1)
    return _forms(P, a, b, x, np.arange(1, n_max + 1))


def turan_delta(model, x, n):
    """``Delta_n(x) = b_n P_n^2 - b_{n-1} P_{n-1} P_{n+1}``.

    The symmetric form ``b_n (P_{n+1}^2 + P_n^2) - (x - a_n) P_{n+1} P_n`` is
    evaluated alongside; a relative disagreement above ``FORM_TOL`` raises
    :class:`NumericFailure`.  The value may overflow to ``inf`` far outside
    ``I_n``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    x = np.asarray(float(x))
    P = poly_table(model, x, n + 1)
    a, b = model.coefficients(n + 1)
    forms = _forms(P, a, b, x, [n])
    mis = float(forms.mismatch()[0])
    if not mis <= FORM_TOL:
        raise NumericFailure(f"Turan forms disagree at n={n}: relative mismatch {mis:.3g}", index=n)
    return float(forms.direct.values()[0])


def _density_rows(P, a, b, x, ns, check_forms=True):
    """``(f, Delta)`` rows for indices ``ns``; ``Delta`` as plain doubles."""
    ns = np.asarray(ns, dtype=np.int64)
    forms = _forms(P, a, b, x, ns)
    if check_forms:
        mis = forms.mismatch()
        if np.any(mis > FORM_TOL):
            k = np.argwhere(mis > FORM_TOL)[0]
            raise NumericFailure(
                f"Turan forms disagree at n={int(ns[k[0]])}: relative mismatch {float(mis[tuple(k)]):.3g}",
                index=int(ns[k[0]]),
            )
    shape = (-1,) + (1,) * x.ndim
    an, bn = a[ns].reshape(shape), b[ns].reshape(shape)
    z = np.abs(an - x[None, ...])
    inside = z < 2.0 * bn
    use_sym = z <= SYMMETRIC_FRACTION * 2.0 * bn
    m = np.where(use_sym, forms.symmetric.mantissa, forms.direct.mantissa)
    e = np.where(use_sym, forms.symmetric.exponent, forms.direct.exponent)
    bad = inside & (m <= 0)
    if bad.any():
        k = np.argwhere(bad)[0]
        raise InconsistencyError(
            f"Delta_n <= 0 inside I_n at n={int(ns[k[0]])}, x={float(x[tuple(k[1:])])!r}",
            index=int(ns[k[0]]),
        )
    root = np.sqrt(np.where(inside, 4.0 * bn * bn - z * z, 0.0))
    with np.errstate(divide="ignore", invalid="ignore", under="ignore", over="ignore"):
        scaled = root / (2.0 * math.pi * bn * np.where(inside, m, 1.0))
        f = np.where(inside, np.ldexp(scaled, np.clip(-e, -2000, 2000).astype(np.int32)), 0.0)
    delta = ScaledArray(m, e).values()
    return f, delta


def fn_table(model, x, ns, check_forms=True):
    """``f_n(x)`` for every ``n`` in ``ns`` (rows) and every ``x`` (columns)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size == 0 or ns.min() < 1:
        raise ValueError("n must be at least 1")
    top = int(ns.max())
    P = poly_table(model, x, top + 1)
    a, b = model.coefficients(top + 1)
    return _density_rows(P, a, b, x, ns, check_forms)[0]


def fn_density(model, x, n):
    """Spectral weight ``f_n(x)`` of the tail approximation at index ``n``.

    Zero outside ``I_n``; inside, the symmetric Turan form serves as
    denominator except within a relative ``1e-3`` of the endpoints, where the
    direct form is used.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    x_arr = np.asarray(x, dtype=float)
    f = fn_table(model, x_arr.reshape(-1), [n])[0]
    return float(f[0]) if x_arr.ndim == 0 else f.reshape(x_arr.shape)


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResolventValue:
    lam: complex
    value: complex
    depth: int


def cf_approximant(model, lam, n):
    """``-Q_n(lam) / P_n(lam)``, the ``n``-th continued-fraction approximant."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    seq = eval_polys(model, complex(lam), n)
    Pn = seq.P(n)
    if Pn.is_zero():
        raise PoleError(f"P_{n}(lam) = 0: lam is a pole of the approximant", index=n)
    return complex((-seq.Q(n) / Pn).to_float())


def resolvent_Rn(model, lam, n):
    """Resolvent element at ``e_0`` of the operator with tail frozen at ``n``.

    ``R_n = -(Q_n + Q_{n-1} b_{n-1} K_n) / (P_n + P_{n-1} b_{n-1} K_n)`` with
    ``K_n`` the tail kernel of ``(a_n, b_n)``.
    """
    n = int(n)
    lam = complex(lam)
    if lam.imag == 0:
        raise ValueError("resolvent_Rn needs Im(lam) != 0")
    if n < 1:
        raise ValueError("n must be at least 1")
    seq = eval_polys(model, lam, n)
    _, b_prev = model.at(n - 1)
    bK = b_prev * k_complex(kernel_at(model, n), lam)
    num = seq.Q(n) + seq.Q(n - 1) * bK
    den = seq.P(n) + seq.P(n - 1) * bK
    if den.is_zero():
        raise NumericFailure(f"resolvent denominator vanished at n={n}", index=n)
    value = complex((-(num / den)).to_float())
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise NumericFailure(f"non-finite resolvent value at n={n}", index=n)
    return ResolventValue(lam, value, n)


# ---------------------------------------------------------------------------
# limiting density
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityGrid:
    """Snapshots of ``f_n`` over a schedule of indices.

    ``f[k]`` and ``delta[k]`` belong to ``n_schedule[k]``; ``sup_diffs[k]`` is
    the sup-norm gap between snapshots ``k`` and ``k + 1``.  ``f_final`` is
    the last snapshot; ``extrapolated`` (first order in ``1/n`` on the last
    two snapshots) is a diagnostic only.
    """

    grid: np.ndarray
    n_schedule: tuple
    f: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    sup_diffs: np.ndarray
    tol: float
    converged: bool
    extrapolated: np.ndarray = field(repr=False)

    @property
    def f_final(self):
        return self.f[-1]

    def cdf(self, lam):
        return cdf_from_density(self.grid, self.f_final, lam)


def limit_density(model, grid, n_schedule=DEFAULT_SCHEDULE, tol=1e-6, *, interval=None):
    """Estimate the density of the full operator on ``grid``.

    The interval (``interval``, or the hull of ``grid``) must be centered on
    every ``I_n`` of the schedule; otherwise :class:`CertificationError` is
    raised before anything is computed.
    """
    from .conditions import check_centered

    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be a 1-d array with at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    ns = tuple(int(n) for n in n_schedule)
    if not ns or ns[0] < 1 or any(m <= n for n, m in zip(ns, ns[1:])):
        raise ValueError("n_schedule must be strictly increasing positive indices")
    if interval is None:
        interval = (float(grid[0]), float(grid[-1]))
    elif not (interval[0] <= grid[0] and grid[-1] <= interval[1]):
        raise ValueError("grid must lie inside the interval")
    gate = check_centered(model, interval, ns[0], ns[-1])
    if not gate.passed:
        raise CertificationError(
            f"interval {list(interval)} is not centered on I_n for n in [{ns[0]}, {ns[-1]}]"
            f" (witness n={gate.witness['n']})",
            check=gate,
        )
    P = poly_table(model, grid, ns[-1] + 1)
    a, b = model.coefficients(ns[-1] + 1)
    f, delta = _density_rows(P, a, b, grid, ns)
    sup_diffs = np.max(np.abs(np.diff(f, axis=0)), axis=1) if len(ns) > 1 else np.zeros(0)
    if len(ns) > 1:
        converged = bool(sup_diffs[-1] <= tol)
        n1, n2 = ns[-2], ns[-1]
        extrap = (n2 * f[-1] - n1 * f[-2]) / (n2 - n1)
    else:
        converged = False
        extrap = f[-1].copy()
    return DensityGrid(grid, ns, f, delta, sup_diffs, float(tol), converged, extrap)


def cdf_from_density(grid, f, lam):
    """``sigma(lam) - sigma(grid[0])`` from density samples by composite Simpson.

    ``lam`` may be a scalar or an array; the last partial panel uses the
    trapezoid on the linearly interpolated density.
    """
    grid = np.asarray(grid, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("density values must be non-negative")
    F = cumulative_simpson(grid, f)
    lam_arr = np.asarray(lam, dtype=float)
    out = np.array([integral_to(grid, f, float(t), cumulative=F) for t in lam_arr.reshape(-1)])
    return float(out[0]) if lam_arr.ndim == 0 else out.reshape(lam_arr.shape)
