"""Method-independent references for the spectral measure.

* :func:`truncate_quadrature` -- Gaussian quadrature of ``sigma`` from the
  leading ``N x N`` section (Sturm bisection for the nodes, twisted
  factorisations for the first eigenvector components).
* :func:`stieltjes_density` -- ``(1/pi) Im R(x + i eps)`` from the full
  continued fraction, evaluated tail-to-head with adaptive depth and
  extrapolated to ``eps -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergenceError, NumericFailure

__all__ = [
    "SpectralMeasure",
    "StieltjesResult",
    "truncate_quadrature",
    "sturm_count",
    "empirical_cdf",
    "compare_cdfs",
    "stieltjes_boundary",
    "stieltjes_density",
    "DEFAULT_EPS_SCHEDULE",
]

DEFAULT_EPS_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
_EPS = np.finfo(float).eps
_MAX_BISECT = 400
_WEIGHT_CHUNK = 256


# ---------------------------------------------------------------------------
# truncation quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralMeasure:
    """Discrete measure ``sum_j w_j delta(x_j)`` of the order-``N`` truncation."""

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    N: int

    def cdf(self, lam):
        return empirical_cdf(self, lam)

    def moment(self, k):
        return float(math.fsum(self.weights * self.nodes**k))


def sturm_count(a, b, lam, pivmin=None):
    """Number of eigenvalues of the tridiagonal ``(a, b)`` below each ``lam``.

    ``b`` has length ``len(a) - 1``.  Tiny pivots are replaced by ``-pivmin``.
    """
    a = np.asarray(a, dtype=float)
    b2 = np.asarray(b, dtype=float) ** 2
    lam = np.asarray(lam, dtype=float)
    if pivmin is None:
        pivmin = _pivmin(a, b)
    d = a[0] - lam
    d = np.where(np.abs(d) < pivmin, -pivmin, d)
    count = (d < 0).astype(np.int64)
    for i in range(1, a.size):
        d = (a[i] - lam) - b2[i - 1] / d
        d = np.where(np.abs(d) < pivmin, -pivmin, d)
        count += d < 0
    return count


def _pivmin(a, b):
    big = max(np.max(np.abs(a)) if a.size else 0.0, np.max(b * b) if b.size else 0.0, 1.0)
    return np.finfo(float).tiny * big


def _gershgorin(a, b):
    r = np.zeros_like(a)
    r[:-1] += b
    r[1:] += b
    return float(np.min(a - r)), float(np.max(a + r))


def _bisect_all(a, b):
    N = a.size
    lo_g, hi_g = _gershgorin(a, b)
    span = max(hi_g - lo_g, abs(lo_g), abs(hi_g), 1.0)
    lo_g -= 2 * _EPS * span
    hi_g += 2 * _EPS * span
    pivmin = _pivmin(a, b)
    k = np.arange(N)
    lo = np.full(N, lo_g)
    hi = np.full(N, hi_g)
    atol = 4 * _EPS * span
    active = np.ones(N, dtype=bool)
    for _ in range(_MAX_BISECT):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        mid = 0.5 * (lo[idx] + hi[idx])
        c = sturm_count(a, b, mid, pivmin)
        above = c > k[idx]
        hi[idx] = np.where(above, mid, hi[idx])
        lo[idx] = np.where(above, lo[idx], mid)
        width = hi[idx] - lo[idx]
        done = width <= 2 * _EPS * np.maximum(np.abs(lo[idx]), np.abs(hi[idx])) + atol
        active[idx[done]] = False
    if active.any():
        j = int(np.flatnonzero(active)[0])
        raise NumericFailure(f"bisection did not converge for eigenvalue {j}", index=j)
    return 0.5 * (lo + hi)


def _first_components(a, b, lam):
    """``z_0^2 / |z|^2`` for the eigenvector of each eigenvalue in ``lam``."""
    N = a.size
    if N == 1:
        return np.ones(1)
    pivmin = _pivmin(a, b)
    logb = np.log(b)
    out = np.empty(lam.size)
    for start in range(0, lam.size, _WEIGHT_CHUNK):
        lm = lam[start : start + _WEIGHT_CHUNK]
        m = lm.size
        dp = np.empty((N, m))
        dm = np.empty((N, m))
        d = a[0] - lm
        dp[0] = np.where(np.abs(d) < pivmin, -pivmin, d)
        for i in range(1, N):
            d = (a[i] - lm) - b[i - 1] ** 2 / dp[i - 1]
            dp[i] = np.where(np.abs(d) < pivmin, -pivmin, d)
        d = a[N - 1] - lm
        dm[N - 1] = np.where(np.abs(d) < pivmin, -pivmin, d)
        for i in range(N - 2, -1, -1):
            d = (a[i] - lm) - b[i] ** 2 / dm[i + 1]
            dm[i] = np.where(np.abs(d) < pivmin, -pivmin, d)
        gamma = dp + dm - (a[:, None] - lm[None, :])
        r = np.argmin(np.abs(gamma), axis=0)
        # log|z_i| relative to z_r = 1
        lup = logb[:, None] - np.log(np.abs(dp[:-1]))  # z_i / z_{i+1}, i < r
        ldn = logb[:, None] - np.log(np.abs(dm[1:]))  # z_i / z_{i-1}, i > r
        cu = np.vstack([np.zeros((1, m)), np.cumsum(lup, axis=0)])  # cu[i] = sum_{j<i} lup[j]
        cd = np.vstack([np.zeros((1, m)), np.cumsum(ldn, axis=0)])  # cd[i] = sum_{j<i} ldn[j]
        rows = np.arange(N)[:, None]
        cols = np.arange(m)
        cu_r = cu[r, cols]
        cd_r = cd[r, cols]
        logz = np.where(rows < r, cu_r - cu, np.where(rows > r, cd - cd_r, 0.0))
        rel = 2.0 * (logz - logz[0])
        # z_0 negligible against the other components: the weight underflows to 0
        with np.errstate(under="ignore", over="ignore"):
            out[start : start + m] = 1.0 / np.sum(np.exp(rel), axis=0)
    return out


def truncate_quadrature(model, N):
    """Gaussian quadrature of the spectral measure from the ``N x N`` section.

    Nodes are the eigenvalues (Sturm-sequence bisection, all eigenvalues
    bracketed in parallel); weights are squared first components of the
    normalised eigenvectors, obtained in log space from a twisted
    factorisation so that components far below ``1e-308`` relative to the
    largest simply give weight ``0``.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be at least 1")
    a, b_all = model.coefficients(N)
    b = b_all[: N - 1]
    if N == 1:
        return SpectralMeasure(np.array([a[0]]), np.array([1.0]), 1)
    nodes = _bisect_all(a, b)
    if np.any(np.diff(nodes) <= 0):
        j = int(np.argmax(np.diff(nodes) <= 0))
        raise NumericFailure(f"eigenvalues {j} and {j + 1} are not resolved", index=j)
    weights = _first_components(a, b, nodes)
    for arr in (nodes, weights):
        arr.setflags(write=False)
    return SpectralMeasure(nodes, weights, N)


def empirical_cdf(measure, lam):
    """Right-continuous ``sum of weights with node <= lam``, in ``[0, 1]``."""
    cum = np.concatenate([[0.0], np.cumsum(measure.weights)])
    lam_arr = np.asarray(lam, dtype=float)
    k = np.searchsorted(measure.nodes, lam_arr, side="right")
    out = np.clip(cum[k], 0.0, 1.0)
    return float(out) if lam_arr.ndim == 0 else out


def compare_cdfs(cdf_a, cdf_b, grid):
    """Sup gap ``max_i |cdf_a(x_i) - cdf_b(x_i)|`` of two sampled CDFs."""
    grid = np.asarray(grid, dtype=float)
    cdf_a = np.asarray(cdf_a, dtype=float)
    cdf_b = np.asarray(cdf_b, dtype=float)
    if cdf_a.shape != grid.shape or cdf_b.shape != grid.shape:
        raise ValueError("both CDFs must be sampled on the grid")
    if grid.size == 0:
        return 0.0
    return float(np.max(np.abs(cdf_a - cdf_b)))


# ---------------------------------------------------------------------------
# continued-fraction boundary values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StieltjesResult:
    """Boundary value ``(1/pi) Im R(x + i0)`` with its evaluation trail.

    ``raw[k]`` is ``(1/pi) Im R(x + i eps_k)``; ``depth`` is the continued
    fraction depth reached; ``clamped`` records how far below zero the
    extrapolated value was before clamping (``0`` if it was not).
    """

    x: np.ndarray
    eps_schedule: tuple
    raw: np.ndarray = field(repr=False)
    extrapolated: np.ndarray
    value: np.ndarray
    depth: int
    clamped: np.ndarray = field(repr=False)
    terminator: str = "sqrt"


def _tail_root(a, b, lam):
    # Herglotz root of b^2 t^2 - (a - lam) t + 1 = 0 for Im lam > 0
    z = a - lam
    s = np.sqrt(z * z - 4.0 * b * b)
    t1 = (z + s) / (2.0 * b * b)
    t2 = (z - s) / (2.0 * b * b)
    return np.where(t1.imag > 0, t1, t2)


def _backward(a, b, lam, depth, terminator):
    if terminator == "sqrt":
        t = _tail_root(a[depth], b[depth], lam)
    else:
        t = np.zeros_like(lam)
    for k in range(depth - 1, -1, -1):
        t = 1.0 / ((a[k] - lam) - b[k] * b[k] * t)
    return t


def stieltjes_boundary(
    model,
    x,
    eps_schedule=DEFAULT_EPS_SCHEDULE,
    depth_tol=1e-10,
    *,
    terminator="sqrt",
    depth_start=64,
    depth_cap=2**20,
):
    """Boundary value of the Stieltjes transform from the continued fraction.

    For every ``eps`` of the schedule the fraction is evaluated at
    ``x + i eps`` from depth ``N`` back to the head, doubling ``N`` until two
    successive values differ by at most ``depth_tol`` everywhere.  The depth
    is cut with ``terminator``: ``"sqrt"`` closes the fraction with the
    constant-tail root at the cut index, ``"zero"`` truncates it outright.
    The two smallest ``eps`` are combined by first-order Richardson
    extrapolation.

    Raises
    ------
    NonConvergenceError
        The depth cap was reached first.  For models violating
        ``sum 1/b_n = inf`` this may signal a non-self-adjoint operator.
    """
    if terminator not in ("sqrt", "zero"):
        raise ValueError("terminator must be 'sqrt' or 'zero'")
    eps = tuple(float(e) for e in eps_schedule)
    if not eps or any(e <= 0 for e in eps) or any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ValueError("eps_schedule must be strictly decreasing positive values")
    x_arr = np.asarray(x, dtype=float)
    xs = x_arr.reshape(-1)
    lam = xs[None, :] + 1j * np.asarray(eps)[:, None]
    depth = int(depth_start)
    a, b = model.coefficients(min(2 * depth, depth_cap) + 1)
    cur = _backward(a, b, lam, depth, terminator)
    gap = math.inf
    while True:
        if 2 * depth > depth_cap:
            raise NonConvergenceError(
                f"continued fraction not converged at depth {depth} (last change {gap:.3g})",
                index=depth,
            )
        depth *= 2
        if a.size <= depth:
            a, b = model.coefficients(min(2 * depth, depth_cap) + 1)
        nxt = _backward(a, b, lam, depth, terminator)
        if not np.all(np.isfinite(nxt)):
            raise NumericFailure(f"non-finite continued fraction value at depth {depth}", index=depth)
        gap = float(np.max(np.abs(nxt - cur)))
        cur = nxt
        if gap <= depth_tol:
            break
    raw = cur.imag / math.pi
    if len(eps) >= 2:
        e1, e2 = eps[-2], eps[-1]
        extrap = (e1 * raw[-1] - e2 * raw[-2]) / (e1 - e2)
    else:
        extrap = raw[-1].copy()
    clamped = np.where(extrap < 0, -extrap, 0.0)
    value = np.maximum(extrap, 0.0)
    shape = x_arr.shape
    return StieltjesResult(
        x_arr,
        eps,
        raw.reshape((len(eps),) + shape),
        extrap.reshape(shape),
        value.reshape(shape),
        depth,
        clamped.reshape(shape),
        terminator,
    )


def stieltjes_density(model, x, eps_schedule=DEFAULT_EPS_SCHEDULE, depth_tol=1e-10, **kwargs):
    """``(1/pi) Im R(x + i0)`` (scalar or array); see :func:`stieltjes_boundary`."""
    res = stieltjes_boundary(model, x, eps_schedule, depth_tol, **kwargs)
    return float(res.value) if res.value.ndim == 0 else res.value
