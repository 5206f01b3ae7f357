"""Finite-window certification of the hypotheses behind absolute continuity.

Asymptotic hypotheses cannot be decided from finitely many coefficients, so
every check reports ``"pass"``, ``"fail"`` or ``"inconclusive"``; a fail
always carries a witness (an index or a grid point) that reproduces it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ImpossibleStateError
from .integrate import simpson
from .recurrence import ScaledArray, carleman_sum, poly_table, scaled_sum

__all__ = [
    "CheckResult",
    "ConditionReport",
    "EnvelopeStats",
    "TelescopeTerms",
    "check_carleman",
    "check_monotone_dominance",
    "check_centered",
    "estimate_q",
    "envelope_stats",
    "theorem24_check",
    "telescope_terms",
    "telescope_residual",
    "telescope_residuals",
    "density_bracket",
    "certify",
]

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
_STATUSES = (PASS, FAIL, INCONCLUSIVE)

Q_MAX = 0.999
EDGE_MARGIN = 1e-3
# log-log slope of block maxima of w_n above which w_n is treated as unbounded
GROWTH_SLOPE_MAX = 0.5
# margin on fitted tail slopes (trend / summability heuristics)
SLOPE_MARGIN = 0.05
L1_TOL = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    witness: dict | None = None
    value: float | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in _STATUSES:
            raise ValueError(f"bad status {self.status!r}")
        if self.status == FAIL and not self.witness:
            raise ValueError(f"check {self.name!r} failed without a witness")

    @property
    def passed(self):
        return self.status == PASS

    def to_dict(self):
        out = {"name": self.name, "status": self.status, "witness": self.witness}
        if self.value is not None:
            out["value"] = self.value
        out["details"] = _plain(self.details)
        return out


def _plain(obj):
    if isinstance(obj, CheckResult):
        return obj.to_dict()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _loglog_slope(n, y):
    n = np.asarray(n, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (y > 0) & np.isfinite(y) & (n > 0)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(n[keep]), np.log(y[keep]), 1)[0])


# ---------------------------------------------------------------------------
# coefficient checks
# ---------------------------------------------------------------------------


def check_carleman(model, N):
    res = carleman_sum(model, N)
    status = PASS if res.verdict == "divergent-heuristic" else INCONCLUSIVE
    return CheckResult(
        "carleman",
        status,
        value=res.partial_sum,
        details={"N": int(N), "verdict": res.verdict, "slope": res.slope},
    )


def check_monotone_dominance(model, N):
    """``b_n >= b_{n-1}`` and ``|a_n - a_{n-1}| <= 2 (b_n - b_{n-1})`` for ``1 <= n < N``."""
    N = int(N)
    if N < 2:
        raise ValueError("N must be at least 2")
    a, b = model.coefficients(N + 1)
    eps = np.finfo(float).eps
    da = np.abs(np.diff(a[:N]))
    db = np.diff(b[:N])
    slack = 4 * eps * (np.abs(a[1:N]) + np.abs(a[: N - 1]) + 2 * b[1:N] + 2 * b[: N - 1])
    bad = (db < -slack) | (da > 2.0 * db + slack)
    if bad.any():
        n = int(np.argmax(bad)) + 1
        reason = "b_n < b_(n-1)" if db[n - 1] < -slack[n - 1] else "|a_n - a_(n-1)| > 2(b_n - b_(n-1))"
        return CheckResult(
            "monotone_dominance",
            FAIL,
            witness={"n": n, "reason": reason, "a": [a[n - 1], a[n]], "b": [b[n - 1], b[n]]},
        )
    lo, hi = a - 2 * b, a + 2 * b
    tol = 8 * eps * (np.abs(a) + 2 * b)
    nested = (lo[1:] <= lo[:-1] + tol[:-1] + tol[1:]) & (hi[1:] >= hi[:-1] - tol[:-1] - tol[1:])
    if not nested.all():
        n = int(np.argmin(nested))
        raise ImpossibleStateError(f"dominance holds but I_{n} is not inside I_{n + 1}", index=n)
    return CheckResult("monotone_dominance", PASS, details={"N": N, "nested": True})


def check_centered(model, interval, N0, Nmax):
    """``[left, right]`` strictly inside every ``I_n`` with ``N0 <= n <= Nmax``."""
    left, right = map(float, interval)
    if not left < right:
        raise ValueError("interval must satisfy left < right")
    N0, Nmax = int(N0), int(Nmax)
    a, b = model.coefficients(Nmax + 1)
    a, b = a[N0:], b[N0:]
    ok = (a - 2 * b < left) & (right < a + 2 * b)
    if not ok.all():
        k = int(np.argmin(ok))
        n = N0 + k
        return CheckResult(
            "centered",
            FAIL,
            witness={"n": n, "I_n": [a[k] - 2 * b[k], a[k] + 2 * b[k]], "interval": [left, right]},
        )
    return CheckResult(
        "centered",
        PASS,
        details={"checked": [N0, Nmax], "beyond_nmax": INCONCLUSIVE, "interval": [left, right]},
    )


def estimate_q(model, interval, N0, Nmax, q_max=Q_MAX):
    """``q_hat = max_n max(|left - a_n|, |right - a_n|) / (2 b_n)``; value of the result."""
    left, right = map(float, interval)
    N0, Nmax = int(N0), int(Nmax)
    a, b = model.coefficients(Nmax + 1)
    a, b = a[N0:], b[N0:]
    q = np.maximum(np.abs(left - a), np.abs(right - a)) / (2.0 * b)
    k = int(np.argmax(q))
    q_hat = float(q[k])
    witness = {"n": N0 + k, "q_n": q_hat}
    if q_hat <= q_max:
        return CheckResult("q_domination", PASS, value=q_hat, details={"argmax": witness, "q_max": q_max})
    return CheckResult("q_domination", FAIL, witness=witness, value=q_hat, details={"q_max": q_max})


def density_bracket(q):
    """Bounds on ``f_n(x) * b_n (P_{n+1}^2 + P_n^2)`` when ``|x - a_n| <= 2 b_n q``."""
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    return math.sqrt(1.0 - q * q) / (math.pi * (1.0 + q)), 1.0 / (math.pi * (1.0 - q))


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeStats:
    grid: np.ndarray
    w_min: np.ndarray
    w_max: np.ndarray
    edge_mask: np.ndarray
    growth_slope: np.ndarray
    C_hat: float
    g: np.ndarray
    lp_norm: float
    p: float
    check: CheckResult


def w_table(model, x, n_lo, n_hi, table=None):
    """``w_n(x) = b_n (P_{n+1}^2 + P_n^2)`` for ``n_lo <= n <= n_hi`` as a ScaledArray."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    P = poly_table(model, x, n_hi + 1) if table is None else table
    _, b = model.coefficients(n_hi + 1)
    bn = b[n_lo : n_hi + 1][:, None]
    hi_rows = P[n_lo + 1 : n_hi + 2]
    lo_rows = P[n_lo : n_hi + 1]
    return scaled_sum([(bn, [hi_rows, hi_rows]), (bn, [lo_rows, lo_rows])])


def envelope_stats(model, grid, n_range, p=math.inf, edge_margin=EDGE_MARGIN):
    """Bounds ``w_min(x) <= w_n(x) <= w_max(x)`` over ``n_range = (n_lo, n_hi)``.

    Points within a relative ``edge_margin`` of an endpoint of some ``I_n`` are
    reported in ``edge_mask`` and left out of ``C_hat``, ``g`` and the
    ``L_p`` norm.  A point whose block maxima of ``w_n`` grow with log-log
    slope above ``GROWTH_SLOPE_MAX`` is treated as unbounded.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    if not 0 <= n_lo <= n_hi:
        raise ValueError("n_range must satisfy 0 <= n_lo <= n_hi")
    if p < 1:
        raise ValueError("p must be at least 1")
    w = w_table(model, grid, n_lo, n_hi)
    zero = w.mantissa == 0
    if zero.any():
        k, i = np.argwhere(zero)[0]
        raise ImpossibleStateError(
            f"w_n vanished at n={n_lo + k}, x={grid[i]!r}: P_n and P_(n+1) have no common zeros",
            index=n_lo + int(k),
        )
    log2w = np.log2(w.mantissa) + w.exponent
    wv = w.values()
    w_min, w_max = wv.min(axis=0), wv.max(axis=0)

    a, b = model.coefficients(n_hi + 1)
    a, b = a[n_lo : n_hi + 1, None], b[n_lo : n_hi + 1, None]
    edge = np.any(np.abs(grid[None, :] - a) > 2.0 * b * (1.0 - edge_margin), axis=0)

    slope = np.full(grid.shape, math.nan)
    n_mid = (n_lo + n_hi) // 2
    if n_hi - n_lo >= 4 and n_mid > 0:
        m1 = log2w[: n_mid - n_lo + 1].max(axis=0)
        m2 = log2w[n_mid - n_lo :].max(axis=0)
        slope = (m2 - m1) * math.log(2.0) / math.log(n_hi / max(n_mid, 1))

    inner = ~edge
    growing = inner & (np.nan_to_num(slope, nan=0.0) > GROWTH_SLOPE_MAX)
    g = np.where(inner, 1.0 / w_min, math.nan)
    details = {
        "n_range": [n_lo, n_hi],
        "edge_points": grid[edge].tolist(),
        "edge_margin": edge_margin,
        "p": p,
    }
    if not inner.any():
        C_hat, lp = math.nan, math.nan
        check = CheckResult("envelope", INCONCLUSIVE, details={**details, "reason": "no interior grid points"})
    else:
        C_hat = float(w_max[inner].max())
        gi = g[inner]
        if math.isinf(p):
            lp = float(gi.max())
        elif inner.sum() >= 2:
            lp = float(simpson(grid[inner], gi**p) ** (1.0 / p))
        else:
            lp = math.nan
        details.update({"C_hat": C_hat, "lp_norm": lp})
        if growing.any():
            i = int(np.argmax(growing))
            check = CheckResult(
                "envelope",
                FAIL,
                witness={"x": float(grid[i]), "growth_slope": float(slope[i])},
                value=C_hat,
                details=details,
            )
        elif math.isfinite(C_hat) and math.isfinite(lp):
            check = CheckResult("envelope", PASS, value=C_hat, details=details)
        else:
            i = int(np.argmax(~np.isfinite(w_max) & inner))
            check = CheckResult(
                "envelope", FAIL, witness={"x": float(grid[i]), "w_max": float(w_max[i])}, value=C_hat, details=details
            )
    return EnvelopeStats(grid, w_min, w_max, edge, slope, C_hat, g, lp, p, check)


# ---------------------------------------------------------------------------
# coefficient-limit hypotheses
# ---------------------------------------------------------------------------


def _l1_verdict(name, inc, n, l1_tol, decade_lo):
    inc = np.abs(inc)
    total = float(math.fsum(inc))
    in_decade = n >= decade_lo
    decade_increase = float(math.fsum(inc[in_decade]))
    slope = _loglog_slope(n[in_decade], inc[in_decade])
    entry = {"partial_sum": total, "decade_increase": decade_increase, "tail_slope": slope}
    if decade_increase <= l1_tol or (math.isfinite(slope) and slope <= -1.0 - SLOPE_MARGIN):
        status = PASS
    elif math.isfinite(slope) and slope >= -1.0 + SLOPE_MARGIN:
        status = FAIL
    else:
        status = INCONCLUSIVE
    entry["status"] = status
    return entry


def theorem24_check(model, N, tol=1e-6, l1_tol=L1_TOL):
    """Finite-``N`` verdicts on the four coefficient hypotheses.

    1. ``b_n -> inf``: fitted log-log slope of ``b_n`` over the last decade.
    2. ``a_n / b_n -> s`` with ``|s| < 2``: ``s_hat = a_N / b_N`` and the
       spread of the ratio over the last decade (``<= tol``).
    3. ``b_n / b_{n+1} -> 1``: deviation at ``N`` within ``tol`` or decaying.
    4. three ``l1`` sequences: last-decade partial-sum increase ``<= l1_tol``
       or increments decaying faster than ``1/n``.

    The result's details carry ``limits`` (1-3) and ``l1`` (4) sub-results.
    """
    N = int(N)
    if N < 100:
        raise ValueError("N must be at least 100")
    a, b = model.coefficients(N + 2)
    lo = N // 10
    dec = np.arange(lo, N + 1)
    conds = {}

    # (1)
    bd = b[lo : N + 1]
    s1 = _loglog_slope(dec, bd)
    rel_var = float((bd.max() - bd.min()) / bd.max())
    if s1 >= SLOPE_MARGIN and b[N] > b[lo]:
        st = PASS
    elif rel_var <= tol or s1 <= -SLOPE_MARGIN:
        st = FAIL
    else:
        st = INCONCLUSIVE
    conds["b_to_infinity"] = {"status": st, "b_N": float(b[N]), "slope": s1, "relative_variation": rel_var}

    # (2)
    r = a[lo : N + 1] / bd
    s_hat = float(r[-1])
    spread = float(r.max() - r.min())
    big = np.abs(r) >= 2.0
    if abs(s_hat) >= 2.0:
        st = FAIL
        first_big = lo + int(np.argmax(big))
    elif spread <= tol:
        st = PASS
        first_big = None
    else:
        st = INCONCLUSIVE
        first_big = None
    conds["ratio_limit"] = {"status": st, "s_hat": s_hat, "spread": spread, "first_violation": first_big}

    # (3)
    dev = np.abs(1.0 - b[lo : N + 1] / b[lo + 1 : N + 2])
    s3 = _loglog_slope(dec, dev)
    if dev[-1] <= tol or (np.all(dev > 0) and s3 <= -SLOPE_MARGIN):
        st = PASS
    else:
        st = FAIL
    conds["ratio_to_one"] = {"status": st, "deviation_N": float(dev[-1]), "slope": s3}

    # (4)
    n2 = np.arange(2, N + 1)
    alpha_seq = b[1:N] / b[2 : N + 1] - b[0 : N - 1] / b[1:N]
    n1 = np.arange(1, N + 1)
    inv_seq = 1.0 / b[1 : N + 1] - 1.0 / b[0:N]
    ratio_seq = a[1 : N + 1] / b[1 : N + 1] - a[0:N] / b[0:N]
    l1 = {
        "alpha": _l1_verdict("alpha", alpha_seq, n2, l1_tol, lo),
        "inverse_b": _l1_verdict("inverse_b", inv_seq, n1, l1_tol, lo),
        "a_over_b": _l1_verdict("a_over_b", ratio_seq, n1, l1_tol, lo),
    }
    alpha_sum = l1["alpha"]["partial_sum"]

    limit_keys = ("b_to_infinity", "ratio_limit", "ratio_to_one")
    limits = _combine("theorem24_limits", {k: conds[k] for k in limit_keys}, N)
    l1_check = _combine("theorem24_l1", l1, N)
    overall = _combine("theorem24", {"limits": {"status": limits.status}, "l1": {"status": l1_check.status}}, N)
    witness = limits.witness if limits.status == FAIL else l1_check.witness
    return CheckResult(
        "theorem24",
        overall.status,
        witness=witness if overall.status == FAIL else None,
        value=s_hat,
        details={
            "N": N,
            "tol": tol,
            "l1_tol": l1_tol,
            "s_hat": s_hat,
            "alpha_sum": alpha_sum,
            "conditions": conds,
            "l1_partials": l1,
            "limits": limits,
            "l1": l1_check,
        },
    )


def _combine(name, entries, N):
    statuses = [e["status"] for e in entries.values()]
    if FAIL in statuses:
        key = next(k for k, e in entries.items() if e["status"] == FAIL)
        wit = {"condition": key, "n": N}
        if entries[key].get("first_violation") is not None:
            wit["n"] = entries[key]["first_violation"]
        return CheckResult(name, FAIL, witness=wit, details=dict(entries))
    if all(s == PASS for s in statuses):
        return CheckResult(name, PASS, details=dict(entries))
    return CheckResult(name, INCONCLUSIVE, details=dict(entries))


# ---------------------------------------------------------------------------
# telescoping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TelescopeTerms:
    k: int
    x: float
    alpha: float
    beta: float
    gamma: float

    def delta(self, q):
        return abs(self.gamma) / (1.0 - q)

    def epsilon(self, q):
        return (abs(self.alpha) + abs(self.beta)) / (1.0 - q)


def telescope_terms(model, k, x):
    """Coefficients of the summed increments of the Turan determinant."""
    if k < 1:
        raise ValueError("k must be at least 1")
    a_k, b_k = model.at(k)
    a_k1, b_k1 = model.at(k + 1)
    _, b_km = model.at(k - 1)
    alpha = b_k / b_k1 - b_km / b_k
    beta = 0.5 * (x * (1.0 / b_k - 1.0 / b_k1) + (a_k1 / b_k1 - a_k / b_k))
    gamma = 1.0 - b_km / b_k
    return TelescopeTerms(int(k), float(x), alpha, beta, gamma)


def telescope_residuals(model, x, n_max):
    """``|(D_{n+1} - D_n) - increment formula|`` for ``n = 1..n_max``.

    ``D_n = b_n P_n^2 - b_{n-1} P_{n-1} P_{n+1}``.  Returns shape
    ``(n_max,) + shape(x)``.
    """
    x_arr = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x_arr)
    P = poly_table(model, xs, n_max + 2)
    a, b = model.coefficients(n_max + 2)
    n = np.arange(1, n_max + 1)
    bn, bn1, bnm = b[n][:, None], b[n + 1][:, None], b[n - 1][:, None]
    an, an1 = a[n][:, None], a[n + 1][:, None]
    Pm, P0, P1, P2 = P[n - 1], P[n], P[n + 1], P[n + 2]
    c = 1.0 - bn / bn1
    mix = (xs[None, :] * (1.0 / bn - 1.0 / bn1) + (an1 / bn1 - an / bn)) * bn
    terms = [
        # D_{n+1}
        (bn1, [P1, P1]),
        (-bn, [P0, P2]),
        # - D_n
        (-bn, [P0, P0]),
        (bnm, [Pm, P1]),
        # - increment formula
        (-c * bn1, [P1, P1]),
        (c * bn, [P0, P0]),
        (-mix, [P0, P1]),
    ]
    r = np.abs(scaled_sum(terms).values())
    return r[:, 0] if x_arr.ndim == 0 else r


def telescope_residual(model, x, n):
    if n < 1:
        raise ValueError("n must be at least 1")
    return float(telescope_residuals(model, float(x), int(n))[int(n) - 1])


# ---------------------------------------------------------------------------
# aggregate report
# ---------------------------------------------------------------------------

ALL_CHECKS = (
    "carleman",
    "monotone_dominance",
    "centered",
    "q_domination",
    "envelope",
    "theorem24_limits",
    "theorem24_l1",
)


@dataclass(frozen=True)
class ConditionReport:
    checks: dict
    q_hat: float
    C_hat: float
    envelope_grid: np.ndarray
    envelope_g: np.ndarray
    s_hat: float
    l1_partials: dict

    def failed(self, names=None):
        names = self.checks if names is None else names
        return [k for k in names if k in self.checks and self.checks[k].status == FAIL]

    def to_dict(self):
        return {
            "checks": {k: v.to_dict() for k, v in self.checks.items()},
            "q_hat": self.q_hat,
            "C_hat": self.C_hat,
            "envelope": {"x": _plain(self.envelope_grid), "g": _plain(self.envelope_g)},
            "s_hat": self.s_hat,
            "l1_partials": _plain(self.l1_partials),
        }


def certify(
    model,
    interval,
    *,
    n0=50,
    n_max=800,
    grid=None,
    p=math.inf,
    checks=ALL_CHECKS,
    carleman_N=10_000,
    theorem24_N=100_000,
    tol=1e-6,
    l1_tol=L1_TOL,
):
    """Run the requested checks over the index window ``[n0, n_max]``."""
    left, right = map(float, interval)
    if grid is None:
        grid = np.linspace(left, right, 101)
    grid = np.asarray(grid, dtype=float)
    unknown = set(checks) - set(ALL_CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    out = {}
    if "carleman" in checks:
        out["carleman"] = check_carleman(model, carleman_N)
    if "monotone_dominance" in checks:
        out["monotone_dominance"] = check_monotone_dominance(model, max(n_max, 2))
    centered = check_centered(model, (left, right), n0, n_max)
    if "centered" in checks:
        out["centered"] = centered
    q = estimate_q(model, (left, right), n0, n_max)
    if "q_domination" in checks:
        out["q_domination"] = q
    C_hat, g = math.nan, np.full(grid.shape, math.nan)
    if "envelope" in checks:
        if centered.passed:
            env = envelope_stats(model, grid, (n0, n_max), p=p)
            out["envelope"] = env.check
            C_hat, g = env.C_hat, env.g
        else:
            out["envelope"] = CheckResult(
                "envelope", INCONCLUSIVE, details={"reason": "interval not centered on the index window"}
            )
    s_hat, l1_partials = math.nan, {}
    if "theorem24_limits" in checks or "theorem24_l1" in checks:
        t24 = theorem24_check(model, theorem24_N, tol=tol, l1_tol=l1_tol)
        s_hat = t24.details["s_hat"]
        l1_partials = t24.details["l1_partials"]
        if "theorem24_limits" in checks:
            out["theorem24_limits"] = t24.details["limits"]
        if "theorem24_l1" in checks:
            out["theorem24_l1"] = t24.details["l1"]
    return ConditionReport(out, q.value, C_hat, grid, g, s_hat, l1_partials)
