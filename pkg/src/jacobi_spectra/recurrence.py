"""Coefficient models and the three-term recurrence for P_n and Q_n.

The Jacobi matrix has diagonal ``a_n`` (real) and off-diagonal ``b_n``
(positive).  Polynomials of the first kind ``P_n`` and of the second kind
``Q_n`` both solve

    b_{n-1} y_{n-1} + a_n y_n + b_n y_{n+1} = lam * y_n,   n >= 1,

with ``P_0 = 1, P_1 = (lam - a_0)/b_0`` and ``Q_0 = 0, Q_1 = 1/b_0``.

Off the spectrum ``P_n`` grows geometrically, so every value is held as a
mantissa in ``[1, 2)`` times a power of two.  Rescaling only ever multiplies
by powers of two, which is exact: whenever plain doubles do not overflow the
scaled and unscaled evaluations agree bit for bit.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ModelError, NumericFailure

__all__ = [
    "CoefficientModel",
    "ScaledReal",
    "ScaledArray",
    "PolyPairSequence",
    "coeff_at",
    "eval_polys",
    "poly_table",
    "wronskian_residual",
    "wronskian_residuals",
    "carleman_sum",
    "CarlemanResult",
]

# Rescale once |y| leaves [2**-_RESCALE_BITS, 2**_RESCALE_BITS].
_RESCALE_BITS = 256
_HI = 2.0**_RESCALE_BITS
_LO = 2.0**-_RESCALE_BITS

# Carleman heuristic: log-increment slope threshold and its margin.
CARLEMAN_SLOPE_MARGIN = 0.05

_KINDS = ("constant", "affine", "power", "table")
_TAIL_RULES = ("repeat-last",)


# ---------------------------------------------------------------------------
# coefficient models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientModel:
    """Diagonal sequences ``(a_n, b_n)`` of a semi-infinite Jacobi matrix.

    Use the constructors rather than the raw initializer:

    ``constant(a, b)``
        ``a_n = a``, ``b_n = b``.
    ``affine(a0, a1, b0, b1)``
        ``a_n = a0 + a1*n``, ``b_n = b0 + b1*n``.
    ``power(c, alpha, d=0, beta=0)``
        ``b_n = c*(n+1)**alpha``, ``a_n = d*(n+1)**beta``.
    ``from_table(rows, tail)``
        explicit ``(a_n, b_n)`` rows; ``tail`` is ``"repeat-last"``, another
        model evaluated at the absolute index ``n``, or ``None`` (queries past
        the table then raise).
    """

    kind: str
    params: tuple = ()
    table: tuple | None = None
    tail: str | CoefficientModel | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        p = dict(self.params)
        for name, value in p.items():
            if not math.isfinite(value):
                raise ModelError(f"parameter {name} must be finite")
        if self.kind == "constant":
            _require_positive(p["b"], "b")
        elif self.kind == "affine":
            _require_positive(p["b0"], "b0")
            if p["b1"] < 0:
                raise ModelError("b1 must be non-negative (b_n would turn non-positive)")
        elif self.kind == "power":
            _require_positive(p["c"], "c")
        else:
            if not self.table:
                raise ModelError("table model needs at least one row")
            for n, (a_n, b_n) in enumerate(self.table):
                if not (math.isfinite(a_n) and math.isfinite(b_n)):
                    raise ModelError(f"table row {n} is not finite")
                if b_n <= 0:
                    raise ModelError(f"b must be positive (table row {n})")
            if isinstance(self.tail, str) and self.tail not in _TAIL_RULES:
                raise ModelError(f"unknown tail rule {self.tail!r}")
            if self.tail is not None and not isinstance(self.tail, (str, CoefficientModel)):
                raise ModelError("tail must be 'repeat-last', a CoefficientModel or None")

    # constructors -----------------------------------------------------------

    @classmethod
    def constant(cls, a, b):
        return cls("constant", (("a", float(a)), ("b", float(b))))

    @classmethod
    def affine(cls, a0, a1, b0, b1):
        return cls(
            "affine",
            (("a0", float(a0)), ("a1", float(a1)), ("b0", float(b0)), ("b1", float(b1))),
        )

    @classmethod
    def power(cls, c, alpha, d=0.0, beta=0.0):
        return cls(
            "power",
            (("c", float(c)), ("alpha", float(alpha)), ("d", float(d)), ("beta", float(beta))),
        )

    @classmethod
    def from_table(cls, rows, tail):
        rows = tuple((float(a), float(b)) for a, b in rows)
        return cls("table", (), rows, tail)

    # evaluation ----------------------------------------------------------------

    def param(self, name):
        return dict(self.params)[name]

    def at(self, n):
        """Return ``(a_n, b_n)`` as Python floats."""
        if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < 0:
            raise ModelError(f"index must be a non-negative integer, got {n!r}")
        n = int(n)
        p = dict(self.params)
        if self.kind == "constant":
            return p["a"], p["b"]
        if self.kind == "affine":
            return p["a0"] + p["a1"] * n, p["b0"] + p["b1"] * n
        if self.kind == "power":
            b_n = p["c"] * float(n + 1) ** p["alpha"]
            a_n = p["d"] * float(n + 1) ** p["beta"] if p["d"] != 0.0 else 0.0
            return _checked_pair(a_n, b_n, n)
        if n < len(self.table):
            return self.table[n]
        if self.tail is None:
            raise ModelError(
                f"index {n} is beyond the table end ({len(self.table)} rows) and no tail rule was given"
            )
        if self.tail == "repeat-last":
            return self.table[-1]
        return self.tail.at(n)

    def coefficients(self, count):
        """Arrays ``a[0:count]``, ``b[0:count]``."""
        count = int(count)
        if count < 0:
            raise ModelError("count must be non-negative")
        n = np.arange(count, dtype=float)
        p = dict(self.params)
        if self.kind == "constant":
            a = np.full(count, p["a"])
            b = np.full(count, p["b"])
        elif self.kind == "affine":
            a = p["a0"] + p["a1"] * n
            b = p["b0"] + p["b1"] * n
        elif self.kind == "power":
            with np.errstate(over="ignore"):
                b = p["c"] * (n + 1.0) ** p["alpha"]
                a = p["d"] * (n + 1.0) ** p["beta"] if p["d"] != 0.0 else np.zeros(count)
        else:
            rows = np.asarray(self.table, dtype=float).reshape(-1, 2)
            length = rows.shape[0]
            if count <= length:
                a, b = rows[:count, 0].copy(), rows[:count, 1].copy()
            elif self.tail is None:
                raise ModelError(
                    f"index {length} is beyond the table end ({length} rows) and no tail rule was given"
                )
            elif self.tail == "repeat-last":
                a = np.concatenate([rows[:, 0], np.full(count - length, rows[-1, 0])])
                b = np.concatenate([rows[:, 1], np.full(count - length, rows[-1, 1])])
            else:
                ta, tb = self.tail.coefficients(count)
                a = np.concatenate([rows[:, 0], ta[length:]])
                b = np.concatenate([rows[:, 1], tb[length:]])
        bad = ~(np.isfinite(a) & np.isfinite(b) & (b > 0))
        if bad.any():
            first = int(np.argmax(bad))
            raise ModelError(f"b_n must be positive and finite (violated at n={first})")
        return a, b

    def to_dict(self):
        """JSON-ready description; inverse of ``jacobi_spectra.cli.model_from_dict``."""
        out = {"kind": self.kind}
        out.update(dict(self.params))
        if self.kind == "table":
            out["table"] = [list(row) for row in self.table]
            if isinstance(self.tail, CoefficientModel):
                out["tail"] = self.tail.to_dict()
            else:
                out["tail"] = self.tail
        return out


def _require_positive(value, name):
    if not value > 0:
        raise ModelError(f"{name} must be positive")


def _checked_pair(a_n, b_n, n):
    if not (math.isfinite(a_n) and math.isfinite(b_n)) or b_n <= 0:
        raise ModelError(f"b_n must be positive and finite (violated at n={n})")
    return a_n, b_n


def coeff_at(model, n):
    """The ``n``-th diagonal pair ``(a_n, b_n)`` of ``model``."""
    return model.at(n)


# ---------------------------------------------------------------------------
# scaled numbers
# ---------------------------------------------------------------------------


def _ldexp_scalar(m, e):
    if isinstance(m, complex):
        return complex(math.ldexp(m.real, e), math.ldexp(m.imag, e))
    return math.ldexp(m, e)


@dataclass(frozen=True)
class ScaledReal:
    """``mantissa * 2**exponent`` with ``|mantissa|`` in ``[1, 2)`` or zero.

    For a complex mantissa the larger of ``|re|`` and ``|im|`` is the one
    normalised.  The exponent is an unbounded Python int.
    """

    mantissa: float | complex
    exponent: int = 0

    @classmethod
    def normalize(cls, mantissa, exponent=0):
        if isinstance(mantissa, (complex, np.complexfloating)):
            m = complex(mantissa)
            size = max(abs(m.real), abs(m.imag))
        else:
            m = float(mantissa)
            size = abs(m)
        if not math.isfinite(size):
            raise NumericFailure(f"non-finite mantissa {mantissa!r}")
        if size == 0.0:
            return cls(0.0 * m, 0)
        k = math.frexp(size)[1] - 1
        return cls(_ldexp_scalar(m, -k), int(exponent) + k)

    @classmethod
    def from_value(cls, value):
        return cls.normalize(value, 0)

    def to_float(self):
        """Plain value; overflow saturates to +-inf instead of raising."""
        try:
            return _ldexp_scalar(self.mantissa, self.exponent)
        except OverflowError:
            if isinstance(self.mantissa, complex):
                return complex(
                    math.copysign(math.inf, self.mantissa.real) if self.mantissa.real else 0.0,
                    math.copysign(math.inf, self.mantissa.imag) if self.mantissa.imag else 0.0,
                )
            return math.copysign(math.inf, self.mantissa)

    def __float__(self):
        return float(self.to_float())

    def __complex__(self):
        return complex(self.to_float())

    def is_zero(self):
        return self.mantissa == 0

    def log2_abs(self):
        """``log2|value|`` without forming the value."""
        if self.is_zero():
            return -math.inf
        return math.log2(abs(self.mantissa)) + self.exponent

    def __neg__(self):
        return ScaledReal(-self.mantissa, self.exponent)

    def __abs__(self):
        return ScaledReal.normalize(abs(self.mantissa), self.exponent)

    def _coerce(self, other):
        if isinstance(other, ScaledReal):
            return other
        return ScaledReal.from_value(other)

    def __mul__(self, other):
        other = self._coerce(other)
        return ScaledReal.normalize(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by a zero ScaledReal")
        return ScaledReal.normalize(self.mantissa / other.mantissa, self.exponent - other.exponent)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __add__(self, other):
        other = self._coerce(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        e = max(self.exponent, other.exponent)
        m = _ldexp_scalar(self.mantissa, self.exponent - e) + _ldexp_scalar(
            other.mantissa, other.exponent - e
        )
        return ScaledReal.normalize(m, e)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self


def _component_ldexp(m, e):
    if np.iscomplexobj(m):
        return np.ldexp(m.real, e) + 1j * np.ldexp(m.imag, e)
    return np.ldexp(m, e)


def _abs_size(m):
    if np.iscomplexobj(m):
        return np.maximum(np.abs(m.real), np.abs(m.imag))
    return np.abs(m)


@dataclass(frozen=True)
class ScaledArray:
    """Element-wise ``mantissa * 2**exponent`` for numpy arrays."""

    mantissa: np.ndarray
    exponent: np.ndarray

    @classmethod
    def normalize(cls, raw, exponent):
        raw = np.asarray(raw)
        exponent = np.broadcast_to(np.asarray(exponent, dtype=np.int64), raw.shape)
        _, k = np.frexp(_abs_size(raw))
        k = np.where(_abs_size(raw) == 0, 0, k.astype(np.int64) - 1)
        mant = _component_ldexp(raw, -k)
        exp = np.where(_abs_size(raw) == 0, 0, exponent + k)
        return cls(mant, exp.astype(np.int64))

    def __getitem__(self, idx):
        return ScaledArray(self.mantissa[idx], self.exponent[idx])

    def values(self):
        """Plain doubles; overflow gives inf, underflow gives 0."""
        e = np.clip(self.exponent, -(2**31), 2**31 - 1)
        with np.errstate(over="ignore", under="ignore"):
            return _component_ldexp(self.mantissa, e.astype(np.int32))

    def scalar(self, idx):
        m = self.mantissa[idx]
        m = complex(m) if np.iscomplexobj(m) else float(m)
        return ScaledReal(m, int(self.exponent[idx]))


def scaled_sum(terms):
    """Sum of products given as ``(coef, [ScaledArray, ...])`` pairs.

    Each term's value is ``coef * prod(factors)``.  The result is returned as
    a ``ScaledArray`` so that huge but nearly cancelling terms keep their
    exact exponents.
    """
    parts = []
    for coef, factors in terms:
        m = np.asarray(coef) * np.ones_like(factors[0].mantissa)
        e = np.zeros(np.shape(m), dtype=np.int64)
        for f in factors:
            m = m * f.mantissa
            e = e + f.exponent
        parts.append((m, e))
    ref = parts[0][1]
    for _, e in parts[1:]:
        ref = np.maximum(ref, e)
    total = 0
    with np.errstate(under="ignore"):
        for m, e in parts:
            shift = np.clip(e - ref, -2000, 0).astype(np.int32)
            total = total + _component_ldexp(m, shift)
    return ScaledArray.normalize(total, ref)


def term_scale(terms):
    """``sum |coef * prod(factors)|`` as plain doubles (error yardstick)."""
    return scaled_sum(
        [(np.abs(c), [ScaledArray(np.abs(f.mantissa), f.exponent) for f in fs]) for c, fs in terms]
    ).values()


# ---------------------------------------------------------------------------
# the recurrence
# ---------------------------------------------------------------------------


def _two_sum(x, y):
    s = x + y
    bb = s - x
    return s, (x - (s - bb)) + (y - bb)


def _split(x):
    c = 134217729.0 * x
    hi = c - (c - x)
    return hi, x - hi


def _two_prod(x, y):
    p = x * y
    xh, xl = _split(x)
    yh, yl = _split(y)
    return p, ((xh * yh - p) + xh * yl + xl * yh) + xl * yl


def _step(lam, a_n, b_prev, b_n, prev, cur, compensated):
    if not compensated:
        return ((lam - a_n) * cur - b_prev * prev) / b_n
    c, ec = _two_sum(lam, -a_n)
    p1, e1 = _two_prod(c, cur)
    p2, e2 = _two_prod(b_prev, prev)
    s, e3 = _two_sum(p1, -p2)
    return (s + (e1 - e2 + e3 + ec * cur)) / b_n


def _run(a, b, lam, first, second, n_max, scaled, compensated):
    """One solution of the recurrence from ``y_0 = first``, ``y_1 = second``."""
    shape = lam.shape
    dtype = np.result_type(lam, float)
    raw = np.empty((n_max + 1,) + shape, dtype=dtype)
    exps = np.zeros((n_max + 1,) + shape, dtype=np.int64)
    prev = np.broadcast_to(np.asarray(first, dtype=dtype), shape).copy()
    cur = np.broadcast_to(np.asarray(second, dtype=dtype), shape).copy()
    e = np.zeros(shape, dtype=np.int64)
    if scaled:
        cur, prev, e = _rescale(cur, prev, e)
    raw[0] = prev
    raw[1] = cur
    exps[0] = e
    exps[1] = e
    for n in range(1, n_max):
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = _step(lam, a[n], b[n - 1], b[n], prev, cur, compensated)
        if not np.all(np.isfinite(nxt)):
            raise NumericFailure(f"non-finite recurrence value at n={n + 1}", index=n + 1)
        prev, cur = cur, nxt
        if scaled:
            cur, prev, e = _rescale(cur, prev, e)
        raw[n + 1] = cur
        exps[n + 1] = e
    return ScaledArray.normalize(raw, exps)


def _rescale(cur, prev, e):
    big = np.maximum(_abs_size(cur), _abs_size(prev))
    mask = (big > _HI) | ((big < _LO) & (big > 0))
    if not mask.any():
        return cur, prev, e
    _, k = np.frexp(np.where(mask, big, 1.0))
    k = np.where(mask, k - 1, 0).astype(np.int64)
    with np.errstate(under="ignore"):
        cur = _component_ldexp(cur, -k)
        prev = _component_ldexp(prev, -k)
    return cur, prev, e + k


def poly_table(model, lam, n_max, *, kind="P", scaled=True, compensated=False):
    """Values ``y_0 .. y_{n_max}`` at every point of ``lam`` as a ScaledArray.

    ``kind`` is ``"P"`` or ``"Q"``.  The result has shape
    ``(n_max + 1,) + lam.shape``.
    """
    n_max = int(n_max)
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    lam = np.asarray(lam)
    if lam.dtype.kind not in "fc":
        lam = lam.astype(float)
    if compensated and np.iscomplexobj(lam):
        raise ValueError("compensated evaluation supports real arguments only")
    a, b = model.coefficients(n_max)
    if kind == "P":
        first, second = 1.0, (lam - a[0]) / b[0]
    elif kind == "Q":
        first, second = 0.0, np.full(lam.shape, 1.0 / b[0])
    else:
        raise ValueError("kind must be 'P' or 'Q'")
    return _run(a, b, lam, first, second, n_max, scaled, compensated)


@dataclass(frozen=True)
class PolyPairSequence:
    """``P_0..P_N`` and ``Q_0..Q_N`` at a single argument, exponent-scaled."""

    argument: float | complex
    P_mantissa: np.ndarray = field(repr=False)
    P_exponent: np.ndarray = field(repr=False)
    Q_mantissa: np.ndarray = field(repr=False)
    Q_exponent: np.ndarray = field(repr=False)

    @property
    def n_max(self):
        return len(self.P_mantissa) - 1

    def P(self, n):
        return ScaledArray(self.P_mantissa, self.P_exponent).scalar(n)

    def Q(self, n):
        return ScaledArray(self.Q_mantissa, self.Q_exponent).scalar(n)

    def P_values(self):
        return ScaledArray(self.P_mantissa, self.P_exponent).values()

    def Q_values(self):
        return ScaledArray(self.Q_mantissa, self.Q_exponent).values()


def eval_polys(model, arg, n_max, *, scaled=True, compensated=False):
    """Evaluate ``P_n(arg)`` and ``Q_n(arg)`` for ``0 <= n <= n_max``.

    Parameters
    ----------
    model : CoefficientModel
    arg : float or complex
    n_max : int
        Highest index, at least 1.
    scaled : bool
        Keep exponents separately (default).  ``False`` uses plain doubles
        and raises ``NumericFailure`` on overflow.
    compensated : bool
        Error-free transformations for the two-term update (real ``arg``
        only).  Off by default.
    """
    arg = complex(arg) if isinstance(arg, (complex, np.complexfloating)) else float(arg)
    lam = np.asarray(arg)
    p = poly_table(model, lam, n_max, kind="P", scaled=scaled, compensated=compensated)
    q = poly_table(model, lam, n_max, kind="Q", scaled=scaled, compensated=compensated)
    arrays = [p.mantissa, p.exponent, q.mantissa, q.exponent]
    for arr in arrays:
        arr.setflags(write=False)
    return PolyPairSequence(arg, *arrays)


def wronskian_residuals(seq, model):
    """Relative residuals ``|W_n - 1/b_{n-1}| * b_{n-1}`` for ``n = 1..n_max``."""
    P = ScaledArray(seq.P_mantissa, seq.P_exponent)
    Q = ScaledArray(seq.Q_mantissa, seq.Q_exponent)
    n = seq.n_max
    _, b = model.coefficients(n)
    w = scaled_sum([(1.0, [P[0:n], Q[1 : n + 1]]), (-1.0, [P[1 : n + 1], Q[0:n]])]).values()
    return np.abs(w - 1.0 / b) * b


def wronskian_residual(seq, model, n):
    """Relative Wronskian residual at index ``n`` (exactly zero in exact arithmetic)."""
    if not 1 <= n <= seq.n_max:
        raise IndexError(f"n must lie in [1, {seq.n_max}]")
    _, b_prev = model.at(n - 1)
    w = seq.P(n - 1) * seq.Q(n) - seq.P(n) * seq.Q(n - 1)
    return abs(complex(w.to_float()) - 1.0 / b_prev) * b_prev


class CarlemanResult(NamedTuple):
    partial_sum: float
    verdict: str
    slope: float


def carleman_sum(model, N):
    """Partial sum of ``1/b_n`` over ``n < N`` with a divergence heuristic.

    The verdict fits ``log(1/b_n)`` against ``log n`` over the last decade
    ``[N/10, N)`` and reports ``"divergent-heuristic"`` when the slope is at
    least ``-1 - CARLEMAN_SLOPE_MARGIN``, otherwise ``"inconclusive"``.
    Finite data never proves divergence.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be at least 1")
    _, b = model.coefficients(N)
    inc = 1.0 / b
    partial = float(math.fsum(inc))
    lo = max(1, N // 10)
    n = np.arange(lo, N)
    if n.size < 2:
        return CarlemanResult(partial, "inconclusive", math.nan)
    slope = float(np.polyfit(np.log(n), np.log(inc[lo:N]), 1)[0])
    verdict = "divergent-heuristic" if slope >= -1.0 - CARLEMAN_SLOPE_MARGIN else "inconclusive"
    return CarlemanResult(partial, verdict, slope)
