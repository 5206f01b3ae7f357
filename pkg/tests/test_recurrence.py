import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from jacobi_spectra import CoefficientModel, ModelError, NumericFailure, ScaledReal
from jacobi_spectra.recurrence import (
    carleman_sum,
    coeff_at,
    eval_polys,
    poly_table,
    wronskian_residual,
    wronskian_residuals,
)

from conftest import random_bounded_model


class TestCoefficientModel:
    def test_constant(self):
        assert coeff_at(CoefficientModel.constant(0, 0.5), 7) == (0.0, 0.5)

    def test_power(self):
        assert coeff_at(CoefficientModel.power(1, 1), 3) == (0.0, 4.0)

    def test_power_diagonal(self):
        m = CoefficientModel.power(2.0, 0.5, d=0.3, beta=0.5)
        a, b = m.at(8)
        assert_allclose([a, b], [0.9, 6.0])

    def test_table_repeat_last(self):
        m = CoefficientModel.from_table([(1, 2), (0, 3)], "repeat-last")
        assert coeff_at(m, 5) == (0.0, 3.0)

    def test_table_closed_form_tail(self):
        m = CoefficientModel.from_table([(1, 2)], CoefficientModel.affine(0, 0, 1, 1))
        assert m.at(0) == (1.0, 2.0)
        assert m.at(4) == (0.0, 5.0)
        a, b = m.coefficients(5)
        assert_array_equal(b, [2, 2, 3, 4, 5])

    def test_table_without_tail_raises_past_end(self):
        m = CoefficientModel.from_table([(1, 2), (0, 3)], None)
        assert m.at(1) == (0.0, 3.0)
        with pytest.raises(ModelError, match="beyond the table"):
            m.at(2)
        with pytest.raises(ModelError):
            m.coefficients(3)

    @pytest.mark.parametrize(
        "build",
        [
            lambda: CoefficientModel.constant(0, 0),
            lambda: CoefficientModel.constant(0, -1),
            lambda: CoefficientModel.affine(0, 0, 1, -1),
            lambda: CoefficientModel.power(-1, 1),
            lambda: CoefficientModel.from_table([(0, 1), (0, 0)], "repeat-last"),
            lambda: CoefficientModel.from_table([(math.nan, 1)], "repeat-last"),
            lambda: CoefficientModel.from_table([(0, 1)], "extrapolate"),
        ],
    )
    def test_rejects_invalid(self, build):
        with pytest.raises(ModelError):
            build()

    def test_negative_index(self):
        with pytest.raises(ModelError):
            CoefficientModel.constant(0, 1).at(-1)

    def test_vector_matches_scalar(self):
        m = CoefficientModel.power(1.5, 0.7, d=-0.2, beta=0.9)
        a, b = m.coefficients(40)
        for n in (0, 1, 17, 39):
            assert (a[n], b[n]) == m.at(n)


class TestScaledReal:
    def test_normalized_mantissa(self):
        s = ScaledReal.from_value(-12.0)
        assert s.mantissa == -1.5 and s.exponent == 3

    def test_zero(self):
        s = ScaledReal.from_value(0.0)
        assert s.is_zero() and s.exponent == 0

    @given(st.floats(min_value=-1e300, max_value=1e300, allow_nan=False).filter(lambda v: v != 0))
    def test_round_trip(self, v):
        s = ScaledReal.from_value(v)
        assert 1 <= abs(s.mantissa) < 2
        assert s.to_float() == v

    def test_arithmetic_beyond_double_range(self):
        big = ScaledReal.normalize(1.0, 5000)
        prod = big * big
        assert prod.exponent == 10000
        assert (prod / big).to_float() == big.to_float()  # saturates to inf
        assert ((prod / big) / big).to_float() == 1.0
        assert math.isinf(big.to_float())

    def test_addition_aligns_exponents(self):
        s = ScaledReal.normalize(1.0, 60) + ScaledReal.normalize(1.0, 0)
        assert s.to_float() == 2.0**60 + 1.0 or s.to_float() == 2.0**60

    def test_log2(self):
        assert ScaledReal.normalize(1.0, 4000).log2_abs() == 4000


class TestEvalPolys:
    def test_chebyshev_values(self, free):
        seq = eval_polys(free, 0.0, 4)
        assert_array_equal(seq.P_values(), [1, 0, -1, 0, 1])

    def test_second_kind_start(self, free):
        for x in (-0.3, 0.0, 2.5):
            seq = eval_polys(free, x, 3)
            assert seq.Q_values()[1] == 2.0
            assert seq.Q_values()[0] == 0.0

    def test_linear_model_hand_value(self, linear):
        assert eval_polys(linear, 0.0, 2).P_values()[2] == -0.5

    def test_lengths_and_initial_values(self, linear):
        seq = eval_polys(linear, 1.3, 17)
        assert seq.n_max == 17
        assert len(seq.P_values()) == len(seq.Q_values()) == 18
        assert seq.P(0).to_float() == 1.0 and seq.Q(0).is_zero()

    def test_recurrence_satisfied(self, rng):
        m = random_bounded_model(rng)
        x = 0.37
        seq = eval_polys(m, x, 60)
        a, b = m.coefficients(61)
        for y in (seq.P_values(), seq.Q_values()):
            n = np.arange(1, 60)
            lhs = b[n - 1] * y[n - 1] + a[n] * y[n] + b[n] * y[n + 1]
            assert_allclose(lhs, x * y[n], atol=1e-12 * np.abs(y).max())

    def test_complex_argument(self, free):
        seq = eval_polys(free, 2j, 2)
        assert seq.P_values()[2] == -17
        assert seq.Q_values()[2] == 8j

    def test_no_overflow_far_off_spectrum(self, free):
        seq = eval_polys(free, 30.0, 3000)
        assert seq.P(3000).exponent > 1024
        assert np.all(np.isfinite(seq.P_mantissa))

    def test_unscaled_overflow_raises(self, free):
        with pytest.raises(NumericFailure):
            eval_polys(free, 10.0, 2000, scaled=False)

    def test_scaling_neutral(self, rng):
        for _ in range(10):
            m = random_bounded_model(rng)
            x = rng.uniform(-2, 2)
            s = eval_polys(m, x, 200)
            u = eval_polys(m, x, 200, scaled=False)
            assert_allclose(s.P_values(), u.P_values(), rtol=1e-12, atol=0)
            assert_allclose(s.Q_values(), u.Q_values(), rtol=1e-12, atol=0)

    def test_scaled_bitwise_when_rescaling(self, free):
        # rescaling multiplies by powers of two only
        s = poly_table(free, np.array([3.0]), 400)
        u = poly_table(free, np.array([3.0]), 400, scaled=False)
        assert_array_equal(s.values(), u.values())

    def test_compensated_close_to_plain(self, rng):
        m = random_bounded_model(rng)
        s = eval_polys(m, 0.4, 200)
        c = eval_polys(m, 0.4, 200, compensated=True)
        assert_allclose(c.P_values(), s.P_values(), rtol=1e-10, atol=1e-12)

    def test_pure(self, linear):
        s1 = eval_polys(linear, -0.77, 300)
        s2 = eval_polys(linear, -0.77, 300)
        assert_array_equal(s1.P_mantissa, s2.P_mantissa)
        assert_array_equal(s1.Q_exponent, s2.Q_exponent)

    def test_degree(self, rng):
        # P_n is a polynomial of exact degree n
        m = random_bounded_model(rng)
        for n in (3, 10, 20):
            xs = np.linspace(-1.5, 1.5, n + 2)
            vals = np.array([eval_polys(m, x, n).P_values()[n] for x in xs])
            coef = np.polynomial.polynomial.polyfit(xs, vals, n + 1)
            assert abs(coef[-1]) <= 1e-8 * max(1.0, np.abs(coef).max())
            assert abs(coef[-2]) > 1e-8

    def test_leading_coefficient(self, linear):
        # P_n(x) = x^n / prod b_k + lower terms
        n = 6
        xs = np.linspace(-2, 2, n + 1)
        vals = [eval_polys(linear, x, n).P_values()[n] for x in xs]
        lead = np.polynomial.polynomial.polyfit(xs, vals, n)[-1]
        assert_allclose(lead, 1 / math.factorial(n), rtol=1e-9)


class TestWronskian:
    def test_first_index(self, free):
        assert wronskian_residual(eval_polys(free, 0.0, 3), free, 1) == 0.0

    def test_index_bounds(self, free):
        seq = eval_polys(free, 0.0, 3)
        with pytest.raises(IndexError):
            wronskian_residual(seq, free, 4)
        with pytest.raises(IndexError):
            wronskian_residual(seq, free, 0)

    def test_random_bounded(self, rng):
        m = random_bounded_model(rng)
        seq = eval_polys(m, 1.1, 50)
        assert wronskian_residual(seq, m, 50) <= 1e-12

    def test_vector_matches_scalar(self, linear):
        seq = eval_polys(linear, 0.6, 40)
        r = wronskian_residuals(seq, linear)
        for n in (1, 7, 40):
            assert_allclose(r[n - 1], wronskian_residual(seq, linear, n), atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(min_value=0, max_value=2**32 - 1),
        st.floats(min_value=-2.0, max_value=2.0),
    )
    def test_bounded_property(self, seed, x):
        m = random_bounded_model(np.random.default_rng(seed), length=201)
        r = wronskian_residuals(eval_polys(m, x, 200), m)
        assert r.max() <= 1e-10

    def test_complex_argument(self, linear):
        seq = eval_polys(linear, 0.3 + 0.5j, 100)
        assert wronskian_residuals(seq, linear).max() <= 1e-10


class TestCarleman:
    def test_constant(self):
        s, verdict, _ = carleman_sum(CoefficientModel.constant(0, 0.5), 10)
        assert s == 20.0 and verdict == "divergent-heuristic"

    def test_harmonic(self, linear):
        s, verdict, slope = carleman_sum(linear, 10_000)
        assert_allclose(s, 9.787606036044348, rtol=1e-14)
        assert verdict == "divergent-heuristic"
        assert_allclose(slope, -1.0, atol=1e-3)

    def test_basel(self):
        s, verdict, _ = carleman_sum(CoefficientModel.power(1, 2), 10_000)
        assert s < math.pi**2 / 6 and verdict == "inconclusive"

    def test_small_N(self, linear):
        assert carleman_sum(linear, 1).verdict == "inconclusive"
