import math

import numpy as np
import pytest
from scipy.integrate import quad

from levydc.dynamic_cutting import CutParams
from levydc.measures import POS, make_one_sided_stable
from levydc.sde import (
    CoefficientSet,
    large_jump_compensator,
    make_sin_cos_example,
    sigma_small_sq,
)


class TestSigmaSmall:
    def test_left_endpoint_closed_form(self, stable15, cut_params):
        coeffs = make_sin_cos_example(stable15)
        t0, t1, x = 0.4, 0.45, 0.0
        r = stable15.tau(POS, (t0 * cut_params.h) ** cut_params.epsilon)
        expected = 2.0 * (t1 - t0) * r ** (2.0 - 1.5) / (2.0 - 1.5)
        got = sigma_small_sq(coeffs, stable15, cut_params, x, t0, t1, mode="closed-form")
        assert got == pytest.approx(expected, rel=1e-12)

    def test_vanishes_where_jump_coefficient_does(self, stable1, cut_params):
        coeffs = make_sin_cos_example(stable1)
        got = sigma_small_sq(
            coeffs, stable1, cut_params, math.pi / 2.0, 0.4, 0.5, mode="closed-form"
        )
        assert got == pytest.approx(0.0, abs=1e-30)

    def test_quadrature_matches_closed_form_on_short_interval(
        self, stable1, cut_params
    ):
        # the closed form freezes the threshold at the interval's left edge;
        # on a short late interval both paths agree tightly
        coeffs = make_sin_cos_example(stable1)
        t0, t1, x = 0.9, 0.9 + 1e-6, 0.3
        a = sigma_small_sq(coeffs, stable1, cut_params, x, t0, t1, mode="closed-form")
        b = sigma_small_sq(coeffs, stable1, cut_params, x, t0, t1, mode="quadrature")
        assert b == pytest.approx(a, rel=1e-6)

    def test_quadrature_additive_over_adjacent_intervals(self, stable1, cut_params):
        coeffs = make_sin_cos_example(stable1)
        x = 0.7
        whole = sigma_small_sq(coeffs, stable1, cut_params, x, 0.2, 0.6, mode="quadrature")
        left = sigma_small_sq(coeffs, stable1, cut_params, x, 0.2, 0.4, mode="quadrature")
        right = sigma_small_sq(coeffs, stable1, cut_params, x, 0.4, 0.6, mode="quadrature")
        assert whole == pytest.approx(left + right, abs=1e-9)

    def test_nonnegative_and_degenerate_interval(self, stable1, cut_params):
        coeffs = make_sin_cos_example(stable1)
        assert sigma_small_sq(coeffs, stable1, cut_params, 1.0, 0.3, 0.3) == 0.0
        assert (
            sigma_small_sq(coeffs, stable1, cut_params, 1.0, 0.3, 0.31, mode="quadrature")
            >= 0.0
        )

    def test_bad_interval_rejected(self, stable1, cut_params):
        coeffs = make_sin_cos_example(stable1)
        with pytest.raises(ValueError):
            sigma_small_sq(coeffs, stable1, cut_params, 0.0, 0.5, 0.4)


class TestCompensator:
    def test_symmetric_worked_example_is_zero(self, stable1, cut_params):
        coeffs = make_sin_cos_example(stable1)
        assert large_jump_compensator(coeffs, stable1, cut_params, 0.3, 0.1, 0.9) == 0.0

    def test_degenerate_interval(self, stable1, cut_params):
        coeffs = CoefficientSet(
            drift=lambda t, x: 0.0 * x,
            diffusion=None,
            jump=lambda t, x, z: z,
            symmetric_compensation=False,
        )
        assert large_jump_compensator(coeffs, stable1, cut_params, 0.0, 0.5, 0.5) == 0.0

    def test_one_sided_identity_jump_vs_quadrature(self, cut_params):
        model = make_one_sided_stable(1.0)
        coeffs = CoefficientSet(
            drift=lambda t, x: 0.0 * x,
            diffusion=None,
            jump=lambda t, x, z: z,
            symmetric_compensation=False,
        )
        t0, t1 = 0.1, 0.4

        def inner(s):
            lo = model.tau(POS, (s * cut_params.h) ** cut_params.epsilon)
            val, _ = quad(lambda z: z * z**-2.0, lo, 1.0, epsabs=1e-13)
            return val

        oracle, _ = quad(inner, t0, t1, epsabs=1e-11)
        got = large_jump_compensator(coeffs, model, cut_params, 0.0, t0, t1)
        assert got == pytest.approx(oracle, rel=1e-8)


class TestWorkedExample:
    def test_coefficient_values(self, stable1):
        coeffs = make_sin_cos_example(stable1)
        assert coeffs.drift(0.0, 0.5) == pytest.approx(math.sin(0.5))
        assert coeffs.diffusion is None
        assert coeffs.jump(0.0, 0.5, 0.2) == pytest.approx(math.cos(0.5) * 0.2)
        assert coeffs.jump(0.0, 0.5, 0.0) == 0.0
        assert coeffs.jump_factor(0.0, 0.5) == pytest.approx(math.cos(0.5))
        assert coeffs.symmetric_compensation

    def test_csq_closed_form(self, stable1):
        coeffs = make_sin_cos_example(stable1)
        x, r = 0.3, 0.2
        expected = math.cos(x) ** 2 * 2.0 * r / 1.0
        assert coeffs.c_squared_nu_closed_form(x, r) == pytest.approx(expected)
