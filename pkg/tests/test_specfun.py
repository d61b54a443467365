import math

import mpmath
import numpy as np
import pytest

from debranges.specfun import (
    NonConvergenceError,
    SeriesParams,
    bessel_j,
    complex_step_derivative,
    entire_bessel,
    gamma_real,
)


def series_oracle(s, t, dps=50, terms=2000):
    """Independent reference: direct summation with per-term Gamma at high dps."""
    with mpmath.workdps(dps):
        tt = mpmath.mpmathify(t)
        total = mpmath.mpf(0)
        for k in range(terms):
            term = (-1) ** k * (tt / 4) ** k / (mpmath.factorial(k) * mpmath.gamma(k + s + 1))
            total += term
            if abs(term) < mpmath.mpf(10) ** (-dps) * (1 + abs(total)) and k > abs(tt):
                break
        return complex(2 ** (-mpmath.mpf(s)) * total)


class TestGamma:
    def test_integers(self):
        assert gamma_real(1.0) == pytest.approx(1.0, rel=1e-14)
        assert gamma_real(5.0) == pytest.approx(24.0, rel=1e-14)

    def test_half(self):
        assert gamma_real(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)

    def test_against_stdlib(self):
        for x in np.linspace(0.05, 60.0, 500):
            assert gamma_real(float(x)) == pytest.approx(math.gamma(float(x)), rel=1e-12)

    def test_functional_equation(self):
        # Gamma(x+1) = x Gamma(x) on a 100-point grid of (0.1, 30)
        for x in np.linspace(0.1, 30.0, 100):
            x = float(x)
            assert gamma_real(x + 1.0) == pytest.approx(x * gamma_real(x), rel=1e-12)

    @pytest.mark.parametrize("bad", [0.0, -1.0, -0.5, float("nan"), float("inf")])
    def test_domain(self, bad):
        with pytest.raises(ValueError):
            gamma_real(bad)


class TestEntireBessel:
    def test_at_zero(self):
        assert entire_bessel(0.0, 0.0) == pytest.approx(1.0, rel=1e-15)

    def test_half_order_zero_of_sine(self):
        # j_{1/2}(sqrt(t)) ~ sin(sqrt(t))/sqrt(t); vanishes at t = pi**2
        assert abs(entire_bessel(0.5, math.pi**2)) < 1e-15

    def test_half_order_closed_form(self):
        # j_{1/2}(1) = sqrt(2/pi) * sin(1)
        expected = math.sqrt(2.0 / math.pi) * math.sin(1.0)
        assert entire_bessel(0.5, 1.0) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("s", [-0.5, 0.0, 0.5, 1.0, 2.5])
    @pytest.mark.parametrize("t", [0.3, 7.0, 40.0, 90.0, 250.0, 900.0, 2500.0])
    def test_against_series_oracle(self, s, t):
        got = entire_bessel(s, t)
        ref = series_oracle(s, t).real
        assert got == pytest.approx(ref, rel=1e-11, abs=1e-300)

    def test_real_for_real_argument(self):
        for s in (-0.5, 0.0, 2.5):
            for t in (-3.0, 0.7, 25.0):
                assert isinstance(entire_bessel(s, t), float)

    def test_conjugate_symmetry(self):
        for s in (-0.5, 0.0, 0.5, 1.0, 2.5):
            for t in (1 + 2j, -4 + 0.5j, 30 - 7j):
                a = entire_bessel(s, t.conjugate())
                b = entire_bessel(s, t)
                assert a == pytest.approx(b.conjugate(), rel=1e-12)

    def test_non_convergence(self):
        with pytest.raises(NonConvergenceError):
            entire_bessel(0.0, 80.0, SeriesParams(max_terms=5))

    @pytest.mark.parametrize("bad_s", [-1.0, -2.0, float("nan")])
    def test_domain_s(self, bad_s):
        with pytest.raises(ValueError):
            entire_bessel(bad_s, 1.0)

    def test_rejects_nonfinite_t(self):
        with pytest.raises(ValueError):
            entire_bessel(0.0, float("inf"))


class TestBesselJ:
    def test_half_order_zero(self):
        assert abs(bessel_j(0.5, math.pi)) < 1e-15

    def test_order_zero_near_origin(self):
        assert bessel_j(0.0, 1e-8) == pytest.approx(1.0, rel=1e-12)

    def test_j0_at_one(self):
        # frozen from the series oracle at 50 digits
        assert bessel_j(0.0, 1.0) == pytest.approx(0.7651976865579666, rel=1e-12)

    @pytest.mark.parametrize("s", [-0.5, 0.0, 0.5, 1.0, 2.5])
    def test_bounded_and_matches_oracle(self, s):
        for x in np.linspace(0.5, 30.0, 25):
            x = float(x)
            got = bessel_j(s, x)
            assert abs(got) <= 1.1
            ref = (x ** mpmath.mpf(s)) * series_oracle(s, x * x)
            assert got == pytest.approx(float(ref.real), rel=1e-10, abs=1e-300)

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_j(0.0, 0.0)
        with pytest.raises(ValueError):
            bessel_j(0.0, -2.0)


class TestComplexStep:
    def test_identity(self):
        assert complex_step_derivative(lambda z: z, 3.0) == pytest.approx(1.0, rel=1e-12)

    def test_square(self):
        assert complex_step_derivative(lambda z: z * z, 2.0) == pytest.approx(4.0, rel=1e-12)

    def test_entire_bessel_vs_central_difference(self):
        f = lambda z: entire_bessel(0.0, z)
        d = complex_step_derivative(f, 1.0)
        eps = 1e-5
        central = (f(1.0 + eps) - f(1.0 - eps)) / (2 * eps)
        assert d == pytest.approx(central, abs=1e-6)

    def test_rejects_bad_h(self):
        with pytest.raises(ValueError):
            complex_step_derivative(lambda z: z, 1.0, h=0.0)
