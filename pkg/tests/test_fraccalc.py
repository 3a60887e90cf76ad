import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from fracomb import identities as ids
from fracomb.errors import (BoundaryLeakageError, InvalidInputError, SingularSampleWarning,
                            UnsupportedOrderError)
from fracomb.fraccalc import (FracOrder, SampledFunction, caputo_deriv, frac_integral, mittag_leffler,
                              rl_deriv, rl_power_law, weyl_deriv)

orders = st.floats(0.05, 0.95)


# sampled functions ---------------------------------------------------------

def test_sampled_function_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        SampledFunction(0.0, 0.1, [])
    with pytest.raises(InvalidInputError):
        SampledFunction(0.0, -0.1, [1, 2])
    with pytest.raises(InvalidInputError):
        SampledFunction.from_grid([0, 0.1, 0.3], [1, 2, 3])


def test_order_must_be_positive():
    with pytest.raises(UnsupportedOrderError):
        FracOrder(0.0)
    assert FracOrder(2.5).alpha == 2.5  # allowed for integration


# fractional integral ---------------------------------------------------------

def test_integral_of_one_at_quarter_pi():
    t = math.pi / 4
    f = SampledFunction(0.0, t / 1000, np.ones(1001))
    assert frac_integral(f, 0.5).values[-1] == pytest.approx(1.0, rel=1e-10)
    # independent route: adaptive quadrature of the Abel kernel
    ref = quad(lambda y: (t - y) ** -0.5, 0, t)[0] / gamma(0.5)
    assert ref == pytest.approx(1.0, rel=1e-10)


def test_integral_order_one_is_plain_integral():
    f = SampledFunction.sample(lambda t: 2 * t, 0.0, 1.0, 201)
    np.testing.assert_allclose(frac_integral(f, 1.0).values, f.x ** 2, atol=1e-12)


def test_integral_vanishes_at_start():
    f = SampledFunction.sample(np.cos, 0.0, 1.0, 50)
    assert frac_integral(f, 0.3).values[0] == 0


@settings(max_examples=15, deadline=None)
@given(a=st.floats(0.1, 0.9), b=st.floats(0.1, 0.9))
def test_semigroup_property(a, b):
    f = SampledFunction.sample(lambda t: np.sin(t) + t * np.exp(-t), 0.0, 2.0, 2001)
    lhs = frac_integral(frac_integral(f, b), a).values
    rhs = frac_integral(f, a + b).values
    assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) <= 1e-6


@settings(max_examples=20, deadline=None)
@given(a=orders, c=st.floats(-3, 3), d=st.floats(-3, 3))
def test_integral_is_linear(a, c, d):
    f = SampledFunction.sample(np.sin, 0.0, 1.0, 101)
    g = SampledFunction.sample(np.exp, 0.0, 1.0, 101)
    h = f.with_values(c * f.values + d * g.values)
    lhs = frac_integral(h, a).values
    rhs = c * frac_integral(f, a).values + d * frac_integral(g, a).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(c) + abs(d)) * 10)


# Caputo ---------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(a=orders, re=st.floats(-1e3, 1e3), im=st.floats(-1e3, 1e3))
def test_caputo_of_constant_is_exactly_zero(a, re, im):
    f = SampledFunction(0.0, 0.01, np.full(300, complex(re, im)))
    assert np.all(caputo_deriv(f, a).values == 0)


def test_caputo_order_one_is_derivative():
    f = SampledFunction.sample(lambda t: t ** 2, 0.0, 1.0, 101)
    np.testing.assert_allclose(caputo_deriv(f, 1.0).values, 2 * f.x, atol=1e-12)


def test_caputo_of_t_half_order():
    f = SampledFunction.sample(lambda t: t, 0.0, 1.0, 1001)
    np.testing.assert_allclose(caputo_deriv(f, 0.5).values, 2 * np.sqrt(f.x / np.pi), atol=1e-12)


def test_caputo_rejects_order_above_one():
    f = SampledFunction.sample(np.sin, 0.0, 1.0, 10)
    with pytest.raises(UnsupportedOrderError):
        caputo_deriv(f, 1.5)


def test_caputo_rl_relation():
    assert ids.caputo_rl_relation() <= 1e-6


def test_l1_convergence_order():
    assert abs(ids.l1_order(0.5) - 1.5) <= 0.2
    assert abs(ids.l1_order(0.3) - 1.7) <= 0.2


# Riemann-Liouville --------------------------------------------------------------

def test_rl_of_one():
    f = SampledFunction.sample(np.ones_like, 0.0, 2.0, 4001)
    with pytest.warns(SingularSampleWarning):
        d = rl_deriv(f, 0.5)
    assert np.isinf(d.values[0])
    x = f.x[400:]
    np.testing.assert_allclose(d.values[400:], 1 / np.sqrt(np.pi * x), rtol=1e-5)


def test_rl_of_square_at_one():
    f = SampledFunction.sample(lambda x: x ** 2, 0.0, 2.0, 4001)
    d = rl_deriv(f, 0.5)
    k = 2000
    assert f.x[k] == pytest.approx(1.0)
    exact = float(mp.gamma(3) / mp.gamma(mp.mpf(5) / 2))
    assert exact == pytest.approx(8 / (3 * math.sqrt(math.pi)), rel=1e-14)
    assert d.values[k] == pytest.approx(exact, rel=1e-5)


def test_rl_order_one():
    # second-order differences: error 2 h^2 at the one-sided ends
    f = SampledFunction.sample(lambda x: x ** 3, 0.0, 1.0, 201)
    np.testing.assert_allclose(rl_deriv(f, 1.0).values, 3 * f.x ** 2, atol=2.01 * f.step ** 2)


@settings(max_examples=10, deadline=None)
@given(a=st.floats(0.2, 0.8), beta=st.sampled_from([1.0, 2.0, 3.0]))
def test_rl_matches_power_law_on_monomials(a, beta):
    n = 10001
    f = SampledFunction.sample(lambda x: x ** beta, 0.0, 2.0, n)
    d = rl_deriv(f, a).values
    i = slice(n // 10, n - n // 10)
    exact = rl_power_law(a, beta, f.x[i])
    assert np.max(np.abs(d[i] - exact) / np.abs(exact)) <= 1e-5


# power law -------------------------------------------------------------------

def test_power_law_examples():
    assert rl_power_law(0.5, 1.0, 1.0) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-14)
    x = np.linspace(0.1, 2, 7)
    np.testing.assert_allclose(rl_power_law(0.3, 0.0, x), x ** -0.3 / gamma(0.7), rtol=1e-14)
    np.testing.assert_allclose(rl_power_law(1.0, 2.5, x), 2.5 * x ** 1.5, rtol=1e-13)


def test_power_law_pole_gives_zero():
    # D^1/2 x^{-1/2} = 0: Gamma(beta+1-alpha) = Gamma(0)
    assert rl_power_law(0.5, -0.5, 2.0) == 0.0


def test_power_law_rejects_beta_below_minus_one():
    with pytest.raises(InvalidInputError):
        rl_power_law(0.5, -1.0, 1.0)


# Weyl -------------------------------------------------------------------------

def test_weyl_exponential_fixed_point():
    assert ids.weyl_exp() <= 1e-4


def test_weyl_single_mode_phase():
    n = 256
    f = SampledFunction(0.0, 2 * np.pi / n, np.exp(1j * 2 * np.pi * np.arange(n) / n))
    d = weyl_deriv(f, 0.5, periodic=True).values
    np.testing.assert_allclose(d, np.exp(1j * np.pi / 4) * f.values, atol=1e-12)


def test_weyl_order_one_gaussian():
    f = SampledFunction.sample(lambda x: np.exp(-x ** 2), -12.0, 12.0, 2001)
    d = weyl_deriv(f, 1.0).values
    np.testing.assert_allclose(d, -2 * f.x * f.values, atol=1e-8)


def test_weyl_rejects_non_decaying():
    f = SampledFunction.sample(lambda x: np.ones_like(x), 0.0, 1.0, 100)
    with pytest.raises(BoundaryLeakageError) as e:
        weyl_deriv(f, 0.5)
    assert e.value.leakage == pytest.approx(1.0)


# Mittag-Leffler --------------------------------------------------------------------

def test_ml_examples():
    assert mittag_leffler(0.37, 0.0) == 1
    assert mittag_leffler(1.0, 1.0) == pytest.approx(math.e, abs=1e-12)
    assert mittag_leffler(0.5, -1.0).real == pytest.approx(ids.ml_half_minus_one_oracle(), abs=1e-10)
    assert abs(mittag_leffler(0.5, -1.0) - 0.427584) <= 1e-6


def test_ml_exponential_disc():
    assert ids.ml_exponential() <= 1e-12


def test_ml_half_erfc_identity():
    assert ids.ml_half_vs_erfc() <= 1e-10


def _ml_series(a, z):
    # plain partial sums; the largest term is about exp(|z|^(1/a)), so the
    # working precision must cover it plus the digits wanted in the result
    dps = 40 + int(abs(z) ** (1 / a) / math.log(10))
    with mp.workdps(dps):
        z, a = mp.mpc(z), mp.mpf(a)
        total, k = mp.mpf(0), 0
        while True:
            term = z ** k / mp.gamma(a * k + 1)
            total += term
            if k > 10 and abs(term) < mp.mpf(10) ** -30 * max(1, abs(total)):
                return complex(total)
            k += 1


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.3, 1.0), r=st.floats(0, 6), th=st.floats(-math.pi, math.pi))
def test_ml_matches_extended_precision_series(a, r, th):
    z = r * complex(math.cos(th), math.sin(th))
    ref = _ml_series(a, z)
    assert abs(mittag_leffler(a, z) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_ml_rejects_order_above_one():
    with pytest.raises(UnsupportedOrderError):
        mittag_leffler(1.5, 0.3)
