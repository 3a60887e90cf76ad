import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracomb import identities as ids
from fracomb.errors import InvalidInputError, PrecisionLossError
from fracomb.fraccalc import SampledFunction, frac_integral
from fracomb.grids import CombField
from fracomb.transforms import (BromwichContour, bromwich_invert, fourier_modes_y, kernel_fourier,
                                laplace_forward, laplace_series, mode_index, mode_spectrum, y_axis,
                                y_wavenumbers)


# forward Laplace ---------------------------------------------------------------

def test_laplace_of_one():
    r = laplace_forward(SampledFunction(0.0, 0.01, np.ones(4001)), 2.0)
    assert r.value == pytest.approx(0.5, abs=1e-12)
    assert r.status == "ok"


def test_laplace_of_exponential():
    g = SampledFunction.sample(lambda t: np.exp(-t), 0.0, 40.0, 4001)
    assert laplace_forward(g, 1.0).value == pytest.approx(0.5, rel=1e-7)


def test_laplace_of_half_integral_of_one():
    # the sqrt(t) kink at t = 0 limits the piecewise-linear rule to O(h^1.5)
    errs = []
    for n in (4001, 16001):
        f = SampledFunction(0.0, 40.0 / (n - 1), np.ones(n))
        errs.append(abs(laplace_forward(frac_integral(f, 0.5), 1.0).value - 1.0))
    assert errs[1] <= 2e-5
    assert math.log2(errs[0] / errs[1]) / 2 == pytest.approx(1.5, abs=0.2)


def test_laplace_window_too_short():
    with pytest.raises(InvalidInputError):
        laplace_forward(SampledFunction(0.0, 0.01, np.ones(101)), 1.0)
    r = laplace_forward(SampledFunction(0.0, 0.01, np.ones(101)), 1.0, acknowledge_truncation=True)
    assert r.status == "warning"


def test_laplace_rules():
    assert ids.laplace_caputo_rule() <= 1e-5
    assert ids.laplace_convolution_rule() <= 1e-5


def test_laplace_series_matches_scalar_route():
    t = np.linspace(0, 30, 3001)
    rows = np.stack([np.exp(-t), t * np.exp(-2 * t)], axis=1)
    for s in (1.0, 2 + 3j):
        v = laplace_series(rows, t[1], s)
        for k in range(2):
            ref = laplace_forward(SampledFunction(0.0, t[1], rows[:, k]), s).value
            assert v[k] == pytest.approx(ref, rel=1e-13)


# Bromwich --------------------------------------------------------------------

def test_bromwich_examples():
    assert bromwich_invert(lambda s: 1 / s, 3.0).value == pytest.approx(1.0, abs=1e-9)
    assert bromwich_invert(lambda s: 1 / (s + 1), 1.0).value == pytest.approx(math.exp(-1), rel=1e-9)
    assert bromwich_invert(lambda s: s ** -0.5 / (s ** 0.5 + 1), 1.0).value == pytest.approx(
        ids.ml_half_minus_one_oracle(), rel=1e-8)


def test_bromwich_after_laplace_is_identity():
    f = SampledFunction.sample(lambda t: t * np.exp(-t) * np.cos(t), 0.0, 40.0, 8001)
    c = BromwichContour(tol=1e-5)
    ts = np.linspace(0.1, 20.0, 25)
    got = np.array([bromwich_invert(lambda s: complex(laplace_series(f.values, f.step, s)), t, c).value
                    for t in ts])
    exact = ts * np.exp(-ts) * np.cos(ts)
    assert np.linalg.norm(got - exact) / np.linalg.norm(exact) <= 1e-5


@settings(max_examples=20, deadline=None)
@given(a=st.floats(0.1, 5.0), t=st.floats(0.1, 10.0))
def test_bromwich_exponential_pairs(a, t):
    # relative accuracy down to the rounding floor of the e^{sigma t} prefactor
    r = bromwich_invert(lambda s: 1 / (s + a), t)
    exact = math.exp(-a * t)
    assert abs(r.value - exact) <= 1e-8 * exact + 1e-10
    assert abs(r.value - exact) <= 10 * r.error_estimate + 1e-8 * exact


def test_bromwich_reports_nonconvergence():
    # a unit step at t = 1, inverted right at the jump
    with pytest.raises(PrecisionLossError) as e:
        bromwich_invert(lambda s: np.exp(-s) / s, 1.0, BromwichContour(max_samples=256))
    assert e.value.estimate > 1e-4


def test_bromwich_contour_validation():
    with pytest.raises(InvalidInputError):
        BromwichContour(n_samples=30)
    with pytest.raises(InvalidInputError):
        BromwichContour(sigma=-1.0)


# y-Fourier modes ---------------------------------------------------------------

def test_gaussian_mode_closed_form():
    nx, ny, dy = 32, 256, 0.1
    g = np.exp(-np.linspace(-2, 2, nx) ** 2)
    y = y_axis(ny, dy)
    f = CombField(np.outer(g, np.exp(-y ** 2 / 2)), 0.1, dy)
    modes = fourier_modes_y(f)
    for m in modes[:20]:
        np.testing.assert_allclose(m.values, g * math.sqrt(2 * math.pi) * math.exp(-m.mode_l ** 2 / 2),
                                   atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_parseval(seed):
    rng = np.random.default_rng(seed)
    ny, dy = 64, 0.3
    v = rng.normal(size=(32, ny)) + 1j * rng.normal(size=(32, ny))
    spec = mode_spectrum(v, dy)
    dl = 2 * math.pi / (ny * dy)
    lhs = np.sum(np.abs(v) ** 2) * dy
    rhs = np.sum(np.abs(spec) ** 2) * dl / (2 * math.pi)
    assert rhs == pytest.approx(lhs, rel=1e-12)


def test_mode_index():
    ny, dy = 64, 0.25
    ls = y_wavenumbers(ny, dy)
    for m in (0, 1, 5, ny - 1):
        assert mode_index(ny, dy, ls[m]) == m
    with pytest.raises(InvalidInputError):
        mode_index(ny, dy, 0.5 * ls[1])


# kernel -------------------------------------------------------------------------

def test_kernel_examples():
    assert kernel_fourier(1.0, 0.0, 1.0, "derived") == pytest.approx(1 + 1j, abs=1e-15)
    assert kernel_fourier(1.0, 0.0, 1.0, "paper") == pytest.approx(-1 - 1j, abs=1e-15)
    with pytest.raises(InvalidInputError):
        kernel_fourier(1.0, 0.0, 1.0, "other")


def test_kernel_against_quadrature():
    assert ids.kernel_vs_quadrature() <= 1e-8


@settings(max_examples=30, deadline=None)
@given(sr=st.floats(0.1, 10), si=st.floats(-10, 10), l=st.floats(-5, 5), hbar=st.floats(0.2, 3))
def test_kernel_is_even_in_l_and_signs_are_opposite(sr, si, l, hbar):
    s = complex(sr, si)
    k = kernel_fourier(s, l, hbar)
    assert kernel_fourier(s, -l, hbar) == k
    assert kernel_fourier(s, l, hbar, "paper") == pytest.approx(-k, rel=1e-14)
