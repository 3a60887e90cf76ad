"""Closed-form identity checks for the fractional operators and transforms.

Each function returns the measured error (or the measured value); the
experiment harness and the tests compare it with the tolerance.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma, rgamma, wofz

from .errors import SingularSampleWarning
from .fraccalc import (SampledFunction, caputo_deriv, frac_integral, mittag_leffler, rl_deriv,
                       rl_power_law, weyl_deriv)
from .transforms import bromwich_invert, kernel_fourier, laplace_forward


def _interior(n, frac=0.1):
    return slice(int(frac * n), n - int(frac * n))


def caputo_constant(alpha=0.5, n=513) -> float:
    """max |D_C^alpha c|; the L1 differences of a constant are exactly zero."""
    f = SampledFunction(0.0, 0.01, np.full(n, 3.7 - 1.1j))
    return float(np.abs(caputo_deriv(f, alpha).values).max())


def frac_integral_constant(alpha=0.5, t=math.pi / 4, n=1001) -> float:
    """Relative error of I^alpha[1](t) against t^alpha/Gamma(1+alpha)."""
    f = SampledFunction(0.0, t / (n - 1), np.ones(n))
    exact = t ** alpha / gamma(1 + alpha)
    return abs(frac_integral(f, alpha).values[-1] - exact) / exact


def semigroup(alpha=0.5, beta=0.3, n=2001) -> float:
    """Relative L2 error of I^alpha I^beta f against I^(alpha+beta) f, f = sin t + t e^-t.

    f(0) = 0 keeps I^beta f free of the t^beta kink that a nonzero f(0) puts
    under the piecewise-linear quadrature (that case converges, but slowly).
    """
    f = SampledFunction.sample(lambda t: np.sin(t) + t * np.exp(-t), 0.0, 2.0, n)
    lhs = frac_integral(frac_integral(f, beta), alpha).values
    rhs = frac_integral(f, alpha + beta).values
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))


def rl_power(alpha=0.5, beta=2.0, n=10001) -> float:
    """Relative max error of rl_deriv on x^beta against rl_power_law, interior 80%."""
    f = SampledFunction.sample(lambda x: x ** beta, 0.0, 2.0, n)
    d = rl_deriv(f, alpha).values
    x = f.x[_interior(n)]
    exact = rl_power_law(alpha, beta, x)
    return float(np.max(np.abs(d[_interior(n)] - exact) / np.abs(exact)))


def caputo_rl_relation(alpha=0.5, n=20001) -> float:
    """max |(D_RL f - D_C f) - f(0) x^-alpha/Gamma(1-alpha)| on the interior, f = 1 + sin x + x^2."""
    f = SampledFunction.sample(lambda x: 1 + np.sin(x) + x ** 2, 0.0, 2.0, n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularSampleWarning)
        diff = rl_deriv(f, alpha).values - caputo_deriv(f, alpha).values
    i = _interior(n)
    x = f.x[i]
    return float(np.max(np.abs(diff[i] - x ** -alpha * rgamma(1 - alpha))))


def l1_order(alpha=0.5, sizes=(101, 201, 401, 801, 1601)) -> float:
    """Empirical order of caputo_deriv on t^3 by log-log regression of the max error."""
    errs, hs = [], []
    for n in sizes:
        f = SampledFunction.sample(lambda t: t ** 3, 0.0, 1.0, n)
        exact = 6 * f.x ** (3 - alpha) * rgamma(4 - alpha)
        errs.append(np.max(np.abs(caputo_deriv(f, alpha).values - exact)))
        hs.append(f.step)
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


_S_TEST = (1.0, 2.0, 1.0 + 1.0j, 3.0 - 2.0j)


def laplace_caputo_rule(alpha=0.5, n=100001, T=25.0, s_values=_S_TEST) -> float:
    """L[D_C f] = s^alpha L[f] - f(0) s^(alpha-1), f = 1 + t^2 e^-t; max relative error."""
    f = SampledFunction.sample(lambda t: 1 + t ** 2 * np.exp(-t), 0.0, T, n)
    d = caputo_deriv(f, alpha)
    worst = 0.0
    for s in s_values:
        lhs = laplace_forward(d, s).value
        rhs = s ** alpha * laplace_forward(f, s).value - s ** (alpha - 1)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst


def laplace_convolution_rule(alpha=0.5, n=25001, T=25.0, s_values=_S_TEST) -> float:
    """L[I^alpha g] = s^-alpha L[g], g = t e^-t; max relative error."""
    g = SampledFunction.sample(lambda t: t * np.exp(-t), 0.0, T, n)
    ig = frac_integral(g, alpha)
    worst = 0.0
    for s in s_values:
        lhs = laplace_forward(ig, s).value
        rhs = s ** -alpha / (s + 1) ** 2
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst


def weyl_exp(alpha=0.5, n=4001) -> float:
    """Weyl derivative of e^x on [-30, 3]: max error over the interior 80%, relative to max e^x there."""
    f = SampledFunction.sample(np.exp, -30.0, 3.0, n)
    i = _interior(n)
    w = weyl_deriv(f, alpha).values[i]
    return float(np.max(np.abs(w - f.values[i])) / np.max(np.abs(f.values[i])))


def ml_exponential(radius=10.0, n=401) -> float:
    """max |E_1(z) - e^z| / |e^z| over a polar grid with |z| <= radius."""
    r = np.linspace(0, radius, 21)[:, None]
    th = np.linspace(-np.pi, np.pi, n // 20 + 1)[None, :]
    z = (r * np.exp(1j * th)).ravel()
    return float(np.max(np.abs(mittag_leffler(1.0, z) - np.exp(z)) / np.abs(np.exp(z))))


def ml_half_minus_one_oracle(terms=200) -> float:
    """E_{1/2}(-1) by the extended-precision series (mpmath)."""
    import mpmath as mp
    with mp.workdps(60):
        return float(mp.nsum(lambda k: (-1) ** k / mp.gamma(k / mp.mpf(2) + 1), [0, terms]))


def ml_half_vs_erfc(z_values=(-1.0, -3.0, 2.0, 1j, -2 + 2j, 5j, -10.0)) -> float:
    """E_{1/2}(z) = exp(z^2) erfc(-z) = wofz(-i z); max error relative to max(1, |E|)."""
    z = np.asarray(z_values, dtype=complex)
    ref = wofz(-1j * z)
    return float(np.max(np.abs(mittag_leffler(0.5, z) - ref) / np.maximum(1.0, np.abs(ref))))


def bromwich_pairs() -> float:
    """Max relative error on three transform pairs (1/s, 1/(s+1), the E_{1/2} pair)."""
    e1 = abs(bromwich_invert(lambda s: 1 / s, 3.0).value - 1)
    e2 = abs(bromwich_invert(lambda s: 1 / (s + 1), 1.0).value - math.exp(-1)) / math.exp(-1)
    ml = ml_half_minus_one_oracle()
    e3 = abs(bromwich_invert(lambda s: s ** -0.5 / (s ** 0.5 + 1), 1.0).value - ml) / ml
    return max(e1, e2, e3)


def kernel_vs_quadrature(s_values=(1.0, 2.0 + 1j, 0.5 - 0.3j), l_values=(0.0, 0.7, 3.0), hbar=1.0) -> float:
    """Max relative error of the derived kernel against quadrature of the decaying exponential."""
    worst = 0.0
    for s in s_values:
        kap = (1j - 1) * np.sqrt(complex(s) / hbar)
        for l in l_values:
            # 2 int_0^inf e^{kappa y} cos(l y) dy
            def f(y):
                return 2 * np.exp(kap * y) * np.cos(l * y)
            re = quad(lambda y: f(y).real, 0, np.inf, limit=400, epsabs=0, epsrel=1e-12)[0]
            im = quad(lambda y: f(y).imag, 0, np.inf, limit=400, epsabs=0, epsrel=1e-12)[0]
            ref = complex(re, im)
            worst = max(worst, abs(kernel_fourier(s, l, hbar) - ref) / abs(ref))
    return worst


# alpha = 1 reductions

def reduction_caputo(n=1001) -> float:
    f = SampledFunction.sample(lambda t: t ** 2, 0.0, 1.0, n)
    return float(np.max(np.abs(caputo_deriv(f, 1.0).values - 2 * f.x)))


def reduction_integral(n=1001) -> float:
    f = SampledFunction.sample(lambda t: 2 * t, 0.0, 1.0, n)
    return float(np.max(np.abs(frac_integral(f, 1.0).values - f.x ** 2)))


def reduction_power_law() -> float:
    x = np.linspace(0.1, 3, 30)
    return float(np.max(np.abs(rl_power_law(1.0, 2.5, x) - 2.5 * x ** 1.5)))
