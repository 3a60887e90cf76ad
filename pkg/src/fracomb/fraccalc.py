"""Fractional integrals and derivatives on uniform grids, plus Mittag-Leffler.

Lower-terminal operators (integral, Caputo, Riemann-Liouville) use
product integration: the sampled function is replaced by its piecewise
linear interpolant and the power-law kernel is integrated exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import integrate, signal
from scipy.special import gamma, rgamma

from .errors import (
    BoundaryLeakageError,
    InvalidInputError,
    PrecisionLossError,
    SingularSampleWarning,
    UnsupportedOrderError,
)


@dataclass(frozen=True)
class FracOrder:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not np.isfinite(a) or a <= 0:
            raise UnsupportedOrderError(f"order must be positive, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)


def _order(order) -> float:
    return order.alpha if isinstance(order, FracOrder) else FracOrder(order).alpha


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples ``values[k]`` of f at ``start + k*step``."""

    start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 1 or v.size < 2:
            raise InvalidInputError("need a 1D sequence with at least 2 samples")
        step = float(self.step)
        if not np.isfinite(step) or step <= 0:
            raise InvalidInputError(f"step must be positive, got {self.step!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "step", step)
        object.__setattr__(self, "start", float(self.start))

    @classmethod
    def from_grid(cls, x, values, rtol=1e-9):
        """Build from explicit abscissae, rejecting non-uniform spacing."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size < 2 or x.size != np.size(values):
            raise InvalidInputError("grid and values must be 1D of equal length >= 2")
        d = np.diff(x)
        h = (x[-1] - x[0]) / (x.size - 1)
        if h <= 0 or np.any(np.abs(d - h) > rtol * max(abs(h), np.abs(x).max())):
            raise InvalidInputError("grid is not uniform and increasing")
        return cls(x[0], h, values)

    @classmethod
    def sample(cls, func, start, stop, n):
        x = np.linspace(start, stop, n)
        return cls(start, x[1] - x[0], func(x))

    @property
    def x(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.values.size)

    def __len__(self):
        return self.values.size

    def with_values(self, values):
        return SampledFunction(self.start, self.step, values)


def _pow_diff(k, p):
    """(k+1)^p - k^p for k >= 0 without cancellation."""
    k = np.asarray(k, dtype=float)
    out = np.ones_like(k)
    m = k > 0
    km = k[m]
    out[m] = km ** p * np.expm1(p * np.log1p(1.0 / km))
    return out


def _second_diff(k, p):
    """(k+1)^p - 2k^p + (k-1)^p for k >= 1."""
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore"):  # log1p(-1) = -inf at k = 1 gives expm1 = -1, as wanted
        return k ** p * (np.expm1(p * np.log1p(1.0 / k)) + np.expm1(p * np.log1p(-1.0 / k)))


def _conv(a, b, n):
    return signal.convolve(a, b)[:n]


def frac_integral(f: SampledFunction, order) -> SampledFunction:
    """Left fractional integral of order alpha with lower terminal ``f.start``."""
    alpha = _order(order)
    v = f.values
    n = v.size
    p = alpha + 1.0
    k = np.arange(1, n - 1, dtype=float)
    c = np.concatenate(([1.0], _second_diff(k, p))) if n > 2 else np.array([1.0])
    m = np.arange(1, n, dtype=float)
    # weight of f_0 at node m: (m-1)^p - (m-1-alpha) m^alpha
    with np.errstate(divide="ignore"):
        a0 = m ** p * (np.expm1(p * np.log1p(-1.0 / m)) + p / m)
    a0[0] = alpha
    out = np.zeros(n, dtype=complex)
    out[1:] = _conv(c, v[1:], n - 1) + a0 * v[0]
    out *= f.step ** alpha * rgamma(alpha + 2.0)
    return f.with_values(out)


def _l1(v, h, alpha):
    n = v.size
    d = np.diff(v)
    b = _pow_diff(np.arange(n - 1, dtype=float), 1.0 - alpha)
    out = np.zeros(n, dtype=complex)
    out[1:] = _conv(b, d, n - 1)
    return out * (h ** -alpha * rgamma(2.0 - alpha))


def caputo_deriv(f: SampledFunction, order) -> SampledFunction:
    """Caputo derivative, 0 < alpha <= 1, by the L1 scheme (alpha = 1: 2nd-order differences)."""
    alpha = _order(order)
    if alpha > 1:
        raise UnsupportedOrderError(f"Caputo derivative needs 0 < alpha <= 1, got {alpha}")
    if alpha == 1:
        return f.with_values(np.gradient(f.values, f.step, edge_order=2))
    return f.with_values(_l1(f.values, f.step, alpha))


def rl_deriv(f: SampledFunction, order) -> SampledFunction:
    """Riemann-Liouville derivative: differentiate the fractional integral of order 1-alpha.

    The sample at ``x = start`` is infinite when f(start) != 0; a
    SingularSampleWarning flags it.
    """
    alpha = _order(order)
    if alpha > 1:
        raise UnsupportedOrderError(f"RL derivative needs 0 < alpha <= 1, got {alpha}")
    if alpha == 1:
        return f.with_values(np.gradient(f.values, f.step, edge_order=2))
    g = frac_integral(f, 1.0 - alpha).values
    out = np.gradient(g, f.step, edge_order=2)
    if f.values[0] != 0:
        warnings.warn("RL derivative is singular at the lower terminal", SingularSampleWarning, stacklevel=2)
        out[0] = complex(np.inf, 0.0)
    return f.with_values(out)


def rl_power_law(order, beta: float, x):
    """Closed form D^alpha x^beta = Gamma(beta+1)/Gamma(beta+1-alpha) x^(beta-alpha)."""
    alpha = _order(order)
    if beta <= -1:
        raise InvalidInputError(f"beta must exceed -1, got {beta}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise InvalidInputError("x must be positive")
    # rgamma vanishes at the poles, which is the correct limit
    out = gamma(beta + 1.0) * rgamma(beta + 1.0 - alpha) * x ** (beta - alpha)
    return out if out.ndim else float(out)


def _cosine_taper(n, frac):
    w = np.ones(n)
    m = max(int(round(frac * n)), 1)
    ramp = 0.5 * (1 - np.cos(np.pi * (np.arange(m) + 0.5) / m))
    w[:m] = ramp
    w[n - m:] = ramp[::-1]
    return w


def weyl_deriv(f: SampledFunction, order, *, threshold=1e-6, taper=0.1, pad_factor=16,
               periodic=False) -> SampledFunction:
    """Left Weyl derivative as the Fourier multiplier (ik)^alpha (principal branch).

    The lower terminal sits at -infinity, so the sample at ``f.start``
    must already be negligible; its size relative to max|f| is the
    measured leakage. Non-periodic data are cosine tapered and zero
    padded to keep the periodic wrap of the kernel away from the window.
    ``periodic=True`` treats the grid as one period and skips both.
    """
    alpha = _order(order)
    v = f.values
    n = v.size
    if periodic:
        k = 2 * np.pi * sfft.fftfreq(n, f.step)
        return f.with_values(sfft.ifft((1j * k) ** alpha * sfft.fft(v)))
    scale = np.abs(v).max()
    leak = abs(v[0]) / scale if scale > 0 else 0.0
    if leak > threshold:
        raise BoundaryLeakageError("function does not decay at the lower end", leak)
    m = n * max(int(pad_factor), 1)
    k = 2 * np.pi * sfft.fftfreq(m, f.step)
    sym = (1j * k) ** alpha
    full = sfft.ifft(sym * sfft.fft(v * _cosine_taper(n, taper), m))
    # left of the support the causal result is exactly zero, so the values
    # there measure the smooth wrap-around tail; remove its linear trend
    j = np.arange(-n, 0)
    coef = np.polyfit(j, full[j], 1)
    out = full[:n] - np.polyval(coef, np.arange(n))
    return f.with_values(out)


# Mittag-Leffler ------------------------------------------------------------

_TAYLOR_RADIUS = 1.0


def _ml_taylor(alpha, z, tol):
    z = np.asarray(z, dtype=complex)
    total = np.ones_like(z)
    zk = np.ones_like(z)
    for k in range(1, 2000):
        zk = zk * z
        term = zk * rgamma(alpha * k + 1.0)
        total = total + term
        if np.all(np.abs(term) <= 1e-3 * tol * np.maximum(1.0, np.abs(total))) and alpha * k > 2:
            return total
    raise PrecisionLossError("Mittag-Leffler series did not converge", float(np.abs(term).max()))


def _ray_integrand(chi, alpha, delta, z):
    # Hankel rays s = r e^{+-i delta}, with chi = r^alpha
    r = chi ** (1.0 / alpha)
    out = 0.0
    for sgn in (1.0, -1.0):
        ph = np.exp(1j * sgn * alpha * delta)
        out = out + sgn * ph * np.exp(r * np.exp(1j * sgn * delta)) / (chi * ph - z)
    return out / (2j * np.pi * alpha)


def _ml_hankel(alpha, z, tol):
    z = np.asarray(z, dtype=complex)
    theta = np.abs(np.angle(z)) / alpha
    # steepest ray that keeps the pole direction at least 0.15 pi away
    delta = np.full(z.shape, 0.6 * np.pi)
    for cand in (0.7, 0.8, 0.9, 1.0)[::-1]:
        pick = (np.abs(theta - cand * np.pi) >= 0.15 * np.pi) & (delta == 0.6 * np.pi)
        delta[pick] = cand * np.pi
    inside = theta < delta
    resid = np.zeros_like(z)
    with np.errstate(over="ignore", invalid="ignore"):
        resid[inside] = np.exp(z[inside] ** (1.0 / alpha)) / alpha
    cosd = np.cos(delta)
    chi_hi = (45.0 / np.abs(cosd)) ** alpha
    lo, hi = np.arcsinh(2 / np.pi * np.log(1e-30)), np.arcsinh(2 / np.pi * np.log(chi_hi.max()))

    def level(h):
        tau = np.arange(lo, hi + h, h)
        chi = np.exp(0.5 * np.pi * np.sinh(tau))
        w = chi * 0.5 * np.pi * np.cosh(tau) * h
        vals = _ray_integrand(chi[None, :], alpha, delta[:, None], z[:, None])
        return (vals * w).sum(axis=1)

    prev = level(1 / 8)
    err = np.full(z.shape, np.inf)
    for h in (1 / 16, 1 / 32, 1 / 64):
        cur = level(h)
        err = np.abs(cur - prev)
        prev = cur
        if np.all(err <= 0.1 * tol * np.maximum(1.0, np.abs(cur + resid))):
            break
    val = prev + resid
    bad = err > 0.1 * tol * np.maximum(1.0, np.abs(val))
    for i in np.flatnonzero(bad):
        val[i], err[i] = _ml_hankel_quad(alpha, z[i], delta[i], resid[i])
    return val, err


def _ml_hankel_quad(alpha, z, delta, resid):
    f = lambda c: _ray_integrand(c, alpha, delta, z)
    kw = dict(epsabs=1e-15, epsrel=1e-13, limit=500)
    re = integrate.quad(lambda c: f(c).real, 0, np.inf, **kw)
    im = integrate.quad(lambda c: f(c).imag, 0, np.inf, **kw)
    return re[0] + 1j * im[0] + resid, np.hypot(re[1], im[1])


def mittag_leffler(order, z, tol: float = 1e-10):
    """E_alpha(z) = sum z^k / Gamma(alpha k + 1) for 0 < alpha <= 1.

    Taylor series for |z| <= 1, otherwise the Hankel-contour integral
    plus the residue of the enclosed pole. ``tol`` bounds the error
    relative to max(1, |E|).
    """
    alpha = _order(order)
    if alpha > 1:
        raise UnsupportedOrderError(f"Mittag-Leffler needs 0 < alpha <= 1, got {alpha}")
    zz = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(zz)):
        raise InvalidInputError("argument must be finite")
    flat = zz.ravel()
    out = np.empty_like(flat)
    small = np.abs(flat) <= _TAYLOR_RADIUS
    if small.any():
        out[small] = _ml_taylor(alpha, flat[small], tol)
    if (~small).any():
        val, err = _ml_hankel(alpha, flat[~small], tol)
        scale = np.maximum(1.0, np.abs(val))
        if np.any(err > tol * scale):
            raise PrecisionLossError("Mittag-Leffler quadrature", float((err / scale).max()))
        out[~small] = val
    out = out.reshape(zz.shape)
    return complex(out) if out.ndim == 0 else out
