"""Laplace transform, Bromwich inversion, and Fourier analysis along y."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import fft as sfft

from .errors import InvalidInputError, PrecisionLossError
from .fraccalc import SampledFunction
from .grids import CombField, centered_axis


# Laplace -------------------------------------------------------------------

@dataclass(frozen=True)
class LaplaceResult:
    value: complex
    error_estimate: float
    status: str  # "ok" or "warning"


def _pl_weights(z):
    """Exact integrals of e^{-z u} against the hat functions (1-u) and u on [0, 1]."""
    z = np.asarray(z, dtype=complex)
    w0 = np.empty_like(z)
    w1 = np.empty_like(z)
    small = np.abs(z) < 0.5
    zs = z[small]
    acc0 = np.zeros_like(zs)
    acc1 = np.zeros_like(zs)
    term = np.ones_like(zs)
    for j in range(18):
        acc0 += term / (j + 1)
        acc1 += term / (j + 2)
        term = term * (-zs) / (j + 1)
    w0[small], w1[small] = acc0 - acc1, acc1
    zl = z[~small]
    e = np.exp(-zl)
    w0[~small] = (zl - 1 + e) / zl ** 2
    w1[~small] = (1 - (1 + zl) * e) / zl ** 2
    return w0, w1


def _laplace_pl(v, h, s):
    t = h * np.arange(v.size)
    w0, w1 = _pl_weights(s * h)
    e = np.exp(-s * t[:-1])
    return complex(h * np.sum(e * (w0 * v[:-1] + w1 * v[1:])))


def _laplace_pl_rows(v, h, s):
    t = h * np.arange(v.shape[0])
    w0, w1 = _pl_weights(np.array([s * h]))
    e = np.exp(-s * t[:-1])
    return h * ((e * w0[0])[:, None] * v[:-1] + (e * w1[0])[:, None] * v[1:]).sum(axis=0)


def laplace_series(values, dt: float, s: complex) -> np.ndarray:
    """laplace_forward applied along axis 0 of a (nt, ...) array sampled from t = 0."""
    v = np.asarray(values, dtype=complex)
    shape = v.shape
    v = v.reshape(shape[0], -1)
    val = _laplace_pl_rows(v, dt, complex(s))
    if shape[0] >= 5 and (shape[0] - 1) % 2 == 0:
        val = val + (val - _laplace_pl_rows(v[::2], 2 * dt, complex(s))) / 3
    return val.reshape(shape[1:])


def laplace_forward(f: SampledFunction, s: complex, *, tol: float = 1e-6,
                    acknowledge_truncation: bool = False) -> LaplaceResult:
    """Integral of e^{-st} f(t) over the sampled window [0, T].

    f is integrated as its piecewise-linear interpolant with exact
    exponential weights, then Richardson-extrapolated against the
    every-other-sample rule when the sample count allows. The error
    estimate is the size of that correction plus the tail bound
    |f(T)| e^{-Re(s) T} / Re(s).
    """
    s = complex(s)
    if s.real <= 0:
        raise InvalidInputError("laplace_forward needs Re(s) > 0")
    if f.start != 0:
        raise InvalidInputError("samples must start at t = 0")
    v = f.values
    T = f.step * (v.size - 1)
    if T * s.real < 20 and not acknowledge_truncation:
        raise InvalidInputError(f"window too short: T*Re(s) = {T * s.real:.3g} < 20")
    val = _laplace_pl(v, f.step, s)
    disc = 0.0
    if v.size >= 5 and (v.size - 1) % 2 == 0:
        # second-order rule: Richardson step, the raw difference stays as the estimate
        corr = (val - _laplace_pl(v[::2], 2 * f.step, s)) / 3
        val += corr
        disc = abs(corr)
    trunc = abs(v[-1]) * math.exp(-s.real * T) / s.real
    err = disc + trunc
    status = "ok" if err <= tol * max(abs(val), 1e-300) else "warning"
    return LaplaceResult(val, err, status)


# Bromwich ------------------------------------------------------------------

@dataclass(frozen=True)
class BromwichContour:
    """Vertical contour Re(s) = sigma sampled at n_samples frequencies.

    ``sigma=None`` means 14/t. ``omega_max``, if given, overrides the
    sample count so that the last frequency reaches it. The count is
    doubled up to ``max_samples`` until successive results agree to ``tol``
    (relative) or to the rounding floor of the sum, whichever is larger.
    """

    sigma: float | None = None
    omega_max: float | None = None
    n_samples: int = 64
    tol: float = 1e-10
    max_samples: int = 4096

    def __post_init__(self):
        if self.n_samples < 64 or self.n_samples % 2:
            raise InvalidInputError("n_samples must be even and >= 64")
        if self.sigma is not None and not self.sigma > 0:
            raise InvalidInputError("sigma must be positive")
        if self.omega_max is not None and not self.omega_max > 0:
            raise InvalidInputError("omega_max must be positive")


@dataclass(frozen=True)
class InversionResult:
    value: complex
    error_estimate: float
    n_samples: int

    def __complex__(self):
        return complex(self.value)


def wynn_epsilon(partial_sums) -> complex:
    """Wynn epsilon extrapolation of a sequence of partial sums."""
    prev = np.zeros(len(partial_sums), dtype=complex)
    cur = np.asarray(partial_sums, dtype=complex)
    best = cur[-1]
    k = 0
    while cur.size > 1:
        d = np.diff(cur)
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = prev[1:cur.size] + 1.0 / d
        prev, cur = cur, nxt
        k += 1
        if k % 2 == 0 and cur.size and np.isfinite(cur[-1]):
            best = cur[-1]
        if not np.all(np.isfinite(cur)):
            break
    return best


def _evaluate(F, s):
    try:
        out = np.asarray(F(s), dtype=complex)
        if out.shape == s.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([complex(F(v)) for v in s])


def _fourier_series(F, t, sigma, n):
    # trapezoid on Re(s)=sigma with period 2t: nodes k*pi/t, phases (-1)^k
    w = np.arange(1, n + 1) * math.pi / t
    vals = _evaluate(F, np.concatenate(([sigma], sigma + 1j * w, sigma - 1j * w)))
    f0, fp, fm = vals[0], vals[1:n + 1], vals[n + 1:]
    sign = np.where(np.arange(1, n + 1) % 2, -1.0, 1.0)
    terms = np.concatenate(([f0], sign * (fp + fm)))
    pre = math.exp(sigma * t) / (2 * t)
    # rounding floor: the prefactor amplifies the cancellation in the sum
    noise = 64 * np.finfo(float).eps * pre * float(np.abs(terms).max())
    return pre * wynn_epsilon(np.cumsum(terms)), noise


def bromwich_invert(F: Callable, t: float, contour: BromwichContour | None = None) -> InversionResult:
    """Inverse Laplace transform (1/2 pi i) integral e^{st} F(s) ds at time t."""
    if not t > 0:
        raise InvalidInputError("t must be positive")
    c = contour or BromwichContour()
    sigma = c.sigma if c.sigma is not None else 14.0 / t
    n = c.n_samples
    if c.omega_max is not None:
        n = max(n, 2 * math.ceil(c.omega_max * t / (2 * math.pi)))
    prev, _ = _fourier_series(F, t, sigma, n)
    diff = math.inf
    while 2 * n <= c.max_samples:
        n *= 2
        cur, noise = _fourier_series(F, t, sigma, n)
        diff = abs(cur - prev)
        prev = cur
        if diff <= max(c.tol * abs(cur), noise):
            return InversionResult(complex(cur), max(diff, noise), n)
    raise PrecisionLossError("Bromwich inversion did not converge", diff / max(abs(prev), 1e-300))


# Fourier along y ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModeField:
    mode_l: float
    values: np.ndarray


def y_wavenumbers(ny: int, dy: float) -> np.ndarray:
    """Lattice l_m = 2 pi m / L_y in FFT order."""
    return 2 * np.pi * sfft.fftfreq(ny, dy)


def mode_spectrum(values: np.ndarray, dy: float, axis: int = -1) -> np.ndarray:
    """dy * sum_j Psi(y_j) e^{-i l y_j} for every lattice l (FFT order), y_j centred on 0."""
    return dy * sfft.fft(sfft.ifftshift(values, axes=axis), axis=axis)


def fourier_modes_y(field: CombField) -> list[ModeField]:
    spec = mode_spectrum(field.values, field.dy)
    ls = y_wavenumbers(field.shape[1], field.dy)
    return [ModeField(float(l), spec[:, m]) for m, l in enumerate(ls)]


def mode_index(ny: int, dy: float, l: float, rtol: float = 1e-9) -> int:
    """Lattice index of wavenumber l; off-lattice values are rejected."""
    dl = 2 * np.pi / (ny * dy)
    m = l / dl
    mi = int(round(m))
    if abs(m - mi) > rtol * max(1.0, abs(m)) or not (-(ny // 2) <= mi < ny - ny // 2):
        raise InvalidInputError(f"l = {l} is not on the lattice 2 pi m / {ny * dy}")
    return mi % ny


def y_axis(ny: int, dy: float) -> np.ndarray:
    return centered_axis(ny, dy)


# Kernel of the decaying Laplace solution ------------------------------------

def kernel_fourier(s: complex, l, hbar: float = 1.0, sign_convention: str = "derived"):
    """y-Fourier image of exp[i(1+i) sqrt(s/hbar) |y|].

    ``derived``: 2(1-i) sqrt(s/hbar) / (l^2 - 2is/hbar).
    ``paper``: the printed numerator 2i(1+i) sqrt(s/hbar), the negative of the above.
    """
    r = np.sqrt(complex(s) / hbar)
    if r.real <= 0:
        raise InvalidInputError("need Re sqrt(s/hbar) > 0")
    if sign_convention == "derived":
        num = 2 * (1 - 1j) * r
    elif sign_convention == "paper":
        num = 2j * (1 + 1j) * r
    else:
        raise InvalidInputError(f"unknown sign convention {sign_convention!r}")
    return num / (np.asarray(l, dtype=float) ** 2 - 2j * complex(s) / hbar)
