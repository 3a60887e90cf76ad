"""Green's function of the comb for an axis eigenvalue lam, and for a free axis particle.

Sign convention ("derived"): the Laplace image solving

    i hbar G_t = -(hbar^2/2) G_yy + lam delta(y) G,   G(y, 0) = delta(y)

is  i hbar exp(kappa |y|) / (hbar^2 kappa - lam),  kappa = (i - 1) sqrt(s/hbar).
The "paper" convention is the printed form, the negative of this.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (InvalidInputError, OutOfRegimeError, PoleProximityError, PrecisionLossError,
                     RegimeWarning)
from .hamiltonians import EigenPair
from .transforms import BromwichContour, InversionResult, bromwich_invert

CONVENTIONS = ("derived", "paper")
_SIGN = {"derived": 1.0, "paper": -1.0}
DEFAULT_CONTOUR = BromwichContour(tol=1e-8)


def _convention(c):
    if c not in CONVENTIONS:
        raise InvalidInputError(f"convention must be one of {CONVENTIONS}, got {c!r}")
    return _SIGN[c]


def _cquad(f, a, b, tol, limit=400, points=None):
    kw = dict(epsabs=0.0, epsrel=tol, limit=limit)
    if points is not None:
        kw["points"] = points
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        re, e1 = quad(lambda r: f(r).real, a, b, **kw)
        im, e2 = quad(lambda r: f(r).imag, a, b, **kw)
    return complex(re, im), math.hypot(e1, e2)


# Laplace domain ----------------------------------------------------------------

def greens_laplace(lam: float, y: float, s, hbar: float = 1.0, convention: str = "derived"):
    """Laplace image of G_lam(y, t); scalar or array ``s``."""
    sign = _convention(convention)
    if not hbar > 0:
        raise InvalidInputError("hbar must be positive")
    s_arr = np.asarray(s, dtype=complex)
    r = np.sqrt(s_arr / hbar)
    if np.any(r.real <= 0):
        raise InvalidInputError("need Re sqrt(s/hbar) > 0")
    kappa = (1j - 1) * r
    den = hbar ** 2 * kappa - lam
    if np.any(np.abs(den) < 1e-12):
        raise PoleProximityError("s lies on the pole hbar^2 kappa(s) = lam")
    out = sign * 1j * hbar * np.exp(kappa * abs(y)) / den
    return complex(out) if out.ndim == 0 else out


def greens_time(lam: float, y: float, t: float, hbar: float = 1.0,
                contour: BromwichContour | None = None, convention: str = "derived") -> InversionResult:
    """G_lam(y, t) by Bromwich inversion of :func:`greens_laplace`.

    The default contour asks for 1e-8 agreement between successive doublings;
    the accuracy actually reached is ~1e-9 (the Wynn-accelerated differences
    fluctuate at that level, so a tighter stopping rule can fail to trigger).
    """
    _convention(convention)
    if not t > 0:
        raise InvalidInputError("t must be positive")
    return bromwich_invert(lambda s: greens_laplace(lam, y, s, hbar, convention), t,
                           contour or DEFAULT_CONTOUR)


# u-integral representation -------------------------------------------------------

@dataclass(frozen=True)
class GreensQuery:
    """Exactly one of ``lam`` (spectral route) or ``dx_abs`` (free axis particle)."""

    y: float
    t: float
    hbar: float = 1.0
    lam: float | None = None
    dx_abs: float | None = None

    def __post_init__(self):
        if not self.t > 0 or not self.hbar > 0:
            raise InvalidInputError("t and hbar must be positive")
        if (self.lam is None) == (self.dx_abs is None):
            raise InvalidInputError("set exactly one of lam and dx_abs")
        if self.dx_abs is not None and self.dx_abs < 0:
            raise InvalidInputError("dx_abs must be non-negative")


@dataclass(frozen=True)
class GreensValue:
    value: complex
    error_estimate: float
    route: str

    def __complex__(self):
        return complex(self.value)


def greens_u_integral(query: GreensQuery, convention: str = "derived", tol: float = 1e-11) -> GreensValue:
    """u-integral form of G, with u rotated by +-pi/4 onto the steepest-descent ray.

    derived: -sqrt(i hbar)/sqrt(2 pi t^3) int Z e^{-u lam} e^{+i Z^2/(2 hbar t)} du
    paper:   +sqrt(i hbar)/sqrt(2 pi t^3) int Z e^{-u lam} e^{-i Z^2/(2 hbar t)} du
    with Z = |y| + hbar^2 u. With ``dx_abs`` the axis operator is the free
    particle and e^{-u lam} becomes the heat kernel exp(-dx^2/(2 hbar^2 u))/sqrt(2 pi hbar^2 u).
    """
    sign = _convention(convention)
    hb, t, ay = query.hbar, query.t, abs(query.y)
    rot = cmath.exp(0.25j * math.pi * sign)
    pre = -sign * cmath.sqrt(1j * hb) / math.sqrt(2 * math.pi * t ** 3)
    ph = 1j * sign / (2 * hb * t)
    scale = math.sqrt(t / hb ** 3)  # width of the Gaussian along the ray
    if query.lam is not None:
        lam = query.lam

        def f(r):
            u = r * rot
            Z = ay + hb ** 2 * u
            return Z * cmath.exp(-u * lam + ph * Z * Z) * rot

        val, err = _cquad(f, 0.0, math.inf, tol)
        route = "u_integral"
    else:
        A = query.dx_abs ** 2 / (2 * hb ** 2)
        rot_half = cmath.exp(0.125j * math.pi * sign)

        def f(v):  # u = v^2 rot
            u = v * v * rot
            Z = ay + hb ** 2 * u
            a = -A / (v * v) * rot.conjugate() if v > 0 else -math.inf
            e = cmath.exp(ph * Z * Z + a) if v > 0 else 0.0
            return 2 * Z * e * rot_half

        vmax = math.sqrt(12 * scale + 1.0)
        val, err = _cquad(f, 0.0, vmax, tol, points=[math.sqrt(scale)] if scale < vmax ** 2 else None)
        tail, e2 = _cquad(f, vmax, math.inf, tol)
        val, err = val + tail, err + e2
        pre = pre / math.sqrt(2 * math.pi * hb ** 2)
        route = "u_integral_free"
    val *= pre
    err *= abs(pre)
    if err > 1e3 * tol * max(abs(val), 1e-300):
        raise PrecisionLossError("u-integral quadrature did not converge", err / max(abs(val), 1e-300))
    return GreensValue(complex(val), err, route)


# I(A, B) ------------------------------------------------------------------------

@dataclass(frozen=True)
class IabResult:
    value: complex  # quadrature (authoritative)
    error_estimate: float
    closed_form: complex  # sqrt(pi/B) exp(-2 sqrt(AB))
    paper_form: complex  # sqrt(pi/(4 sqrt(AB))) exp(+2 sqrt(AB)), as printed
    rotation: float


def iab_closed_form(A, B):
    return np.sqrt(np.pi / np.asarray(B, complex)) * np.exp(-2 * np.sqrt(np.asarray(A, complex) * B))


def iab_paper_form(A, B):
    r = np.sqrt(np.asarray(A, complex) * B)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(np.pi / (4 * r)) * np.exp(2 * r)


def i_ab(A: complex, B: complex, rotation: float | str = 0.0, tol: float = 1e-12) -> IabResult:
    """Integral over u > 0 of exp(-A/u - B u) u^{-1/2}, by quadrature.

    ``rotation`` phi integrates along u = r e^{i phi}; "auto" picks the phi
    that gives A e^{-i phi} and B e^{i phi} the same argument.
    """
    A, B = complex(A), complex(B)
    if rotation == "auto":
        if abs(A) == 0:
            phi = -cmath.phase(B) / 2
        else:
            phi = (cmath.phase(A) - cmath.phase(B)) / 2
    else:
        phi = float(rotation)
    e = cmath.exp(1j * phi)
    Ar, Br = A / e, B * e
    if Ar.real < -1e-15 * abs(Ar) or Br.real <= 1e-15 * abs(Br) or abs(Br) == 0:
        raise InvalidInputError(f"integral diverges along arg u = {phi:.3g}: need Re A' >= 0, Re B' > 0")
    # u = r e^{i phi}, r = v^2: 2 e^{i phi/2} int exp(-A'/v^2 - B' v^2) dv

    def f(v):
        if v == 0:
            return 1.0 + 0j if Ar == 0 else 0j
        return cmath.exp(-Ar / (v * v) - Br * v * v)

    v0 = (abs(Ar) / abs(Br)) ** 0.25 if Ar != 0 else 1.0 / math.sqrt(abs(Br))
    p1, e1 = _cquad(f, 0.0, v0, tol)
    p2, e2 = _cquad(f, v0, math.inf, tol)
    pre = 2 * cmath.exp(0.5j * phi)
    val = pre * (p1 + p2)
    err = 2 * (e1 + e2)
    if err > 1e4 * tol * max(abs(val), 1e-300):
        raise PrecisionLossError("I(A,B) quadrature did not converge", err / max(abs(val), 1e-300))
    return IabResult(val, err, complex(iab_closed_form(A, B)), complex(iab_paper_form(A, B)), phi)


# Free axis particle: xi representation and stationary phase ---------------------------

def _free_prefactor(t):
    # -sqrt(i hbar)/sqrt(2 pi t^3) * 1/sqrt(2 pi hbar^2) * sqrt(i hbar t/(2 pi)), simplified
    return -1j / ((2 * math.pi) ** 1.5 * t)


def _check_free(dx_abs, t, hbar):
    if not t > 0 or not hbar > 0:
        raise InvalidInputError("t and hbar must be positive")
    if dx_abs < 0:
        raise InvalidInputError("dx_abs must be non-negative")


def greens_free_quadrature(dx_abs: float, y: float, t: float, hbar: float = 1.0,
                           u_method: str = "quadrature", tol: float = 1e-10) -> GreensValue:
    """G(x, y, t; x') for H = p^2/2 from the xi representation (derived convention).

    G = C hbar t int xi exp(-i hbar t xi^2/2 + i xi |y|) I(A, -i xi hbar^2) dxi

    with A = dx^2/(2 hbar^2) and C = -i/((2 pi)^{3/2} t); the xi-derivative of
    the original form has been moved onto the Gaussian by parts. The xi line is
    the steepest-descent line xi0 + r e^{-i pi/4} through xi0 = |y|/(hbar t),
    on which the Gaussian factor is real and the integrand is free of branch cuts.
    """
    _check_free(dx_abs, t, hbar)
    if u_method not in ("quadrature", "closed_form"):
        raise InvalidInputError("u_method must be 'quadrature' or 'closed_form'")
    ay = abs(y)
    A = dx_abs ** 2 / (2 * hbar ** 2)
    xi0 = ay / (hbar * t)
    w = cmath.exp(-0.25j * math.pi)
    ht = hbar * t

    def S(xi):
        B = -1j * xi * hbar ** 2
        if u_method == "closed_form":
            return complex(iab_closed_form(A, B))
        return i_ab(A, B, rotation="auto", tol=1e-12).value

    def f(r):
        xi = xi0 + r * w
        if xi == 0:
            return 0j
        return xi * math.exp(-0.5 * ht * r * r) * S(xi)

    R = 9.0 / math.sqrt(ht)
    lo, e1 = _cquad(f, -R, 0.0, tol, limit=200)
    hi, e2 = _cquad(f, 0.0, R, tol, limit=200)
    pre = _free_prefactor(t) * ht * cmath.exp(0.5j * ay * ay / ht) * w
    val = pre * (lo + hi)
    err = abs(pre) * (e1 + e2)
    if err > 1e4 * tol * max(abs(val), 1e-300):
        raise PrecisionLossError("xi quadrature did not converge", err / max(abs(val), 1e-300))
    return GreensValue(complex(val), err, "xi_quadrature")


def stationary_point(y: float, t: float, hbar: float = 1.0, form: str = "generic") -> float:
    """Stationary point of the xi phase: |y|/(hbar t) here, |y|/(2 hbar t) for the printed phase."""
    if form == "generic":
        return abs(y) / (hbar * t)
    if form == "paper_printed":
        return abs(y) / (2 * hbar * t)
    raise InvalidInputError(f"unknown form {form!r}")


def xi_phase(xi, y: float, t: float, hbar: float = 1.0, form: str = "generic"):
    """Phase of the xi integrand: -hbar t xi^2/2 + xi|y| (generic), hbar t xi^2 - xi|y| (printed)."""
    if form == "generic":
        return -0.5 * hbar * t * xi ** 2 + xi * abs(y)
    if form == "paper_printed":
        return hbar * t * xi ** 2 - xi * abs(y)
    raise InvalidInputError(f"unknown form {form!r}")


@dataclass(frozen=True)
class StationaryPhaseResult:
    value: complex
    xi0: float
    form: str
    note: str = ""


def greens_stationary_phase(dx_abs: float, y: float, t: float, hbar: float = 1.0,
                            form: str = "generic") -> StationaryPhaseResult:
    """Leading stationary-phase value of the free-particle G for hbar t >> 1.

    generic: C hbar t xi0 I(A, -i xi0 hbar^2) e^{i y^2/(2 hbar t)} sqrt(2 pi/(i hbar t)).
    paper_printed: the printed long-time formula, with its undefined |u| read as |y|.
    """
    _check_free(dx_abs, t, hbar)
    ht = hbar * t
    if ht < 10:
        raise OutOfRegimeError(f"stationary phase needs hbar*t >= 10, got {ht:.3g}")
    if ht < 100:
        warnings.warn(f"hbar*t = {ht:.3g} is below 100; stationary phase is rough here",
                      RegimeWarning, stacklevel=2)
    ay = abs(y)
    xi0 = stationary_point(y, t, hbar, form)
    if form == "generic":
        if xi0 == 0:
            return StationaryPhaseResult(0j, 0.0, form, "leading term vanishes at xi0 = 0")
        A = dx_abs ** 2 / (2 * hbar ** 2)
        S = i_ab(A, -1j * xi0 * hbar ** 2, rotation="auto").value
        val = (_free_prefactor(t) * ht * xi0 * S * cmath.exp(0.5j * ay * ay / ht)
               * cmath.sqrt(2 * math.pi / (1j * ht)))
        return StationaryPhaseResult(complex(val), xi0, form)
    if ay == 0 or dx_abs == 0:
        raise InvalidInputError("printed form is singular at y = 0 or dx = 0")
    d = dx_abs
    bracket = (-0.25j * (ay / ht) ** -1.25 + ay - d * cmath.sqrt(1j * ht / (2 * ay)))
    val = (1j ** 0.25 / (4 * math.pi * t * math.sqrt(2 * d)) * bracket
           * cmath.exp(-0.5j * ay * ay / ht + 1j * cmath.sqrt(1j * ay / ht) * d))
    return StationaryPhaseResult(complex(val), xi0, form, "|u| read as |y|")


# Spectral assembly ----------------------------------------------------------------

def spectral_assembly(pairs: list[EigenPair], dx: float, y: float, t: float, hbar: float = 1.0,
                      convention: str = "derived") -> np.ndarray:
    """Kernel G(x_i, y, t; x_j) = sum_lam G_lam(y, t) psi_lam(x_i) psi_lam(x_j)^* on the grid.

    ``pairs`` hold unit Euclidean-norm vectors, so the continuum normalisation
    divides by dx.
    """
    if not pairs:
        raise InvalidInputError("need at least one eigenpair")
    g = np.array([greens_u_integral(GreensQuery(y, t, hbar, lam=p.lam), convention).value
                  for p in pairs])
    V = np.array([p.psi for p in pairs]).T
    return (V * g[None, :]) @ V.conj().T / dx
