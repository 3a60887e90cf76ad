"""Two-dimensional quantum comb

    i hbar dPsi/dt = delta(y) H(x) Psi - (hbar^2/2) d^2Psi/dy^2

with delta(y) represented as 1/dy on the row y = 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy import fft as sfft
from scipy.sparse.linalg import splu

from .errors import BoundaryLeakageError, InvalidInputError, LeakageWarning
from .fraccalc import SampledFunction, caputo_deriv, frac_integral
from .grids import CombField, centered_axis
from .hamiltonians import Operator
from .transforms import kernel_fourier, laplace_series, mode_index, mode_spectrum, y_wavenumbers

FFT_WORKERS = 4


@dataclass(frozen=True)
class Absorber:
    """Damping exp(-W(y) dt / hbar) with W = strength * d^power over the outer ``fraction`` of y."""

    fraction: float = 0.25
    strength: float = 500.0
    power: int = 2

    def profile(self, y: np.ndarray) -> np.ndarray:
        half = 0.5 * (y.max() - y.min())
        edge = self.fraction * half
        d = np.clip(np.abs(y) - (half - edge), 0.0, None) / edge
        return self.strength * d ** self.power


def band_mass(values: np.ndarray, dx: float, dy: float, frac: float) -> float:
    nb = max(1, int(round(frac * values.shape[1])))
    a = np.abs(values[:, :nb]) ** 2
    b = np.abs(values[:, -nb:]) ** 2
    return float((a.sum() + b.sum()) * dx * dy)


class SplitStepComb:
    """Strang splitting: spectral y-kinetic half steps around a Crank-Nicolson axis step."""

    def __init__(self, H: Operator, dx: float, dy: float, ny: int, hbar: float, dt: float,
                 absorber: Absorber | None = None):
        if not dt > 0:
            raise InvalidInputError("dt must be positive")
        self.H, self.dx, self.dy, self.ny, self.hbar, self.dt = H, dx, dy, ny, hbar, dt
        l = y_wavenumbers(ny, dy)
        self.half = np.exp(-0.25j * hbar * l ** 2 * dt)[None, :]
        M = H.matrix() / dy
        I = sp.identity(H.n, dtype=complex, format="csc")
        tau = 0.5j * dt / hbar
        self._rhs = (I - tau * M).tocsr()
        self._lu = splu((I + tau * M).tocsc())
        self.j0 = ny // 2
        self.damp = None
        if absorber is not None:
            self.damp = np.exp(-absorber.profile(centered_axis(ny, dy)) * dt / hbar)[None, :]

    def kinetic_half(self, v):
        return sfft.ifft(sfft.fft(v, axis=1, workers=FFT_WORKERS) * self.half, axis=1,
                         workers=FFT_WORKERS)

    def step(self, v: np.ndarray) -> np.ndarray:
        v = self.kinetic_half(v)
        v[:, self.j0] = self._lu.solve(self._rhs @ v[:, self.j0])
        if self.damp is not None:
            v *= self.damp
        return self.kinetic_half(v)


class CrankNicolson2D:
    """Full 2D Crank-Nicolson with a periodic 3-point y Laplacian; a coarse-grid cross-check."""

    def __init__(self, H: Operator, dx: float, dy: float, ny: int, hbar: float, dt: float,
                 absorber: Absorber | None = None):
        nx = H.n
        if nx * ny > 200_000:
            raise InvalidInputError("CrankNicolson2D is meant for coarse grids (nx*ny <= 2e5)")
        e = np.ones(ny)
        Dyy = sp.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], format="lil")
        Dyy[0, ny - 1] = Dyy[ny - 1, 0] = 1
        Dyy = Dyy.tocsr() / dy ** 2
        P0 = sp.csr_matrix(([1.0], ([ny // 2], [ny // 2])), shape=(ny, ny))
        # row-major flattening of values[i, j] -> i*ny + j
        Hfull = -0.5 * hbar ** 2 * sp.kron(sp.identity(nx), Dyy) + sp.kron(H.matrix(), P0) / dy
        if absorber is not None:
            W = absorber.profile(centered_axis(ny, dy))
            Hfull = Hfull - 1j * sp.kron(sp.identity(nx), sp.diags(W))
        I = sp.identity(nx * ny, dtype=complex, format="csc")
        tau = 0.5j * dt / hbar
        self._rhs = (I - tau * Hfull).tocsr()
        self._lu = splu((I + tau * Hfull).tocsc())
        self.shape = (nx, ny)

    def step(self, v):
        return self._lu.solve(self._rhs @ v.ravel()).reshape(self.shape)


SCHEMES = {"strang": SplitStepComb, "cn2d": CrankNicolson2D}


def _check_dims(field_: CombField, H: Operator):
    if field_.shape[0] != H.n:
        raise InvalidInputError(f"field has {field_.shape[0]} x-points, Hamiltonian {H.n}")


def comb_step(field_: CombField, H: Operator, dt: float, *, absorber: Absorber | None = None,
              scheme: str = "strang", leak_threshold: float = 1e-6, leak_band: float = 0.01) -> CombField:
    """One step; a LeakageWarning is raised when the boundary band holds too much mass."""
    _check_dims(field_, H)
    nx, ny = field_.shape
    stepper = SCHEMES[scheme](H, field_.dx, field_.dy, ny, field_.hbar, dt, absorber)
    v = stepper.step(np.array(field_.values))
    leak = band_mass(v, field_.dx, field_.dy, leak_band) / max(field_.norm() ** 2, 1e-300)
    if leak > leak_threshold:
        warnings.warn(f"boundary band holds {leak:.2e} of the mass", LeakageWarning, stacklevel=2)
    return field_.replace(v)


@dataclass(eq=False)
class CombTrajectory:
    times: np.ndarray  # saved snapshot times
    snapshots: list
    dt: float
    step_times: np.ndarray  # every step
    modes: dict  # l -> (n_steps+1, nx) per-step mode series
    axis: np.ndarray  # (n_steps+1, nx) per-step Psi(x, 0, t)
    norms: np.ndarray
    leakage: np.ndarray  # boundary-band mass fraction per step
    leak_threshold: float
    meta: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return bool(self.leakage.max() <= self.leak_threshold)


def comb_solve(psi0: CombField, H: Operator, dt: float, n_steps: int, save_stride: int = 1, *,
               absorber: Absorber | None = None, scheme: str = "strang", record_modes=(0.0,),
               leak_threshold: float = 1e-6, leak_band: float = 0.01,
               abort_on_leak: bool = False) -> CombTrajectory:
    """Evolve psi0 and keep snapshots every ``save_stride`` steps.

    Axis values, total norm, boundary-band mass and the requested y-modes are
    recorded at every step.
    """
    _check_dims(psi0, H)
    if int(n_steps) != n_steps or n_steps < 1 or int(save_stride) != save_stride or save_stride < 1:
        raise InvalidInputError("n_steps and save_stride must be positive integers")
    nx, ny = psi0.shape
    dx, dy = psi0.dx, psi0.dy
    stepper = SCHEMES[scheme](H, dx, dy, ny, psi0.hbar, dt, absorber)
    y = centered_axis(ny, dy)
    idx = {float(l): mode_index(ny, dy, l) for l in record_modes}
    phases = {l: np.exp(-1j * l * y) * dy for l in idx}
    v = np.array(psi0.values)
    j0 = ny // 2
    n0 = psi0.norm() ** 2
    axis = np.empty((n_steps + 1, nx), complex)
    modes = {l: np.empty((n_steps + 1, nx), complex) for l in idx}
    norms = np.empty(n_steps + 1)
    leak = np.empty(n_steps + 1)

    def record(k, v):
        axis[k] = v[:, j0]
        for l, ph in phases.items():
            modes[l][k] = v @ ph
        norms[k] = math.sqrt(float(np.sum(np.abs(v) ** 2)) * dx * dy)
        leak[k] = band_mass(v, dx, dy, leak_band) / max(n0, 1e-300)

    record(0, v)
    snaps, times = [psi0], [0.0]
    for k in range(1, n_steps + 1):
        v = stepper.step(v)
        record(k, v)
        if abort_on_leak and leak[k] > leak_threshold:
            raise BoundaryLeakageError(f"boundary band mass exceeded at step {k}", leak[k])
        if k % save_stride == 0:
            snaps.append(psi0.replace(v.copy()))
            times.append(k * dt)
    return CombTrajectory(np.array(times), snaps, dt, dt * np.arange(n_steps + 1), modes, axis,
                          norms, leak, leak_threshold,
                          meta={"scheme": scheme, "absorber": absorber, "shape": (nx, ny)})


def axis_slice(field_: CombField) -> np.ndarray:
    """Psi(x, 0) (the row coupled to H)."""
    return np.array(field_.values[:, field_.axis_index])


@dataclass(frozen=True, eq=False)
class ModeTrajectory:
    mode_l: float
    times: np.ndarray
    fields: np.ndarray  # (nt, nx)


def mode_trajectory(traj: CombTrajectory, mode_l: float) -> ModeTrajectory:
    """The y-Fourier mode l of every saved snapshot."""
    f0 = traj.snapshots[0]
    m = mode_index(f0.shape[1], f0.dy, mode_l)
    vals = np.array([mode_spectrum(s.values, s.dy)[:, m] for s in traj.snapshots])
    return ModeTrajectory(float(mode_l), np.array(traj.times), vals)


def recorded_mode(traj: CombTrajectory, mode_l: float) -> ModeTrajectory:
    """Per-step mode series recorded during the run (finer than the snapshots)."""
    if float(mode_l) not in traj.modes:
        raise InvalidInputError(f"mode {mode_l} was not recorded")
    return ModeTrajectory(float(mode_l), traj.step_times, traj.modes[float(mode_l)])


def zero_mode_fraction(field_: CombField) -> float:
    """(dl/2 pi) ||Psi_bar_0||^2 / ||Psi||^2: the share of the norm in the l = 0 sector."""
    nx, ny = field_.shape
    m0 = field_.values.sum(axis=1) * field_.dy
    dl = 2 * np.pi / (ny * field_.dy)
    num = dl / (2 * np.pi) * np.sum(np.abs(m0) ** 2) * field_.dx
    return float(num / field_.norm() ** 2)


# Initial data ----------------------------------------------------------------

def axis_gaussian_field(g, dx: float, ny: int, dy: float, hbar: float = 1.0,
                        width: float | None = None) -> CombField:
    """Separable Psi0 = g(x) exp(-y^2 / (2 w^2)); w defaults to dy/10, in effect a grid delta."""
    w = 0.1 * dy if width is None else width
    y = centered_axis(ny, dy)
    return CombField(np.outer(np.asarray(g, complex), np.exp(-y ** 2 / (2 * w ** 2))), dx, dy, hbar)


# Mode-equation residuals -------------------------------------------------------

@dataclass(eq=False)
class ResidualReport:
    form: str
    abscissa: np.ndarray  # s samples or times
    residuals: dict  # variant -> relative residual per abscissa entry
    summary: dict  # variant -> scalar (max over abscissa)


def _apply_rows(H: Operator, rows):
    return H.apply(np.asarray(rows).T).T


def default_s_samples(T: float, n: int = 8) -> np.ndarray:
    """n points on the line Re(s) = 24/T (so T Re(s) > 20), spread in Im(s)."""
    sig = 24.0 / T
    return sig * (1 + 0.5j * np.arange(n))


def lattice_kernel(s: complex, l, ny: int, dy: float, hbar: float = 1.0):
    """Grid analogue of the y-Fourier kernel for a grid delta on a periodic y lattice.

    With spectral y-kinetics every lattice mode obeys the same Laplace relation,
    so Psi_bar_l / Psi(0) = 1/(k (i hbar s - hbar^2 l^2/2)), k = (1/L) sum_m 1/(i hbar s - hbar^2 l_m^2/2).
    As dy -> 0 and L -> inf this tends to kernel_fourier(..., "derived").
    """
    lm = y_wavenumbers(ny, dy)
    k = np.sum(1.0 / (1j * hbar * s - 0.5 * hbar ** 2 * lm ** 2)) / (ny * dy)
    return 1.0 / (k * (1j * hbar * s - 0.5 * hbar ** 2 * np.asarray(l, float) ** 2))


def mode_equation_residual(traj: ModeTrajectory, H: Operator, hbar: float, axis,
                           form: str = "exact_laplace", s_samples=None,
                           lattice: tuple[int, float] | None = None) -> ResidualReport:
    """Relative residuals of the closed mode equations on simulated data.

    exact_laplace: i hbar (s M - M(0)) - H [M / K(s,l)] - (hbar^2 l^2/2) M for both
        kernel signs, plus the un-closed equation with the simulated axis values
        ("axis") and, given ``lattice=(ny, dy)``, the closure with the grid
        kernel ("lattice"). M and the axis values are Laplace transforms of the series.
    ftse_l0: (i hbar)^{1/2} D^{1/2} Psi_bar_0 -/+ (i/(sqrt2 hbar)) H Psi_bar_0, per time.
    comb_ftse_printed: the l-dependent comb equation exactly as printed, per time.
    """
    fields = np.asarray(traj.fields, dtype=complex)
    axis = np.asarray(axis, dtype=complex)
    t = np.asarray(traj.times, dtype=float)
    if fields.shape != axis.shape:
        raise InvalidInputError("mode series and axis series must share times and grid")
    if t.size < 9:
        raise InvalidInputError("time series too short for residual evaluation")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0):
        raise InvalidInputError("times must be uniform")
    l = traj.mode_l
    if form == "exact_laplace":
        T = t[-1]
        s_list = default_s_samples(T) if s_samples is None else np.asarray(s_samples, complex)
        if np.any(s_list.real * T < 20):
            raise InvalidInputError("time window too short for the requested s samples (T Re s < 20)")
        res = {"derived": [], "paper": [], "axis": []}
        if lattice is not None:
            res["lattice"] = []
        for s in s_list:
            M = laplace_series(fields, dt, s)
            A = laplace_series(axis, dt, s)
            lhs = 1j * hbar * (s * M - fields[0])
            lterm = 0.5 * hbar ** 2 * l ** 2 * M
            scale0 = max(np.linalg.norm(1j * hbar * s * M), np.linalg.norm(1j * hbar * fields[0]))
            kernels = {c: kernel_fourier(s, l, hbar, c) for c in ("derived", "paper")}
            if lattice is not None:
                kernels["lattice"] = lattice_kernel(s, l, lattice[0], lattice[1], hbar)
            for conv, K in kernels.items():
                HA = H.apply(M / K)
                scale = max(scale0, np.linalg.norm(HA), 1e-300)
                res[conv].append(np.linalg.norm(lhs - HA - lterm) / scale)
            HA = H.apply(A)
            scale = max(scale0, np.linalg.norm(HA), 1e-300)
            res["axis"].append(np.linalg.norm(lhs - HA - lterm) / scale)
        res = {k: np.array(v) for k, v in res.items()}
        return ResidualReport(form, s_list, res, {k: float(v.max()) for k, v in res.items()})

    pre = (1j * hbar) ** 0.5
    lhs = pre * np.array([caputo_deriv(SampledFunction(0.0, dt, fields[:, i]), 0.5).values
                          for i in range(fields.shape[1])]).T
    HM = _apply_rows(H, fields)
    if form == "ftse_l0":
        variants = {"minus_i": -1j / (math.sqrt(2) * hbar) * HM,
                    "plus_i": 1j / (math.sqrt(2) * hbar) * HM}
    elif form == "comb_ftse_printed":
        IHM = np.array([frac_integral(SampledFunction(0.0, dt, HM[:, i]), 1.0).values
                        for i in range(HM.shape[1])]).T
        variants = {"printed": -l ** 2 / (2 * math.sqrt(2)) * IHM + 1j / (math.sqrt(2) * hbar) * HM
                    + 0.5 * hbar ** 2 * l ** 2 * fields}
    else:
        raise InvalidInputError(f"unknown residual form {form!r}")
    res = {}
    for k, rhs in variants.items():
        num = np.linalg.norm(lhs - rhs, axis=1)
        den = np.maximum(np.maximum(np.linalg.norm(lhs, axis=1), np.linalg.norm(rhs, axis=1)), 1e-300)
        r = np.where(np.linalg.norm(fields, axis=1) > 0, num / den, 0.0)
        res[k] = r
    return ResidualReport(form, t, res, {k: float(v[1:].max()) for k, v in res.items()})


# Direct time-domain solution of the sourced delta-potential problem ----------------

def delta_green_direct(lam: float, ys, times, hbar: float = 1.0, *, length: float = 80.0,
                       n: int = 8000, dt: float = 1e-3, startup_steps: int = 10, substeps: int = 4,
                       absorber_fraction: float = 0.25, source_width: float = 0.0) -> np.ndarray:
    """G(y, t) for i hbar G_t = -(hbar^2/2) G_yy + lam delta(y) G with a unit source at t = 0.

    G is even in y, so the point coupling becomes the jump condition
    hbar^2 G_y(0+) = lam G(0). The free part of the source (a Gaussian of
    width ``source_width``, or the point limit 0) is evolved in closed form;
    the remainder starts from zero and is advanced by Crank-Nicolson finite
    differences on [0, length] with an absorbing layer, after ``startup_steps``
    steps each split into ``substeps`` backward-Euler steps to damp the start-up
    transient. Returns an array of shape (len(times), len(ys)).
    """
    ys = np.abs(np.asarray(ys, dtype=float))
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise InvalidInputError("times must be positive")
    h = length / n
    if ys.max() > (1 - absorber_fraction) * length:
        raise InvalidInputError("requested |y| lies inside the absorbing layer")
    yy = h * np.arange(n)
    c = hbar ** 2 / h ** 2
    main = np.full(n, c, complex)
    main[0] += lam / h
    up = np.full(n - 1, -0.5 * c)
    up[0] = -c
    lo = np.full(n - 1, -0.5 * c)
    e = absorber_fraction * length
    d = np.clip(yy - (length - e), 0, None) / e
    main = main - 10j * d ** 2
    A = sp.diags([lo, main, up], [-1, 0, 1], format="csc")
    I = sp.identity(n, dtype=complex, format="csc")
    cn_lu = splu((I + 0.5j * dt / hbar * A).tocsc())
    cn_rhs = (I - 0.5j * dt / hbar * A).tocsr()
    hs = dt / substeps
    be_lu = splu((I + 1j * hs / hbar * A).tocsc())
    w2 = source_width ** 2

    def F(t):  # integral of the free solution at y = 0
        return math.sqrt(2 / math.pi) * np.sqrt(w2 + 1j * hbar * t) / (1j * hbar)

    def free(y, t):
        a = w2 + 1j * hbar * t
        return np.exp(-y ** 2 / (2 * a)) / np.sqrt(2 * np.pi * a)

    want = {int(round(tt / dt)): i for i, tt in enumerate(times)}
    if any(abs(k * dt - times[i]) > 1e-9 * max(1, times[i]) for k, i in want.items()):
        raise InvalidInputError("times must be multiples of dt")
    out = np.empty((times.size, ys.size), complex)
    phi = np.zeros(n, complex)
    kf = lam / (hbar * h)
    for k in range(max(want) + 1 if want else 0):
        t0 = k * dt
        if k < startup_steps:
            for j in range(substeps):
                a = t0 + j * hs
                r = phi.copy()
                r[0] -= 1j * kf * (F(a + hs) - F(a))
                phi = be_lu.solve(r)
        else:
            r = cn_rhs @ phi
            r[0] -= 1j * kf * (F(t0 + dt) - F(t0))
            phi = cn_lu.solve(r)
        if k + 1 in want:
            tt = (k + 1) * dt
            out[want[k + 1]] = np.interp(ys, yy, phi.real) + 1j * np.interp(ys, yy, phi.imag) + free(ys, tt)
    return out
