"""Time stepping for the fractional-time Schrodinger equation

    (i hbar)^alpha D_C^alpha psi = H_eff psi,

plus the exact eigenmode (Mittag-Leffler) solution used as its oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.special import gamma, rgamma

from .errors import InvalidInputError, SolverError, UnsupportedOrderError
from .fraccalc import _order, _pow_diff, mittag_leffler
from .hamiltonians import EigenPair, Operator


def principal_power(z: complex, alpha: float) -> complex:
    """z**alpha on the principal branch, so (i)^(1/2) = e^{i pi/4}."""
    return complex(z) ** alpha


@dataclass(frozen=True, eq=False)
class FtseState:
    psi: np.ndarray
    history: tuple = ()  # increments psi_j - psi_{j-1}, j = 1..step_index
    alpha: float = 0.5
    step_index: int = 0
    dt: float = 1e-3
    hbar: float = 1.0

    def __post_init__(self):
        a = _order(self.alpha)
        if a > 1:
            raise UnsupportedOrderError(f"FTSE needs 0 < alpha <= 1, got {a}")
        if not self.dt > 0:
            raise InvalidInputError("dt must be positive")
        if len(self.history) != self.step_index:
            raise InvalidInputError("history length must equal step_index")

    @property
    def t(self) -> float:
        return self.step_index * self.dt


class FtseStepper:
    """Implicit L1 stepper with full history (alpha < 1) or Crank-Nicolson (alpha = 1).

    With ``correction`` the L1 operator gets one starting weight on
    psi_1 - psi_0 that makes it exact for t^alpha, the leading
    non-smooth term of the Mittag-Leffler solution.
    """

    def __init__(self, H_eff: Operator, alpha, dt: float, psi0, *, hbar: float = 1.0,
                 correction: bool = True, capacity: int = 0):
        self.alpha = _order(alpha)
        if self.alpha > 1:
            raise UnsupportedOrderError(f"FTSE needs 0 < alpha <= 1, got {self.alpha}")
        if not dt > 0 or not hbar > 0:
            raise InvalidInputError("dt and hbar must be positive")
        self.H = H_eff
        self.dt, self.hbar, self.correction = float(dt), float(hbar), correction
        self.psi = np.array(psi0, dtype=complex)
        if self.psi.shape != (H_eff.n,):
            raise InvalidInputError(f"psi0 shape {self.psi.shape} != ({H_eff.n},)")
        self.step_index = 0
        self._hist = np.zeros((max(capacity, 16), self.psi.size), dtype=complex)
        M = H_eff.matrix()
        I = sp.identity(self.psi.size, dtype=complex, format="csc")
        pre = principal_power(1j * self.hbar, self.alpha)
        if self.alpha == 1:
            self._cn_rhs = (1j * self.hbar / self.dt * I + 0.5 * M).tocsr()
            self._lu = splu((1j * self.hbar / self.dt * I - 0.5 * M).tocsc())
            return
        a = self.alpha
        self._c = pre * self.dt ** -a * rgamma(2 - a)
        self._b = _pow_diff(np.arange(self._hist.shape[0] + 1, dtype=float), 1 - a)
        self._lu = splu((self._c * I - M).tocsc())
        if correction:
            self._pre = pre * self.dt ** -a
            self._lu1 = splu((self._pre * gamma(1 + a) * I - M).tocsc())
            self._aj = _pow_diff(np.arange(self._hist.shape[0] + 1, dtype=float), a)

    def _grow(self):
        n = self._hist.shape[0]
        self._hist = np.concatenate([self._hist, np.zeros_like(self._hist)])
        k = np.arange(2 * n + 1, dtype=float)
        self._b = _pow_diff(k, 1 - self.alpha)
        if self.correction and self.alpha < 1:
            self._aj = _pow_diff(k, self.alpha)

    def _omega(self, m):
        # Gamma(1+a) minus the L1 value for t^a at t_m, in units of dt^{-a}
        b = self._b[:m]
        aj = self._aj[:m][::-1]  # (m-k)^a - (m-k-1)^a for k = 0..m-1
        return gamma(1 + self.alpha) - float(b @ aj) * rgamma(2 - self.alpha)

    def step(self) -> np.ndarray:
        if self.step_index >= self._hist.shape[0]:
            self._grow()
        m = self.step_index + 1
        psi = self.psi
        if self.alpha == 1:
            new = self._lu.solve(self._cn_rhs @ psi)
        elif self.correction and m == 1:
            new = self._lu1.solve(self._pre * gamma(1 + self.alpha) * psi)
        else:
            rhs = self._c * psi
            if m > 1:
                rhs = rhs - self._c * (self._b[m - 1:0:-1] @ self._hist[:m - 1])
                if self.correction:
                    rhs = rhs - self._pre * self._omega(m) * self._hist[0]
            new = self._lu.solve(rhs)
        if not np.all(np.isfinite(new)):
            raise SolverError("linear solve produced non-finite values", np.inf)
        self._hist[m - 1] = new - psi
        self.psi = new
        self.step_index = m
        return new

    def state(self) -> FtseState:
        hist = tuple(self._hist[j].copy() for j in range(self.step_index))
        return FtseState(self.psi.copy(), hist, self.alpha, self.step_index, self.dt, self.hbar)

    @classmethod
    def from_state(cls, state: FtseState, H_eff: Operator, correction: bool = True) -> "FtseStepper":
        psi0 = state.psi - sum(state.history, np.zeros_like(state.psi))
        st = cls(H_eff, state.alpha, state.dt, psi0, hbar=state.hbar, correction=correction,
                 capacity=state.step_index + 1)
        for j, d in enumerate(state.history):
            st._hist[j] = d
        st.psi = np.array(state.psi, dtype=complex)
        st.step_index = state.step_index
        return st


def ftse_step(state: FtseState, H_eff: Operator, correction: bool = True) -> FtseState:
    """Advance one step; returns a new state with the history extended."""
    st = FtseStepper.from_state(state, H_eff, correction)
    st.step()
    return st.state()


@dataclass(frozen=True, eq=False)
class FtseTrajectory:
    times: np.ndarray
    psi: np.ndarray  # (n_saved, nx)
    alpha: float
    dt: float
    hbar: float
    meta: dict = field(default_factory=dict)


def ftse_solve(psi0, H_eff: Operator, alpha, dt: float, n_steps: int, *, hbar: float = 1.0,
               save_stride: int = 1, correction: bool = True) -> FtseTrajectory:
    if int(n_steps) != n_steps or n_steps < 1:
        raise InvalidInputError(f"n_steps must be a positive integer, got {n_steps}")
    if int(save_stride) != save_stride or save_stride < 1:
        raise InvalidInputError("save_stride must be a positive integer")
    st = FtseStepper(H_eff, alpha, dt, psi0, hbar=hbar, correction=correction, capacity=n_steps)
    times, out = [0.0], [st.psi.copy()]
    for k in range(1, n_steps + 1):
        st.step()
        if k % save_stride == 0:
            times.append(k * dt)
            out.append(st.psi.copy())
    return FtseTrajectory(np.array(times), np.array(out), st.alpha, dt, hbar)


def project(pairs: list[EigenPair], psi) -> np.ndarray:
    return np.array([np.vdot(p.psi, psi) for p in pairs])


def ftse_spectral_solution(pairs: list[EigenPair], coeffs, alpha, hbar: float, t,
                           hamiltonian_scaling: complex = 1.0) -> np.ndarray:
    """sum_k c_k E_alpha(lam_eff_k t^alpha) psi_k, lam_eff = scaling*lam/(i hbar)^alpha.

    ``t`` may be a scalar (returns a vector) or an array (returns one row per time).
    """
    a = _order(alpha)
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (len(pairs),):
        raise InvalidInputError("one coefficient per eigenpair is required")
    lam = np.array([p.lam for p in pairs])
    lam_eff = hamiltonian_scaling * lam / principal_power(1j * hbar, a)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    E = mittag_leffler(a, lam_eff[None, :] * tt[:, None] ** a)
    vecs = np.array([p.psi for p in pairs])  # (k, nx)
    out = (E * coeffs[None, :]) @ vecs
    return out[0] if np.ndim(t) == 0 else out
