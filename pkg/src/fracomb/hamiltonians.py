"""Finite-difference axis Hamiltonian H = -(hbar^2/2) d^2/dx^2 + V(x)."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import InvalidInputError
from .fraccalc import SampledFunction
from .grids import XGrid

KINDS = ("free", "harmonic", "tabulated")
BOUNDARIES = ("periodic", "dirichlet")


@dataclass(frozen=True)
class HamiltonianSpec:
    kind: str
    x_grid: XGrid
    hbar: float = 1.0
    boundary: str = "periodic"
    potential: SampledFunction | None = None
    omega: float = 1.0  # harmonic V = omega^2 x^2 / 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.boundary not in BOUNDARIES:
            raise InvalidInputError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if not self.hbar > 0:
            raise InvalidInputError("hbar must be positive")
        if self.x_grid.n < 16:
            raise InvalidInputError("Hamiltonian grid needs at least 16 points")
        if self.kind == "tabulated":
            p = self.potential
            if p is None:
                raise InvalidInputError("tabulated kind needs a potential")
            g = self.x_grid
            if (len(p) != g.n or not np.isclose(p.step, g.step, rtol=1e-9)
                    or not np.isclose(p.start, g.start, rtol=1e-9, atol=1e-12 * g.step)):
                raise InvalidInputError("tabulated potential grid does not match x_grid")
            if np.any(np.abs(p.values.imag) > 0):
                raise InvalidInputError("potential must be real")

    def potential_values(self) -> np.ndarray:
        x = self.x_grid.points
        if self.kind == "free":
            return np.zeros_like(x)
        if self.kind == "harmonic":
            return 0.5 * self.omega ** 2 * x ** 2
        return self.potential.values.real.copy()


class Operator:
    """Matrix-free linear operator on complex vectors of length ``n``."""

    n: int

    def apply(self, psi):
        raise NotImplementedError

    def matrix(self) -> sp.csc_matrix:
        raise NotImplementedError

    def __call__(self, psi):
        return self.apply(psi)


@dataclass(frozen=True, eq=False)
class Hamiltonian(Operator):
    spec: HamiltonianSpec
    V: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.x_grid.n

    @property
    def kinetic_coeff(self) -> float:
        # -(hbar^2/2) / dx^2 multiplies the second difference
        return 0.5 * self.spec.hbar ** 2 / self.spec.x_grid.step ** 2

    def apply(self, psi):
        psi = np.asarray(psi)
        if psi.shape[0] != self.n:
            raise InvalidInputError(f"vector length {psi.shape[0]} != grid size {self.n}")
        c = self.kinetic_coeff
        if self.spec.boundary == "periodic":
            lap = np.roll(psi, 1, axis=0) + np.roll(psi, -1, axis=0)
        else:
            lap = np.zeros_like(psi)
            lap[1:] += psi[:-1]
            lap[:-1] += psi[1:]
        V = self.V if psi.ndim == 1 else self.V[:, None]
        return c * (2 * psi - lap) + V * psi

    def matrix(self) -> sp.csc_matrix:
        n, c = self.n, self.kinetic_coeff
        m = sp.diags([np.full(n - 1, -c), 2 * c + self.V, np.full(n - 1, -c)], [-1, 0, 1], format="lil")
        if self.spec.boundary == "periodic":
            m[0, n - 1] = -c
            m[n - 1, 0] = -c
        return m.tocsc()

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()


@dataclass(frozen=True, eq=False)
class ScaledOperator(Operator):
    """``factor * base``; used for the generally non-Hermitian FTSE generator."""

    base: Operator
    factor: complex

    @property
    def n(self) -> int:
        return self.base.n

    def apply(self, psi):
        return self.factor * self.base.apply(psi)

    def matrix(self):
        return (self.factor * self.base.matrix()).tocsc()


@dataclass(frozen=True, eq=False)
class MatrixOperator(Operator):
    mat: sp.spmatrix

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def apply(self, psi):
        psi = np.asarray(psi)
        if psi.shape[0] != self.n:
            raise InvalidInputError(f"vector length {psi.shape[0]} != operator size {self.n}")
        return self.mat @ psi

    def matrix(self):
        return sp.csc_matrix(self.mat)


def build_hamiltonian(spec: HamiltonianSpec) -> Hamiltonian:
    V = spec.potential_values()
    V.setflags(write=False)
    return Hamiltonian(spec, V)


def apply_hamiltonian(H: Operator, psi) -> np.ndarray:
    return H.apply(psi)


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    psi: np.ndarray


def eigenpairs(spec: HamiltonianSpec, count: int) -> list[EigenPair]:
    """Lowest ``count`` eigenpairs by dense symmetric solve; vectors have unit Euclidean norm."""
    n = spec.x_grid.n
    if not 1 <= count <= n:
        raise InvalidInputError(f"count must lie in [1, {n}], got {count}")
    if n > 2048:
        raise InvalidInputError("dense eigensolve is limited to grids of at most 2048 points")
    H = build_hamiltonian(spec)
    w, v = sla.eigh(H.dense(), subset_by_index=(0, count - 1))
    return [EigenPair(float(w[k]), v[:, k].astype(complex)) for k in range(count)]


def load_potential_csv(path) -> SampledFunction:
    """Two-column (x, V) CSV with optional header; x must be strictly increasing and uniform."""
    xs, vs = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise InvalidInputError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError:
                if lineno == 1 and not xs:
                    continue  # header
                raise InvalidInputError(f"{path}:{lineno}: non-numeric entry {row!r}") from None
    x = np.array(xs)
    if x.size < 2:
        raise InvalidInputError(f"{path}: need at least 2 rows")
    if np.any(np.diff(x) <= 0):
        k = int(np.argmax(np.diff(x) <= 0)) + 1
        raise InvalidInputError(f"{path}: x not strictly increasing at data row {k + 1}")
    return SampledFunction.from_grid(x, np.array(vs))
