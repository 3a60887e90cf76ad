"""Uniform grid descriptors and the 2D comb field container."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class XGrid:
    """``n`` points ``start + j*step``."""

    start: float
    step: float
    n: int

    def __post_init__(self):
        if not (self.step > 0 and np.isfinite(self.step)):
            raise InvalidInputError(f"grid step must be positive, got {self.step}")
        if int(self.n) != self.n or self.n < 2:
            raise InvalidInputError(f"grid needs at least 2 points, got {self.n}")

    @classmethod
    def centered(cls, n: int, length: float) -> "XGrid":
        """Periodic-style grid on [-length/2, length/2) with x = 0 at index n//2."""
        step = length / n
        return cls(-(n // 2) * step, step, int(n))

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n)

    @property
    def length(self) -> float:
        return self.n * self.step


def centered_axis(n: int, step: float) -> np.ndarray:
    return (np.arange(n) - n // 2) * step


@dataclass(frozen=True, eq=False)
class CombField:
    """Psi(x, y) sampled on ``values[i, j]`` with y_j = (j - ny//2) dy.

    The row y = 0 sits at column ``ny // 2``.
    """

    values: np.ndarray
    dx: float
    dy: float
    hbar: float = 1.0
    x_start: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 2 or min(v.shape) < 32:
            raise InvalidInputError(f"comb grid must be 2D and at least 32x32, got {v.shape}")
        if not (self.dx > 0 and self.dy > 0 and self.hbar > 0):
            raise InvalidInputError("dx, dy and hbar must be positive")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.x_start is None:
            object.__setattr__(self, "x_start", -(v.shape[0] // 2) * self.dx)

    @property
    def shape(self):
        return self.values.shape

    @property
    def x(self) -> np.ndarray:
        return self.x_start + self.dx * np.arange(self.shape[0])

    @property
    def y(self) -> np.ndarray:
        return centered_axis(self.shape[1], self.dy)

    @property
    def axis_index(self) -> int:
        return self.shape[1] // 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.dx * self.dy))

    def replace(self, values) -> "CombField":
        return CombField(values, self.dx, self.dy, self.hbar, self.x_start)
