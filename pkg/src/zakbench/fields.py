"""Scalar fields on a periodic grid, tagged by the space they live in."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractViolation, RealityViolation
from .grid import Grid

__all__ = ["Space", "Field", "physical_field", "spectral_field", "zero_field", "real_part"]


class Space(str, Enum):
    PHYSICAL = "physical"
    SPECTRAL = "spectral"


@dataclass(frozen=True)
class Field:
    """Complex scalar samples on a grid, in physical or spectral space.

    Fields are treated as immutable values: operations allocate new
    arrays and never write through ``values``.
    """

    grid: Grid
    values: np.ndarray
    space: Space

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ContractViolation(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def require(self, space: Space) -> None:
        if self.space != space:
            raise ContractViolation(f"expected a {space.value} field, got {self.space.value}")

    def with_values(self, values: np.ndarray, space: Space | None = None) -> "Field":
        return Field(self.grid, values, self.space if space is None else space)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.space)

    def l2(self) -> float:
        """Plain discrete l2 norm (no quadrature weight)."""
        return float(np.linalg.norm(self.values.ravel()))

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def mean(self) -> complex:
        return complex(np.mean(self.values))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __add__(self, other: "Field") -> "Field":
        self._check_compatible(other)
        return Field(self.grid, self.values + other.values, self.space)

    def __sub__(self, other: "Field") -> "Field":
        self._check_compatible(other)
        return Field(self.grid, self.values - other.values, self.space)

    def __mul__(self, scalar) -> "Field":
        return Field(self.grid, self.values * scalar, self.space)

    __rmul__ = __mul__

    def _check_compatible(self, other: "Field") -> None:
        if self.grid != other.grid or self.space != other.space:
            raise ContractViolation("fields live on different grids or spaces")


def physical_field(grid: Grid, values: np.ndarray) -> Field:
    return Field(grid, np.asarray(values, dtype=np.complex128), Space.PHYSICAL)


def spectral_field(grid: Grid, values: np.ndarray) -> Field:
    return Field(grid, np.asarray(values, dtype=np.complex128), Space.SPECTRAL)


def zero_field(grid: Grid, space: Space = Space.PHYSICAL) -> Field:
    return Field(grid, np.zeros(grid.shape, dtype=np.complex128), space)


def real_part(f: Field, rel_tol: float = 1e-10) -> np.ndarray:
    """Real values of a field that must be real, enforcing the tolerance.

    The imaginary residue is measured relative to the max magnitude; a
    zero field passes trivially.
    """
    scale = float(np.max(np.abs(f.values)))
    if scale > 0.0:
        residue = float(np.max(np.abs(f.values.imag))) / scale
        if residue > rel_tol:
            raise RealityViolation(
                f"imaginary residue {residue:.3e} exceeds tolerance {rel_tol:.1e}"
            )
    return f.values.real.copy()
