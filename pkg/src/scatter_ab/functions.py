"""Sampled functions on grids and on boundary quadratures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import BoundaryQuadrature, GridSpec


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex cell-centre samples on a :class:`GridSpec`.

    With ``restricted=True`` the values vanish outside the grid mask; the
    constructor enforces this by zeroing those cells.
    """

    grid: GridSpec
    values: np.ndarray
    restricted: bool = False

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function has non-finite entries")
        if self.restricted:
            vals[~self.grid.mask] = 0.0
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: GridSpec, restricted: bool = False) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape, dtype=complex), restricted)

    @classmethod
    def from_callable(cls, grid: GridSpec, func, restricted: bool = True) -> "GridFunction":
        """Sample ``func(z)`` (vectorized over complex ``z``) at cell centres."""
        return cls(grid, func(grid.centers()), restricted)

    def with_values(self, values, restricted: bool | None = None) -> "GridFunction":
        return GridFunction(self.grid, values, self.restricted if restricted is None else restricted)

    def masked(self) -> "GridFunction":
        return GridFunction(self.grid, self.values, restricted=True)

    def on(self, grid: GridSpec) -> "GridFunction":
        """Transfer onto another grid of the same lattice, zero-filling new cells.

        Cells outside the overlap are dropped, so transfer onto a smaller grid
        must not discard nonzero samples.
        """
        sx, sy = self.grid.lattice_shift(grid)
        out = np.zeros(grid.shape, dtype=complex)
        i0, j0 = max(0, sx), max(0, sy)
        i1, j1 = min(grid.nx, sx + self.grid.nx), min(grid.ny, sy + self.grid.ny)
        src = self.values
        kept = 0.0
        if i1 > i0 and j1 > j0:
            block = src[i0 - sx:i1 - sx, j0 - sy:j1 - sy]
            out[i0:i1, j0:j1] = block
            kept = np.count_nonzero(block)
        if kept != np.count_nonzero(src):
            raise ValueError("transfer would drop nonzero samples")
        return GridFunction(grid, out, restricted=self.restricted)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same(self, other)
        return GridFunction(self.grid, self.values + other.values,
                            self.restricted and other.restricted)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same(self, other)
        return GridFunction(self.grid, self.values - other.values,
                            self.restricted and other.restricted)

    def __mul__(self, c: complex) -> "GridFunction":
        return GridFunction(self.grid, c * self.values, self.restricted)

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> "GridFunction":
        return GridFunction(self.grid, self.values / c, self.restricted)

    def conj(self) -> "GridFunction":
        return GridFunction(self.grid, np.conj(self.values), self.restricted)


def _check_same(a: GridFunction, b: GridFunction) -> None:
    if a.grid.key != b.grid.key:
        raise ValueError("grid functions live on different grids")


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Complex samples at the nodes of a :class:`BoundaryQuadrature`."""

    quadrature: BoundaryQuadrature
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.quadrature.size,):
            raise ValueError("boundary function size does not match its quadrature")
        if not np.all(np.isfinite(vals)):
            raise ValueError("boundary function has non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
