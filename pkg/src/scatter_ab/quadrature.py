"""Lattice quadrature for convolution-type integrals over cell-centred grids.

The integral ``int K(z - y) f(y) dm(y)`` is replaced by the sum
``h^2 * sum_j T[z - y_j] f(y_j)`` where ``T`` is the kernel sampled on the
difference lattice and the zero offset holds the integral of ``K`` over
one cell (divided by ``h^2``).  Two evaluation paths share one table: a
direct compensated sum, kept as the reference, and a zero-padded FFT.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.fft

from .domain import GridSpec
from .functions import GridFunction

class KernelId(enum.Enum):
    CAUCHY = "cauchy"            # 1 / eta
    CONJ_CAUCHY = "conj_cauchy"  # 1 / conj(eta)
    BEURLING_PV = "beurling"     # 1 / eta^2, principal value
    RIESZ = "riesz"              # 1 / |eta|


def kernel_values(kernel: KernelId, eta: np.ndarray) -> np.ndarray:
    """Pointwise kernel values; ``eta`` must be nonzero."""
    if kernel is KernelId.CAUCHY:
        return 1.0 / eta
    if kernel is KernelId.CONJ_CAUCHY:
        return 1.0 / np.conj(eta)
    if kernel is KernelId.BEURLING_PV:
        return 1.0 / (eta * eta)
    if kernel is KernelId.RIESZ:
        return (1.0 / np.abs(eta)).astype(complex)
    raise ValueError(f"unknown kernel {kernel!r}")


def self_cell_weight(kernel: KernelId, h: float) -> complex:
    """Integral of the kernel over the centred square of side ``h``.

    The odd Cauchy kernels and the p.v. kernel (which changes sign under a
    quarter turn) integrate to zero; for ``1/|eta|`` the value is
    ``4 ln(1 + sqrt 2) h``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if kernel in (KernelId.CAUCHY, KernelId.CONJ_CAUCHY, KernelId.BEURLING_PV):
        return 0j
    if kernel is KernelId.RIESZ:
        return complex(4.0 * math.log1p(math.sqrt(2.0)) * h)
    raise ValueError(f"unknown kernel {kernel!r}")


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Kernel samples on the offsets between a source and a target grid.

    ``values[m, n]`` belongs to the offset ``((m - nsx + 1 + sx) h,
    (n - nsy + 1 + sy) h)`` where ``(sx, sy)`` is the target origin measured
    from the source origin in cells.
    """

    kernel: KernelId
    source: GridSpec
    target: GridSpec
    values: np.ndarray
    self_weight: complex
    _fft_cache: dict = field(default_factory=dict, repr=False)

    def fft(self, shape: tuple[int, int]) -> np.ndarray:
        if shape not in self._fft_cache:
            self._fft_cache[shape] = scipy.fft.fft2(self.values, s=shape)
        return self._fft_cache[shape]


def build_table(kernel: KernelId, source: GridSpec, target: GridSpec | None = None) -> KernelTable:
    target = source if target is None else target
    sx, sy = target.lattice_shift(source)
    h = source.h
    mx = np.arange(target.nx + source.nx - 1) - (source.nx - 1) + sx
    my = np.arange(target.ny + source.ny - 1) - (source.ny - 1) + sy
    eta = h * (mx[:, None] + 1j * my[None, :])
    zero = eta == 0
    eta_safe = np.where(zero, 1.0, eta)
    vals = kernel_values(kernel, eta_safe)
    w = self_cell_weight(kernel, h)
    vals = np.where(zero, w / (h * h), vals)
    vals.setflags(write=False)
    return KernelTable(kernel, source, target, vals, w)


@functools.lru_cache(maxsize=8)
def _cached_table(kernel: KernelId, skey: tuple, tkey: tuple) -> KernelTable:
    def grid(key):
        origin, h, nx, ny = key
        return GridSpec(origin=origin, h=h, nx=nx, ny=ny, mask=np.zeros((nx, ny), dtype=bool))
    return build_table(kernel, grid(skey), grid(tkey))


def kernel_table(kernel: KernelId, source: GridSpec, target: GridSpec | None = None) -> KernelTable:
    """Shared, cached table for a (kernel, source, target) geometry."""
    target = source if target is None else target
    return _cached_table(kernel, source.key, target.key)


def _check(table: KernelTable, f: GridFunction) -> None:
    if f.grid.key != table.source.key:
        raise ValueError("grid function does not live on the table's source grid")


def _output(table: KernelTable, vals: np.ndarray) -> GridFunction:
    return GridFunction(table.target, vals, restricted=False)


def convolve_direct(table: KernelTable, f: GridFunction) -> GridFunction:
    """Reference path: compensated (Neumaier) sum over sources in row-major order."""
    _check(table, f)
    src = table.source
    ntx, nty = table.target.shape
    acc = np.zeros((ntx, nty), dtype=complex)
    comp = np.zeros((ntx, nty), dtype=complex)
    s = acc.view(np.float64)
    c = comp.view(np.float64)
    T = table.values
    fv = f.values
    for jx in range(src.nx):
        ox = src.nx - 1 - jx
        for jy in np.flatnonzero(fv[jx]):
            oy = src.ny - 1 - jy
            x = (fv[jx, jy] * T[ox:ox + ntx, oy:oy + nty]).view(np.float64)
            t = s + x
            big = np.abs(s) >= np.abs(x)
            c += np.where(big, (s - t) + x, (x - t) + s)
            s[...] = t
    return _output(table, (acc + comp) * src.cell_area)


def fft_shape(table: KernelTable) -> tuple[int, int]:
    return tuple(scipy.fft.next_fast_len(n) for n in table.values.shape)


def convolve_fft(table: KernelTable, f: GridFunction) -> GridFunction:
    """Zero-padded cyclic convolution; same linear map as :func:`convolve_direct`."""
    _check(table, f)
    src = table.source
    shape = fft_shape(table)
    spec = scipy.fft.fft2(f.values, s=shape) * table.fft(shape)
    full = scipy.fft.ifft2(spec)
    ox, oy = src.nx - 1, src.ny - 1
    ntx, nty = table.target.shape
    return _output(table, full[ox:ox + ntx, oy:oy + nty] * src.cell_area)


def convolve(table: KernelTable, f: GridFunction, method: str = "fft") -> GridFunction:
    if method == "fft":
        return convolve_fft(table, f)
    if method == "direct":
        return convolve_direct(table, f)
    raise ValueError(f"unknown convolution method {method!r}")


_KERNEL_CODES = {KernelId.CAUCHY: 0, KernelId.CONJ_CAUCHY: 1, KernelId.BEURLING_PV: 2,
                 KernelId.RIESZ: 3}


@numba.njit(cache=True)
def _p2p(targets, sources, charges, code):
    # out[i] = sum_j K(targets[i] - sources[j]) * charges[j], sources in fixed order
    out = np.zeros(targets.shape[0], dtype=np.complex128)
    for i in range(targets.shape[0]):
        tx = targets[i].real
        ty = targets[i].imag
        acc = 0j
        for j in range(sources.shape[0]):
            dx = tx - sources[j].real
            dy = ty - sources[j].imag
            r2 = dx * dx + dy * dy
            if code == 0:
                k = complex(dx, -dy) / r2
            elif code == 1:
                k = complex(dx, dy) / r2
            elif code == 2:
                k = complex(dx * dx - dy * dy, -2.0 * dx * dy) / (r2 * r2)
            else:
                k = complex(1.0 / np.sqrt(r2), 0.0)
            acc += k * charges[j]
        out[i] = acc
    return out


def point_evaluate(kernel: KernelId, f: GridFunction, points: np.ndarray) -> np.ndarray:
    """``h^2 sum_y K(p - y) f(y)`` at off-lattice points ``p`` (no self-cell rule)."""
    points = np.ascontiguousarray(points, dtype=complex).ravel()
    nz = f.values != 0
    y = np.ascontiguousarray(f.grid.centers()[nz])
    fy = np.ascontiguousarray(f.values[nz])
    if len(y) == 0:
        return np.zeros(points.shape, dtype=complex)
    return _p2p(points, y, fy, _KERNEL_CODES[kernel]) * f.grid.cell_area


def point_sources(kernel: KernelId, points: np.ndarray, charges: np.ndarray,
                  grid: GridSpec) -> GridFunction:
    """``sum_m K(z - p_m) q_m`` at every cell centre ``z`` of ``grid``."""
    points = np.ascontiguousarray(points, dtype=complex).ravel()
    charges = np.ascontiguousarray(charges, dtype=complex).ravel()
    z = np.ascontiguousarray(grid.centers().ravel())
    out = _p2p(z, points, charges, _KERNEL_CODES[kernel])
    return GridFunction(grid, out.reshape(grid.shape))
