"""Named integral operators on grid functions.

All area operators take an optional ``target`` grid on the same lattice;
mask-restricted inputs are cropped to the mask bounding box before the
convolution so that input grids stay small while outputs may cover a
margin box.
"""

from __future__ import annotations

import logging

import numpy as np

from .domain import BoundaryQuadrature, GridSpec
from .functions import BoundaryFunction, GridFunction
from .quadrature import KernelId, convolve, kernel_table, point_evaluate, point_sources

logger = logging.getLogger(__name__)

__all__ = [
    "GridFunction", "BoundaryFunction", "riesz", "beurling", "cauchy", "conj_cauchy",
    "modulate", "modulation_factor", "trace_riesz", "trace_adjoint", "safe_nodes",
    "area_operator",
]


def _source(f: GridFunction) -> GridFunction:
    if not f.restricted:
        return f
    sub = f.grid.interior_grid()
    if sub.key == f.grid.key:
        return f
    i0, j0, nx, ny = f.grid.mask_bounds()
    return GridFunction(sub, f.values[i0:i0 + nx, j0:j0 + ny], restricted=True)


def area_operator(kernel: KernelId, f: GridFunction, target: GridSpec | None = None,
                  method: str = "fft") -> GridFunction:
    """``int K(z - y) f(y) dm(y)`` on ``target`` (default: ``f``'s grid)."""
    target = f.grid if target is None else target
    src = _source(f)
    out = convolve(kernel_table(kernel, src.grid, target), src, method)
    return GridFunction(target, out.values)


def riesz(f: GridFunction, target: GridSpec | None = None, method: str = "fft") -> GridFunction:
    """First-order Riesz potential ``int f(y) / |x - y| dm(y)``."""
    out = area_operator(KernelId.RIESZ, f, target, method)
    if not np.any(f.values.imag):
        out = out.with_values(out.values.real)
    return out


def beurling(f: GridFunction, target: GridSpec | None = None, method: str = "fft") -> GridFunction:
    """Principal-value operator ``p.v. int f(y) / (z - y)^2 dm(y)``."""
    return area_operator(KernelId.BEURLING_PV, f, target, method)


def cauchy(f: GridFunction, target: GridSpec | None = None, method: str = "fft") -> GridFunction:
    """Solid Cauchy transform ``int f(y) / (z - y) dm(y)``."""
    return area_operator(KernelId.CAUCHY, f, target, method)


def conj_cauchy(f: GridFunction, target: GridSpec | None = None, method: str = "fft") -> GridFunction:
    """``int f(w) / (conj z - conj w) dm(w)``, i.e. ``conj(cauchy(conj f))``."""
    return area_operator(KernelId.CONJ_CAUCHY, f, target, method)


def modulation_factor(z: np.ndarray, k: complex, sign: int = 1) -> np.ndarray:
    """``exp(sign * (-k z + conj(k) conj(z)))``; the exponent is ``-2i sign Im(k z)``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    phase = -2.0 * sign * np.imag(k * z)
    return np.exp(1j * phase)


def modulate(f: GridFunction, k: complex, sign: int = 1) -> GridFunction:
    """Multiply by the unimodular factor :func:`modulation_factor` at cell centres."""
    if k == 0:
        return f
    return f.with_values(f.values * modulation_factor(f.grid.centers(), k, sign))


def safe_nodes(bq: BoundaryQuadrature, grid: GridSpec) -> np.ndarray:
    """Boundary nodes, with any node closer than ``h/10`` to a lattice cell centre
    moved by ``h/5`` along its tangent."""
    h = grid.h
    z = bq.nodes
    fx = (z.real - grid.origin[0]) / h - 0.5
    fy = (z.imag - grid.origin[1]) / h - 0.5
    dist = h * np.hypot(fx - np.round(fx), fy - np.round(fy))
    close = dist < h / 10
    if np.any(close):
        logger.info("perturbing %d boundary node(s) lying within h/10 of a cell centre",
                    int(close.sum()))
        z = np.where(close, z + bq.tangents * (h / 5), z)
    return z


def trace_riesz(f: GridFunction, bq: BoundaryQuadrature) -> BoundaryFunction:
    """Riesz potential of ``f`` restricted to the boundary nodes."""
    nodes = safe_nodes(bq, f.grid)
    vals = point_evaluate(KernelId.RIESZ, f, nodes)
    if not np.any(f.values.imag):
        vals = vals.real
    return BoundaryFunction(bq, vals)


def trace_adjoint(g: BoundaryFunction, grid: GridSpec) -> GridFunction:
    """Adjoint of :func:`trace_riesz`: ``sum_nodes g w / |x - node|`` on ``grid``."""
    bq = g.quadrature
    nodes = safe_nodes(bq, grid)
    out = point_sources(KernelId.RIESZ, nodes, g.values * bq.weights, grid)
    if not np.any(g.values.imag):
        out = out.with_values(out.values.real)
    return out


def beurling_indicator(segments: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Closed form of ``p.v. int_Omega dm(y) / (z - y)^2`` for a polygon.

    By Green's formula the area integral equals ``(1/2i) oint conj(y) / (z - y)^2 dy``
    (the excised disk contributes nothing), which integrates exactly on each
    straight edge.  ``segments`` are the counterclockwise edges; points on the
    boundary itself are not allowed.
    """
    z = np.asarray(points, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    for a, b in segments:
        L = b - a
        c = np.conj(L) / L
        w = z - a
        wl = w - L
        out += (np.conj(a) + c * w) * (1.0 / wl - 1.0 / w) + c * np.log(wl / w)
    return out / 2j
