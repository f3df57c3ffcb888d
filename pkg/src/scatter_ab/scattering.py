"""The operator AB and its integration-by-parts decomposition.

``AB u(z) = (1/4 pi^2) int_Omega e(zeta) / (z - zeta) * F(zeta) dm(zeta)`` with
``e(zeta) = exp(-k zeta + conj(k zeta))`` and the inner transform
``F(zeta) = int_Omega u(w) / (conj(zeta) - conj(w)) / e(w) dm(w)``.

Moving the ``zeta`` derivative off the exponential gives

    -8 i pi^2 AB u = (I + II + III) / k

with a principal-value area term ``I``, the local term ``II`` coming from
``d/dzeta`` of the inner transform, and a boundary term ``III``.  The
forms ``dzeta ^ dconj(zeta)`` are converted with ``= -2i dm``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import BoundaryQuadrature, GridSpec, boundary_quadrature, rasterize, DomainSpec
from .functions import GridFunction
from .operators import beurling, beurling_indicator, cauchy, conj_cauchy, modulate, modulation_factor, safe_nodes
from .quadrature import KernelId, point_evaluate, point_sources

logger = logging.getLogger(__name__)

DEFAULT_THETA = 0.5
# boundary nodes per cell width; keeps the near-singular boundary sums resolved
# for targets half a cell away from the curve
BOUNDARY_NODES_PER_CELL = 8.0


class OscillationError(ValueError):
    """The wave number is not resolved by the grid (``|k| h > theta``)."""


class DecompositionError(ValueError):
    """The decomposition divides by ``k`` and needs ``k != 0``."""


def check_resolution(k: complex, h: float, theta: float = DEFAULT_THETA) -> None:
    if abs(k) * h > theta:
        raise OscillationError(
            f"oscillation guard violated: |k|*h = {abs(k) * h:.4g} > theta = {theta:g}")


def _require_restricted(u: GridFunction) -> None:
    if not u.restricted:
        raise ValueError("u must be mask-restricted to the domain")


def default_boundary(domain: DomainSpec, grid: GridSpec) -> BoundaryQuadrature:
    return boundary_quadrature(domain, BOUNDARY_NODES_PER_CELL / grid.h)


def inner_transform(u: GridFunction, k: complex, target: GridSpec | None = None) -> GridFunction:
    """``zeta -> int u(w) exp(k w - conj(k w)) / (conj zeta - conj w) dm(w)``.

    Evaluated on the whole ``target`` grid (default: ``u``'s grid).
    """
    _require_restricted(u)
    return conj_cauchy(modulate(u, k, -1), target)


def ab_outer(inner: GridFunction, k: complex, eval_grid: GridSpec) -> GridFunction:
    """Outer integral of AB given the inner transform sampled on the domain cells."""
    g = modulate(inner.masked(), k, +1)
    return cauchy(g, eval_grid) / (4.0 * math.pi ** 2)


def ab_direct(u: GridFunction, k: complex, eval_grid: GridSpec | None = None,
              theta: float | None = DEFAULT_THETA) -> GridFunction:
    """AB u on ``eval_grid`` through two lattice convolutions."""
    _require_restricted(u)
    eval_grid = u.grid if eval_grid is None else eval_grid
    if theta is not None:
        check_resolution(k, u.grid.h, theta)
    src = u.on(u.grid.interior_grid())
    return ab_outer(inner_transform(src, k), k, eval_grid)


def ab_bruteforce(u: GridFunction, k: complex, points: np.ndarray) -> np.ndarray:
    """Literal double sum over cell pairs ``(zeta, w)`` at lattice points ``points``.

    Pairs with ``w == zeta`` and the cell ``zeta == z`` are omitted, which is the
    lattice version of the zero self-cell weights.  Meant as a slow oracle.
    """
    _require_restricted(u)
    h2 = u.grid.cell_area
    mask = u.grid.mask
    zc = u.grid.centers()[mask]
    uw = u.values[mask]
    h = u.grid.h
    out = np.empty(len(points), dtype=complex)
    for n, z in enumerate(np.asarray(points, dtype=complex)):
        total = 0j
        for i0 in range(0, len(zc), 512):
            zeta = zc[i0:i0 + 512, None]
            d = zeta.conj() - zc[None, :].conj()
            same = np.abs(d) < 1e-9 * h
            d = np.where(same, 1.0, d)
            expo = -k * (zeta - zc[None, :]) + np.conj(k) * (zeta.conj() - zc[None, :].conj())
            pair = np.exp(expo) * uw[None, :] / d
            pair[same] = 0.0
            outer = z - zeta[:, 0]
            skip = np.abs(outer) < 1e-9 * h
            outer = np.where(skip, 1.0, outer)
            rows = pair.sum(axis=1) / outer
            rows[skip] = 0.0
            total += rows.sum()
        out[n] = total * h2 * h2 / (4.0 * math.pi ** 2)
    return out


def _inner_cells(u: GridFunction, k: complex) -> GridFunction:
    src = u.on(u.grid.interior_grid())
    return inner_transform(src, k).masked()


def term_I(u: GridFunction, k: complex, eval_grid: GridSpec | None = None,
           inner: GridFunction | None = None,
           boundary: BoundaryQuadrature | None = None) -> GridFunction:
    """``I(z) = -2i * p.v. int_Omega e(zeta) F(zeta) / (z - zeta)^2 dm``.

    With ``boundary`` given, targets inside the domain use singularity
    subtraction: the density ``g = e F`` is split as ``(g - g(z)) + g(z)``
    and the constant part uses the exact p.v. transform of the polygon
    indicator.  This removes the O(1) lattice defect of the plain p.v. sum
    in the cell row next to an edge.
    """
    _require_restricted(u)
    eval_grid = u.grid if eval_grid is None else eval_grid
    inner = _inner_cells(u, k) if inner is None else inner
    dens = modulate(inner, k, +1)
    out = beurling(dens, eval_grid).values
    if boundary is not None:
        m = eval_grid.mask
        here = dens.on(eval_grid).values[m]
        ones = GridFunction(dens.grid, np.ones(dens.grid.shape), restricted=True)
        defect = beurling(ones, eval_grid).values[m] - beurling_indicator(
            boundary.segments, eval_grid.centers()[m])
        out = out.copy()
        out[m] -= here * defect
    return GridFunction(eval_grid, out * (-2j))


def term_II(u: GridFunction, eval_grid: GridSpec | None = None) -> GridFunction:
    """``II(z) = pi int_Omega u / (z - zeta) dzeta ^ dconj(zeta) = -2 pi i cauchy(u)``."""
    _require_restricted(u)
    eval_grid = u.grid if eval_grid is None else eval_grid
    return cauchy(u, eval_grid) * (-2j * math.pi)


def boundary_inner(u: GridFunction, k: complex, nodes: np.ndarray) -> np.ndarray:
    """Inner transform evaluated at off-lattice boundary nodes."""
    return point_evaluate(KernelId.CONJ_CAUCHY, modulate(u, k, -1), nodes)


def term_III(u: GridFunction, k: complex, bq: BoundaryQuadrature,
             eval_grid: GridSpec | None = None, integrand=None) -> GridFunction:
    """``III(z) = -oint e(zeta) F(zeta) / (z - zeta) dconj(zeta)``.

    ``integrand`` replaces ``e * F`` at the nodes when given (a hook for
    closed-curve checks).
    """
    _require_restricted(u)
    eval_grid = u.grid if eval_grid is None else eval_grid
    nodes = safe_nodes(bq, u.grid)
    if integrand is None:
        integrand = modulation_factor(nodes, k, +1) * boundary_inner(u, k, nodes)
    else:
        integrand = np.broadcast_to(np.asarray(integrand, dtype=complex), nodes.shape)
    charges = -integrand * np.conj(bq.tangents) * bq.weights
    return point_sources(KernelId.CAUCHY, nodes, charges, eval_grid)


def term_III_integrand(u: GridFunction, k: complex, bq: BoundaryQuadrature) -> np.ndarray:
    nodes = safe_nodes(bq, u.grid)
    return modulation_factor(nodes, k, +1) * boundary_inner(u, k, nodes)


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    term_I: GridFunction
    term_II: GridFunction
    term_III: GridFunction
    k: complex
    assembled: GridFunction = field(init=False)

    def __post_init__(self):
        if self.k == 0:
            raise DecompositionError("decomposition divides by k; k must be nonzero")
        total = self.term_I.values + self.term_II.values + self.term_III.values
        object.__setattr__(self, "assembled",
                           GridFunction(self.term_I.grid, total / (-8j * math.pi ** 2 * self.k)))


def decompose(u: GridFunction, k: complex, bq: BoundaryQuadrature,
              eval_grid: GridSpec | None = None, theta: float | None = DEFAULT_THETA
              ) -> DecompositionResult:
    if k == 0:
        raise DecompositionError("decomposition divides by k; k must be nonzero")
    _require_restricted(u)
    if theta is not None:
        check_resolution(k, u.grid.h, theta)
    eval_grid = u.grid if eval_grid is None else eval_grid
    inner = _inner_cells(u, k)
    return DecompositionResult(
        term_I=term_I(u, k, eval_grid, inner=inner, boundary=bq),
        term_II=term_II(u, eval_grid),
        term_III=term_III(u, k, bq, eval_grid),
        k=k,
    )


@dataclass(frozen=True)
class IdentityReport:
    """Relative residuals of ``AB u - (I + II + III) / (-8 i pi^2 k)`` over the domain."""

    k: complex
    ns: tuple[int, ...]
    hs: tuple[float, ...]
    residuals: tuple[float, ...]
    orders: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "k": [self.k.real, self.k.imag],
            "n": list(self.ns),
            "h": list(self.hs),
            "residuals": list(self.residuals),
            "orders": list(self.orders),
        }


def identity_residual(u: GridFunction, k: complex, bq: BoundaryQuadrature,
                      eval_grid: GridSpec | None = None,
                      theta: float | None = DEFAULT_THETA) -> float:
    """Relative L2 residual of the decomposition over ``eval_grid`` cells inside the domain."""
    if k == 0:
        raise DecompositionError("decomposition divides by k; k must be nonzero")
    eval_grid = u.grid if eval_grid is None else eval_grid
    direct = ab_direct(u, k, eval_grid, theta)
    dec = decompose(u, k, bq, eval_grid, theta)
    m = eval_grid.mask
    num = np.linalg.norm((direct.values - dec.assembled.values)[m])
    den = np.linalg.norm(direct.values[m])
    if den == 0.0:
        return 0.0
    return float(num / den)


def verify_identity(domain: DomainSpec, u_factory, k: complex, ns=(64, 128, 256),
                    margin: float = 1.0, theta: float | None = DEFAULT_THETA) -> IdentityReport:
    """Residual of the decomposition at each grid size and the observed orders.

    ``u_factory(grid)`` returns the mask-restricted input sampled on ``grid``.
    """
    if k == 0:
        raise DecompositionError("decomposition divides by k; k must be nonzero")
    res, hs = [], []
    for n in ns:
        grid = rasterize(domain, n, margin)
        u = u_factory(grid)
        bq = default_boundary(domain, grid)
        res.append(identity_residual(u, k, bq, grid, theta))
        hs.append(grid.h)
        logger.info("n=%d h=%.4g residual=%.4g", n, grid.h, res[-1])
    orders = []
    for i in range(1, len(res)):
        if res[i] > 0 and res[i - 1] > 0:
            orders.append(math.log(res[i - 1] / res[i]) / math.log(hs[i - 1] / hs[i]))
        else:
            orders.append(float("inf"))
    return IdentityReport(k=complex(k), ns=tuple(ns), hs=tuple(hs), residuals=tuple(res),
                          orders=tuple(orders))
