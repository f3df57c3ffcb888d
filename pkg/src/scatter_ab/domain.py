"""Polygonal Lipschitz domains, their rasterization and boundary quadrature.

A domain is a simple counterclockwise polygon.  It is rasterized onto a
uniform cell-centred grid (the mask marks cells whose centre lies strictly
inside) and its boundary is discretized by a composite midpoint rule in
arc length.  Complex numbers ``x + iy`` are used for plane points
throughout.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

BUILTIN_DOMAINS = {
    "square": [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
    "lshape": [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)],
}


class DomainError(ValueError):
    """Invalid polygon (degenerate, self-intersecting, ...)."""


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, c) -> bool:
    # c collinear with a-b: is it within the bounding box of the segment?
    return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))


def _segments_intersect(a, b, c, d) -> bool:
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if ((o1 > 0 > o2) or (o1 < 0 < o2)) and ((o3 > 0 > o4) or (o3 < 0 < o4)):
        return True
    return ((o1 == 0 and _on_segment(a, b, c)) or (o2 == 0 and _on_segment(a, b, d))
            or (o3 == 0 and _on_segment(c, d, a)) or (o4 == 0 and _on_segment(c, d, b)))


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """A simple polygon with counterclockwise vertex order.

    Build instances through :func:`build_domain`, which validates the input.
    """

    vertices: np.ndarray
    counterclockwise: bool = True

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return abs(_signed_area(self.vertices))

    @property
    def edges(self) -> np.ndarray:
        """Complex array of shape (V, 2): start and end point of each edge."""
        z = self.vertices[:, 0] + 1j * self.vertices[:, 1]
        return np.stack([z, np.roll(z, -1)], axis=1)

    @property
    def perimeter(self) -> float:
        e = self.edges
        return float(np.sum(np.abs(e[:, 1] - e[:, 0])))

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Strict point-in-polygon test by winding number.

        ``points`` is a complex array of any shape.  Points lying exactly on
        an edge count as outside.
        """
        z = np.asarray(points, dtype=complex)
        px, py = z.real, z.imag
        winding = np.zeros(z.shape, dtype=np.int64)
        on_edge = np.zeros(z.shape, dtype=bool)
        v = self.vertices
        for i in range(len(v)):
            x0, y0 = v[i]
            x1, y1 = v[(i + 1) % len(v)]
            cross = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
            within = ((np.minimum(x0, x1) <= px) & (px <= np.maximum(x0, x1))
                      & (np.minimum(y0, y1) <= py) & (py <= np.maximum(y0, y1)))
            on_edge |= (cross == 0) & within
            up = (y0 <= py) & (y1 > py) & (cross > 0)
            down = (y0 > py) & (y1 <= py) & (cross < 0)
            winding += up.astype(np.int64) - down.astype(np.int64)
        return (winding != 0) & ~on_edge


def build_domain(vertices) -> DomainSpec:
    """Validate a vertex list and return a counterclockwise :class:`DomainSpec`.

    Clockwise input is reversed.  Raises :class:`DomainError` for fewer
    than three vertices, repeated consecutive vertices, zero area or a
    self-intersecting boundary.
    """
    v = np.array(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise DomainError("vertices must be a list of (x, y) pairs")
    if len(v) < 3:
        raise DomainError(f"a polygon needs at least 3 vertices, got {len(v)}")
    if not np.all(np.isfinite(v)):
        raise DomainError("vertex coordinates must be finite")
    nxt = np.roll(v, -1, axis=0)
    if np.any(np.all(v == nxt, axis=1)):
        raise DomainError("repeated consecutive vertices")
    area = _signed_area(v)
    if area == 0.0:
        raise DomainError("polygon has zero area")
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            c, d = v[j], v[(j + 1) % n]
            if _segments_intersect(a, b, c, d):
                raise DomainError(f"polygon is self-intersecting (edges {i} and {j})")
    if area < 0:
        v = v[::-1].copy()
    v.setflags(write=False)
    return DomainSpec(vertices=v, counterclockwise=True)


def load_domain(source: str | Path) -> DomainSpec:
    """Built-in name (``square``, ``lshape``) or a JSON file ``{"vertices": [[x, y], ...]}``."""
    if str(source) in BUILTIN_DOMAINS:
        return build_domain(BUILTIN_DOMAINS[str(source)])
    try:
        with open(source) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"unknown domain {source!r}: not a built-in name "
                          f"({', '.join(BUILTIN_DOMAINS)}) or a readable JSON file ({exc})") from exc
    if not isinstance(data, dict) or "vertices" not in data:
        raise DomainError(f"{source}: expected a JSON object with a 'vertices' key")
    return build_domain(data["vertices"])


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Uniform cell-centred grid.

    Cell ``(i, j)`` has centre ``origin + ((i + 1/2) h, (j + 1/2) h)``; arrays
    on the grid have shape ``(nx, ny)``.  ``mask`` marks cells inside the
    domain and ``margin`` records the bounding-box scale factor used to build
    the grid.
    """

    origin: tuple[float, float]
    h: float
    nx: int
    ny: int
    mask: np.ndarray
    margin: float = 1.0

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        if self.mask.shape != (self.nx, self.ny):
            raise ValueError("mask shape does not match grid")

    @property
    def shape(self) -> tuple[int, int]:
        return self.nx, self.ny

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def n_masked(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def masked_area(self) -> float:
        return self.n_masked * self.cell_area

    @property
    def key(self) -> tuple:
        """Hashable geometry key (the mask is not part of it)."""
        return (self.origin, self.h, self.nx, self.ny)

    def centers(self) -> np.ndarray:
        x = self.origin[0] + (np.arange(self.nx) + 0.5) * self.h
        y = self.origin[1] + (np.arange(self.ny) + 0.5) * self.h
        return x[:, None] + 1j * y[None, :]

    def lattice_shift(self, other: "GridSpec") -> tuple[int, int]:
        """Integer offset (in cells) of this grid's origin relative to ``other``."""
        if not math.isclose(self.h, other.h, rel_tol=1e-12):
            raise ValueError("grids have different spacings")
        sx = (self.origin[0] - other.origin[0]) / self.h
        sy = (self.origin[1] - other.origin[1]) / self.h
        ix, iy = round(sx), round(sy)
        if abs(sx - ix) > 1e-8 or abs(sy - iy) > 1e-8:
            raise ValueError("grids are not aligned to a common lattice")
        return ix, iy

    def subgrid(self, i0: int, j0: int, nx: int, ny: int) -> "GridSpec":
        origin = (self.origin[0] + i0 * self.h, self.origin[1] + j0 * self.h)
        mask = self.mask[i0:i0 + nx, j0:j0 + ny].copy()
        return GridSpec(origin=origin, h=self.h, nx=nx, ny=ny, mask=mask, margin=self.margin)

    def mask_bounds(self) -> tuple[int, int, int, int]:
        """Index window ``(i0, j0, nx, ny)`` of the smallest box holding the mask."""
        ii = np.flatnonzero(self.mask.any(axis=1))
        jj = np.flatnonzero(self.mask.any(axis=0))
        if len(ii) == 0:
            return 0, 0, self.nx, self.ny
        return int(ii[0]), int(jj[0]), int(ii[-1] - ii[0] + 1), int(jj[-1] - jj[0] + 1)

    def interior_grid(self) -> "GridSpec":
        """Sub-grid cropped to the mask bounding box (the operator input grid)."""
        return self.subgrid(*self.mask_bounds())


def rasterize(domain: DomainSpec, n: int, margin: float = 1.0) -> GridSpec:
    """Grid over the bounding box of ``domain`` scaled by ``margin`` about its centre.

    ``n`` is the number of cells along the longer side of the scaled box.
    """
    if n < 8:
        raise ValueError(f"grid size n must be >= 8, got {n}")
    if margin < 1:
        raise ValueError(f"margin must be >= 1, got {margin}")
    x0, y0, x1, y1 = domain.bbox
    w, ht = (x1 - x0) * margin, (y1 - y0) * margin
    h = max(w, ht) / n
    nx = max(1, math.ceil(w / h - 1e-9))
    ny = max(1, math.ceil(ht / h - 1e-9))
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    origin = (cx - 0.5 * nx * h, cy - 0.5 * ny * h)
    proto = GridSpec(origin=origin, h=h, nx=nx, ny=ny,
                     mask=np.zeros((nx, ny), dtype=bool), margin=float(margin))
    mask = domain.contains(proto.centers())
    mask.setflags(write=False)
    return GridSpec(origin=origin, h=h, nx=nx, ny=ny, mask=mask, margin=float(margin))


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    """Arc-length midpoint nodes on a polygonal curve.

    ``tangents`` are unit complex numbers along the curve orientation, so the
    line elements are ``dz = tangent * weight`` and ``d(conj z) =
    conj(tangent) * weight``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    tangents: np.ndarray
    segments: np.ndarray = field(repr=False)
    closed: bool = True

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def length(self) -> float:
        return float(np.sum(np.abs(self.segments[:, 1] - self.segments[:, 0])))

    @property
    def max_spacing(self) -> float:
        return float(self.weights.max())

    def dz(self) -> np.ndarray:
        return self.tangents * self.weights

    def dzbar(self) -> np.ndarray:
        return np.conj(self.tangents) * self.weights


def _segment_quadrature(segments: np.ndarray, density: float, closed: bool) -> BoundaryQuadrature:
    if density <= 0:
        raise ValueError("nodes_per_unit_length must be positive")
    nodes, weights, tangents = [], [], []
    for a, b in segments:
        length = abs(b - a)
        m = max(1, math.ceil(length * density - 1e-12))
        t = (np.arange(m) + 0.5) / m
        nodes.append(a + (b - a) * t)
        weights.append(np.full(m, length / m))
        tangents.append(np.full(m, (b - a) / length))
    return BoundaryQuadrature(nodes=np.concatenate(nodes), weights=np.concatenate(weights),
                              tangents=np.concatenate(tangents), segments=segments, closed=closed)


def boundary_quadrature(domain: DomainSpec, nodes_per_unit_length: float) -> BoundaryQuadrature:
    """Composite midpoint rule on each edge, counterclockwise."""
    return _segment_quadrature(domain.edges, nodes_per_unit_length, closed=True)


def polyline_quadrature(points, nodes_per_unit_length: float) -> BoundaryQuadrature:
    """Midpoint quadrature on an open polyline (used for curve-only measures)."""
    z = np.asarray([complex(x, y) for x, y in points])
    segments = np.stack([z[:-1], z[1:]], axis=1)
    return _segment_quadrature(segments, nodes_per_unit_length, closed=False)


def arc_length_in_ball(segments: np.ndarray, center: complex, r: float) -> float:
    """Exact length of the polygonal curve inside the open disk ``B(center, r)``."""
    a, b = segments[:, 0], segments[:, 1]
    d = b - a
    length = np.abs(d)
    u = d / length
    # project center onto each line: a + t u, t in [0, length]
    t0 = ((center - a) * np.conj(u)).real
    dist2 = abs(center - a) ** 2 - t0 ** 2
    half = np.sqrt(np.clip(r * r - dist2, 0.0, None))
    lo = np.clip(t0 - half, 0.0, length)
    hi = np.clip(t0 + half, 0.0, length)
    return float(np.sum(np.where(dist2 < r * r, hi - lo, 0.0)))


def ball_ratio(segments: np.ndarray, center: complex, r: float) -> float:
    return arc_length_in_ball(segments, center, r) / r


def _van_der_corput(i: int, base: int) -> float:
    q, denom = 0.0, 1.0
    while i > 0:
        denom *= base
        i, rem = divmod(i, base)
        q += rem / denom
    return q


def ball_growth_constant(boundary: BoundaryQuadrature, sample_centers: int, sample_radii: int) -> float:
    """Sampled lower estimate of ``sup_{x,r} mu(B(x, r)) / r`` for arc length ``mu``.

    Centres alternate between points on the curve and points in an enlarged
    bounding box; centres and radii follow nested low-discrepancy sequences,
    so the estimate is nondecreasing in both sample counts.
    """
    if sample_centers < 1 or sample_radii < 1:
        raise ValueError("sample counts must be positive")
    seg = boundary.segments
    total = boundary.length
    pts = np.concatenate([seg[:, 0], seg[:, 1]])
    x0, x1 = pts.real.min(), pts.real.max()
    y0, y1 = pts.imag.min(), pts.imag.max()
    diam = max(math.hypot(x1 - x0, y1 - y0), 1e-300)
    cum = np.concatenate([[0.0], np.cumsum(np.abs(seg[:, 1] - seg[:, 0]))])

    def on_curve(s: float) -> complex:
        k = min(int(np.searchsorted(cum, s, side="right") - 1), len(seg) - 1)
        a, b = seg[k]
        return a + (b - a) * (s - cum[k]) / abs(b - a)

    centers = []
    for i in range(sample_centers):
        m = i // 2
        if i % 2 == 0:
            centers.append(on_curve(_van_der_corput(m, 2) * total))
        else:
            cx = x0 - 0.25 * diam + 1.5 * diam * _van_der_corput(m + 1, 2)
            cy = y0 - 0.25 * diam + 1.5 * diam * _van_der_corput(m + 1, 3)
            centers.append(complex(cx, cy))
    rmin = max(boundary.max_spacing, 1e-6 * diam)
    radii = [rmin * (diam / rmin) ** _van_der_corput(j, 3) if j else diam for j in range(sample_radii)]
    best = 0.0
    for c in centers:
        for r in radii:
            best = max(best, ball_ratio(seg, c, r))
    return best
