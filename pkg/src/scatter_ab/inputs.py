"""Built-in input functions, all restricted to the domain mask."""

from __future__ import annotations

import numpy as np

from .domain import DomainSpec, GridSpec
from .functions import GridFunction

NAMES = ("gaussian", "bump", "noise", "zero")


def centroid(domain: DomainSpec) -> complex:
    v = domain.vertices
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6 * a)
    cy = ((y + yn) * cross).sum() / (6 * a)
    return complex(cx, cy)


def _diameter(domain: DomainSpec) -> float:
    x0, y0, x1, y1 = domain.bbox
    return max(x1 - x0, y1 - y0)


def gaussian(grid: GridSpec, domain: DomainSpec, center: complex | None = None,
             width: float | None = None) -> GridFunction:
    """``exp(-|z - c|^2 / w^2)``; defaults: area centroid and 0.15 x diameter."""
    c = centroid(domain) if center is None else center
    w = 0.15 * _diameter(domain) if width is None else width
    return GridFunction.from_callable(grid, lambda z: np.exp(-np.abs(z - c) ** 2 / w ** 2))


def bump(grid: GridSpec, domain: DomainSpec, center: complex | None = None,
         radius: float | None = None) -> GridFunction:
    """Compactly supported ``(1 - |z - c|^2 / R^2)^4``; default ``R`` is 0.4 x diameter."""
    c = centroid(domain) if center is None else center
    R = 0.4 * _diameter(domain) if radius is None else radius

    def f(z):
        t = 1.0 - np.abs(z - c) ** 2 / R ** 2
        return np.where(t > 0, t, 0.0) ** 4
    return GridFunction.from_callable(grid, f)


def noise(grid: GridSpec, seed: int = 0) -> GridFunction:
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return GridFunction(grid, vals, restricted=True)


def make_input(name: str, grid: GridSpec, domain: DomainSpec, seed: int = 0) -> GridFunction:
    if name == "gaussian":
        return gaussian(grid, domain)
    if name == "bump":
        return bump(grid, domain)
    if name == "noise":
        return noise(grid, seed)
    if name == "zero":
        return GridFunction.zeros(grid, restricted=True)
    raise ValueError(f"unknown input function {name!r}; choose from {', '.join(NAMES)}")
