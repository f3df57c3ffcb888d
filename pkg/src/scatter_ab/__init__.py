"""Lattice quadrature for the scattering operator AB on polygonal domains."""

from .domain import DomainSpec, GridSpec, build_domain, load_domain, rasterize
from .functions import BoundaryFunction, GridFunction
from .scattering import ab_direct, decompose, verify_identity

__all__ = [
    "BoundaryFunction", "DomainSpec", "GridFunction", "GridSpec", "ab_direct",
    "build_domain", "decompose", "load_domain", "rasterize", "verify_identity",
]
__version__ = "0.1.0"
