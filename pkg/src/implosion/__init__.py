"""Parabolic implosion numerics for cubic polynomials g_s(z) = z(1 - bz + z^2/3)
and the quadratic family z + z^2."""
from .poly import Family, PolyMap

__version__ = "0.1.0"

__all__ = ["Family", "PolyMap", "__version__"]
