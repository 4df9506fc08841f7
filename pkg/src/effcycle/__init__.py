"""Efficient cycles of cusped hyperbolic 3-manifolds: straight simplices,
regular ideal tilings, the figure-eight knot complement and its measure
theoretic volume witnesses."""

from .hyperbolic import INF, GeometryError, Horoball, IdealPoint, Isometry, Point3
from .volume import V3, lobachevsky
from .simplices import GeodesicSimplex3, inradius, incenter, orientation_sign, volume

__all__ = [
    "INF", "GeometryError", "Horoball", "IdealPoint", "Isometry", "Point3", "V3", "lobachevsky",
    "GeodesicSimplex3", "inradius", "incenter", "orientation_sign", "volume",
]
__version__ = "0.1.0"
