"""Red/blue first-last curve intersection and Hausdorff distance for
non-crossing segment sets."""

from .geometry import (Curve, GeometryError, ParabolaArc, Point, Site,
                       ValidationError, bisector, eval_y, intersect,
                       parabola_from_poly, point_site_distance,
                       split_x_monotone)
from .kernels import BACKEND

__all__ = [
    "BACKEND", "Curve", "GeometryError", "ParabolaArc", "Point", "Site",
    "ValidationError", "bisector", "eval_y", "intersect",
    "parabola_from_poly", "point_site_distance", "split_x_monotone",
]

__version__ = "0.1.0"
