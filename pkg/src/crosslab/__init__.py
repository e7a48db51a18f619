"""Random geodesic drawings of graphs on hyperbolic surfaces and their crossing numbers."""

from .drawing import Drawing, count_crossings, random_geometric_drawing
from .geodesic import PathParams, SurfacePoint, shortest_path
from .surface import CombinatorialSurface, generate_surface, load_gluing, parse_gluing, validate

__all__ = [
    "CombinatorialSurface",
    "Drawing",
    "PathParams",
    "SurfacePoint",
    "count_crossings",
    "generate_surface",
    "load_gluing",
    "parse_gluing",
    "random_geometric_drawing",
    "shortest_path",
    "validate",
]
