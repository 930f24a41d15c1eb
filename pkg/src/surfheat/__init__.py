"""Surface finite elements with dG(0) time stepping for linear parabolic equations on closed surfaces."""

from .geometry import LevelSetSurface, get_surface, sphere, torus
from .mesh import SurfaceMesh, build_icosphere, build_mesh, refine_and_project
from .fem import CoefficientSet, P1Function
from .timestepping import DG0Solution, TimeGrid, solve_parabolic

__version__ = "0.1.0"

__all__ = [
    "LevelSetSurface", "get_surface", "sphere", "torus",
    "SurfaceMesh", "build_icosphere", "build_mesh", "refine_and_project",
    "CoefficientSet", "P1Function",
    "DG0Solution", "TimeGrid", "solve_parabolic",
]
