"""Elastic geodesic grids on free-form surface patches.

Form-finding for deployable gridshells: geodesic distance fields, dual-space
member combinatorics, grid energies, genetic-algorithm layout search, and
exact-length planarization with fabrication export.
"""

from .errors import (
    DegenerateFace,
    DegenerateMember,
    DisconnectedMesh,
    GridshellError,
    InfeasibleGrid,
    NoPath,
    NonConvergence,
    NonManifold,
    NotADisk,
    OrderingConflict,
    UVFlip,
)
from .mesh import SurfacePoint, TriMesh, load_mesh

__all__ = [
    "TriMesh",
    "SurfacePoint",
    "load_mesh",
    "GridshellError",
    "NotADisk",
    "NonManifold",
    "DegenerateFace",
    "UVFlip",
    "DisconnectedMesh",
    "NoPath",
    "DegenerateMember",
    "InfeasibleGrid",
    "OrderingConflict",
    "NonConvergence",
]

__version__ = "0.1.0"
