"""Exception types raised by the gridshell pipeline."""


class GridshellError(Exception):
    """Base class for all gridshell errors."""


class NotADisk(GridshellError):
    """Mesh is not a topological disk (wrong Euler characteristic or boundary count)."""


class NonManifold(GridshellError):
    """Mesh has a non-manifold or inconsistently oriented edge."""


class DegenerateFace(GridshellError):
    """Face with repeated vertices or (numerically) zero area."""


class UVFlip(GridshellError):
    """UV map has flipped (or zero-area) triangles and is not injective."""


class DisconnectedMesh(GridshellError):
    """Mesh has more than one connected component."""


class NoPath(GridshellError):
    """No geodesic path exists between the requested points."""


class DegenerateMember(GridshellError):
    """Member endpoints coincide on the boundary."""


class InfeasibleGrid(GridshellError):
    """No valid member configuration exists for the requested grid."""


class OrderingConflict(GridshellError):
    """Two intersections share the same arc position along a member."""


class NonConvergence(GridshellError):
    """Planarization solver did not reach the requested tolerances."""
