"""Bundled parametric test surfaces.

Every generator returns a validated :class:`~gridshell.mesh.TriMesh`. These
patches double as regression fixtures (analytic curvature/distance values are
known) and as inputs for the demo scripts.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .mesh import TriMesh


def _orient_ccw_2d(points2d: np.ndarray, faces: np.ndarray) -> np.ndarray:
    p = points2d[faces]
    signed = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 2, 0] - p[:, 0, 0]
    ) * (p[:, 1, 1] - p[:, 0, 1])
    flip = signed < 0
    faces = faces.copy()
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return faces


def unit_square() -> TriMesh:
    """Unit square from two triangles, UV = XY."""
    v = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    f = np.array([[0, 1, 2], [0, 2, 3]])
    return TriMesh.from_arrays(v, f, uv=v[:, :2])


def _disk_points(radius: float, n_boundary: int) -> np.ndarray:
    """Concentric-ring sampling of a disk, outer ring exactly n_boundary points."""
    n_rings = max(2, int(round(n_boundary / (2 * np.pi))))
    pts = [np.zeros((1, 2))]
    for k in range(1, n_rings + 1):
        r = radius * k / n_rings
        m = n_boundary if k == n_rings else max(6, int(round(n_boundary * k / n_rings)))
        # Half-step twist per ring avoids cocircular Delaunay ambiguities.
        theta = 2 * np.pi * (np.arange(m) + 0.5 * (k % 2)) / m
        pts.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
    return np.vstack(pts)


def _triangulate_planar(points2d: np.ndarray) -> np.ndarray:
    tri = Delaunay(points2d)
    return _orient_ccw_2d(points2d, tri.simplices.astype(np.int64))


def flat_disk(radius: float = 1.0, n_boundary: int = 60) -> TriMesh:
    """Flat disk in the z=0 plane, UV = XY."""
    pts = _disk_points(radius, n_boundary)
    faces = _triangulate_planar(pts)
    v = np.column_stack([pts, np.zeros(len(pts))])
    return TriMesh.from_arrays(v, faces, uv=pts)


def _lifted_disk(radius: float, n_boundary: int, height_fn) -> TriMesh:
    pts = _disk_points(radius, n_boundary)
    faces = _triangulate_planar(pts)
    z = height_fn(pts[:, 0], pts[:, 1])
    v = np.column_stack([pts, z])
    return TriMesh.from_arrays(v, faces, uv=pts)


def spherical_cap(radius: float = 1.0, opening_angle: float = np.pi / 3, n_boundary: int = 60) -> TriMesh:
    """Spherical cap of the given opening angle (pole at +z), UV = projected XY."""
    rim = radius * np.sin(opening_angle)

    def lift(x, y):
        return np.sqrt(np.maximum(radius**2 - x**2 - y**2, 0.0)) - radius * np.cos(opening_angle)

    return _lifted_disk(rim, n_boundary, lift)


def two_hills(
    radius: float = 1.4,
    n_boundary: int = 72,
    amplitude: float = 0.45,
    sigma: float = 0.34,
    separation: float = 1.1,
) -> TriMesh:
    """Two Gaussian hills on a flat disk, side by side along the x-axis."""
    cx = separation / 2.0

    def lift(x, y):
        return amplitude * (
            np.exp(-((x - cx) ** 2 + y**2) / (2 * sigma**2))
            + np.exp(-((x + cx) ** 2 + y**2) / (2 * sigma**2))
        )

    return _lifted_disk(radius, n_boundary, lift)


def drop_bump(
    radius: float = 1.0,
    n_boundary: int = 72,
    amplitude: float = 0.5,
    sigma: float = 0.3,
) -> TriMesh:
    """Rotationally symmetric central bump on a flat disk (inner-bump regime)."""

    def lift(x, y):
        return amplitude * np.exp(-(x**2 + y**2) / (2 * sigma**2))

    return _lifted_disk(radius, n_boundary, lift)


def sphere_octant(radius: float = 1.0, subdiv: int = 40) -> TriMesh:
    """Positive octant of a sphere via projected barycentric subdivision.

    ``subdiv`` is the edge subdivision count; the boundary consists of three
    quarter great circles. UVs are computed conformally.
    """
    corners = np.eye(3)
    idx = {}
    verts = []
    for i in range(subdiv + 1):
        for j in range(subdiv + 1 - i):
            k = subdiv - i - j
            p = (i * corners[0] + j * corners[1] + k * corners[2]) / subdiv
            p = p / np.linalg.norm(p)
            idx[(i, j)] = len(verts)
            verts.append(p)
    faces = []
    for i in range(subdiv):
        for j in range(subdiv - i):
            a = idx[(i, j)]
            b = idx[(i + 1, j)]
            c = idx[(i, j + 1)]
            faces.append([a, b, c])
            if j < subdiv - i - 1:
                d = idx[(i + 1, j + 1)]
                faces.append([b, d, c])
    v = radius * np.asarray(verts)
    f = np.asarray(faces, dtype=np.int64)
    # Outward orientation: face normal should align with the radial direction.
    p = v[f]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    cent = p.mean(axis=1)
    flip = np.einsum("ij,ij->i", n, cent) < 0
    f[flip] = f[flip][:, [0, 2, 1]]
    return TriMesh.from_arrays(v, f)


def cylinder_patch(
    radius: float = 1.0,
    height: float = 2.0,
    half_angle: float = np.pi / 3,
    n_theta: int = 40,
    n_z: int = 40,
) -> TriMesh:
    """Cylindrical patch (axis = z), UV = (arc length, z)."""
    theta = np.linspace(-half_angle, half_angle, n_theta + 1)
    z = np.linspace(0.0, height, n_z + 1)
    tt, zz = np.meshgrid(theta, z, indexing="ij")
    v = np.column_stack(
        [radius * np.cos(tt).ravel(), radius * np.sin(tt).ravel(), zz.ravel()]
    )
    uv = np.column_stack([radius * tt.ravel(), zz.ravel()])

    def vid(i, j):
        return i * (n_z + 1) + j

    faces = []
    for i in range(n_theta):
        for j in range(n_z):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces.append([a, b, c])
            faces.append([a, c, d])
    f = np.asarray(faces, dtype=np.int64)
    p = v[f]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    cent = p.mean(axis=1)
    radial = cent.copy()
    radial[:, 2] = 0.0
    flip = np.einsum("ij,ij->i", n, radial) < 0
    f[flip] = f[flip][:, [0, 2, 1]]
    return TriMesh.from_arrays(v, f, uv=uv)


def crescent(
    outer_radius: float = 1.0,
    bay_radius: float = 0.55,
    bay_center: float = 0.9,
    n_boundary: int = 60,
    n_layers: int = 9,
) -> TriMesh:
    """Flat crescent: disk of ``outer_radius`` with a circular bay bitten out.

    The bay circle (center ``(0, bay_center)``, radius ``bay_radius``) must
    intersect the outer circle; the region between the two arcs is meshed.
    The bay arc is the single non-convex stretch of the boundary.
    """
    R, rb, d = outer_radius, bay_radius, bay_center
    y_cusp = (R**2 + d**2 - rb**2) / (2 * d)
    if not (-R < y_cusp < R):
        raise ValueError("bay circle does not intersect the outer circle")
    x_cusp = np.sqrt(R**2 - y_cusp**2)

    # Outer arc: from the +x cusp the long way (through the bottom) to the -x cusp.
    phi0 = np.arctan2(y_cusp, x_cusp)
    phi1 = np.arctan2(y_cusp, -x_cusp)
    outer_span = 2 * np.pi - (phi1 - phi0)
    # Bay arc: the part of the bay circle inside the outer disk, -x cusp to +x cusp.
    psi0 = np.arctan2(y_cusp - d, -x_cusp)
    psi1 = np.arctan2(y_cusp - d, x_cusp)
    if psi1 < psi0:
        psi1 += 2 * np.pi
    bay_span = psi1 - psi0

    # Structured ladder between the two arcs: both sampled cusp+ -> cusp- with
    # the same column count, so rows collapse cleanly at the cusps.
    n_outer = max(8, n_boundary // 2)

    ang_o = phi0 - outer_span * np.arange(n_outer + 1) / n_outer
    outer = np.column_stack([R * np.cos(ang_o), R * np.sin(ang_o)])

    ang_b_dense = psi1 - bay_span * np.linspace(0.0, 1.0, 16 * n_outer)
    bay_dense = np.column_stack(
        [rb * np.cos(ang_b_dense), d + rb * np.sin(ang_b_dense)]
    )  # runs cusp+ -> cusp-
    seg = np.linalg.norm(np.diff(bay_dense, axis=0), axis=1)
    s_dense = np.concatenate([[0.0], np.cumsum(seg)]) / seg.sum()
    u_out = np.linspace(0.0, 1.0, n_outer + 1)
    bay = np.column_stack(
        [np.interp(u_out, s_dense, bay_dense[:, 0]), np.interp(u_out, s_dense, bay_dense[:, 1])]
    )

    rows = [(1 - j / n_layers) * outer + (j / n_layers) * bay for j in range(n_layers + 1)]

    points: list[np.ndarray] = []
    index: dict[tuple[int, int], int] = {}
    grid = np.empty((len(rows), n_outer + 1), dtype=np.int64)

    def add_point(p):
        key = (round(p[0] / 1e-9), round(p[1] / 1e-9))
        if key in index:
            return index[key]
        index[key] = len(points)
        points.append(p)
        return index[key]

    for j, row in enumerate(rows):
        for i, p in enumerate(row):
            grid[j, i] = add_point(p)
    points = np.asarray(points)

    faces = []
    for j in range(len(rows) - 1):
        for i in range(n_outer):
            a, b_, c, dd = grid[j, i], grid[j, i + 1], grid[j + 1, i + 1], grid[j + 1, i]
            quad = [a, b_, c, dd]
            uniq = []
            for q in quad:
                if q not in uniq:
                    uniq.append(q)
            if len(uniq) == 4:
                faces.append([a, b_, c])
                faces.append([a, c, dd])
            elif len(uniq) == 3:
                faces.append(uniq)
    faces = np.asarray(faces, dtype=np.int64)
    areas = 0.5 * np.abs(
        (points[faces[:, 1], 0] - points[faces[:, 0], 0])
        * (points[faces[:, 2], 1] - points[faces[:, 0], 1])
        - (points[faces[:, 2], 0] - points[faces[:, 0], 0])
        * (points[faces[:, 1], 1] - points[faces[:, 0], 1])
    )
    faces = faces[areas > 1e-12]
    faces = _orient_ccw_2d(points, faces)
    v = np.column_stack([points, np.zeros(len(points))])
    return TriMesh.from_arrays(v, faces, uv=points)


GENERATORS = {
    "unit_square": unit_square,
    "flat_disk": flat_disk,
    "spherical_cap": spherical_cap,
    "sphere_octant": sphere_octant,
    "cylinder_patch": cylinder_patch,
    "crescent": crescent,
    "two_hills": two_hills,
    "drop_bump": drop_bump,
}


def generate(name: str, **params) -> TriMesh:
    """Build a bundled surface by name (see :data:`GENERATORS`)."""
    if name not in GENERATORS:
        raise KeyError(f"unknown surface {name!r}; options: {sorted(GENERATORS)}")
    return GENERATORS[name](**params)
