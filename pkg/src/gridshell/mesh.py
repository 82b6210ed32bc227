"""Triangulated surface patch: topology validation, boundary curve, UV queries.

The central type is :class:`TriMesh`, an immutable triangle mesh with a
per-vertex UV parameterization and a single closed boundary loop. All
downstream stages (distance fields, dual space, grid layout, energies) only
ever query a validated mesh, so every invariant is enforced on construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from . import obj_io
from .errors import DegenerateFace, NonManifold, NotADisk, UVFlip

logger = logging.getLogger(__name__)

# Fraction of the bounding-box diagonal used as the default weld tolerance.
DEFAULT_WELD_FRACTION = 1e-8


@dataclass(frozen=True)
class SurfacePoint:
    """A point on the mesh: face index + barycentric coordinates.

    ``uv`` and ``xyz`` are cached evaluations and always consistent with
    ``face``/``bary``.
    """

    face: int
    bary: np.ndarray
    uv: np.ndarray
    xyz: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bary, dtype=np.float64)
        if abs(float(b.sum()) - 1.0) > 1e-9 or (b < -1e-9).any():
            raise ValueError(f"invalid barycentric coordinates {b}")


class TriMesh:
    """Validated triangle-mesh patch with disk topology and injective UVs.

    Use :meth:`from_arrays` or :func:`load_mesh`; the raw constructor assumes
    already-validated inputs.
    """

    def __init__(self, vertices, faces, uv, boundary_loop):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        self.uv = np.ascontiguousarray(uv, dtype=np.float64)
        self.boundary_loop = np.ascontiguousarray(boundary_loop, dtype=np.int64)
        for arr in (self.vertices, self.faces, self.uv, self.boundary_loop):
            arr.setflags(write=False)

        # Boundary curve: cumulative arc length from the seam (loop[0]).
        pts = self.vertices[self.boundary_loop]
        seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        self.cumulative_arclength = np.concatenate([[0.0], np.cumsum(seg[:-1])])
        self.cumulative_arclength.setflags(write=False)
        self.total_length = float(seg.sum())
        self.N = len(self.boundary_loop)

        self._edges = None
        self._vertex_faces = None
        self._vertex_rings = None
        self._uv_tree = None
        self._face_adjacency = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_arrays(cls, vertices, faces, uv=None, weld_tol: float | None = None) -> "TriMesh":
        """Validate raw arrays and build a TriMesh.

        Welds duplicate vertices, checks edge-manifoldness, disk topology and
        face non-degeneracy, extracts the oriented boundary loop, and computes
        a conformal UV map when none is supplied.
        """
        vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        uv = None if uv is None else np.asarray(uv, dtype=np.float64).reshape(-1, 2)

        diag = float(np.linalg.norm(vertices.max(axis=0) - vertices.min(axis=0)))
        if weld_tol is None:
            weld_tol = DEFAULT_WELD_FRACTION * diag
        if weld_tol > 0:
            vertices, faces, uv = _weld(vertices, faces, uv, weld_tol)

        if (faces[:, 0] == faces[:, 1]).any() or (faces[:, 1] == faces[:, 2]).any() or (
            faces[:, 2] == faces[:, 0]
        ).any():
            raise DegenerateFace("face with repeated vertex indices")
        areas = _face_areas(vertices, faces)
        if (areas <= 1e-14 * diag**2).any():
            bad = int(np.argmin(areas))
            raise DegenerateFace(f"face {bad} has (near) zero area {areas[bad]:.3e}")

        boundary_loop = _validate_topology(vertices, faces)

        if uv is None:
            from .parameterize import conformal_parameterization

            uv = conformal_parameterization(vertices, faces, boundary_loop)
        _check_uv_injective(uv, faces)

        return cls(vertices, faces, uv, boundary_loop)

    # -- derived connectivity (lazy) ---------------------------------------

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, shape (E, 2), sorted pairs."""
        if self._edges is None:
            e = np.vstack([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
            e.sort(axis=1)
            self._edges = np.unique(e, axis=0)
            self._edges.setflags(write=False)
        return self._edges

    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def mean_edge_length(self) -> float:
        return float(self.edge_lengths().mean())

    def mean_boundary_edge_length(self) -> float:
        return self.total_length / self.N

    def bbox_diagonal(self) -> float:
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    @property
    def vertex_faces(self) -> list[np.ndarray]:
        """Faces incident to each vertex."""
        if self._vertex_faces is None:
            nv = len(self.vertices)
            fidx = np.repeat(np.arange(len(self.faces)), 3)
            order = np.argsort(self.faces.ravel(), kind="stable")
            flat = self.faces.ravel()[order]
            fidx = fidx[order]
            splits = np.searchsorted(flat, np.arange(nv + 1))
            self._vertex_faces = [fidx[splits[i]:splits[i + 1]] for i in range(nv)]
        return self._vertex_faces

    @property
    def vertex_rings(self) -> list[np.ndarray]:
        """One-ring vertex neighbors of each vertex."""
        if self._vertex_rings is None:
            nv = len(self.vertices)
            e = self.edges
            both = np.concatenate([e, e[:, ::-1]])
            order = np.argsort(both[:, 0], kind="stable")
            src = both[order, 0]
            dst = both[order, 1]
            splits = np.searchsorted(src, np.arange(nv + 1))
            self._vertex_rings = [dst[splits[i]:splits[i + 1]] for i in range(nv)]
        return self._vertex_rings

    def face_normals(self) -> np.ndarray:
        p = self.vertices[self.faces]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        lens = np.linalg.norm(n, axis=1, keepdims=True)
        return n / np.maximum(lens, 1e-300)

    def vertex_normals(self) -> np.ndarray:
        """Area-weighted vertex normals (unit length)."""
        p = self.vertices[self.faces]
        fn = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])  # area-weighted
        out = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(out, self.faces[:, k], fn)
        lens = np.linalg.norm(out, axis=1, keepdims=True)
        return out / np.maximum(lens, 1e-300)

    @property
    def is_boundary_vertex(self) -> np.ndarray:
        mask = np.zeros(len(self.vertices), dtype=bool)
        mask[self.boundary_loop] = True
        return mask

    # -- boundary parameterization -----------------------------------------

    def boundary_t(self) -> np.ndarray:
        """Unit-speed parameter t(i) in [0,1) for each boundary-loop vertex."""
        return self.cumulative_arclength / self.total_length

    def t_of_loop_index(self, i: int) -> float:
        return float(self.cumulative_arclength[i % self.N] / self.total_length)

    def loop_index_of_t(self, t: float) -> int:
        """Nearest boundary-loop index for parameter t (arc-length rounding)."""
        s = (t % 1.0) * self.total_length
        k = int(np.searchsorted(self.cumulative_arclength, s, side="right") - 1)
        k = max(k, 0)
        s0 = self.cumulative_arclength[k]
        s1 = self.cumulative_arclength[k + 1] if k + 1 < self.N else self.total_length
        return (k + 1) % self.N if (s - s0) > (s1 - s) else k

    def boundary_point(self, t: float) -> SurfacePoint:
        """SurfacePoint at boundary parameter t (on the boundary polyline)."""
        s = (t % 1.0) * self.total_length
        k = int(np.searchsorted(self.cumulative_arclength, s, side="right") - 1)
        k = max(k, 0)
        a = self.boundary_loop[k]
        b = self.boundary_loop[(k + 1) % self.N]
        s0 = self.cumulative_arclength[k]
        s1 = self.cumulative_arclength[k + 1] if k + 1 < self.N else self.total_length
        w = 0.0 if s1 <= s0 else (s - s0) / (s1 - s0)
        face = self._face_of_edge(a, b)
        bary = np.zeros(3)
        fa = list(self.faces[face])
        bary[fa.index(a)] = 1.0 - w
        bary[fa.index(b)] = w
        return self.surface_point(face, bary)

    def _face_of_edge(self, a: int, b: int) -> int:
        for f in self.vertex_faces[a]:
            if b in self.faces[f]:
                return int(f)
        raise ValueError(f"edge ({a},{b}) not found")

    # -- point evaluation / location ---------------------------------------

    def surface_point(self, face: int, bary) -> SurfacePoint:
        bary = np.clip(np.asarray(bary, dtype=np.float64), 0.0, None)
        bary = bary / bary.sum()
        tri = self.faces[face]
        xyz = bary @ self.vertices[tri]
        uv = bary @ self.uv[tri]
        return SurfacePoint(int(face), bary, uv, xyz)

    def vertex_point(self, v: int) -> SurfacePoint:
        face = int(self.vertex_faces[v][0])
        bary = np.zeros(3)
        bary[list(self.faces[face]).index(v)] = 1.0
        return self.surface_point(face, bary)

    def locate_uv(self, uv_query) -> SurfacePoint:
        """Locate a UV point: containing face + barycentric coordinates.

        Falls back to the nearest face (clipped barycentrics) when the query
        lies marginally outside the parameterized patch.
        """
        uv_query = np.asarray(uv_query, dtype=np.float64)
        if self._uv_tree is None:
            cent = self.uv[self.faces].mean(axis=1)
            self._uv_tree = cKDTree(cent)
        k = min(32, len(self.faces))
        _, cand = self._uv_tree.query(uv_query, k=k)
        cand = np.atleast_1d(cand)
        best = None
        best_neg = -np.inf
        for f in cand:
            b = _uv_barycentric(self.uv[self.faces[f]], uv_query)
            neg = float(b.min())
            if neg >= -1e-10:
                return self.surface_point(int(f), b)
            if neg > best_neg:
                best_neg, best = neg, (int(f), b)
        f, b = best
        return self.surface_point(f, np.clip(b, 0.0, None))

    def interpolate_vertex_values(self, values: np.ndarray, p: SurfacePoint) -> float:
        """Barycentric interpolation of a per-vertex scalar field at p."""
        return float(values[self.faces[p.face]] @ p.bary)

    # -- export --------------------------------------------------------------

    def export_obj(self, path: str) -> None:
        obj_io.write_obj(path, self.vertices, self.faces, uv=self.uv)


# -- module-level helpers ----------------------------------------------------


def _face_areas(vertices, faces) -> np.ndarray:
    p = vertices[faces]
    return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


def _weld(vertices, faces, uv, tol):
    """Merge vertices closer than tol; drop faces that collapse."""
    tree = cKDTree(vertices)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return vertices, faces, uv
    parent = np.arange(len(vertices))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    root = np.array([find(i) for i in range(len(vertices))])
    keep, inverse = np.unique(root, return_inverse=True)
    new_vertices = vertices[keep]
    new_uv = uv[keep] if uv is not None else None
    new_faces = inverse[faces]
    ok = (
        (new_faces[:, 0] != new_faces[:, 1])
        & (new_faces[:, 1] != new_faces[:, 2])
        & (new_faces[:, 2] != new_faces[:, 0])
    )
    logger.debug("weld: %d -> %d vertices, dropped %d faces", len(vertices), len(new_vertices), int((~ok).sum()))
    return new_vertices, new_faces[ok], new_uv


def _validate_topology(vertices, faces) -> np.ndarray:
    """Edge-manifold + connected + disk check; returns the oriented boundary loop."""
    nv = len(vertices)
    halfedges = np.vstack([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    und = np.sort(halfedges, axis=1)
    uniq, counts = np.unique(und, axis=0, return_counts=True)
    if counts.max(initial=0) > 2:
        raise NonManifold(f"{int((counts > 2).sum())} edges shared by more than two faces")

    # Orientation: no directed half-edge may repeat.
    _, dir_counts = np.unique(halfedges, axis=0, return_counts=True)
    if dir_counts.max(initial=0) > 1:
        raise NonManifold("inconsistently oriented faces (repeated directed half-edge)")

    adj = sparse.coo_matrix(
        (np.ones(len(und)), (und[:, 0], und[:, 1])), shape=(nv, nv)
    )
    ncomp, _ = csgraph.connected_components(adj + adj.T, directed=False)
    if ncomp != 1:
        raise NotADisk(f"mesh has {ncomp} connected components")

    ne = len(uniq)
    euler = nv - ne + len(faces)
    if euler != 1:
        raise NotADisk(f"Euler characteristic {euler} != 1")

    boundary_und = uniq[counts == 1]
    if len(boundary_und) == 0:
        raise NotADisk("mesh has no boundary")
    bset = {tuple(e) for e in boundary_und}
    # Boundary half-edges in face winding order give a CCW loop w.r.t. outward normals.
    nxt: dict[int, int] = {}
    for a, b in halfedges:
        if (min(a, b), max(a, b)) in bset:
            if a in nxt:
                raise NonManifold(f"boundary vertex {a} with more than one outgoing boundary edge")
            nxt[int(a)] = int(b)
    start = min(nxt)
    loop = [start]
    cur = nxt[start]
    while cur != start:
        loop.append(cur)
        cur = nxt[cur]
        if len(loop) > len(nxt):
            raise NotADisk("boundary edges do not close into a single loop")
    if len(loop) != len(boundary_und):
        raise NotADisk("mesh has more than one boundary loop")
    return np.asarray(loop, dtype=np.int64)


def _check_uv_injective(uv, faces) -> None:
    p = uv[faces]
    signed = 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    )
    scale = np.abs(signed).max()
    if scale <= 0:
        raise UVFlip("all UV triangles are degenerate")
    pos = (signed > 1e-12 * scale).sum()
    neg = (signed < -1e-12 * scale).sum()
    if pos and neg:
        raise UVFlip(f"{min(pos, neg)} flipped UV triangles")
    if pos + neg < len(faces):
        raise UVFlip(f"{len(faces) - pos - neg} degenerate UV triangles")


def _uv_barycentric(tri_uv: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of 2D point q in triangle tri_uv (3x2)."""
    a, b, c = tri_uv
    m = np.column_stack([b - a, c - a])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) < 1e-300:
        return np.array([1.0, 0.0, 0.0])
    inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
    st = inv @ (q - a)
    return np.array([1.0 - st[0] - st[1], st[0], st[1]])


def load_mesh(path: str, weld_tol: float | None = None) -> TriMesh:
    """Load and validate an OBJ surface patch.

    UVs are taken from the file when present, otherwise computed by
    least-squares conformal parameterization pinned at two boundary vertices.
    """
    vertices, faces, uv = obj_io.read_obj(path)
    return TriMesh.from_arrays(vertices, faces, uv=uv, weld_tol=weld_tol)
