"""Shortest-path tracing oracle: Steiner-graph Dijkstra plus strip shortening.

This is the slow, independent cross-check for everything the distance-field
machinery computes. A coarse initial path comes from Dijkstra on the
edge-plus-midpoint graph. The path is then represented purely by the sequence
of mesh edges it crosses; unfolding that triangle strip into the plane and
running a funnel yields the exact shortest path within the strip (bending only
at strip vertices). Bends at interior vertices are attacked by re-routing the
strip around the other side of the vertex and re-funneling, keeping the result
only when strictly shorter; bends that survive are true geodesic pivots
(reflex boundary vertices), which is what makes the oracle usable for
boundary-contact tests on non-convex patches.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .errors import NoPath
from .mesh import SurfacePoint, TriMesh

logger = logging.getLogger(__name__)

Edge = tuple[int, int]  # sorted vertex pair


@dataclass
class TracedPath:
    """Polyline of a traced shortest path plus its bend bookkeeping."""

    points: np.ndarray  # (M, 3)
    length: float
    pinned_vertices: list[int]  # interior vertices the path bends at
    iterations: int


class GeodesicTracer:
    """Per-mesh tracing oracle; builds the Steiner graph once."""

    def __init__(self, mesh: TriMesh, max_passes: int = 60, rel_tol: float = 1e-8):
        self.mesh = mesh
        self.max_passes = max_passes
        self.rel_tol = rel_tol
        self._build_graph()
        self._edge_faces: dict[Edge, list[int]] = {}
        for f, (a, b, c) in enumerate(mesh.faces):
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(int(u), int(v)), max(int(u), int(v)))
                self._edge_faces.setdefault(key, []).append(f)

    # -- graph -----------------------------------------------------------------

    def _build_graph(self) -> None:
        mesh = self.mesh
        nv = len(mesh.vertices)
        edges = mesh.edges
        eid = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
        mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
        self.node_pos = np.vstack([mesh.vertices, mids])

        pairs = []
        for a, b, c in mesh.faces:
            a, b, c = int(a), int(b), int(c)
            m_ab = nv + eid[(min(a, b), max(a, b))]
            m_bc = nv + eid[(min(b, c), max(b, c))]
            m_ca = nv + eid[(min(c, a), max(c, a))]
            nodes = (a, b, c, m_ab, m_bc, m_ca)
            for i in range(6):
                for j in range(i + 1, 6):
                    pairs.append((nodes[i], nodes[j]))
        pairs = np.unique(np.sort(np.asarray(pairs, dtype=np.int64), axis=1), axis=0)
        w = np.linalg.norm(self.node_pos[pairs[:, 0]] - self.node_pos[pairs[:, 1]], axis=1)
        n = len(self.node_pos)
        g = sparse.coo_matrix((w, (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        self.graph = (g + g.T).tocsr()
        self._node_tree = cKDTree(self.node_pos)
        self._edge_id = eid
        self._n_vertices = nv
        self._edges_arr = edges

    # -- public API --------------------------------------------------------------

    def trace(self, a: SurfacePoint, b: SurfacePoint) -> TracedPath:
        """Shortest path between two surface points."""
        if np.linalg.norm(a.xyz - b.xyz) < 1e-12 * self.mesh.bbox_diagonal():
            raise NoPath("coincident endpoints")
        edges = self._initial_edge_sequence(a, b)
        edges, length, pts2, portals, iters = self._shorten(a, b, edges)
        points, pinned = self._path_points(a, b, edges, pts2, portals)
        return TracedPath(points, float(length), pinned, iters)

    def trace_between_params(self, t_a: float, t_b: float) -> TracedPath:
        return self.trace(self.mesh.boundary_point(t_a), self.mesh.boundary_point(t_b))

    # -- initial guess -----------------------------------------------------------

    def _anchor_node(self, p: SurfacePoint) -> int:
        """Nearest graph node among the nodes of the point's own face."""
        a, b, c = (int(v) for v in self.mesh.faces[p.face])
        nv = self._n_vertices
        cand = [
            a,
            b,
            c,
            nv + self._edge_id[(min(a, b), max(a, b))],
            nv + self._edge_id[(min(b, c), max(b, c))],
            nv + self._edge_id[(min(c, a), max(c, a))],
        ]
        d = np.linalg.norm(self.node_pos[cand] - p.xyz, axis=1)
        return cand[int(np.argmin(d))]

    def _node_support(self, node: int) -> set[int]:
        if node < self._n_vertices:
            return {int(f) for f in self.mesh.vertex_faces[node]}
        a, b = self._edges_arr[node - self._n_vertices]
        return set(self._edge_faces[(int(a), int(b))])

    def _support_faces(self, p: SurfacePoint) -> set[int]:
        verts = [int(v) for v, w in zip(self.mesh.faces[p.face], p.bary) if w > 1e-12]
        if len(verts) == 3:
            return {int(p.face)}
        if len(verts) == 2:
            return set(self._edge_faces[(min(verts), max(verts))])
        return {int(f) for f in self.mesh.vertex_faces[verts[0]]}

    def _initial_edge_sequence(self, a: SurfacePoint, b: SurfacePoint) -> list[Edge]:
        src = self._anchor_node(a)
        dst = self._anchor_node(b)
        if src == dst:
            node_path = [src]
        else:
            dists, pred = csgraph.dijkstra(
                self.graph, directed=False, indices=src, return_predecessors=True
            )
            if not np.isfinite(dists[dst]):
                raise NoPath(f"no path between nodes {src} and {dst}")
            node_path = [dst]
            while node_path[-1] != src:
                node_path.append(int(pred[node_path[-1]]))
            node_path.reverse()

        # Per-segment supporting face (graph edges live inside one face).
        supports = [self._support_faces(a)] + [self._node_support(n) for n in node_path] + [
            self._support_faces(b)
        ]
        seg_faces: list[int] = []
        for s0, s1 in zip(supports[:-1], supports[1:]):
            common = sorted(s0 & s1)
            seg_faces.append(common[0] if common else -1)
        # Fill gaps conservatively (rare; occurs only for degenerate hops).
        for i, f in enumerate(seg_faces):
            if f == -1:
                seg_faces[i] = seg_faces[i - 1] if i > 0 else sorted(supports[0])[0]

        edges: list[Edge] = []
        nv = self._n_vertices
        for i, node in enumerate(node_path):
            f_in, f_out = seg_faces[i], seg_faces[i + 1]
            if node >= nv:
                ea, eb = self._edges_arr[node - nv]
                edges.append((int(ea), int(eb)))
            else:
                edges.extend(self._fan_spokes(int(node), f_in, f_out))
        # Collapse immediate repeats.
        dedup: list[Edge] = []
        for e in edges:
            if not dedup or dedup[-1] != e:
                dedup.append(e)
        # Degenerate crossings at the endpoints are not real crossings: a path
        # starting on an edge does not cross that edge, and one starting at a
        # vertex leaves through a wedge interior, never across a spoke.
        sa = self._support_vertices(a)
        sb = self._support_vertices(b)

        def degenerate(e: Edge, sv: set[int]) -> bool:
            if len(sv) == 2:
                return e == (min(sv), max(sv))
            if len(sv) == 1:
                return next(iter(sv)) in e
            return False

        while dedup and degenerate(dedup[0], sa):
            dedup.pop(0)
        while dedup and degenerate(dedup[-1], sb):
            dedup.pop()
        return dedup

    def _support_vertices(self, p: SurfacePoint) -> set[int]:
        verts = [int(v) for v, w in zip(self.mesh.faces[p.face], p.bary) if w > 1e-12]
        if len(verts) == 3:
            return set()
        return set(verts)

    def _ordered_fan(self, v: int) -> tuple[list[int], bool]:
        """Faces around v in rotational order; True if the fan is cyclic."""
        faces = [int(f) for f in self.mesh.vertex_faces[v]]
        spokes: dict[int, list[int]] = {}
        for f in faces:
            tri = [int(x) for x in self.mesh.faces[f]]
            i = tri.index(v)
            for r in (tri[(i + 1) % 3], tri[(i + 2) % 3]):
                spokes.setdefault(r, []).append(f)
        boundary_spokes = [r for r, fs in spokes.items() if len(fs) == 1]
        interior = len(boundary_spokes) == 0
        if interior:
            start = faces[0]
        else:
            start = spokes[boundary_spokes[0]][0]
        ordered = [start]
        used = {start}
        while len(ordered) < len(faces):
            cur = ordered[-1]
            tri = [int(x) for x in self.mesh.faces[cur]]
            i = tri.index(v)
            advanced = False
            for r in (tri[(i + 1) % 3], tri[(i + 2) % 3]):
                for f in spokes[r]:
                    if f not in used:
                        ordered.append(f)
                        used.add(f)
                        advanced = True
                        break
                if advanced:
                    break
            if not advanced:
                break
        return ordered, interior

    def _fan_arcs(self, v: int, f_in: int, f_out: int) -> list[list[int]]:
        """Face arcs around v from f_in to f_out (one per walkable direction)."""
        fan, interior = self._ordered_fan(v)
        if f_in not in fan or f_out not in fan:
            return []
        i0, i1 = fan.index(f_in), fan.index(f_out)
        arcs = []
        for direction in (1, -1):
            chain = [i0]
            i = i0
            ok = True
            for _ in range(len(fan)):
                if i == i1:
                    break
                ni = i + direction
                if interior:
                    ni %= len(fan)
                elif ni < 0 or ni >= len(fan):
                    ok = False
                    break
                chain.append(ni)
                i = ni
            if ok and chain[-1] == i1 and (len(chain) == 1 or i0 != i1):
                arcs.append([fan[k] for k in chain])
        return arcs

    def _arc_spokes(self, v: int, arc: list[int]) -> list[Edge] | None:
        out: list[Edge] = []
        for fa, fb in zip(arc[:-1], arc[1:]):
            shared = set(int(x) for x in self.mesh.faces[fa]) & set(
                int(x) for x in self.mesh.faces[fb]
            )
            shared.discard(v)
            if len(shared) != 1:
                return None
            r = shared.pop()
            out.append((min(v, r), max(v, r)))
        return out

    def _fan_spokes(self, v: int, f_in: int, f_out: int) -> list[Edge]:
        """Spoke edges (v, r) crossed walking the fan from f_in to f_out."""
        if f_in == f_out:
            return []
        best: list[Edge] | None = None
        for arc in self._fan_arcs(v, f_in, f_out):
            spokes = self._arc_spokes(v, arc)
            if spokes is None:
                continue
            if best is None or len(spokes) < len(best):
                best = spokes
        return best or []

    # -- strip unfolding and funnel ------------------------------------------------

    def _face_2d(self, f: int, ea: int, eb: int) -> dict[int, np.ndarray]:
        """2D coords of face f's vertices with edge (ea,eb) on the +x axis."""
        va, vb = self.mesh.vertices[ea], self.mesh.vertices[eb]
        c = float(np.linalg.norm(vb - va))
        (other,) = [int(v) for v in self.mesh.faces[f] if v != ea and v != eb]
        vo = self.mesh.vertices[other]
        lao = float(np.linalg.norm(vo - va))
        lbo = float(np.linalg.norm(vo - vb))
        x = (lao**2 + c**2 - lbo**2) / (2 * c)
        y = float(np.sqrt(max(lao**2 - x**2, 0.0)))
        return {ea: np.array([0.0, 0.0]), eb: np.array([c, 0.0]), other: np.array([x, y])}

    def _el_2d(self, p: SurfacePoint, coords: dict[int, np.ndarray], face: int) -> np.ndarray | None:
        if p.face == face:
            tri = self.mesh.faces[face]
            return sum(p.bary[k] * coords[int(tri[k])] for k in range(3))
        verts = [int(v) for v, w in zip(self.mesh.faces[p.face], p.bary) if w > 1e-12]
        ws = [float(w) for w in p.bary if w > 1e-12]
        if any(v not in coords for v in verts):
            return None
        return sum(w * coords[v] for v, w in zip(verts, ws)) / sum(ws)

    def _strip_faces(self, a: SurfacePoint, b: SurfacePoint, edges: list[Edge]) -> list[int] | None:
        """Face sequence F_0..F_k of the strip; None if the sequence is broken."""
        if not edges:
            common = sorted(self._support_faces(a) & self._support_faces(b))
            return [common[0]] if common else None
        first = sorted(self._support_faces(a) & set(self._edge_faces[edges[0]]))
        if not first:
            return None
        faces = [first[0]]
        for e0, e1 in zip(edges[:-1], edges[1:]):
            shared = sorted(set(self._edge_faces[e0]) & set(self._edge_faces[e1]))
            if not shared:
                return None
            f = shared[0]
            if f == faces[-1] and len(shared) > 1:
                f = shared[1]
            faces.append(f)
        last = sorted(self._support_faces(b) & set(self._edge_faces[edges[-1]]))
        if not last:
            return None
        faces.append(last[0])
        return faces

    def _unfold_strip(self, a: SurfacePoint, b: SurfacePoint, edges: list[Edge], faces: list[int]):
        """Unfold the strip; returns (p2, q2, portals) with portal left/right chains.

        Each portal is (left2d, right2d, left_vertex, right_vertex).
        """
        mesh = self.mesh
        coords: list[dict[int, np.ndarray]] = []
        if not edges:
            c0 = self._face_2d(faces[0], int(mesh.faces[faces[0]][0]), int(mesh.faces[faces[0]][1]))
            p2 = self._el_2d(a, c0, faces[0])
            q2 = self._el_2d(b, c0, faces[0])
            if p2 is None or q2 is None:
                return None
            return p2, q2, []
        coords.append(self._face_2d(faces[0], edges[0][0], edges[0][1]))
        for idx in range(1, len(faces)):
            prev_c = coords[-1]
            f = faces[idx]
            if f == faces[idx - 1]:
                coords.append(prev_c)
                continue
            e = edges[idx - 1]
            tri = [int(x) for x in mesh.faces[f]]
            if e[0] not in prev_c or e[1] not in prev_c:
                return None
            new_c = {e[0]: prev_c[e[0]], e[1]: prev_c[e[1]]}
            (w,) = [v for v in tri if v != e[0] and v != e[1]]
            prev_third = next(
                v for v in (int(x) for x in mesh.faces[faces[idx - 1]]) if v != e[0] and v != e[1]
            )
            new_c[w] = _unfold_apex(
                prev_c[e[0]],
                prev_c[e[1]],
                prev_c[prev_third],
                float(np.linalg.norm(mesh.vertices[w] - mesh.vertices[e[0]])),
                float(np.linalg.norm(mesh.vertices[w] - mesh.vertices[e[1]])),
            )
            coords.append(new_c)

        p2 = self._el_2d(a, coords[0], faces[0])
        q2 = self._el_2d(b, coords[-1], faces[-1])
        if p2 is None or q2 is None:
            return None

        portals: list[tuple[np.ndarray, np.ndarray, int, int]] = []
        e0 = edges[0]
        a2, b2 = coords[0][e0[0]], coords[0][e0[1]]
        # Orient the first portal by the third vertex of F_0 (P side is F_0's side).
        third0 = next(v for v in (int(x) for x in self.mesh.faces[faces[0]]) if v not in e0)
        ref = coords[0][third0]
        if _tri2(a2, b2, ref) > 0:
            # third (P side) is left of a2->b2, so walking a2->b2 has P on the
            # left; the portal crossed left-to-right seen from P is (b2, a2).
            left, right, lv, rv = b2, a2, e0[1], e0[0]
        else:
            left, right, lv, rv = a2, b2, e0[0], e0[1]
        portals.append((left, right, lv, rv))
        for idx in range(1, len(edges)):
            e = edges[idx]
            cmap = coords[idx]
            pl, pr, lv, rv = portals[-1]
            if e[0] == lv:
                portals.append((pl, cmap[e[1]], lv, e[1]))
            elif e[1] == lv:
                portals.append((pl, cmap[e[0]], lv, e[0]))
            elif e[0] == rv:
                portals.append((cmap[e[1]], pr, e[1], rv))
            elif e[1] == rv:
                portals.append((cmap[e[0]], pr, e[0], rv))
            else:
                return None
        return p2, q2, portals

    def _funnel_length(self, a, b, edges):
        faces = self._strip_faces(a, b, edges)
        if faces is None:
            return None
        unf = self._unfold_strip(a, b, edges, faces)
        if unf is None:
            return None
        p2, q2, portals = unf
        pts2, apex_idx = _funnel(p2, q2, [(pl, pr) for pl, pr, _, _ in portals])
        length = float(np.linalg.norm(np.diff(pts2, axis=0), axis=1).sum())
        return length, pts2, portals, apex_idx

    # -- shortening loop -------------------------------------------------------------

    def _shorten(self, a: SurfacePoint, b: SurfacePoint, edges: list[Edge]):
        res = self._funnel_length(a, b, edges)
        if res is None:
            raise NoPath("broken initial strip")
        length, pts2, portals, apex_idx = res
        it = 0
        for it in range(1, self.max_passes + 1):
            improved = False
            # Bends: apexes at portal endpoints; try re-routing around each.
            for k, side in apex_idx:
                pl, pr, lv, rv = portals[k]
                v = lv if side == 0 else rv
                new_edges = self._flip_at_vertex(a, b, edges, v)
                if new_edges is None:
                    continue
                res2 = self._funnel_length(a, b, new_edges)
                if res2 is None:
                    continue
                if res2[0] < length * (1 - self.rel_tol):
                    length, pts2, portals, apex_idx = res2
                    edges = new_edges
                    improved = True
                    break
            if not improved:
                break
        return edges, length, pts2, portals, it

    def _flip_at_vertex(self, a, b, edges: list[Edge], v: int) -> list[Edge] | None:
        """Re-route the strip around the other side of vertex v."""
        idx = [i for i, e in enumerate(edges) if v in e]
        if not idx:
            return None
        i0, i1 = idx[0], idx[-1]
        if idx != list(range(i0, i1 + 1)):
            return None  # v-run not contiguous; bail out
        faces = self._strip_faces(a, b, edges)
        if faces is None:
            return None
        f_before = faces[i0]
        f_after = faces[i1 + 1]
        current_first = edges[i0]
        other = self._fan_spokes_other(v, f_before, f_after, current_first)
        if other is None:
            return None
        return edges[:i0] + other + edges[i1 + 1:]

    def _fan_spokes_other(self, v: int, f_in: int, f_out: int, current_first: Edge) -> list[Edge] | None:
        fan, interior = self._ordered_fan(v)
        if f_in not in fan or f_out not in fan:
            return None
        i0, i1 = fan.index(f_in), fan.index(f_out)
        for direction in (1, -1):
            chain = [i0]
            i = i0
            ok = True
            for _ in range(len(fan)):
                if i == i1:
                    break
                ni = i + direction
                if interior:
                    ni %= len(fan)
                elif ni < 0 or ni >= len(fan):
                    ok = False
                    break
                chain.append(ni)
                i = ni
            if not ok or chain[-1] != i1:
                continue
            arc = [fan[k] for k in chain]
            spokes: list[Edge] = []
            valid = True
            for fa, fb in zip(arc[:-1], arc[1:]):
                shared = set(int(x) for x in self.mesh.faces[fa]) & set(
                    int(x) for x in self.mesh.faces[fb]
                )
                shared.discard(v)
                if len(shared) != 1:
                    valid = False
                    break
                r = shared.pop()
                spokes.append((min(v, r), max(v, r)))
            if not valid:
                continue
            if spokes and spokes[0] == current_first:
                continue  # same side as the current strip
            if not spokes and f_in != f_out:
                continue
            return spokes
        return None

    # -- output ------------------------------------------------------------------

    def _path_points(self, a, b, edges, pts2, portals):
        """3D polyline from the planar funnel result."""
        points = [a.xyz]
        pinned: list[int] = []
        eps = 1e-9
        for (pl, pr, lv, rv), (ea, eb) in zip(portals, edges):
            x = _polyline_portal_crossing(pts2, pl, pr)
            if x is None:
                continue
            elen = float(np.linalg.norm(pr - pl))
            s = float(np.linalg.norm(x - pl)) / max(elen, 1e-300)
            if s <= eps:
                p3 = self.mesh.vertices[lv]
                if not pinned or pinned[-1] != lv:
                    pinned.append(lv)
            elif s >= 1 - eps:
                p3 = self.mesh.vertices[rv]
                if not pinned or pinned[-1] != rv:
                    pinned.append(rv)
            else:
                va, vb = self.mesh.vertices[lv], self.mesh.vertices[rv]
                p3 = (1 - s) * va + s * vb
            points.append(p3)
        points.append(b.xyz)
        pts = _dedupe_polyline(np.asarray(points), 1e-12 * self.mesh.bbox_diagonal())
        return pts, pinned


def trace_geodesic_oracle(mesh: TriMesh, a: SurfacePoint, b: SurfacePoint) -> np.ndarray:
    """One-shot traced shortest path between two surface points (polyline)."""
    return GeodesicTracer(mesh).trace(a, b).points


# -- planar funnel machinery ---------------------------------------------------


def _cross2(u: np.ndarray, v: np.ndarray) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _tri2(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """Twice the signed area; positive when c lies left of the ray a->b."""
    return float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def _unfold_apex(a2, b2, prev_third, la: float, lb: float) -> np.ndarray:
    """Place a triangle apex at distances (la, lb) from a2/b2, opposite prev_third."""
    c = float(np.linalg.norm(b2 - a2))
    u = (b2 - a2) / max(c, 1e-300)
    n = np.array([-u[1], u[0]])
    x = (la**2 + c**2 - lb**2) / (2 * max(c, 1e-300))
    y = float(np.sqrt(max(la**2 - x**2, 0.0)))
    side = _tri2(a2, b2, prev_third)
    if side > 0:
        y = -y
    return a2 + x * u + y * n


def _funnel(p: np.ndarray, q: np.ndarray, portals_lr: list[tuple[np.ndarray, np.ndarray]]):
    """Shortest planar path from p to q through ordered portals.

    Returns (points, apexes) where apexes are (portal_index, side) pairs,
    side 0 = left endpoint, 1 = right endpoint — these are the path bends.
    """
    portals = [(p, p)] + [(pl, pr) for pl, pr in portals_lr] + [(q, q)]
    pts = [p]
    apexes: list[tuple[int, int]] = []
    apex = p
    left = p
    right = p
    ai = li = ri = 0
    i = 1
    guard = 0
    n = len(portals)
    max_steps = 16 * n + 64
    while i < n and guard < max_steps:
        guard += 1
        pl, pr = portals[i]
        # Tighten the right bound.
        if _tri2(apex, right, pr) >= 0:
            if np.array_equal(apex, right) or _tri2(apex, left, pr) < 0:
                right = pr
                ri = i
            else:
                pts.append(left)
                if 1 <= li <= len(portals_lr):
                    apexes.append((li - 1, 0))
                apex = left
                ai = li
                left = right = apex
                li = ri = ai
                i = ai + 1
                continue
        # Tighten the left bound.
        if _tri2(apex, left, pl) <= 0:
            if np.array_equal(apex, left) or _tri2(apex, right, pl) > 0:
                left = pl
                li = i
            else:
                pts.append(right)
                if 1 <= ri <= len(portals_lr):
                    apexes.append((ri - 1, 1))
                apex = right
                ai = ri
                left = right = apex
                li = ri = ai
                i = ai + 1
                continue
        i += 1
    pts.append(q)
    return np.asarray(pts), apexes


def _polyline_portal_crossing(path2: np.ndarray, pl: np.ndarray, pr: np.ndarray):
    """Intersection point of a planar path with portal segment (pl, pr)."""
    d = pr - pl
    dlen = float(np.linalg.norm(d))
    scale = max(dlen, 1e-300)
    for i in range(len(path2) - 1):
        u0, u1 = path2[i], path2[i + 1]
        s1 = _tri2(pl, pr, u0) / scale
        s2 = _tri2(pl, pr, u1) / scale
        if s1 * s2 > 1e-18:
            continue
        denom = s1 - s2
        t = 0.5 if abs(denom) < 1e-300 else s1 / denom
        x = u0 + np.clip(t, 0.0, 1.0) * (u1 - u0)
        proj = float(np.dot(x - pl, d)) / max(dlen**2, 1e-300)
        if -1e-9 <= proj <= 1 + 1e-9:
            return pl + np.clip(proj, 0.0, 1.0) * d
    return None


# -- polyline utilities (deviation metrics, contact tests, crossings) ---------


def _dedupe_polyline(points: np.ndarray, tol: float) -> np.ndarray:
    keep = [0]
    for i in range(1, len(points)):
        if np.linalg.norm(points[i] - points[keep[-1]]) > tol:
            keep.append(i)
    return points[keep]


def polyline_length(points: np.ndarray) -> float:
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())


def point_to_polyline_distance(p: np.ndarray, poly: np.ndarray) -> float:
    a = poly[:-1]
    b = poly[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", p[None, :] - a, ab) / np.maximum(denom, 1e-300), 0, 1)
    proj = a + t[:, None] * ab
    return float(np.linalg.norm(proj - p, axis=1).min())


def mean_polyline_deviation(poly_a: np.ndarray, poly_b: np.ndarray, samples: int = 64) -> float:
    """Mean distance from uniform samples of poly_a to poly_b."""
    seg = np.linalg.norm(np.diff(poly_a, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0:
        return float(point_to_polyline_distance(poly_a[0], poly_b))
    ss = np.linspace(0, s[-1], samples)
    idx = np.clip(np.searchsorted(s, ss, side="right") - 1, 0, len(seg) - 1)
    w = (ss - s[idx]) / np.maximum(seg[idx], 1e-300)
    pts = poly_a[idx] + w[:, None] * (poly_a[idx + 1] - poly_a[idx])
    return float(np.mean([point_to_polyline_distance(p, poly_b) for p in pts]))


def closest_point_between_polylines(poly_a: np.ndarray, poly_b: np.ndarray) -> tuple[np.ndarray, float]:
    """Closest-approach midpoint of two polylines and the gap distance."""
    best = (None, np.inf)
    for i in range(len(poly_a) - 1):
        p, u = poly_a[i], poly_a[i + 1] - poly_a[i]
        for j in range(len(poly_b) - 1):
            q, v = poly_b[j], poly_b[j + 1] - poly_b[j]
            w0 = p - q
            a = np.dot(u, u)
            bb = np.dot(u, v)
            c = np.dot(v, v)
            d = np.dot(u, w0)
            e = np.dot(v, w0)
            den = a * c - bb * bb
            if den > 1e-300:
                sc = np.clip((bb * e - c * d) / den, 0, 1)
            else:
                sc = 0.0
            tc = np.clip((bb * sc + e) / max(c, 1e-300), 0, 1)
            sc = np.clip((bb * tc - d) / max(a, 1e-300), 0, 1)
            pa = p + sc * u
            pb = q + tc * v
            gap = float(np.linalg.norm(pa - pb))
            if gap < best[1]:
                best = (0.5 * (pa + pb), gap)
    return best
