"""Minimal OBJ reader/writer for triangle patches with optional per-vertex UVs.

Floats are written with ``%.17g`` so that write -> read round-trips are
bit-identical. Only ``v``, ``vt``, ``f`` and ``l`` records are handled; faces
may index UVs (``f a/ta b/tb c/tc``) but the patch format assumes one UV per
vertex.
"""

from __future__ import annotations

import numpy as np


def read_obj(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Read an OBJ file.

    Returns
    -------
    vertices : (V, 3) float64
    faces : (F, 3) int64, zero-based
    uv : (V, 2) float64 or None
        Per-vertex texture coordinates, if every face corner carries one and
        the assignment is consistent per vertex.
    """
    verts: list[list[float]] = []
    texcoords: list[list[float]] = []
    corners: list[list[tuple[int, int]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("v "):
                parts = line.split()
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif line.startswith("vt "):
                parts = line.split()
                texcoords.append([float(parts[1]), float(parts[2])])
            elif line.startswith("f "):
                refs = []
                for token in line.split()[1:]:
                    fields = token.split("/")
                    vi = int(fields[0])
                    ti = int(fields[1]) if len(fields) > 1 and fields[1] else 0
                    refs.append((vi, ti))
                if len(refs) != 3:
                    raise ValueError(f"non-triangular face in {path!r}: {line.strip()}")
                corners.append(refs)

    vertices = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    nv = len(vertices)
    faces = np.empty((len(corners), 3), dtype=np.int64)
    uv = None
    if texcoords and all(t != 0 for refs in corners for _, t in refs):
        uv = np.full((nv, 2), np.nan, dtype=np.float64)
    tex = np.asarray(texcoords, dtype=np.float64).reshape(-1, 2) if texcoords else None

    for fi, refs in enumerate(corners):
        for ci, (vi, ti) in enumerate(refs):
            v = vi - 1 if vi > 0 else nv + vi
            faces[fi, ci] = v
            if uv is not None:
                t = ti - 1 if ti > 0 else len(tex) + ti
                uv[v] = tex[t]
    if uv is not None and np.isnan(uv).any():
        uv = None
    return vertices, faces, uv


def write_obj(
    path: str,
    vertices: np.ndarray,
    faces: np.ndarray,
    uv: np.ndarray | None = None,
    polylines: list[np.ndarray] | None = None,
) -> None:
    """Write vertices/faces (and optional UVs and polyline records) as OBJ.

    ``polylines`` are extra 3D point chains appended as their own vertices
    plus ``l`` records (used for exporting grid members).
    """
    lines: list[str] = []
    for v in np.asarray(vertices, dtype=np.float64):
        lines.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    if uv is not None:
        for t in np.asarray(uv, dtype=np.float64):
            lines.append(f"vt {t[0]:.17g} {t[1]:.17g}")
        for f in np.asarray(faces, dtype=np.int64):
            lines.append(f"f {f[0]+1}/{f[0]+1} {f[1]+1}/{f[1]+1} {f[2]+1}/{f[2]+1}")
    else:
        for f in np.asarray(faces, dtype=np.int64):
            lines.append(f"f {f[0]+1} {f[1]+1} {f[2]+1}")
    if polylines:
        offset = len(vertices) + 1
        for pl in polylines:
            pl = np.asarray(pl, dtype=np.float64)
            for p in pl:
                lines.append(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
            idx = " ".join(str(offset + i) for i in range(len(pl)))
            lines.append(f"l {idx}")
            offset += len(pl)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
