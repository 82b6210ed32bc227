"""Least-squares conformal parameterization for disk-topology patches."""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import UVFlip


def conformal_parameterization(
    vertices: np.ndarray,
    faces: np.ndarray,
    boundary_loop: np.ndarray,
    pins: tuple[int, int] | None = None,
) -> np.ndarray:
    """Compute per-vertex UVs by least-squares conformal mapping.

    Two boundary vertices are pinned (first loop vertex and the loop vertex
    half-way around) to remove the similarity-transform null space. Raises
    :class:`UVFlip` if the resulting map is not injective.

    Returns
    -------
    uv : (V, 2) float64
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    nv = len(vertices)
    nf = len(faces)

    if pins is None:
        pins = (int(boundary_loop[0]), int(boundary_loop[len(boundary_loop) // 2]))
    p0, p1 = pins
    if p0 == p1:
        raise ValueError("pin vertices must differ")

    # Local isometric frame per face: q0=(0,0), q1=(x1,0), q2=(x2,y2).
    pa = vertices[faces[:, 0]]
    pb = vertices[faces[:, 1]]
    pc = vertices[faces[:, 2]]
    e1 = pb - pa
    e2 = pc - pa
    x1 = np.linalg.norm(e1, axis=1)
    x1 = np.maximum(x1, 1e-300)
    ex = e1 / x1[:, None]
    x2 = np.einsum("ij,ij->i", e2, ex)
    ny = e2 - x2[:, None] * ex
    y2 = np.linalg.norm(ny, axis=1)
    area2 = np.maximum(x1 * y2, 1e-300)

    # Row per face of the complex LSCM system: sum_j w_j z_j with
    # w0 = q2-q1, w1 = q0-q2, w2 = q1-q0 in complex local coords.
    q0 = np.zeros(nf, dtype=np.complex128)
    q1 = x1.astype(np.complex128)
    q2 = x2 + 1j * y2
    w = np.column_stack([q2 - q1, q0 - q2, q1 - q0]) / np.sqrt(area2)[:, None]

    rows = np.repeat(np.arange(nf), 3)
    cols = faces.ravel()
    M = sparse.csr_matrix((w.ravel(), (rows, cols)), shape=(nf, nv), dtype=np.complex128)

    free = np.setdiff1d(np.arange(nv), [p0, p1])
    z_pin = np.zeros(2, dtype=np.complex128)
    z_pin[1] = 1.0 + 0.0j
    rhs = -M[:, [p0, p1]] @ z_pin
    A = M[:, free]
    AtA = (A.conj().T @ A).tocsc()
    Atb = A.conj().T @ rhs
    z_free = spsolve(AtA, Atb)

    z = np.empty(nv, dtype=np.complex128)
    z[free] = z_free
    z[p0], z[p1] = z_pin
    uv = np.column_stack([z.real, z.imag])

    # Orientation: flip v if the map reversed orientation overall.
    tri = uv[faces]
    signed = 0.5 * (
        (tri[:, 1, 0] - tri[:, 0, 0]) * (tri[:, 2, 1] - tri[:, 0, 1])
        - (tri[:, 2, 0] - tri[:, 0, 0]) * (tri[:, 1, 1] - tri[:, 0, 1])
    )
    if signed.sum() < 0:
        uv[:, 1] *= -1.0
        signed = -signed
    if (signed <= 1e-12 * np.abs(signed).max()).any():
        raise UVFlip(f"{int((signed <= 0).sum())} flipped/degenerate UV triangles after LSCM")
    return uv
