"""Triangle meshes of the unit sphere and the cotangent Laplacian."""

import numpy as np
from scipy import sparse

from .errors import DomainError


def icosphere(level=5):
    """Unit icosphere: icosahedron subdivided ``level`` times, vertices projected."""
    t = (1.0 + 5 ** 0.5) / 2.0
    V = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
                  [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
                  [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], dtype=float)
    F = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                  [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                  [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                  [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    for _ in range(level):
        edges = np.sort(np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]]), axis=1)
        uniq, inv = np.unique(edges, axis=0, return_inverse=True)
        mids = V[uniq[:, 0]] + V[uniq[:, 1]]
        mids /= np.linalg.norm(mids, axis=1, keepdims=True)
        nF = len(F)
        m = inv.reshape(3, nF) + len(V)
        a, b, c = F[:, 0], F[:, 1], F[:, 2]
        ab, bc, ca = m[0], m[1], m[2]
        F = np.concatenate([np.column_stack([a, ab, ca]), np.column_stack([b, bc, ab]),
                            np.column_stack([c, ca, bc]), np.column_stack([ab, bc, ca])])
        V = np.vstack([V, mids])
    return V, F


def submesh(V, F, keep_vertex):
    """Triangles whose three vertices are kept, with vertices re-indexed."""
    keep_tri = keep_vertex[F].all(axis=1)
    F = F[keep_tri]
    used = np.unique(F)
    remap = -np.ones(len(V), dtype=int)
    remap[used] = np.arange(len(used))
    return V[used], remap[F]


def boundary_vertices(F, n):
    """Mask of vertices lying on an edge used by exactly one triangle."""
    edges = np.sort(np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    mask = np.zeros(n, bool)
    mask[uniq[counts == 1].ravel()] = True
    return mask


def cotan_laplacian(V, F):
    """Return ``(L, M)``: stiffness ``L`` (positive semidefinite, ``L 1 = 0``)
    with cotangent weights and the lumped mixed-Voronoi mass ``M`` (vector).

    The pointwise Laplace-Beltrami estimate is ``-(L f) / M``.
    """
    n = len(V)
    if len(F) == 0:
        raise DomainError("mesh has no triangles")
    P = [V[F[:, k]] for k in range(3)]
    cots = []
    for k in range(3):
        a = P[(k + 1) % 3] - P[k]
        b = P[(k + 2) % 3] - P[k]
        cr = np.linalg.norm(np.cross(a, b), axis=1)
        if np.any(cr <= 1e-14):
            raise DomainError("degenerate triangle in mesh")
        cots.append(np.einsum("ij,ij->i", a, b) / cr)
    I, J, W = [], [], []
    for k in range(3):
        i, j = F[:, (k + 1) % 3], F[:, (k + 2) % 3]
        w = 0.5 * cots[k]
        I += [i, j]
        J += [j, i]
        W += [w, w]
    I, J, W = np.concatenate(I), np.concatenate(J), np.concatenate(W)
    A = sparse.coo_matrix((W, (I, J)), shape=(n, n)).tocsr()
    L = sparse.diags(np.asarray(A.sum(axis=1)).ravel()) - A
    M = _mixed_area(P, F, cots, n)
    return L.tocsr(), M


def _mixed_area(P, F, cots, n):
    area = 0.5 * np.linalg.norm(np.cross(P[1] - P[0], P[2] - P[0]), axis=1)
    M = np.zeros(n)
    obtuse = np.zeros(len(F), dtype=int) - 1
    for k in range(3):
        a = P[(k + 1) % 3] - P[k]
        b = P[(k + 2) % 3] - P[k]
        obtuse[np.einsum("ij,ij->i", a, b) < 0] = k
    for k in range(3):
        # Voronoi share of vertex k: (|e_ij|^2 cot_k' + ...)/8 over the two incident edges
        j, l = (k + 1) % 3, (k + 2) % 3
        e_kj = np.sum((P[j] - P[k]) ** 2, axis=1)
        e_kl = np.sum((P[l] - P[k]) ** 2, axis=1)
        vor = (e_kj * cots[l] + e_kl * cots[j]) / 8.0
        share = np.where(obtuse < 0, vor, np.where(obtuse == k, area / 2, area / 4))
        np.add.at(M, F[:, k], share)
    return M


def sphere_cap_mesh(r_cap, level=6):
    """Triangulated geodesic cap of the unit sphere around the north pole."""
    V, F = icosphere(level)
    r = np.arccos(np.clip(V[:, 2], -1, 1))
    return submesh(V, F, r < r_cap)
