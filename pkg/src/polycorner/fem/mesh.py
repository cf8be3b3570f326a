"""
Triangulations of simple polygons refined uniformly and graded toward vertices.

A coarse triangulation from ear clipping is refined by red (4-to-1)
subdivision until the longest edge is at most h; vertices with kappa < 1 are
then graded by the radial map  r -> R (r / R)^(1 / kappa)  inside a disc of
radius R, so the uniform layers r_j = R j / n become R (j / n)^(1 / kappa).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..geometry import Polygon, segment_distance


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GradedMesh:
    nodes: np.ndarray          # (N, 2)
    triangles: np.ndarray      # (T, 3), counterclockwise
    kappa: Tuple[float, ...]   # grading per polygon vertex
    h: float                   # longest edge before grading
    polygon: Polygon
    # index of each polygon vertex in `nodes`
    corner_nodes: Tuple[int, ...]

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.triangles.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_lengths(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return np.stack([np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1) for k in range(3)], 1)

    def diameters(self) -> np.ndarray:
        return self.edge_lengths().max(axis=1)

    def min_angles(self) -> np.ndarray:
        """Smallest interior angle (radians) of each triangle."""
        p = self.nodes[self.triangles]
        out = np.full(len(p), np.pi)
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cosang = np.sum(a * b, 1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            out = np.minimum(out, np.arccos(np.clip(cosang, -1, 1)))
        return out

    def boundary_edges(self) -> np.ndarray:
        e = np.sort(np.concatenate([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]],
                                    self.triangles[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges())

    def to_text(self) -> str:
        """Plain-text export: node count, nodes, triangle count, triangles."""
        lines = [str(self.n_nodes)]
        lines += [f"{x:.17g} {y:.17g}" for x, y in self.nodes]
        lines.append(str(len(self.triangles)))
        lines += [f"{a} {b} {c}" for a, b, c in self.triangles]
        return "\n".join(lines) + "\n"


def ear_clip(poly: Polygon) -> List[Tuple[int, int, int]]:
    """Ear clipping, always cutting the ear with the largest minimum angle."""
    P = poly.array()
    idx = list(range(len(P)))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def min_angle(a, b, c):
        pts = [P[a], P[b], P[c]]
        m = math.pi
        for k in range(3):
            u = pts[(k + 1) % 3] - pts[k]
            v = pts[(k + 2) % 3] - pts[k]
            m = min(m, math.acos(max(-1.0, min(1.0, u @ v / (np.linalg.norm(u) * np.linalg.norm(v))))))
        return m

    while len(idx) > 3:
        best = None
        n = len(idx)
        for k in range(n):
            a, b, c = idx[k - 1], idx[k], idx[(k + 1) % n]
            if cross(P[a], P[b], P[c]) <= 1e-14:
                continue
            inside = False
            for q in idx:
                if q in (a, b, c):
                    continue
                if (cross(P[a], P[b], P[q]) >= 0 and cross(P[b], P[c], P[q]) >= 0
                        and cross(P[c], P[a], P[q]) >= 0):
                    inside = True
                    break
            if inside:
                continue
            score = min_angle(a, b, c)
            # ties broken by position for determinism
            if best is None or score > best[0] + 1e-12:
                best = (score, k)
        if best is None:
            raise MeshError("ear clipping failed; polygon may be degenerate")
        k = best[1]
        tris.append((idx[k - 1], idx[k], idx[(k + 1) % n]))
        del idx[k]
    tris.append(tuple(idx))
    return tris


def red_refine(nodes: np.ndarray, tris: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Split every triangle into four through its edge midpoints (conforming)."""
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    mids = 0.5 * (nodes[uniq[:, 0]] + nodes[uniq[:, 1]])
    new_nodes = np.vstack([nodes, mids])
    T = len(tris)
    m01 = len(nodes) + inv[:T]
    m12 = len(nodes) + inv[T:2 * T]
    m20 = len(nodes) + inv[2 * T:]
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    new_tris = np.concatenate([
        np.stack([a, m01, m20], 1),
        np.stack([m01, b, m12], 1),
        np.stack([m20, m12, c], 1),
        np.stack([m01, m12, m20], 1),
    ])
    return new_nodes, new_tris


def grading_radius(poly: Polygon, vertex: int) -> float:
    """Half the distance from a vertex to all other vertices and non-incident edges."""
    P = poly.array()
    n = len(P)
    v = P[vertex]
    d = min(np.linalg.norm(P[j] - v) for j in range(n) if j != vertex)
    for i, j in poly.edges():
        if vertex in (i, j):
            continue
        d = min(d, float(segment_distance(v[None, :], P[i], P[j])[0]))
    return 0.5 * d


def generate_graded_mesh(poly: Polygon, h: float, kappa: Optional[Sequence[float]] = None,
                         radius: Optional[Sequence[float]] = None) -> GradedMesh:
    if not h > 0:
        raise MeshError("mesh size must be positive")
    n = len(poly)
    kappa = tuple(float(k) for k in (kappa if kappa is not None else [1.0] * n))
    if len(kappa) != n:
        raise MeshError(f"need one grading parameter per vertex ({n}), got {len(kappa)}")
    if any(not (0.0 < k <= 1.0) for k in kappa):
        raise MeshError("grading parameters must lie in (0, 1]")
    nodes = poly.array()
    tris = np.array(ear_clip(poly), dtype=np.int64)
    hmax = _longest_edge(nodes, tris)
    levels = max(0, math.ceil(math.log2(hmax / h) - 1e-9))
    if levels > 12:
        raise MeshError("requested mesh is too fine")
    for _ in range(levels):
        nodes, tris = red_refine(nodes, tris)
    h_actual = hmax / 2 ** levels
    nodes = nodes.copy()
    for v, k in enumerate(kappa):
        if k == 1.0:
            continue
        R = radius[v] if radius is not None else grading_radius(poly, v)
        c = nodes[v]
        d = nodes - c
        r = np.linalg.norm(d, axis=1)
        sel = (r < R) & (r > 0)
        nodes[sel] = c + d[sel] * ((r[sel] / R) ** (1.0 / k - 1.0))[:, None]
    mesh = GradedMesh(nodes, tris, kappa, h_actual, poly, tuple(range(n)))
    if np.any(mesh.areas() <= 0):
        raise MeshError("grading produced inverted triangles")
    return mesh


def _longest_edge(nodes, tris) -> float:
    p = nodes[tris]
    return float(max(np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1).max() for k in range(3)))
