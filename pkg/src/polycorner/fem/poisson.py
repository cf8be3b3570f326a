"""
P1 Galerkin solver for  Delta u = f  in a polygon,  u = g  on the boundary.

Delta is the analyst's Laplacian d_xx + d_yy, so the discrete system is
K u = -M f with K the stiffness matrix.  Dirichlet values are imposed by
nodal interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .mesh import GradedMesh
from .quadrature import BARY3, BARY7, W3, W7, duffy_rule

Field = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]


class FemError(RuntimeError):
    pass


def _as_callable(f: Field):
    if callable(f):
        return f
    c = float(f)
    return lambda x, y: np.full(np.shape(x), c)


def element_gradients(mesh: GradedMesh):
    """Gradients of the three hat functions on each triangle, shape (T, 3, 2), and areas."""
    p = mesh.nodes[mesh.triangles]
    area = mesh.areas()
    # grad lambda_k = rot(p_{k+2} - p_{k+1}) / (2 area)
    G = np.empty((len(p), 3, 2))
    for k in range(3):
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        G[:, k, 0] = -e[:, 1]
        G[:, k, 1] = e[:, 0]
    G /= (2 * area)[:, None, None]
    return G, area


def stiffness_matrix(mesh: GradedMesh) -> sps.csr_matrix:
    G, area = element_gradients(mesh)
    local = np.einsum("tid,tjd->tij", G, G) * area[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    N = mesh.n_nodes
    return sps.coo_matrix((local.ravel(), (rows, cols)), shape=(N, N)).tocsr()


def load_vector(mesh: GradedMesh, f: Field) -> np.ndarray:
    """Entries int f phi_i by the symmetric three-point rule."""
    f = _as_callable(f)
    p = mesh.nodes[mesh.triangles]
    area = mesh.areas()
    b = np.zeros(mesh.n_nodes)
    for q in range(3):
        xq = np.einsum("k,tkd->td", BARY3[q], p)
        fq = f(xq[:, 0], xq[:, 1])
        for k in range(3):
            np.add.at(b, mesh.triangles[:, k], W3[q] * area * fq * BARY3[q, k])
    return b


@dataclass(frozen=True, eq=False)
class FemSolution:
    values: np.ndarray
    mesh: GradedMesh
    dirichlet_nodes: np.ndarray
    residual: float

    def __post_init__(self):
        self.values.setflags(write=False)

    def gradients(self) -> np.ndarray:
        G, _ = element_gradients(self.mesh)
        return np.einsum("tkd,tk->td", G, self.values[self.mesh.triangles])

    def energy(self) -> float:
        _, area = element_gradients(self.mesh)
        g = self.gradients()
        return float(np.sum(area * np.sum(g * g, 1)))

    def evaluate(self, pts: np.ndarray, chunk: int = 64) -> np.ndarray:
        """P1 interpolant at arbitrary points; NaN outside the mesh."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        P = self.mesh.nodes[self.mesh.triangles]
        a, b, c = P[:, 0], P[:, 1], P[:, 2]
        det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
        out = np.full(len(pts), np.nan)
        for start in range(0, len(pts), chunk):
            q = pts[start:start + chunk]
            dx = q[:, None, 0] - a[None, :, 0]
            dy = q[:, None, 1] - a[None, :, 1]
            l1 = ((c[:, 1] - a[:, 1]) * dx - (c[:, 0] - a[:, 0]) * dy) / det
            l2 = (-(b[:, 1] - a[:, 1]) * dx + (b[:, 0] - a[:, 0]) * dy) / det
            l0 = 1 - l1 - l2
            inside = (l0 >= -1e-12) & (l1 >= -1e-12) & (l2 >= -1e-12)
            for r in range(len(q)):
                hits = np.flatnonzero(inside[r])
                if len(hits):
                    t = hits[0]
                    vals = self.values[self.mesh.triangles[t]]
                    out[start + r] = l0[r, t] * vals[0] + l1[r, t] * vals[1] + l2[r, t] * vals[2]
        return out


def solve_poisson(mesh: GradedMesh, f: Field = 0.0, g: Field = 0.0, rtol: float = 1e-12) -> FemSolution:
    g = _as_callable(g)
    K = stiffness_matrix(mesh)
    b = -load_vector(mesh, f)
    bnd = mesh.boundary_nodes()
    u = np.zeros(mesh.n_nodes)
    u[bnd] = g(mesh.nodes[bnd, 0], mesh.nodes[bnd, 1])
    free = np.setdiff1d(np.arange(mesh.n_nodes), bnd)
    rhs = b[free] - K[free][:, bnd] @ u[bnd]
    A = K[free][:, free].tocsc()
    if len(free):
        try:
            lu = spla.splu(A)
        except RuntimeError as exc:
            raise FemError(f"stiffness matrix is singular: {exc}") from exc
        x = lu.solve(rhs)
        scale = max(np.linalg.norm(rhs), 1e-300)
        res = np.linalg.norm(A @ x - rhs) / scale
        for _ in range(3):
            if res <= rtol:
                break
            x += lu.solve(rhs - A @ x)
            res = np.linalg.norm(A @ x - rhs) / scale
        if not np.all(np.isfinite(x)):
            raise FemError("linear solve produced non-finite values")
        if res > rtol and np.linalg.norm(rhs) > 0:
            raise FemError(f"relative residual {res:.3e} above {rtol:.1e}")
        u[free] = x
    else:
        res = 0.0
    return FemSolution(u, mesh, bnd, float(res))


def energy_error(sol: FemSolution, grad_exact: Callable, singular_points: Sequence = (),
                 duffy_order: int = 10) -> float:
    """
    |u - u_h|_{H^1}.  Triangles touching a singular point use a Duffy rule
    collapsed at that point; the rest use the seven-point rule.
    """
    mesh = sol.mesh
    P = mesh.nodes[mesh.triangles]
    area = mesh.areas()
    gh = sol.gradients()
    special = np.zeros(len(P), dtype=bool)
    apex = np.zeros(len(P), dtype=int)
    for sp_pt in singular_points:
        hit = np.linalg.norm(P - np.asarray(sp_pt, float)[None, None, :], axis=2) < 1e-14
        rows = np.flatnonzero(hit.any(1))
        special[rows] = True
        apex[rows] = hit[rows].argmax(1)
    total = 0.0
    reg = ~special
    Pr = P[reg]
    for q in range(len(W7)):
        xq = np.einsum("k,tkd->td", BARY7[q], Pr)
        gx, gy = grad_exact(xq[:, 0], xq[:, 1])
        d = (gx - gh[reg, 0]) ** 2 + (gy - gh[reg, 1]) ** 2
        total += np.sum(W7[q] * area[reg] * d)
    if special.any():
        s, t, w = duffy_rule(duffy_order, 0.0)
        for tri in np.flatnonzero(special):
            k = apex[tri]
            A, B, C = P[tri, k], P[tri, (k + 1) % 3], P[tri, (k + 2) % 3]
            x = A[None, :] + s[:, None] * ((1 - t)[:, None] * (B - A) + t[:, None] * (C - A))
            gx, gy = grad_exact(x[:, 0], x[:, 1])
            d = (gx - gh[tri, 0]) ** 2 + (gy - gh[tri, 1]) ** 2
            total += area[tri] * np.sum(w * d)
    return float(np.sqrt(total))
