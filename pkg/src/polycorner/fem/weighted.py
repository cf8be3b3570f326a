"""
Weighted Sobolev norms  sum_{|alpha| <= m} || r^(-a-1+|alpha|) d^alpha u ||_{L^2}^2
for P1 functions, r being the distance to a set of singular vertices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from .poisson import FemSolution, element_gradients
from .quadrature import BARY7, W7, duffy_rule


class WeightedNormError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedNormSpec:
    a: float
    m: int

    def __post_init__(self):
        if self.m < 0:
            raise WeightedNormError("order must be nonnegative")
        if self.m > 2:
            raise WeightedNormError("orders above 2 are not available for P1 functions")

    def exponent(self, order: int) -> float:
        return -self.a - 1.0 + order


def recovered_hessians(sol: FemSolution) -> np.ndarray:
    """
    Piecewise-constant second derivatives from area-weighted nodal gradient
    recovery; returns (T, 3) columns u_xx, u_xy, u_yy.
    """
    mesh = sol.mesh
    G, area = element_gradients(mesh)
    g = sol.gradients()
    N = mesh.n_nodes
    acc = np.zeros((N, 2))
    wsum = np.zeros(N)
    for k in range(3):
        np.add.at(acc, mesh.triangles[:, k], g * area[:, None])
        np.add.at(wsum, mesh.triangles[:, k], area)
    nodal = acc / wsum[:, None]
    gx = np.einsum("tkd,tk->td", G, nodal[mesh.triangles, 0])
    gy = np.einsum("tkd,tk->td", G, nodal[mesh.triangles, 1])
    return np.stack([gx[:, 0], 0.5 * (gx[:, 1] + gy[:, 0]), gy[:, 1]], 1)


def _distance(x: np.ndarray, verts: np.ndarray) -> np.ndarray:
    return np.min(np.linalg.norm(x[:, None, :] - verts[None, :, :], axis=2), axis=1)


def weighted_norm_terms(sol: FemSolution, spec: WeightedNormSpec,
                        singular_vertices: Sequence, duffy_order: int = 12) -> Dict[int, float]:
    """
    Squared contribution of each derivative order.  A term is +inf when its
    integrand is not integrable at a singular vertex: order 0 needs a < 0 unless
    u vanishes there, order 1 needs a < 1 unless the gradient vanishes on the
    adjacent triangles, order 2 needs a < 2.
    """
    mesh = sol.mesh
    verts = np.atleast_2d(np.asarray(singular_vertices, dtype=float))
    P = mesh.nodes[mesh.triangles]
    area = mesh.areas()
    vals = sol.values[mesh.triangles]
    grads = sol.gradients()
    hess = recovered_hessians(sol) if spec.m >= 2 else None

    touch = np.zeros(len(P), dtype=bool)
    apex = np.zeros(len(P), dtype=int)
    for v in verts:
        hit = np.linalg.norm(P - v[None, None, :], axis=2) < 1e-14
        rows = np.flatnonzero(hit.any(1))
        touch[rows] = True
        apex[rows] = hit[rows].argmax(1)

    terms = {}
    for order in range(spec.m + 1):
        w = spec.exponent(order)
        beta = 2 * w
        if touch.any() and beta <= -2:
            # integrand ~ r^beta * c near the vertex; c is the vertex value or derivative
            if order == 0:
                tv = vals[touch, apex[touch]]
                c = np.max(np.abs(tv)) if len(tv) else 0.0
            elif order == 1:
                c = np.max(np.abs(grads[touch]))
            else:
                c = np.max(np.abs(hess[touch]))
            if c > 0:
                terms[order] = float("inf")
                continue
        total = 0.0
        reg = np.flatnonzero(~touch)
        Pr = P[reg]
        for q in range(len(W7)):
            xq = np.einsum("k,tkd->td", BARY7[q], Pr)
            r = _distance(xq, verts)
            if order == 0:
                dens = (vals[reg] @ BARY7[q]) ** 2
            elif order == 1:
                dens = np.sum(grads[reg] ** 2, 1)
            else:
                dens = np.sum(hess[reg] ** 2, 1)
            total += np.sum(W7[q] * area[reg] * r ** beta * dens)
        if touch.any():
            # after the check above, beta <= -2 only survives with a vanishing
            # integrand factor; order 0 then has u = s * (linear in t)
            shift = 2.0 if beta <= -2 else 0.0
            s, t, wq = duffy_rule(duffy_order, beta + shift)
            for tri in np.flatnonzero(touch):
                k = apex[tri]
                idx = [k, (k + 1) % 3, (k + 2) % 3]
                A, B, C = P[tri, idx[0]], P[tri, idx[1]], P[tri, idx[2]]
                edge = (1 - t)[:, None] * (B - A) + t[:, None] * (C - A)
                x = A[None, :] + s[:, None] * edge
                # r^beta = s^beta (r / s)^beta; s^beta is carried by the rule
                ratio = _distance(x, verts) / s
                if order == 0:
                    lam = np.stack([1 - s, s * (1 - t), s * t], 1)
                    dens = (lam @ vals[tri, idx]) ** 2 / s ** shift
                elif order == 1:
                    dens = np.full(len(s), np.sum(grads[tri] ** 2))
                else:
                    dens = np.full(len(s), np.sum(hess[tri] ** 2))
                if shift and order > 0:
                    continue
                total += area[tri] * np.sum(wq * ratio ** beta * dens)
        terms[order] = float(total)
    return terms


def weighted_norm(sol: FemSolution, spec: WeightedNormSpec, singular_vertices: Sequence) -> float:
    terms = weighted_norm_terms(sol, spec, singular_vertices)
    return float(np.sqrt(sum(terms.values())))
