"""
Double-layer Nystrom solver for the Dirichlet Laplace problem on polygons.

K f(x) = 1/(2 pi) int (y - x).nu(y) / |y - x|^2 f(y) dsigma(y), nu the outer
normal.  The interior potential u = K f (x in the domain) solves the
Dirichlet problem with data g once (1/2 I + K) f = g on the boundary.

Edges are split into uniform base panels; the two end panels of every edge
are refined geometrically (ratio 1/2) toward the vertex.  Sources on the
same straight edge as the target contribute nothing.  When a target sits
closer to a panel than that panel's length, the panel is subdivided
adaptively toward the target and the density is interpolated from the
panel's Gauss nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.special import roots_legendre

from .geometry import Polygon

INV_2PI = 1.0 / (2.0 * math.pi)


class BIEError(RuntimeError):
    pass


class IllConditionedError(BIEError):
    pass


@dataclass(frozen=True)
class Panel:
    a: np.ndarray
    b: np.ndarray
    edge: int
    start: int      # first node index
    length: float


@dataclass(frozen=True, eq=False)
class BoundaryPanelization:
    polygon: Polygon
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    edge_of: np.ndarray
    panels: Tuple[Panel, ...]
    order: int
    # limit of the kernel at y -> x; zero on straight edges
    diagonal: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return len(self.points)

    def panel_of(self) -> np.ndarray:
        out = np.empty(self.n, dtype=int)
        for k, p in enumerate(self.panels):
            out[p.start:p.start + self.order] = k
        return out


def _edge_breakpoints(base: int, depth: int) -> np.ndarray:
    """Parameters in [0, 1]: `base` uniform panels, end panels graded `depth` times."""
    u = np.linspace(0.0, 1.0, base + 1)
    first = u[1]
    grade = [first * 0.5 ** k for k in range(1, depth + 1)]
    pts = set(u.tolist()) | set(grade) | {1.0 - g for g in grade}
    return np.array(sorted(pts))


def panelize(poly: Polygon, order: int = 16, base_panels: int = 4, depth: int = 10
             ) -> BoundaryPanelization:
    if order < 2 or base_panels < 2 or depth < 0:
        raise BIEError("need order >= 2, base_panels >= 2, depth >= 0")
    V = poly.array()
    xg, wg = roots_legendre(order)
    tg = (xg + 1) / 2
    wg = wg / 2
    pts, nrm, wts, eid, panels = [], [], [], [], []
    for e, (i, j) in enumerate(poly.edges()):
        A, B = V[i], V[j]
        d = B - A
        L = float(np.linalg.norm(d))
        nu = np.array([d[1], -d[0]]) / L
        bp = _edge_breakpoints(base_panels, depth)
        for s0, s1 in zip(bp[:-1], bp[1:]):
            a, b = A + s0 * d, A + s1 * d
            start = len(pts)
            for t, w in zip(tg, wg):
                pts.append(a + t * (b - a))
                nrm.append(nu)
                wts.append(w * (s1 - s0) * L)
                eid.append(e)
            panels.append(Panel(a, b, e, start, (s1 - s0) * L))
    pts = np.array(pts)
    if len(np.unique(np.round(pts, 15), axis=0)) != len(pts):
        raise BIEError("coincident quadrature nodes")
    return BoundaryPanelization(poly, pts, np.array(nrm), np.array(wts), np.array(eid),
                                tuple(panels), order)


def circle_panelization(radius: float, n: int) -> BoundaryPanelization:
    """
    Equispaced trapezoidal nodes on a circle (spectrally accurate for periodic
    integrands).  Every node is its own 'edge'; the diagonal uses the curvature
    limit 1/(4 pi R) of the kernel.
    """
    th = 2 * np.pi * np.arange(n) / n
    pts = radius * np.stack([np.cos(th), np.sin(th)], 1)
    return BoundaryPanelization(None, pts, pts / radius, np.full(n, 2 * np.pi * radius / n),
                                np.arange(n), (), 1, np.full(n, INV_2PI / (2 * radius)))


def kernel(x: np.ndarray, y: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """(1/2pi) (y - x).nu / |y - x|^2 for broadcastable x (targets) and y, nu (sources)."""
    d = y - x
    return INV_2PI * np.sum(d * nu, axis=-1) / np.sum(d * d, axis=-1)


def kernel_matrix(targets: np.ndarray, pz: "BoundaryPanelization", chunk: int = 1024) -> np.ndarray:
    """k(x_i, y_j) w_j, filled in row blocks to keep memory at O(chunk * n)."""
    y, nu, w = pz.points, pz.normals, pz.weights
    out = np.empty((len(targets), len(y)))
    for s in range(0, len(targets), chunk):
        x = targets[s:s + chunk]
        dx = y[None, :, 0] - x[:, None, 0]
        dy = y[None, :, 1] - x[:, None, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[s:s + chunk] = INV_2PI * (dx * nu[None, :, 0] + dy * nu[None, :, 1]) / (dx * dx + dy * dy) * w
    return out


def _lagrange_matrix(nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Rows evaluate the interpolant through `nodes` at the points `t`."""
    n = len(nodes)
    bw = np.array([1.0 / np.prod(nodes[j] - np.delete(nodes, j)) for j in range(n)])
    diff = t[:, None] - nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15)
    diff[exact] = 1.0
    M = bw[None, :] / diff
    M /= M.sum(axis=1, keepdims=True)
    rows = np.flatnonzero(exact.any(1))
    for r in rows:
        M[r] = exact[r].astype(float)
    return M


def _segment_dist(x, a, b) -> float:
    ab = b - a
    t = min(1.0, max(0.0, float((x - a) @ ab / (ab @ ab))))
    return float(np.linalg.norm(x - (a + t * ab)))


class _NearField:
    """Upsampled panel integration for targets close to a panel."""

    def __init__(self, order: int):
        self.order = order
        x, w = roots_legendre(order)
        self.t = (x + 1) / 2
        self.w = w / 2

    def row(self, x: np.ndarray, panel: Panel, nu: np.ndarray) -> np.ndarray:
        """Weights c_j such that int_panel k(x, y) f(y) ~ sum_j c_j f(y_j)."""
        stack = [(0.0, 1.0)]
        ts, ws = [], []
        d = panel.b - panel.a
        L = panel.length
        while stack:
            s0, s1 = stack.pop()
            a, b = panel.a + s0 * d, panel.a + s1 * d
            if (s1 - s0) * L > _segment_dist(x, a, b) and (s1 - s0) > 1e-14:
                m = 0.5 * (s0 + s1)
                stack.append((m, s1))
                stack.append((s0, m))
                continue
            ts.append(s0 + (s1 - s0) * self.t)
            ws.append((s1 - s0) * L * self.w)
        ts = np.concatenate(ts)
        ws = np.concatenate(ws)
        y = panel.a[None, :] + ts[:, None] * d[None, :]
        k = kernel(x[None, :], y, nu[None, :]) * ws
        return k @ _lagrange_matrix(self.t, ts)


def _near_pairs(pz: BoundaryPanelization, targets: np.ndarray, target_edge: Optional[np.ndarray]):
    """(target, panel) pairs closer than the panel length, excluding same-edge pairs."""
    out = []
    for k, p in enumerate(pz.panels):
        ab = p.b - p.a
        t = np.clip(((targets - p.a) @ ab) / (ab @ ab), 0.0, 1.0)
        dist = np.linalg.norm(targets - (p.a + t[:, None] * ab), axis=1)
        near = dist < p.length
        if target_edge is not None:
            near &= target_edge != p.edge
        for i in np.flatnonzero(near):
            out.append((int(i), k))
    return out


@dataclass(frozen=True, eq=False)
class DenseBoundaryOperator:
    matrix: np.ndarray
    # True when the matrix already includes the 1/2 I term
    identity_plus_kernel: bool = False

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise BIEError(f"operator matrix must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise BIEError("non-finite kernel entries")

    def with_identity(self) -> "DenseBoundaryOperator":
        if self.identity_plus_kernel:
            return self
        return DenseBoundaryOperator(0.5 * np.eye(len(self.matrix)) + self.matrix, True)

    @property
    def shape(self):
        return self.matrix.shape


def double_layer_matrix(pz: BoundaryPanelization, near_correction: bool = True) -> DenseBoundaryOperator:
    x = pz.points
    K = kernel_matrix(x, pz)
    same = pz.edge_of[:, None] == pz.edge_of[None, :]
    K[same] = 0.0
    if pz.diagonal is not None:
        np.fill_diagonal(K, pz.diagonal * pz.weights)
    if near_correction and pz.panels:
        nf = _NearField(pz.order)
        for i, k in _near_pairs(pz, x, pz.edge_of):
            p = pz.panels[k]
            K[i, p.start:p.start + pz.order] = nf.row(x[i], p, pz.normals[p.start])
    return DenseBoundaryOperator(K)


def gauss_residual(pz: BoundaryPanelization, K: Optional[DenseBoundaryOperator] = None) -> np.ndarray:
    """((1/2 I + K) 1)(x_i) - 1 at every node."""
    K = (K or double_layer_matrix(pz)).with_identity()
    return K.matrix.sum(axis=1) - 1.0


@dataclass(frozen=True, eq=False)
class DirichletSolution:
    panelization: BoundaryPanelization
    density: np.ndarray
    condition: float
    near_correction: bool = True

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        """Double-layer potential of the density at interior points."""
        pz = self.panelization
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        K = kernel_matrix(pts, pz)
        if self.near_correction and pz.panels:
            nf = _NearField(pz.order)
            for i, k in _near_pairs(pz, pts, None):
                p = pz.panels[k]
                K[i, p.start:p.start + pz.order] = nf.row(pts[i], p, pz.normals[p.start])
        return K @ self.density

    def reliable(self, pts: np.ndarray) -> np.ndarray:
        """False where a point is closer to some panel than that panel's length."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ok = np.ones(len(pts), dtype=bool)
        for i, _ in _near_pairs(self.panelization, pts, None):
            ok[i] = False
        return ok


def solve_dirichlet(poly: Polygon, g: Callable, order: int = 16, base_panels: int = 4,
                    depth: int = 10, cond_cap: float = 1e10) -> DirichletSolution:
    pz = panelize(poly, order, base_panels, depth)
    A = double_layer_matrix(pz).with_identity().matrix
    rhs = np.asarray(g(pz.points[:, 0], pz.points[:, 1]), dtype=float)
    try:
        lu = scipy.linalg.lu_factor(A, check_finite=True)
        # 1-norm condition number from the explicit inverse of the LU factors
        inv = scipy.linalg.lu_solve(lu, np.eye(pz.n))
        cond = float(np.abs(A).sum(0).max() * np.abs(inv).sum(0).max())
    except (ValueError, np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise BIEError(f"dense factorization failed: {exc}") from exc
    if not np.isfinite(cond) or cond > cond_cap:
        # name the nearly singular mode by its largest node
        _, sv, vt = np.linalg.svd(A)
        worst = int(np.argmax(np.abs(vt[-1])))
        raise IllConditionedError(
            f"1/2 I + K has condition {cond:.3e} > {cond_cap:.1e}; smallest singular value "
            f"{sv[-1]:.3e}, mode concentrated at node {worst} {pz.points[worst].tolist()}")
    f = scipy.linalg.lu_solve(lu, rhs)
    return DirichletSolution(pz, f, cond)


# Corner localisation ---------------------------------------------------------

@dataclass(frozen=True)
class CornerProxy:
    vertex: int
    angle: float
    radii: Tuple[float, ...]
    norms: Tuple[float, ...]

    def relative_change(self, last: int = 4) -> float:
        v = np.array(self.norms[-last:])
        return float((v.max() - v.min()) / max(abs(v).max(), 1e-300))


def corner_compactness_probe(poly: Polygon, js: Sequence[int] = tuple(range(2, 9)),
                             order: int = 16, base_panels: int = 4, depth: int = 30
                             ) -> List[CornerProxy]:
    """
    L2 operator norm of K restricted to densities (and targets) within distance
    2^-j of each vertex.  A limit bounded away from zero means K is not compact there.
    """
    pz = panelize(poly, order, base_panels, depth)
    K = double_layer_matrix(pz).matrix
    sw = np.sqrt(pz.weights)
    B = sw[:, None] * K / sw[None, :]
    V = poly.array()
    angles = poly.angles()
    out = []
    for v in range(len(V)):
        dist = np.linalg.norm(pz.points - V[v], axis=1)
        norms, radii = [], []
        for j in js:
            rho = 2.0 ** (-j)
            sel = np.flatnonzero(dist < rho)
            sub = B[np.ix_(sel, sel)]
            norms.append(float(np.linalg.norm(sub, 2)) if len(sel) else 0.0)
            radii.append(rho)
        out.append(CornerProxy(v, angles[v], tuple(radii), tuple(norms)))
    return out
