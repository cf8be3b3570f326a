"""Convergence-rate studies and the corner expansion fit on the unit square."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..geometry import Polygon, lshape, unit_square
from .mesh import generate_graded_mesh
from .poisson import Field, FemError, energy_error, solve_poisson


@dataclass(frozen=True)
class Benchmark:
    name: str
    polygon: Polygon
    f: Field
    exact: Callable
    grad: Callable
    singular_points: Tuple[Tuple[float, float], ...] = ()
    # vertex whose grading is controlled by the study's kappa
    graded_vertex: Optional[int] = None


def _lshape_exact(x, y):
    r = np.hypot(x, y)
    th = np.mod(np.arctan2(y, x), 2 * np.pi)
    return r ** (2 / 3) * np.sin(2 * th / 3)


def _lshape_grad(x, y):
    r = np.hypot(x, y)
    th = np.mod(np.arctan2(y, x), 2 * np.pi)
    ur = (2 / 3) * r ** (-1 / 3) * np.sin(2 * th / 3)
    ut = (2 / 3) * r ** (-1 / 3) * np.cos(2 * th / 3)
    return ur * np.cos(th) - ut * np.sin(th), ur * np.sin(th) + ut * np.cos(th)


def lshape_benchmark() -> Benchmark:
    """u = r^(2/3) sin(2 theta / 3), harmonic, singular at the reentrant corner."""
    return Benchmark("lshape", lshape(), 0.0, _lshape_exact, _lshape_grad, ((0.0, 0.0),), 2)


def smooth_benchmark() -> Benchmark:
    """u = sin(pi x) sin(pi y) on the unit square, Delta u = -2 pi^2 u."""
    pi = math.pi
    return Benchmark(
        "smooth", unit_square(),
        lambda x, y: -2 * pi ** 2 * np.sin(pi * x) * np.sin(pi * y),
        lambda x, y: np.sin(pi * x) * np.sin(pi * y),
        lambda x, y: (pi * np.cos(pi * x) * np.sin(pi * y), pi * np.sin(pi * x) * np.cos(pi * y)))


BENCHMARKS = {"lshape": lshape_benchmark, "smooth": smooth_benchmark}


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    dof: int
    energy_error: float
    rate: float  # against the previous level; nan on the first


@dataclass(frozen=True)
class ConvergenceResult:
    rows: Tuple[ConvergenceRow, ...]
    slope: float


def convergence_study(bench: Benchmark, hs: Sequence[float], kappa: Optional[Sequence[float]] = None
                      ) -> ConvergenceResult:
    """Least-squares slope of log(energy error) against log(h)."""
    if len(hs) < 4:
        raise FemError("a convergence study needs at least 4 mesh levels")
    rows: List[ConvergenceRow] = []
    for h in hs:
        mesh = generate_graded_mesh(bench.polygon, h, kappa)
        sol = solve_poisson(mesh, bench.f, bench.exact)
        err = energy_error(sol, bench.grad, bench.singular_points)
        rate = math.nan
        if rows:
            rate = math.log(rows[-1].energy_error / err) / math.log(rows[-1].h / mesh.h)
        rows.append(ConvergenceRow(mesh.h, int(mesh.n_nodes - len(sol.dirichlet_nodes)), err, rate))
    slope = np.polyfit(np.log([r.h for r in rows]), np.log([r.energy_error for r in rows]), 1)[0]
    return ConvergenceResult(tuple(rows), float(slope))


def kappa_for(bench: Benchmark, kappa: float) -> List[float]:
    k = [1.0] * len(bench.polygon)
    if bench.graded_vertex is not None:
        k[bench.graded_vertex] = kappa
    return k


# Corner expansion ------------------------------------------------------------

def corner_basis(x: np.ndarray, y: np.ndarray, max_degree: int = 6) -> Tuple[np.ndarray, List[str]]:
    """
    Columns: polynomials of degree 2..max_degree and the two non-polynomial functions
    r^2 log r sin 2theta and r^2 theta cos 2theta that a right-angle corner with
    zero Dirichlet data and f(0, 0) != 0 forces.  Column 0 is the log term.
    """
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    cols = [r ** 2 * np.log(r) * np.sin(2 * th), r ** 2 * th * np.cos(2 * th)]
    names = ["r2_log_sin2", "r2_theta_cos2"]
    for deg in range(2, max_degree + 1):
        for i in range(deg + 1):
            cols.append(x ** (deg - i) * y ** i)
            names.append(f"x{deg - i}y{i}")
    return np.stack(cols, 1), names


@dataclass(frozen=True)
class CornerFit:
    coefficients: Tuple[float, ...]
    names: Tuple[str, ...]
    condition: float
    samples: int

    @property
    def log_coefficient(self) -> float:
        return self.coefficients[0]


class IllConditionedFit(FemError):
    pass


def fit_corner_expansion(sol, r_min: float, r_max: float, max_cond: float = 1e12) -> CornerFit:
    """Least-squares fit of nodal values in r_min <= r <= r_max around the origin."""
    X = sol.mesh.nodes
    r = np.hypot(X[:, 0], X[:, 1])
    sel = (r >= r_min) & (r <= r_max)
    B, names = corner_basis(X[sel, 0], X[sel, 1])
    scale = np.linalg.norm(B, axis=0)
    scale[scale == 0] = 1.0
    Bs = B / scale
    cond = float(np.linalg.cond(Bs))
    if not np.isfinite(cond) or cond > max_cond or sel.sum() < B.shape[1]:
        raise IllConditionedFit(
            f"corner fit ill-conditioned: cond={cond:.3e}, samples={int(sel.sum())}, "
            f"basis={B.shape[1]}, window=[{r_min}, {r_max}]")
    c, *_ = np.linalg.lstsq(Bs, sol.values[sel], rcond=None)
    return CornerFit(tuple(float(v) for v in c / scale), tuple(names), cond, int(sel.sum()))


@dataclass(frozen=True)
class CornerProbe:
    fits: Tuple[CornerFit, ...]
    hs: Tuple[float, ...]

    @property
    def log_coefficients(self) -> Tuple[float, ...]:
        return tuple(f.log_coefficient for f in self.fits)

    def relative_change(self) -> float:
        a, b = self.log_coefficients[-2:]
        return abs(a - b) / max(abs(b), 1e-300)


def corner_singularity_probe(f: Field, g: Field = 0.0, hs: Sequence[float] = (1 / 32, 1 / 64, 1 / 128),
                             r_min: float = 0.05, r_max: float = 0.3) -> CornerProbe:
    """Solve on the unit square at each h and fit the expansion at the corner (0, 0)."""
    sq = unit_square()
    fits, hv = [], []
    for h in hs:
        mesh = generate_graded_mesh(sq, h)
        sol = solve_poisson(mesh, f, g)
        fits.append(fit_corner_expansion(sol, r_min, r_max))
        hv.append(mesh.h)
    return CornerProbe(tuple(fits), tuple(hv))
