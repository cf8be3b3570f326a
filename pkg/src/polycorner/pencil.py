"""
Mellin pencil of the Laplacian on a plane sector {0 < theta < alpha}.

Writing u = r^lam phi(theta) in (r d_r)^2 + d_theta^2 gives the pencil
lam^2 + d_theta^2 on (0, alpha); its eigenvalues are the exponents of the
corner singular functions, and the smallest positive one bounds the window
of weights |a| < eta for which the weighted shift theorem holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
_BCS = (DIRICHLET, NEUMANN)


class PencilError(ValueError):
    pass


@dataclass(frozen=True)
class SectorModel:
    alpha: float
    bc: Tuple[str, str] = (DIRICHLET, DIRICHLET)

    def __post_init__(self):
        if isinstance(self.bc, str):
            object.__setattr__(self, "bc", (self.bc, self.bc))
        if not (0.0 < self.alpha <= 2 * math.pi + 1e-12) or not math.isfinite(self.alpha):
            raise PencilError(f"sector angle must lie in (0, 2pi], got {self.alpha}")
        bc = tuple(b.lower() for b in self.bc)
        if len(bc) != 2 or any(b not in _BCS for b in bc):
            raise PencilError(f"boundary conditions must be dirichlet/neumann, got {self.bc}")
        object.__setattr__(self, "bc", bc)

    @property
    def mixed(self) -> bool:
        return self.bc[0] != self.bc[1]


@dataclass(frozen=True)
class PencilReport:
    exponents: Tuple[float, ...]
    multiplicities: Tuple[int, ...]
    # set for boundary conditions other than Dirichlet on both edges
    note: str = ""

    @property
    def positive(self) -> Tuple[float, ...]:
        return tuple(v for v in self.exponents if v > 0)


def _positive_exponents(s: SectorModel, count: int) -> List[float]:
    k = np.arange(1, count + 1, dtype=float)
    if s.mixed:
        return list((k - 0.5) * math.pi / s.alpha)
    if s.bc == (NEUMANN, NEUMANN):
        return [0.0] + list(k[:-1] * math.pi / s.alpha) if count > 1 else [0.0]
    return list(k * math.pi / s.alpha)


def sector_pencil_eigenvalues(s: SectorModel, count: int) -> PencilReport:
    """First `count` nonnegative exponents, returned paired as +-lam (0 once)."""
    if count < 1:
        raise PencilError("count must be at least 1")
    pos = _positive_exponents(s, count)
    exps, mult = [], []
    for v in pos:
        if v == 0.0:
            exps.append(0.0)
            mult.append(1)
        else:
            exps = [-v] + exps + [v]
            mult = [1] + mult + [1]
    note = ""
    if s.bc != (DIRICHLET, DIRICHLET):
        note = "boundary conditions other than Dirichlet-Dirichlet: outside the polygon weight rule"
    return PencilReport(tuple(exps), tuple(mult), note)


def fd_pencil_eigenvalues(s: SectorModel, count: int, cells: int = 4096,
                          extrapolate: bool = True) -> List[float]:
    """
    Finite-difference oracle: second-order central differences for -phi'' = mu phi
    on a cell-centred grid with reflection ghosts; returns the `count` smallest
    sqrt(mu) (nonnegative exponents).  With extrapolate, the O(h^2) error is
    removed by Richardson extrapolation between `cells` and 2 * `cells`.
    """
    if cells < 2048:
        raise PencilError("the oracle uses at least 2048 grid cells")

    def solve(n):
        h = s.alpha / n
        diag = np.full(n, 2.0)
        # ghost u_{-1} = -u_0 (Dirichlet) or +u_0 (Neumann)
        diag[0] += 1.0 if s.bc[0] == DIRICHLET else -1.0
        diag[-1] += 1.0 if s.bc[1] == DIRICHLET else -1.0
        off = -np.ones(n - 1)
        mu = eigh_tridiagonal(diag / h ** 2, off / h ** 2, eigvals_only=True,
                              select="i", select_range=(0, count - 1))
        return np.clip(mu, 0.0, None)

    mu = solve(cells)
    if extrapolate:
        mu = (4.0 * solve(2 * cells) - mu) / 3.0
    return [float(math.sqrt(max(m, 0.0))) for m in np.sort(mu)]


@dataclass(frozen=True)
class WeightWindow:
    eta: float
    empty: bool = False
    limiting_angle: float = float("nan")

    @property
    def window(self) -> Tuple[float, float]:
        return (-self.eta, self.eta)

    def contains(self, a: float) -> bool:
        return not self.empty and -self.eta < a < self.eta


def weight_window(s: SectorModel) -> WeightWindow:
    """eta = smallest positive pencil exponent; empty when 0 is an exponent (Neumann-Neumann)."""
    pos = _positive_exponents(s, 2)
    if pos[0] == 0.0:
        return WeightWindow(0.0, empty=True, limiting_angle=s.alpha)
    return WeightWindow(pos[0], limiting_angle=s.alpha)


def polygon_weight_window(angles: Iterable[float]) -> WeightWindow:
    """Minimum over vertices of the Dirichlet sector windows, i.e. pi / max angle."""
    windows = [weight_window(SectorModel(a)) for a in angles]
    if not windows:
        raise PencilError("polygon needs at least one vertex angle")
    return min(windows, key=lambda w: w.eta)


def predicted_h1_rate(angles: Sequence[float], degree: int = 1) -> float:
    """Energy-norm rate on quasi-uniform meshes: min(degree, pi / max angle)."""
    if degree < 1:
        raise PencilError("element degree must be at least 1")
    return min(float(degree), polygon_weight_window(angles).eta)
