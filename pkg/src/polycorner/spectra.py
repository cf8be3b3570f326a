"""
Essential spectra and Fredholm predicates for Laplace and Dirac operators on
manifolds with (multi-)cylindrical ends, from cross-section data of the faces,
plus discretized truncated-cylinder oracles.

Cylinder Dirac convention: on [0, L] x S^1 with spinors in C^2,

    D_1 = sigma_1 (x) (-i d_t) + sigma_3 (x) D_circle,

so that c(dt) = -i sigma_1 and D_1^2 = -d_t^2 + D_circle^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sps

INF = math.inf
KERNEL_TOL = 1e-6

LAPLACE = "laplace"
DIRAC = "dirac"
BOUNDING = "bounding"
NONBOUNDING = "nonbounding"


class SpectraError(ValueError):
    pass


class SizeCapError(SpectraError):
    pass


# ----------------------------------------------------------------------------
# SpectrumSet

@dataclass(frozen=True)
class SpectrumSet:
    """Finite union of closed intervals (endpoints may be +-inf) and isolated points."""

    intervals: Tuple[Tuple[float, float], ...] = ()
    points: Tuple[float, ...] = ()

    def __post_init__(self):
        ivs = []
        for lo, hi in self.intervals:
            lo, hi = float(lo), float(hi)
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise SpectraError(f"bad interval [{lo}, {hi}]")
            ivs.append((lo, hi))
        ivs.sort()
        merged: List[List[float]] = []
        for lo, hi in ivs:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        pts = sorted({float(p) for p in self.points
                      if not any(lo <= p <= hi for lo, hi in merged)})
        object.__setattr__(self, "intervals", tuple((lo, hi) for lo, hi in merged))
        object.__setattr__(self, "points", tuple(pts))

    @classmethod
    def real_line(cls) -> "SpectrumSet":
        return cls(((-INF, INF),))

    @classmethod
    def empty(cls) -> "SpectrumSet":
        return cls()

    def normalized(self) -> "SpectrumSet":
        return SpectrumSet(self.intervals, self.points)

    def union(self, other: "SpectrumSet") -> "SpectrumSet":
        return SpectrumSet(self.intervals + other.intervals, self.points + other.points)

    def contains(self, lam: float) -> bool:
        return lam in self.points or any(lo <= lam <= hi for lo, hi in self.intervals)

    __contains__ = contains

    def is_real_line(self) -> bool:
        return self.intervals == ((-INF, INF),)

    def to_record(self) -> dict:
        return {"intervals": [list(iv) for iv in self.intervals], "points": list(self.points)}

    def __str__(self):
        def f(v):
            return "inf" if v == INF else "-inf" if v == -INF else f"{v:g}"
        parts = [("(" if lo == -INF else "[") + f"{f(lo)}, {f(hi)}" + (")" if hi == INF else "]")
                 for lo, hi in self.intervals]
        parts += [f"{{{p:g}}}" for p in self.points]
        return " U ".join(parts) if parts else "{}"


# ----------------------------------------------------------------------------
# Cross-section data

@dataclass(frozen=True)
class CrossSectionData:
    kind: str
    eigenvalues: Tuple[float, ...]
    provenance: str = "analytic"

    def __post_init__(self):
        if self.kind not in (LAPLACE, DIRAC):
            raise SpectraError(f"unknown operator kind {self.kind!r}")
        if self.provenance not in ("analytic", "discretized"):
            raise SpectraError(f"unknown provenance {self.provenance!r}")
        ev = tuple(sorted(float(v) for v in self.eigenvalues))
        if not ev:
            raise SpectraError("cross-section needs at least one eigenvalue")
        tol = KERNEL_TOL if self.provenance == "discretized" else 0.0
        if self.kind == LAPLACE and ev[0] < -tol:
            raise SpectraError("Laplace cross-section eigenvalues must be nonnegative")
        if self.kind == DIRAC and self.provenance == "discretized":
            if not np.allclose(ev, [-v for v in reversed(ev)], atol=KERNEL_TOL):
                raise SpectraError("discretized Dirac cross-section spectrum is not symmetric")
        object.__setattr__(self, "eigenvalues", ev)

    def has_kernel(self) -> bool:
        tol = KERNEL_TOL if self.provenance == "discretized" else 0.0
        return any(abs(v) <= tol for v in self.eigenvalues)

    def gap(self) -> float:
        """Smallest |eigenvalue|, i.e. 1 / ||D^-1|| for a self-adjoint D."""
        return min(abs(v) for v in self.eigenvalues)


@dataclass(frozen=True)
class Face:
    dimension: int
    data: CrossSectionData


@dataclass(frozen=True)
class EndStructure:
    faces: Tuple[Face, ...]
    has_zero_dim_face: bool = False

    def __post_init__(self):
        faces = tuple(f if isinstance(f, Face) else Face(*f) for f in self.faces)
        if not faces:
            raise SpectraError("an end structure needs at least one face (nonempty boundary)")
        if any(f.dimension < 0 for f in faces):
            raise SpectraError("face dimensions must be nonnegative")
        object.__setattr__(self, "faces", faces)

    @property
    def hyperfaces(self) -> Tuple[Face, ...]:
        top = max(f.dimension for f in self.faces)
        return tuple(f for f in self.faces if f.dimension == top)

    def _require(self, kind: str):
        bad = [f for f in self.faces if f.data.kind != kind]
        if bad:
            raise SpectraError(f"all faces must carry {kind} cross-section data")


def circle_laplace_data(modes: int = 32) -> CrossSectionData:
    """Eigenvalues k^2 of -d^2/dtheta^2 on the unit-speed circle, |k| <= modes."""
    return CrossSectionData(LAPLACE, tuple(float(k * k) for k in range(-modes, modes + 1)))


def circle_dirac_data(spin: str, modes: int = 32) -> CrossSectionData:
    """Analytic circle Dirac spectrum: half-integers (nonbounding) or integers (bounding)."""
    shift = _spin_shift(spin)
    return CrossSectionData(DIRAC, tuple(k + shift for k in range(-modes, modes + (0 if shift else 1))))


def _spin_shift(spin: str) -> float:
    if spin == NONBOUNDING:
        return 0.5
    if spin == BOUNDING:
        return 0.0
    raise SpectraError(f"spin structure must be 'bounding' or 'nonbounding', got {spin!r}")


def cylinder(kind: str = LAPLACE, spin: str = NONBOUNDING) -> EndStructure:
    """One cylindrical end over S^1."""
    data = circle_laplace_data() if kind == LAPLACE else circle_dirac_data(spin)
    return EndStructure((Face(1, data),))


def multicylinder(kind: str = LAPLACE, spin: str = NONBOUNDING) -> EndStructure:
    """
    Corner where two cylindrical ends meet: two hyperfaces with circle cross
    sections and their codimension-two intersection face of dimension 1.
    """
    data = circle_laplace_data() if kind == LAPLACE else circle_dirac_data(spin)
    return EndStructure((Face(2, data), Face(2, data), Face(1, data)))


# ----------------------------------------------------------------------------
# Analytic engine

def essential_spectrum_laplace(end: EndStructure) -> SpectrumSet:
    """[mu_min, oo) where mu_min is the lowest hyperface cross-section eigenvalue."""
    end._require(LAPLACE)
    mu_min = min(f.data.eigenvalues[0] for f in end.hyperfaces)
    if end.faces[0].data.provenance == "discretized" and abs(mu_min) <= KERNEL_TOL:
        mu_min = 0.0
    return SpectrumSet(((mu_min, INF),))


def laplace_fredholm(end: EndStructure, lam: float) -> bool:
    """Delta - lam is Fredholm iff tau^2 + mu - lam != 0 for all real tau and all mu, i.e. lam < mu_min."""
    end._require(LAPLACE)
    mu_min = essential_spectrum_laplace(end).intervals[0][0]
    return lam < mu_min


def essential_spectrum_dirac(end: EndStructure) -> SpectrumSet:
    end._require(DIRAC)
    if end.has_zero_dim_face or any(f.data.has_kernel() for f in end.faces):
        return SpectrumSet.real_line()
    c = min(f.data.gap() for f in end.hyperfaces)
    return SpectrumSet(((-INF, -c), (c, INF)))


@dataclass(frozen=True)
class DiracFredholm:
    fredholm: bool
    invertible: bool


def dirac_fredholm_invertible(end: EndStructure, has_l2_kernel: bool) -> DiracFredholm:
    end._require(DIRAC)
    fred = not end.has_zero_dim_face and not any(f.data.has_kernel() for f in end.faces)
    return DiracFredholm(fred, fred and not has_l2_kernel)


# ----------------------------------------------------------------------------
# Discretized oracles

DEFAULT_CAP = 200_000


def _check_size(n: int, cap: int):
    if n > cap:
        raise SizeCapError(f"discretization has {n} unknowns, cap is {cap}")


def periodic_laplacian(N: int, length: float = 2 * math.pi) -> sps.csr_matrix:
    """Three-point -d^2 on N periodic points."""
    h = length / N
    e = np.ones(N)
    A = sps.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1], format="lil")
    A[0, N - 1] = -1.0
    A[N - 1, 0] = -1.0
    return (A / h ** 2).tocsr()


def neumann_laplacian(M: int, L: float) -> sps.csr_matrix:
    """Cell-centred three-point -d^2 on [0, L] with reflecting (Neumann) ends."""
    h = L / M
    d = np.full(M, 2.0)
    d[0] = d[-1] = 1.0
    off = -np.ones(M - 1)
    return (sps.diags([off, d, off], [-1, 0, 1]) / h ** 2).tocsr()


def laplace_cylinder_operator(N: int, L: float, Mt: int) -> sps.csr_matrix:
    """Full five-point Laplacian on [0, L] x S^1 (t slow index, theta fast)."""
    At, Ath = neumann_laplacian(Mt, L), periodic_laplacian(N)
    return (sps.kron(At, sps.identity(N)) + sps.kron(sps.identity(Mt), Ath)).tocsr()


def discretized_laplace_cylinder(N: int, L: float, Mt: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """
    Sorted eigenvalues of the finite-difference Laplacian on [0, L] x S^1.
    The operator is a Kronecker sum, so its spectrum is every sum of a t-eigenvalue
    and a theta-eigenvalue; each factor is diagonalized densely.
    """
    if N < 16 or Mt < 16:
        raise SpectraError("need N, Mt >= 16")
    if L <= 0:
        raise SpectraError("cylinder length must be positive")
    _check_size(N * Mt, cap)
    et = np.linalg.eigvalsh(neumann_laplacian(Mt, L).toarray())
    eth = np.linalg.eigvalsh(periodic_laplacian(N).toarray())
    return np.sort((et[:, None] + eth[None, :]).ravel())


def max_gap(eigs: Sequence[float], lo: float, hi: float) -> float:
    """Largest spacing between consecutive eigenvalues inside [lo, hi]."""
    w = np.sort(np.asarray([e for e in eigs if lo <= e <= hi]))
    if len(w) < 2:
        return hi - lo
    return float(np.max(np.diff(w)))


def circle_dirac_matrix(spin: str, N: int) -> np.ndarray:
    """
    Spectral -i d/dtheta on N grid points.  Nonbounding spinors pick up a
    half-integer twist; in the bounding case the Nyquist wavenumber is set to
    zero so the discrete operator stays odd-symmetric.
    """
    if N < 16 or N % 2:
        raise SpectraError("N must be even and at least 16")
    shift = _spin_shift(spin)
    k = np.fft.fftfreq(N, d=1.0 / N)
    if shift:
        k = k + shift
        k[N // 2] = -N / 2 + shift
    else:
        k[N // 2] = 0.0
    F = np.fft.fft(np.eye(N), axis=0)
    D = np.conj(F.T) @ np.diag(k) @ F / N
    return (D + np.conj(D.T)) / 2


def discretized_dirac_circle(spin: str, N: int) -> np.ndarray:
    return np.sort(np.linalg.eigvalsh(circle_dirac_matrix(spin, N)))


def central_difference(M: int, L: float) -> np.ndarray:
    """Hermitian -i d/dt by central differences on M interior points, zero outside [0, L]."""
    h = L / (M + 1)
    A = np.zeros((M, M), dtype=complex)
    i = np.arange(M - 1)
    A[i, i + 1] = -1j / (2 * h)
    A[i + 1, i] = 1j / (2 * h)
    return A


def dirac_cylinder_operator(spin: str, N: int, L: float, Mt: int) -> sps.csr_matrix:
    """Assembled 2x2 block operator sigma_1 (x) Dt (x) I + sigma_3 (x) I (x) Dtheta."""
    Dt = sps.csr_matrix(central_difference(Mt, L))
    Dth = sps.csr_matrix(circle_dirac_matrix(spin, N))
    s1 = sps.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex))
    s3 = sps.csr_matrix(np.array([[1, 0], [0, -1]], dtype=complex))
    It, Ith = sps.identity(Mt), sps.identity(N)
    return (sps.kron(s1, sps.kron(Dt, Ith)) + sps.kron(s3, sps.kron(It, Dth))).tocsr()


@dataclass(frozen=True)
class DiracCylinderSpectrum:
    eigenvalues: np.ndarray
    # fraction of each eigenvector's mass in the outer 10% of [0, L]
    edge_mass: np.ndarray

    def interior(self, max_edge_mass: float = 0.01) -> np.ndarray:
        return self.eigenvalues[self.edge_mass < max_edge_mass]


def discretized_dirac_cylinder(spin: str, N: int, L: float, Mt: Optional[int] = None,
                               cap: int = DEFAULT_CAP) -> DiracCylinderSpectrum:
    """
    Eigenpairs of the truncated cylinder Dirac operator.  The theta factor is
    diagonalized first; each circle eigenvalue nu leaves the 2Mt x 2Mt block
    [[nu, Dt], [Dt, -nu]], so the full operator is never formed densely.
    Outer 10% means t within 0.05 L of either end.
    """
    Mt = Mt or int(16 * L)
    if Mt < 16:
        raise SpectraError("need Mt >= 16")
    _check_size(2 * N * Mt, cap)
    nus = discretized_dirac_circle(spin, N)
    Dt = central_difference(Mt, L)
    h = L / (Mt + 1)
    t = h * np.arange(1, Mt + 1)
    edge = (t < 0.05 * L) | (t > 0.95 * L)
    edge2 = np.concatenate([edge, edge])
    vals, masses = [], []
    I = np.eye(Mt)
    for nu in nus:
        B = np.block([[nu * I, Dt], [Dt, -nu * I]])
        w, V = np.linalg.eigh(B)
        vals.append(w)
        masses.append(np.sum(np.abs(V[edge2, :]) ** 2, axis=0))
    vals = np.concatenate(vals)
    masses = np.concatenate(masses)
    order = np.argsort(vals, kind="stable")
    return DiracCylinderSpectrum(vals[order], masses[order])


def dirac_square_law_defect(spin: str, N: int, L: float, Mt: int) -> float:
    """
    max |eig(D_1)^2 - eig(Dt^2 (x) I + I (x) Dtheta^2)| with the sum operator
    assembled and diagonalized on its own.
    """
    _check_size(2 * N * Mt, 20_000)
    D1 = dirac_cylinder_operator(spin, N, L, Mt).toarray()
    sq = np.sort(np.linalg.eigvalsh(D1) ** 2)
    Dt = central_difference(Mt, L)
    Dth = circle_dirac_matrix(spin, N)
    S = np.kron(Dt @ Dt, np.eye(N)) + np.kron(np.eye(Mt), Dth @ Dth)
    s = np.linalg.eigvalsh((S + S.conj().T) / 2)
    # every eigenvalue of the sum operator appears twice in D_1^2 (two spinor components)
    ref = np.sort(np.concatenate([s, s]))
    return float(np.max(np.abs(sq - ref)))


def dirac_data_from_discretization(spin: str, N: int) -> CrossSectionData:
    return CrossSectionData(DIRAC, tuple(discretized_dirac_circle(spin, N)), "discretized")
