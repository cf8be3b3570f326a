"""Simple polygons with rational vertices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np


class GeometryError(ValueError):
    pass


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 0) - (v < 0)

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and on_seg(p1, p2, q1)) or (o2 == 0 and on_seg(p1, p2, q2))
            or (o3 == 0 and on_seg(q1, q2, p1)) or (o4 == 0 and on_seg(q1, q2, p2)))


@dataclass(frozen=True)
class Polygon:
    """Counterclockwise simple polygon; vertices are stored as Fractions."""

    vertices: Tuple[Tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        verts = tuple((Fraction(x), Fraction(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise GeometryError("a polygon needs at least three vertices")
        if len(set(verts)) != len(verts):
            raise GeometryError("repeated vertex")
        object.__setattr__(self, "vertices", verts)
        if self.signed_area() <= 0:
            raise GeometryError("vertices must be listed counterclockwise")
        if not self.is_simple():
            raise GeometryError("polygon is not simple")

    @classmethod
    def from_floats(cls, pts: Sequence[Sequence[float]]) -> "Polygon":
        return cls(tuple((Fraction(x).limit_denominator(10 ** 12),
                          Fraction(y).limit_denominator(10 ** 12)) for x, y in pts))

    def __len__(self):
        return len(self.vertices)

    def array(self) -> np.ndarray:
        return np.array([[float(x), float(y)] for x, y in self.vertices])

    def edges(self) -> List[Tuple[int, int]]:
        n = len(self.vertices)
        return [(i, (i + 1) % n) for i in range(n)]

    def signed_area(self) -> Fraction:
        v = self.vertices
        n = len(v)
        return sum((v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]
                    for i in range(n)), Fraction(0)) / 2

    def is_simple(self) -> bool:
        v = self.vertices
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    return False
        return True

    def angles(self) -> List[float]:
        """Interior angle at each vertex, in (0, 2pi)."""
        P = self.array()
        n = len(P)
        out = []
        for i in range(n):
            a = P[i - 1] - P[i]
            b = P[(i + 1) % n] - P[i]
            ang = math.atan2(a[0] * b[1] - a[1] * b[0], a @ b)
            # interior lies to the left of the CCW boundary
            out.append(2 * math.pi - ang if ang > 0 else -ang)
        return out

    def diameter(self) -> float:
        P = self.array()
        return float(max(np.linalg.norm(p - q) for p in P for q in P))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Strict interior test by ray casting (boundary points may go either way)."""
        pts = np.atleast_2d(pts)
        P = self.array()
        inside = np.zeros(len(pts), dtype=bool)
        n = len(P)
        for i in range(n):
            a, b = P[i], P[(i + 1) % n]
            cond = (a[1] > pts[:, 1]) != (b[1] > pts[:, 1])
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = a[0] + (pts[:, 1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            inside ^= cond & (pts[:, 0] < xint)
        return inside

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        P = self.array()
        d = np.full(len(pts), np.inf)
        for i, j in self.edges():
            d = np.minimum(d, segment_distance(pts, P[i], P[j]))
        return d


def segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return np.linalg.norm(pts - (a + t[:, None] * ab), axis=1)


def unit_square() -> Polygon:
    return Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))


def lshape() -> Polygon:
    """(-1, 1)^2 minus [0, 1) x (-1, 0]; the reentrant corner (angle 3pi/2) is at the origin."""
    return Polygon(((-1, -1), (0, -1), (0, 0), (1, 0), (1, 1), (-1, 1)))


def regular_polygon(n: int, radius: float = 1.0) -> Polygon:
    return Polygon.from_floats([(radius * math.cos(2 * math.pi * k / n),
                                 radius * math.sin(2 * math.pi * k / n)) for k in range(n)])


def polygon_from_text(text: str) -> Polygon:
    """One 'x y' vertex per line; '#' starts a comment; rationals like 1/2 allowed."""
    pts = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise GeometryError(f"expected 'x y', got {line!r}")
        pts.append((Fraction(parts[0]), Fraction(parts[1])))
    return Polygon(tuple(pts))
