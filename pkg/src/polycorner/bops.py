"""
Totally characteristic operators sum_{i,j} a_ij(x, y) (x d_x)^i d_y^j with y
periodic.

Coefficients are finite sums  c * x^p * exp(i m y)  with Gaussian-rational c,
so x d_x and d_y act diagonally on monomials (by p and by i*m).  Everything
here is exact; floating point only enters when a symbol or an indicial family
is evaluated at a point.

Sign convention for indicial families: x d_x is replaced by i*tau.  With it,
-(x d_x)^2 - d_y^2 - lam  becomes  tau^2 - d_y^2 - lam.
"""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
from sympy.polys.domains import QQ, QQ_I

_ZERO = QQ_I.zero
_I = QQ_I(0, 1)


class BOperatorError(ValueError):
    pass


def _gauss(value) -> "QQ_I.dtype":
    if isinstance(value, QQ_I.dtype):
        return value
    if isinstance(value, complex):
        raise BOperatorError("use exact rationals, not floats")
    if isinstance(value, tuple):
        return QQ_I(QQ(*_frac(value[0])), QQ(*_frac(value[1])))
    return QQ_I(QQ(*_frac(value)), 0)


def _frac(v) -> Tuple[int, int]:
    if isinstance(v, float) and not v.is_integer():
        raise BOperatorError("use exact rationals, not floats")
    f = Fraction(v)
    return f.numerator, f.denominator


def _to_complex(c) -> complex:
    return complex(float(c.x), float(c.y))


@dataclass(frozen=True)
class Coefficient:
    """sum over (p, m) of terms[(p, m)] * x**p * exp(1j*m*y)."""

    terms: Tuple[Tuple[Tuple[int, int], object], ...] = ()

    @classmethod
    def from_dict(cls, d: Mapping[Tuple[int, int], object]) -> "Coefficient":
        items = []
        for (p, m), c in d.items():
            if p < 0:
                raise BOperatorError("negative power of x")
            c = _gauss(c)
            if c != _ZERO:
                items.append(((int(p), int(m)), c))
        return cls(tuple(sorted(items)))

    @classmethod
    def const(cls, c=1) -> "Coefficient":
        return cls.from_dict({(0, 0): c})

    @classmethod
    def x_power(cls, p: int, c=1) -> "Coefficient":
        return cls.from_dict({(p, 0): c})

    @classmethod
    def cos(cls, m: int, p: int = 0, c=1) -> "Coefficient":
        half = _gauss(c) * QQ_I(QQ(1, 2), 0)
        if m == 0:
            return cls.from_dict({(p, 0): _gauss(c)})
        return cls.from_dict({(p, m): half, (p, -m): half})

    @classmethod
    def sin(cls, m: int, p: int = 0, c=1) -> "Coefficient":
        # sin(my) = (e^{imy} - e^{-imy}) / (2i)
        if m == 0:
            return cls()
        f = _gauss(c) * QQ_I(0, QQ(-1, 2))
        return cls.from_dict({(p, m): f, (p, -m): -f})

    def as_dict(self) -> Dict[Tuple[int, int], object]:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Coefficient") -> "Coefficient":
        d = self.as_dict()
        for k, c in other.terms:
            d[k] = d.get(k, _ZERO) + c
        return Coefficient.from_dict(d)

    def __neg__(self) -> "Coefficient":
        return Coefficient(tuple((k, -c) for k, c in self.terms))

    def __sub__(self, other: "Coefficient") -> "Coefficient":
        return self + (-other)

    def __mul__(self, other) -> "Coefficient":
        if not isinstance(other, Coefficient):
            c = _gauss(other)
            return Coefficient.from_dict({k: v * c for k, v in self.terms})
        d: Dict[Tuple[int, int], object] = {}
        for (p1, m1), c1 in self.terms:
            for (p2, m2), c2 in other.terms:
                k = (p1 + p2, m1 + m2)
                d[k] = d.get(k, _ZERO) + c1 * c2
        return Coefficient.from_dict(d)

    __rmul__ = __mul__

    def xdx(self, s: int = 1) -> "Coefficient":
        """(x d_x)^s applied to the coefficient."""
        if s == 0:
            return self
        return Coefficient.from_dict({(p, m): c * QQ_I(p ** s, 0) for (p, m), c in self.terms})

    def dy(self, t: int = 1) -> "Coefficient":
        if t == 0:
            return self
        return Coefficient.from_dict({(p, m): c * QQ_I(0, m) ** t for (p, m), c in self.terms})

    def at_boundary(self) -> "Coefficient":
        """Restriction to x = 0."""
        return Coefficient(tuple((k, c) for k, c in self.terms if k[0] == 0))

    def divisible_by_x(self) -> bool:
        return all(p > 0 for (p, _), _ in self.terms)

    def divide_by_x(self) -> "Coefficient":
        if not self.divisible_by_x():
            raise BOperatorError("coefficient is not divisible by x")
        return Coefficient(tuple(((p - 1, m), c) for (p, m), c in self.terms))

    def __call__(self, x: float, y: float) -> complex:
        return sum((_to_complex(c) * x ** p * cmath.exp(1j * m * y) for (p, m), c in self.terms),
                   0j)

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*x^{p}*e^({m}iy)" for (p, m), c in self.terms)


def _leibniz(a_terms: Mapping, b_terms: Mapping, drop_xdx: bool) -> Dict[Tuple[int, int], Coefficient]:
    """
    (a D^i E^j)(b D^k E^l) = a sum_{s,t} C(i,s) C(j,t) (D^s E^t b) D^{i-s+k} E^{j-t+l}
    with D = x d_x and E = d_y.  drop_xdx keeps only s = 0 (coefficients frozen at x = 0).
    """
    out: Dict[Tuple[int, int], Coefficient] = {}
    for (i, j), a in a_terms.items():
        for (k, l), b in b_terms.items():
            for s in ((0,) if drop_xdx else range(i + 1)):
                for t in range(j + 1):
                    db = b.xdx(s).dy(t)
                    if db.is_zero():
                        continue
                    term = a * db * (comb(i, s) * comb(j, t))
                    key = (i - s + k, j - t + l)
                    out[key] = out.get(key, Coefficient()) + term
    return {k: v for k, v in out.items() if not v.is_zero()}


def _clean(terms: Mapping[Tuple[int, int], Coefficient]) -> Tuple:
    for (i, j) in terms:
        if i < 0 or j < 0:
            raise BOperatorError("term orders must be nonnegative")
    return tuple(sorted((k, v) for k, v in terms.items() if not v.is_zero()))


@dataclass(frozen=True)
class BOperator:
    """sum_{(i, j)} a_ij * (x d_x)^i * d_y^j, coefficients on the left."""

    terms: Tuple[Tuple[Tuple[int, int], Coefficient], ...] = ()

    def __post_init__(self):
        if isinstance(self.terms, dict):
            object.__setattr__(self, "terms", _clean(self.terms))

    @classmethod
    def from_dict(cls, d: Mapping[Tuple[int, int], Coefficient]) -> "BOperator":
        return cls(_clean(d))

    @classmethod
    def multiplication(cls, a: Coefficient) -> "BOperator":
        return cls.from_dict({(0, 0): a})

    @classmethod
    def xdx(cls) -> "BOperator":
        return cls.from_dict({(1, 0): Coefficient.const()})

    @classmethod
    def dy(cls) -> "BOperator":
        return cls.from_dict({(0, 1): Coefficient.const()})

    def as_dict(self) -> Dict[Tuple[int, int], Coefficient]:
        return dict(self.terms)

    @property
    def order(self) -> int:
        return max((i + j for (i, j), _ in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "BOperator") -> "BOperator":
        d = self.as_dict()
        for k, v in other.terms:
            d[k] = d.get(k, Coefficient()) + v
        return BOperator.from_dict(d)

    def __neg__(self) -> "BOperator":
        return BOperator(tuple((k, -v) for k, v in self.terms))

    def __sub__(self, other: "BOperator") -> "BOperator":
        return self + (-other)

    def __mul__(self, other) -> "BOperator":
        if isinstance(other, BOperator):
            return compose(self, other)
        return BOperator.from_dict({k: v * other for k, v in self.terms})

    def __rmul__(self, other) -> "BOperator":
        return BOperator.from_dict({k: v * other for k, v in self.terms})

    def left_multiply(self, a: Coefficient) -> "BOperator":
        return BOperator.from_dict({k: a * v for k, v in self.terms})

    def divisible_by_x(self) -> bool:
        return all(v.divisible_by_x() for _, v in self.terms)

    def divide_by_x(self) -> "BOperator":
        """Q with self = x * Q."""
        return BOperator.from_dict({k: v.divide_by_x() for k, v in self.terms})

    def apply(self, u: Coefficient) -> Coefficient:
        """Action on a function of the same monomial type."""
        total = Coefficient()
        for (i, j), a in self.terms:
            total = total + a * u.xdx(i).dy(j)
        return total


def compose(P: BOperator, Q: BOperator) -> BOperator:
    return BOperator.from_dict(_leibniz(P.as_dict(), Q.as_dict(), drop_xdx=False))


@dataclass(frozen=True)
class IndicialFamily:
    """
    Coefficients frozen at x = 0, with x d_x replaced by a formal symbol iota
    that commutes with them.  terms[(i, j)] multiplies iota^i d_y^j.
    """

    terms: Tuple[Tuple[Tuple[int, int], Coefficient], ...] = ()

    @classmethod
    def from_dict(cls, d) -> "IndicialFamily":
        for _, v in d.items():
            if any(p != 0 for (p, _), _ in v.terms):
                raise BOperatorError("indicial coefficients cannot depend on x")
        return cls(_clean(d))

    def as_dict(self):
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((i for (i, _), _ in self.terms), default=0)

    def __mul__(self, other: "IndicialFamily") -> "IndicialFamily":
        return IndicialFamily.from_dict(_leibniz(self.as_dict(), other.as_dict(), drop_xdx=True))

    def evaluate(self, tau: float) -> Dict[int, Dict[int, complex]]:
        """The y-operator at iota = i*tau, as {j: {m: coefficient of e^{imy}}} for d_y^j."""
        out: Dict[int, Dict[int, complex]] = {}
        for (i, j), c in self.terms:
            f = (1j * tau) ** i
            row = out.setdefault(j, {})
            for (_, m), v in c.terms:
                row[m] = row.get(m, 0j) + f * _to_complex(v)
        return out

    def matrix(self, tau: float, modes: int) -> np.ndarray:
        """Galerkin matrix of the family at tau on the Fourier modes e^{iky}, |k| <= modes."""
        ks = np.arange(-modes, modes + 1)
        size = len(ks)
        A = np.zeros((size, size), dtype=complex)
        for j, row in self.evaluate(tau).items():
            for m, c in row.items():
                # c e^{imy} (ik)^j e^{iky} lands on mode k + m
                for col, k in enumerate(ks):
                    r = col + m
                    if 0 <= r < size:
                        A[r, col] += c * (1j * k) ** j
        return A


def indicial_family(P: BOperator) -> IndicialFamily:
    return IndicialFamily.from_dict({k: v.at_boundary() for k, v in P.terms})


@dataclass(frozen=True)
class SymbolValue:
    value: complex
    order: int


class ZeroCovectorError(BOperatorError):
    pass


def principal_symbol(P: BOperator, base: Sequence[float], xi: Sequence[float]) -> SymbolValue:
    """sum over i + j = order of a_ij(base) (i xi_b)^i (i xi_y)^j."""
    xb, xy = float(xi[0]), float(xi[1])
    if xb == 0.0 and xy == 0.0:
        raise ZeroCovectorError("principal symbol needs a nonzero covector")
    m = P.order
    x, y = float(base[0]), float(base[1])
    val = 0j
    for (i, j), a in P.terms:
        if i + j == m:
            val += a(x, y) * (1j * xb) ** i * (1j * xy) ** j
    return SymbolValue(val, m)


def default_base_points() -> list:
    """32 base points: x in {0, 1/3, 2/3, 1} times 8 equally spaced y."""
    return [(x, 2 * math.pi * k / 8) for x in (0.0, 1 / 3, 2 / 3, 1.0) for k in range(8)]


def is_elliptic(P: BOperator, base_points: Optional[Iterable] = None, n_covectors: int = 64,
                threshold: float = 1e-12) -> bool:
    """Grid test: |symbol| > threshold at every base point and unit covector sampled."""
    pts = list(base_points) if base_points is not None else default_base_points()
    angles = [2 * math.pi * (k + 0.5) / n_covectors for k in range(n_covectors)]
    # include the coordinate axes, where degeneracies usually sit
    angles += [0.0, math.pi / 2, math.pi, 3 * math.pi / 2, math.pi / 4, 3 * math.pi / 4]
    for b in pts:
        for th in angles:
            if abs(principal_symbol(P, b, (math.cos(th), math.sin(th))).value) <= threshold:
                return False
    return True


# Standard operators ----------------------------------------------------------

def b_laplacian(lam=0) -> BOperator:
    """-(x d_x)^2 - d_y^2 - lam, the nonnegative b-Laplacian on [0,1) x S^1 shifted by lam."""
    return BOperator.from_dict({(2, 0): Coefficient.const(-1), (0, 2): Coefficient.const(-1),
                                (0, 0): Coefficient.const(-_gauss(lam))})


def random_operator(rng: random.Random, order: int = 3, max_xpow: int = 2,
                    max_mode: int = 2, density: float = 0.5) -> BOperator:
    terms = {}
    for i in range(order + 1):
        for j in range(order + 1 - i):
            if rng.random() > density:
                continue
            d = {}
            for _ in range(rng.randint(1, 3)):
                key = (rng.randint(0, max_xpow), rng.randint(-max_mode, max_mode))
                d[key] = QQ_I(QQ(rng.randint(-5, 5), rng.randint(1, 4)),
                              QQ(rng.randint(-3, 3), rng.randint(1, 3)))
            c = Coefficient.from_dict(d)
            if not c.is_zero():
                terms[(i, j)] = c
    return BOperator.from_dict(terms)


# Text format -----------------------------------------------------------------

def parse_coefficient(text: str) -> Coefficient:
    """
    Comma-separated monomials 'coef p kind m', kind in {1, cos, sin, exp};
    coef is a rational (e.g. 3/2) or a Gaussian rational 'a+bi'.
    """
    total = Coefficient()
    for mono in text.split(","):
        parts = mono.split()
        if not parts:
            continue
        if len(parts) == 1:
            parts += ["0", "1", "0"]
        if len(parts) != 4:
            raise BOperatorError(f"bad monomial {mono!r}")
        coef, p, kind, m = parts
        c = _parse_gauss(coef)
        p, m = int(p), int(m)
        if kind == "1" or kind == "exp":
            mm = 0 if kind == "1" else m
            total = total + Coefficient.from_dict({(p, mm): c})
        elif kind == "cos":
            total = total + Coefficient.cos(m, p, c)
        elif kind == "sin":
            total = total + Coefficient.sin(m, p, c)
        else:
            raise BOperatorError(f"unknown monomial kind {kind!r}")
    return total


def _parse_gauss(s: str):
    s = s.strip().replace(" ", "")
    if s.endswith("i"):
        body = s[:-1]
        cut = max(body.rfind("+"), body.rfind("-"))
        if cut <= 0:
            re_part, im_part = "0", body or "1"
        else:
            re_part, im_part = body[:cut], body[cut:]
        if im_part in ("+", "-", ""):
            im_part += "1"
        return QQ_I(QQ(*_frac_str(re_part)), QQ(*_frac_str(im_part)))
    return QQ_I(QQ(*_frac_str(s)), 0)


def _frac_str(s: str) -> Tuple[int, int]:
    f = Fraction(s)
    return f.numerator, f.denominator


def operator_from_section(section) -> BOperator:
    """Keys t<i>_<j> (e.g. t2_0) hold coefficient strings."""
    terms = {}
    for key, value in section.items():
        if not key.startswith("t") or "_" not in key:
            raise BOperatorError(f"unknown key {key!r}; expected t<i>_<j>")
        i, j = (int(v) for v in key[1:].split("_"))
        terms[(i, j)] = terms.get((i, j), Coefficient()) + parse_coefficient(value)
    return BOperator.from_dict(terms)


def _fmt_gauss(c) -> list:
    return [str(c.x), str(c.y)]


def terms_record(terms) -> list:
    """Machine-readable term list: [{i, j, coefficient: [[p, m, re, im], ...]}]."""
    return [{"i": i, "j": j,
             "coefficient": [[p, m] + _fmt_gauss(c) for (p, m), c in coef.terms]}
            for (i, j), coef in terms]
