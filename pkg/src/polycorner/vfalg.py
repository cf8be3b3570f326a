"""
Vector fields with polynomial coefficients on a corner chart [0, oo)^k x R^(n-k).

The coefficient ring is Q[x_1, ..., x_k, y_{k+1}, ..., y_n], so closure of a
module under the bracket and the structure of isotropy algebras are decided
exactly.  Example::

    >>> chart = CornerChart(2, 1)
    >>> x, y = chart.symbols
    >>> mod = VectorFieldModule(chart, [VectorField.from_dict(chart, {0: x}),
    ...                                 VectorField.from_dict(chart, {1: x})])
    >>> check_closure(mod).closed
    True
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import sympy as sp


class VFAlgebraError(ValueError):
    """Base error for vector-field algebra failures."""


class ChartMismatchError(VFAlgebraError):
    pass


class DependentGeneratorsError(VFAlgebraError):
    pass


class NotClosedError(VFAlgebraError):
    pass


class JacobiError(VFAlgebraError):
    pass


@dataclass(frozen=True)
class CornerChart:
    n: int
    k: int
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise VFAlgebraError("chart dimension must be positive")
        if not 0 <= self.k <= self.n:
            raise VFAlgebraError("need 0 <= k <= n")
        if not self.names:
            if self.n == 2 and self.k <= 1:
                names = ("x", "y")
            else:
                names = tuple(f"x{i + 1}" for i in range(self.k)) + tuple(
                    f"y{i + 1}" for i in range(self.k, self.n))
            object.__setattr__(self, "names", names)
        if len(self.names) != self.n or len(set(self.names)) != self.n:
            raise VFAlgebraError("coordinate names must be n distinct strings")

    @property
    def symbols(self) -> Tuple[sp.Symbol, ...]:
        return tuple(sp.Symbol(s) for s in self.names)

    def is_boundary_point(self, p: Sequence) -> bool:
        return any(sp.Rational(p[j]) == 0 for j in range(self.k))


def _poly(expr, chart: CornerChart) -> sp.Expr:
    expr = sp.expand(sp.sympify(expr))
    if expr != 0 and not expr.is_polynomial(*chart.symbols):
        raise VFAlgebraError(f"coefficient {expr} is not a polynomial")
    return expr


@dataclass(frozen=True)
class VectorField:
    """A vector field sum_i coeffs[i] * d/d(coordinate i)."""

    chart: CornerChart
    coeffs: Tuple[sp.Expr, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.chart.n:
            raise VFAlgebraError("one coefficient per coordinate required")
        object.__setattr__(self, "coeffs",
                           tuple(_poly(c, self.chart) for c in self.coeffs))

    @classmethod
    def from_dict(cls, chart: CornerChart, coeffs: Mapping[int, object]) -> "VectorField":
        full = [sp.Integer(0)] * chart.n
        for i, c in coeffs.items():
            full[i] = sp.sympify(c)
        return cls(chart, tuple(full))

    @classmethod
    def zero(cls, chart: CornerChart) -> "VectorField":
        return cls(chart, (sp.Integer(0),) * chart.n)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_tangent(self) -> bool:
        """True if the x_j-component is divisible by x_j for every boundary coordinate."""
        syms = self.chart.symbols
        for j in range(self.chart.k):
            c = self.coeffs[j]
            if c != 0 and sp.rem(c, syms[j], syms[j]) != 0:
                return False
        return True

    def apply(self, f) -> sp.Expr:
        """Derivative of the function f along this field."""
        syms = self.chart.symbols
        return sp.expand(sum(c * sp.diff(f, s) for c, s in zip(self.coeffs, syms)))

    def scale(self, f) -> "VectorField":
        return VectorField(self.chart, tuple(sp.expand(f * c) for c in self.coeffs))

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        return VectorField(self.chart, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        return VectorField(self.chart, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "VectorField":
        return VectorField(self.chart, tuple(-c for c in self.coeffs))

    def at(self, p: Sequence) -> Tuple[sp.Rational, ...]:
        subs = dict(zip(self.chart.symbols, (sp.Rational(v) for v in p)))
        return tuple(sp.Rational(c.subs(subs)) for c in self.coeffs)

    def __str__(self):
        parts = [f"({c})*d{name}" for c, name in zip(self.coeffs, self.chart.names) if c != 0]
        return " + ".join(parts) if parts else "0"


def _same_chart(X: VectorField, Y: VectorField):
    if X.chart != Y.chart:
        raise ChartMismatchError(f"vector fields live on different charts: {X.chart} vs {Y.chart}")


def bracket(X: VectorField, Y: VectorField) -> VectorField:
    """Lie bracket [X, Y], computed componentwise as X(Y^k) - Y(X^k)."""
    _same_chart(X, Y)
    return VectorField(X.chart, tuple(X.apply(b) - Y.apply(a)
                                      for a, b in zip(X.coeffs, Y.coeffs)))


@dataclass(frozen=True)
class VectorFieldModule:
    chart: CornerChart
    generators: Tuple[VectorField, ...]

    def __init__(self, chart: CornerChart, generators: Sequence[VectorField]):
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "generators", tuple(generators))
        if len(self.generators) != chart.n:
            raise VFAlgebraError(
                f"a local basis has n={chart.n} generators, got {len(self.generators)}")
        for X in self.generators:
            if X.chart != chart:
                raise ChartMismatchError("generator on a foreign chart")

    def matrix(self) -> sp.Matrix:
        """Column i holds the components of generator i."""
        return sp.Matrix(self.chart.n, self.chart.n,
                         lambda r, c: self.generators[c].coeffs[r])

    def determinant(self) -> sp.Expr:
        return sp.factor(self.matrix().det())


@dataclass(frozen=True)
class ClosureReport:
    closed: bool
    tangent: bool
    determinant: sp.Expr
    # (i, j) -> coefficients of [X_i, X_j] in the generator basis
    table: Dict[Tuple[int, int], Tuple[sp.Expr, ...]] = field(default_factory=dict)
    witness: Optional[Tuple[int, int, VectorField, Tuple[sp.Expr, ...]]] = None


def expand_in_basis(mod: VectorFieldModule, X: VectorField) -> Tuple[sp.Expr, ...]:
    """Coefficients a with X = sum a_i X_i, as rational functions."""
    G = mod.matrix()
    det = sp.expand(G.det())
    if det == 0:
        raise DependentGeneratorsError("generators are linearly dependent at a generic point")
    sol = G.adjugate() * sp.Matrix(X.coeffs)
    return tuple(sp.cancel(s / det) for s in sol)


def _is_polynomial(expr, syms) -> bool:
    num, den = sp.fraction(sp.cancel(expr))
    return not (den.free_symbols & set(syms))


def check_closure(mod: VectorFieldModule) -> ClosureReport:
    det = mod.determinant()
    if det == 0:
        raise DependentGeneratorsError("generators are linearly dependent at a generic point")
    syms = mod.chart.symbols
    tangent = all(X.is_tangent() for X in mod.generators)
    table = {}
    for i, j in combinations(range(mod.chart.n), 2):
        b = bracket(mod.generators[i], mod.generators[j])
        coeffs = expand_in_basis(mod, b)
        if not all(_is_polynomial(c, syms) for c in coeffs):
            return ClosureReport(False, tangent, det, table, (i, j, b, coeffs))
        table[(i, j)] = tuple(sp.expand(c) for c in coeffs)
    return ClosureReport(True, tangent, det, table, None)


@dataclass(frozen=True)
class LieAlgebraStructure:
    """Structure constants c[i][j][k] with [e_i, e_j] = sum_k c[i][j][k] e_k."""

    dim: int
    constants: Tuple[Tuple[Tuple[Fraction, ...], ...], ...] = ()
    # basis of the algebra in generator coordinates, when it comes from a module
    basis: Tuple[Tuple[Fraction, ...], ...] = ()

    def __post_init__(self):
        if not self.constants:
            object.__setattr__(self, "constants", tuple(
                tuple((Fraction(0),) * self.dim for _ in range(self.dim))
                for _ in range(self.dim)))
        c = tuple(tuple(tuple(Fraction(v) for v in row) for row in plane)
                  for plane in self.constants)
        object.__setattr__(self, "constants", c)
        if len(c) != self.dim or any(len(p) != self.dim or any(len(r) != self.dim for r in p)
                                     for p in c):
            raise VFAlgebraError("structure constants must be a dim x dim x dim array")

    @classmethod
    def from_brackets(cls, dim: int, brackets: Mapping[Tuple[int, int], Mapping[int, object]]):
        """Build from the nonzero brackets [e_i, e_j] = {k: c} with i < j; antisymmetry fills the rest."""
        c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for (i, j), out in brackets.items():
            for k, v in out.items():
                c[i][j][k] = Fraction(v)
                c[j][i][k] = -Fraction(v)
        return cls(dim, c)

    def bracket(self, u: Sequence[Fraction], v: Sequence[Fraction]) -> Tuple[Fraction, ...]:
        out = [Fraction(0)] * self.dim
        for i, ui in enumerate(u):
            if not ui:
                continue
            for j, vj in enumerate(v):
                if not vj:
                    continue
                w = ui * vj
                for k, ck in enumerate(self.constants[i][j]):
                    if ck:
                        out[k] += w * ck
        return tuple(out)

    def is_antisymmetric(self) -> bool:
        c = self.constants
        return all(c[i][j][k] == -c[j][i][k]
                   for i in range(self.dim) for j in range(self.dim) for k in range(self.dim))

    def jacobi_defect(self) -> Optional[Tuple[int, int, int]]:
        """First basis triple violating the Jacobi identity, or None."""
        e = [tuple(Fraction(int(i == j)) for j in range(self.dim)) for i in range(self.dim)]
        for a, b, c in combinations(range(self.dim), 3):
            s = [sum(t) for t in zip(self.bracket(e[a], self.bracket(e[b], e[c])),
                                     self.bracket(e[b], self.bracket(e[c], e[a])),
                                     self.bracket(e[c], self.bracket(e[a], e[b])))]
            if any(s):
                return (a, b, c)
        return None

    def is_abelian(self) -> bool:
        return all(v == 0 for p in self.constants for r in p for v in r)


def _span(vectors: List[Tuple[Fraction, ...]], dim: int) -> List[Tuple[Fraction, ...]]:
    """Row-reduced basis of the span."""
    if not vectors:
        return []
    M = sp.Matrix([[sp.Rational(v.numerator, v.denominator) for v in vec] for vec in vectors])
    rref, pivots = M.rref()
    return [tuple(Fraction(int(sp.numer(x)), int(sp.denom(x))) for x in rref.row(i))
            for i in range(len(pivots))]


def _commutator_span(g: LieAlgebraStructure, A, B):
    return _span([g.bracket(u, v) for u in A for v in B], g.dim)


@dataclass(frozen=True)
class SolvabilityReport:
    solvable: bool
    nilpotent: bool
    derived_series: Tuple[int, ...]
    lower_central_series: Tuple[int, ...]


def is_solvable_exponential(g: LieAlgebraStructure) -> SolvabilityReport:
    """
    Decide solvability (derived series reaches 0) and nilpotency (lower central
    series reaches 0) exactly.  Exponentiality of the simply connected group is
    not decided here.
    """
    if not g.is_antisymmetric():
        raise JacobiError("structure constants are not antisymmetric")
    bad = g.jacobi_defect()
    if bad is not None:
        raise JacobiError(f"Jacobi identity fails on basis triple {bad}")
    full = [tuple(Fraction(int(i == j)) for j in range(g.dim)) for i in range(g.dim)]

    def series(step):
        dims = [len(full)]
        cur = full
        while cur:
            nxt = step(cur)
            if len(nxt) == len(cur):
                break
            cur = nxt
            dims.append(len(cur))
        return tuple(dims)

    derived = series(lambda S: _commutator_span(g, S, S))
    lower = series(lambda S: _commutator_span(g, full, S))
    return SolvabilityReport(derived[-1] == 0, lower[-1] == 0, derived, lower)


def isotropy_algebra(mod: VectorFieldModule, p: Sequence) -> LieAlgebraStructure:
    """
    Isotropy Lie algebra at p: the kernel of evaluating generator combinations
    at p, with the bracket induced from the module.  Interior points give the
    zero algebra.
    """
    if len(p) != mod.chart.n:
        raise VFAlgebraError("point has wrong dimension")
    p = tuple(sp.Rational(v) for v in p)
    if not mod.chart.is_boundary_point(p):
        return LieAlgebraStructure(0)
    report = check_closure(mod)
    if not report.closed:
        i, j, _, _ = report.witness
        raise NotClosedError(f"[X{i + 1}, X{j + 1}] has no polynomial expansion")
    syms = mod.chart.symbols
    subs = dict(zip(syms, p))
    anchor = mod.matrix().subs(subs)
    kernel = anchor.nullspace()
    d = len(kernel)
    if d == 0:
        return LieAlgebraStructure(0)
    n = mod.chart.n
    # c[i][j] in generator coordinates, evaluated at p
    gen_c = [[(sp.Integer(0),) * n for _ in range(n)] for _ in range(n)]
    for (i, j), coeffs in report.table.items():
        at_p = tuple(sp.Rational(c.subs(subs)) for c in coeffs)
        gen_c[i][j] = at_p
        gen_c[j][i] = tuple(-v for v in at_p)
    K = sp.Matrix.hstack(*kernel)
    consts = [[None] * d for _ in range(d)]
    for a in range(d):
        for b in range(d):
            w = sp.zeros(n, 1)
            for i in range(n):
                for j in range(n):
                    coef = K[i, a] * K[j, b]
                    if coef:
                        w += coef * sp.Matrix(gen_c[i][j])
            sol, params = K.gauss_jordan_solve(w)
            if params.shape[0]:
                sol = sol.subs({t: 0 for t in params})
            consts[a][b] = tuple(Fraction(int(sp.numer(s)), int(sp.denom(s))) for s in sol)
    basis = tuple(tuple(Fraction(int(sp.numer(K[i, a])), int(sp.denom(K[i, a])))
                        for i in range(n)) for a in range(d))
    g = LieAlgebraStructure(d, consts, basis)
    if not g.is_antisymmetric() or g.jacobi_defect() is not None:
        raise JacobiError("isotropy bracket failed antisymmetry or Jacobi")
    return g


# Standard local bases near the boundary x = 0 -------------------------------

def b_module(n: int = 2) -> VectorFieldModule:
    chart = CornerChart(n, 1)
    s = chart.symbols
    gens = [VectorField.from_dict(chart, {0: s[0]})]
    gens += [VectorField.from_dict(chart, {i: 1}) for i in range(1, n)]
    return VectorFieldModule(chart, gens)


def zero_module(n: int = 2) -> VectorFieldModule:
    chart = CornerChart(n, 1)
    x = chart.symbols[0]
    return VectorFieldModule(chart, [VectorField.from_dict(chart, {i: x}) for i in range(n)])


def scattering_module(n: int = 2) -> VectorFieldModule:
    chart = CornerChart(n, 1)
    x = chart.symbols[0]
    gens = [VectorField.from_dict(chart, {0: x ** 2})]
    gens += [VectorField.from_dict(chart, {i: x}) for i in range(1, n)]
    return VectorFieldModule(chart, gens)


def edge_module(n: int = 3, fiber_start: int = 2) -> VectorFieldModule:
    """x d_x, x d_{y_2..y_{k}} along the base, plain d_{y} along the fibres."""
    chart = CornerChart(n, 1)
    x = chart.symbols[0]
    gens = [VectorField.from_dict(chart, {0: x})]
    for i in range(1, n):
        gens.append(VectorField.from_dict(chart, {i: x if i < fiber_start else 1}))
    return VectorFieldModule(chart, gens)


# Key-value module files ------------------------------------------------------

def parse_polynomial(text: str, chart: CornerChart) -> sp.Expr:
    """
    Parse 'coef:e1,e2,...; coef:e1,...' into a polynomial.  Each term is a
    rational coefficient followed by one exponent per coordinate.
    """
    syms = chart.symbols
    total = sp.Integer(0)
    text = text.strip()
    if not text or text == "0":
        return total
    for term in text.split(";"):
        term = term.strip()
        if not term:
            continue
        coef, _, exps = term.partition(":")
        powers = [int(e) for e in exps.split(",")] if exps.strip() else [0] * chart.n
        if len(powers) != chart.n or any(e < 0 for e in powers):
            raise VFAlgebraError(f"bad monomial exponents in {term!r}")
        mono = sp.Rational(coef.strip())
        for s, e in zip(syms, powers):
            mono *= s ** e
        total += mono
    return sp.expand(total)


def module_from_config(cfg) -> VectorFieldModule:
    """Build a module from a configparser object with [chart] and [generator N] sections."""
    if "chart" not in cfg:
        raise VFAlgebraError("missing [chart] section")
    n = cfg["chart"].getint("n")
    k = cfg["chart"].getint("k", fallback=1)
    names = cfg["chart"].get("names", "").split()
    chart = CornerChart(n, k, tuple(names))
    sections = sorted((s for s in cfg.sections() if s.startswith("generator")),
                      key=lambda s: int(s.split()[-1]))
    gens = []
    for sec in sections:
        coeffs = {}
        for key, value in cfg[sec].items():
            if key not in chart.names:
                raise VFAlgebraError(f"unknown coordinate {key!r} in [{sec}]")
            coeffs[chart.names.index(key)] = parse_polynomial(value, chart)
        gens.append(VectorField.from_dict(chart, coeffs))
    return VectorFieldModule(chart, gens)
