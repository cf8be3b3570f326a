import configparser
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from polycorner import vfalg
from polycorner.vfalg import CornerChart, VectorField, bracket

CH = CornerChart(2, 1)
X, Y = CH.symbols


def vf(a, b, chart=CH):
    return VectorField(chart, (a, b))


def same(U, V):
    return all(sp.expand(a - b) == 0 for a, b in zip(U.coeffs, V.coeffs))


# random polynomial fields of degree <= 3 on the (x, y) chart
monomial = st.tuples(st.integers(-4, 4), st.integers(0, 3), st.integers(0, 3))
poly = st.lists(monomial, max_size=4).map(
    lambda ms: sp.expand(sum((c * X ** i * Y ** j for c, i, j in ms if i + j <= 3), sp.Integer(0))))
field = st.tuples(poly, poly).map(lambda ab: vf(*ab))
tangent_field = st.tuples(poly, poly).map(lambda ab: vf(sp.expand(X * ab[0]), ab[1]))


def test_bracket_examples():
    assert bracket(vf(X, 0), vf(0, 1)).is_zero()
    assert same(bracket(vf(X, 0), vf(0, X)), vf(0, X))
    assert same(bracket(vf(X ** 2, 0), vf(0, X)), vf(0, X ** 2))


def test_bracket_chart_mismatch():
    other = CornerChart(2, 0)
    with pytest.raises(vfalg.ChartMismatchError):
        bracket(vf(X, 0), VectorField(other, (1, 0)))


@settings(max_examples=40, deadline=None)
@given(field, field)
def test_antisymmetry(A, B):
    assert same(bracket(A, B), -bracket(B, A))


@settings(max_examples=25, deadline=None)
@given(field, field, field)
def test_jacobi(A, B, C):
    s = bracket(A, bracket(B, C)) + bracket(B, bracket(C, A)) + bracket(C, bracket(A, B))
    assert s.is_zero()


@settings(max_examples=30, deadline=None)
@given(tangent_field, tangent_field)
def test_tangency_preserved(A, B):
    assert A.is_tangent() and B.is_tangent()
    assert bracket(A, B).is_tangent()


@settings(max_examples=30, deadline=None)
@given(poly, field, field)
def test_module_law(f, A, B):
    lhs = bracket(A.scale(f), B)
    rhs = bracket(A, B).scale(f) - A.scale(B.apply(f))
    assert same(lhs, rhs)


def test_non_polynomial_coefficient_rejected():
    with pytest.raises(vfalg.VFAlgebraError):
        vf(1 / X, 0)


def test_closure_of_standard_modules():
    for mod in (vfalg.b_module(), vfalg.zero_module(), vfalg.scattering_module(), vfalg.edge_module()):
        rep = vfalg.check_closure(mod)
        assert rep.closed and rep.tangent and rep.witness is None


def test_zero_module_table():
    rep = vfalg.check_closure(vfalg.zero_module())
    assert rep.table[(0, 1)] == (0, 1)  # [X1, X2] = X2


def test_not_closed_witness():
    ch = CornerChart(2, 0)
    x, _ = ch.symbols
    mod = vfalg.VectorFieldModule(ch, [VectorField(ch, (1, 0)), VectorField(ch, (0, x))])
    rep = vfalg.check_closure(mod)
    assert not rep.closed
    i, j, b, coeffs = rep.witness
    assert (i, j) == (0, 1)
    assert b.coeffs == (0, 1)
    assert sp.simplify(coeffs[1] - 1 / x) == 0


def test_dependent_generators():
    mod = vfalg.VectorFieldModule(CH, [vf(X, 0), vf(2 * X, 0)])
    with pytest.raises(vfalg.DependentGeneratorsError):
        vfalg.check_closure(mod)


def test_wrong_generator_count():
    with pytest.raises(vfalg.VFAlgebraError):
        vfalg.VectorFieldModule(CH, [vf(X, 0)])


def test_isotropy_b():
    g = vfalg.isotropy_algebra(vfalg.b_module(), (0, 0))
    assert g.dim == 1 and g.is_abelian()


def test_isotropy_scattering():
    g = vfalg.isotropy_algebra(vfalg.scattering_module(), (0, Fraction(1, 3)))
    assert g.dim == 2 and g.is_abelian()


def test_isotropy_zero_module():
    g = vfalg.isotropy_algebra(vfalg.zero_module(), (0, 0))
    assert g.dim == 2
    # basis x d_x, x d_y gives [T, X] = X
    assert g.constants[0][1] == (0, 1)
    rep = vfalg.is_solvable_exponential(g)
    assert rep.solvable and not rep.nilpotent
    assert rep.derived_series == (2, 1, 0)
    assert rep.lower_central_series == (2, 1)


def test_isotropy_interior_is_zero():
    for mod in (vfalg.b_module(), vfalg.zero_module(), vfalg.scattering_module()):
        assert vfalg.isotropy_algebra(mod, (1, 0)).dim == 0


def test_isotropy_requires_closure():
    # [d_y, (x + y) d_x] = d_x needs the coefficient 1 / (x + y)
    bad = vfalg.VectorFieldModule(CH, [vf(0, 1), vf(X + Y, 0)])
    assert not vfalg.check_closure(bad).closed
    with pytest.raises(vfalg.NotClosedError):
        vfalg.isotropy_algebra(bad, (0, 1))


def test_solvability_examples():
    ab = vfalg.LieAlgebraStructure(3)
    r = vfalg.is_solvable_exponential(ab)
    assert r.solvable and r.nilpotent
    ax_b = vfalg.LieAlgebraStructure.from_brackets(2, {(0, 1): {1: 1}})
    r = vfalg.is_solvable_exponential(ax_b)
    assert r.solvable and not r.nilpotent
    # H, E, F
    sl2 = vfalg.LieAlgebraStructure.from_brackets(3, {(0, 1): {1: 2}, (0, 2): {2: -2}, (1, 2): {0: 1}})
    r = vfalg.is_solvable_exponential(sl2)
    assert not r.solvable and not r.nilpotent
    heis = vfalg.LieAlgebraStructure.from_brackets(3, {(0, 1): {2: 1}})
    r = vfalg.is_solvable_exponential(heis)
    assert r.solvable and r.nilpotent


def test_jacobi_violation_raises():
    bad = vfalg.LieAlgebraStructure.from_brackets(3, {(0, 1): {0: 1}, (1, 2): {1: 1}, (0, 2): {0: 1}})
    assert bad.jacobi_defect() is not None
    with pytest.raises(vfalg.JacobiError):
        vfalg.is_solvable_exponential(bad)


def test_module_from_config():
    cfg = configparser.ConfigParser()
    cfg.read_string("""
[chart]
n = 2
k = 1
[generator 1]
x = 1:1,0
[generator 2]
y = 1:1,0
""")
    mod = vfalg.module_from_config(cfg)
    assert mod.generators[0].coeffs == (X, 0)
    assert vfalg.check_closure(mod).closed


def test_parse_polynomial():
    p = vfalg.parse_polynomial("3/2:2,0; -1:0,1", CH)
    assert sp.expand(p - (sp.Rational(3, 2) * X ** 2 - Y)) == 0
    with pytest.raises(vfalg.VFAlgebraError):
        vfalg.parse_polynomial("1:1", CH)


def test_chart_validation():
    with pytest.raises(vfalg.VFAlgebraError):
        CornerChart(2, 3)
    with pytest.raises(vfalg.VFAlgebraError):
        CornerChart(2, 1, ("x", "x"))
