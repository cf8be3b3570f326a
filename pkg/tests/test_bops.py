import configparser
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from polycorner import bops
from polycorner.bops import BOperator, Coefficient, compose, indicial_family, principal_symbol

XDX = BOperator.xdx()
DY = BOperator.dy()
MX = BOperator.multiplication(Coefficient.x_power(1))


def op(d):
    return BOperator.from_dict({k: (v if isinstance(v, Coefficient) else Coefficient.const(v))
                                for k, v in d.items()})


seeds = st.integers(0, 2 ** 32 - 1)


def test_compose_examples():
    assert compose(XDX, XDX) == op({(2, 0): 1})
    # (x d_x)(x u) = x u + x (x d_x) u
    assert compose(XDX, MX) == MX * (XDX + op({(0, 0): 1}))
    sin, cos = Coefficient.sin(1), Coefficient.cos(1)
    expected = BOperator.from_dict({(0, 1): sin, (0, 0): cos})
    assert compose(DY, BOperator.multiplication(sin)) == expected


def test_order_bound():
    rng = random.Random(3)
    for _ in range(20):
        P, Q = bops.random_operator(rng), bops.random_operator(rng)
        assert compose(P, Q).order <= P.order + Q.order


def test_indicial_polar_laplacian():
    fam = indicial_family(op({(2, 0): 1, (0, 2): 1}))
    ev = fam.evaluate(1.5)
    assert ev[0][0] == pytest.approx(-1.5 ** 2)
    assert ev[2][0] == pytest.approx(1.0)
    assert fam.degree == 2


def test_indicial_shifted_b_laplacian():
    lam = Fraction(7, 10)
    fam = indicial_family(bops.b_laplacian(lam))
    tau, lam = 2.0, float(lam)
    ev = fam.evaluate(tau)
    # Delta_S1 + tau^2 - lam with Delta_S1 = -d_y^2
    assert ev[0][0] == pytest.approx(tau ** 2 - lam)
    assert ev[2][0] == pytest.approx(-1.0)
    # on the mode e^{iky} the family acts by k^2 + tau^2 - lam
    A = fam.matrix(tau, 3)
    for col, k in enumerate(range(-3, 4)):
        assert A[col, col] == pytest.approx(k * k + tau ** 2 - lam)


def test_x_times_anything_has_zero_family():
    rng = random.Random(5)
    for _ in range(20):
        Q = bops.random_operator(rng)
        assert indicial_family(MX * Q).is_zero()


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_indicial_multiplicative(seed):
    rng = random.Random(seed)
    P, Q = bops.random_operator(rng), bops.random_operator(rng)
    assert indicial_family(compose(P, Q)) == indicial_family(P) * indicial_family(Q)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_vanishing_law(seed):
    rng = random.Random(seed)
    P = bops.random_operator(rng)
    assert indicial_family(P).is_zero() == P.divisible_by_x()
    xP = MX * P
    assert indicial_family(xP).is_zero() and xP.divide_by_x() == P


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.0, 1.0), st.floats(0.0, 6.3), st.floats(0.0, 6.3), st.floats(0.1, 5.0))
def test_symbol_homogeneity(seed, x, y, th, t):
    P = bops.random_operator(random.Random(seed))
    xi = (math.cos(th), math.sin(th))
    s1 = principal_symbol(P, (x, y), xi).value
    s2 = principal_symbol(P, (x, y), (t * xi[0], t * xi[1])).value
    assert abs(s2 - t ** P.order * s1) <= 1e-9 * max(1.0, abs(s2))


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.0, 1.0), st.floats(0.0, 6.3), st.floats(0.0, 6.3))
def test_symbol_multiplicative(seed, x, y, th):
    rng = random.Random(seed)
    P, Q = bops.random_operator(rng), bops.random_operator(rng)
    PQ = compose(P, Q)
    if PQ.order != P.order + Q.order:
        return
    xi = (math.cos(th), math.sin(th))
    lhs = principal_symbol(PQ, (x, y), xi).value
    rhs = principal_symbol(P, (x, y), xi).value * principal_symbol(Q, (x, y), xi).value
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_symbol_examples():
    lap = op({(2, 0): 1, (0, 2): 1})
    assert principal_symbol(lap, (0.5, 0.0), (1, 0)).value == pytest.approx(-1)
    assert bops.is_elliptic(lap)
    assert principal_symbol(XDX, (0.5, 0.0), (0, 1)).value == 0
    assert not bops.is_elliptic(XDX)
    wave = op({(2, 0): 1, (0, 2): -1})
    assert abs(principal_symbol(wave, (0.5, 0.0), (1, 1)).value) == pytest.approx(0)
    assert not bops.is_elliptic(wave)


def test_zero_covector():
    with pytest.raises(bops.ZeroCovectorError):
        principal_symbol(XDX, (0, 0), (0, 0))


def test_apply_matches_composition():
    rng = random.Random(11)
    u = Coefficient.from_dict({(1, 1): 2, (2, -1): 1, (0, 0): 3})
    for _ in range(10):
        P, Q = bops.random_operator(rng, order=2), bops.random_operator(rng, order=2)
        assert compose(P, Q).apply(u) == P.apply(Q.apply(u))


def test_coefficient_trig_and_eval():
    c = Coefficient.cos(2, 1, 3) + Coefficient.sin(1)
    x, y = 0.4, 1.1
    assert c(x, y) == pytest.approx(3 * x * math.cos(2 * y) + math.sin(y))


def test_parse_operator_section():
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    cfg.read_string("""
[operator P]
t2_0 = -1
t0_2 = -1
t0_0 = 1/2 1 cos 1, 1+2i 0 exp -1
""")
    P = bops.operator_from_section(cfg["operator P"])
    assert P.order == 2
    c = dict(P.terms)[(0, 0)]
    assert c(0.5, 0.3) == pytest.approx(0.25 * math.cos(0.3) + (1 + 2j) * complex(math.cos(-0.3), math.sin(-0.3)))
    with pytest.raises(bops.BOperatorError):
        bops.parse_coefficient("1 0 tan 1")
    rec = bops.terms_record(P.terms)
    assert {(r["i"], r["j"]) for r in rec} == {(2, 0), (0, 2), (0, 0)}
