import math

import numpy as np
import pytest

from polycorner import bie
from polycorner.fem.mesh import generate_graded_mesh
from polycorner.fem.poisson import solve_poisson
from polycorner.geometry import Polygon, lshape, regular_polygon, unit_square

HARMONIC = [
    lambda x, y: np.ones_like(x),
    lambda x, y: x - 2 * y,
    lambda x, y: x ** 2 - y ** 2,
    lambda x, y: x * y,
    lambda x, y: x ** 3 - 3 * x * y ** 2,
    lambda x, y: 3 * x ** 2 * y - y ** 3,
]


def test_circle_kernel_constant():
    R = 2.0
    th = np.array([0.3, 1.7, 4.0])
    x = R * np.array([math.cos(0.1), math.sin(0.1)])
    y = R * np.stack([np.cos(th), np.sin(th)], 1)
    assert np.allclose(bie.kernel(x, y, y / R), 1 / (4 * math.pi * R))


def test_kernel_vanishes_on_a_line():
    x = np.array([0.2, 0.0])
    y = np.array([[0.7, 0.0], [-3.0, 0.0]])
    assert np.all(bie.kernel(x, y, np.array([0.0, -1.0])) == 0)


def test_circle_constant_density():
    pz = bie.circle_panelization(1.5, 256)
    K = bie.double_layer_matrix(pz).matrix
    assert np.max(np.abs(K.sum(1) - 0.5)) < 1e-8


@pytest.mark.parametrize("poly", [unit_square(), lshape()], ids=["square", "lshape"])
def test_gauss_identity(poly):
    pz = bie.panelize(poly, 16)
    assert np.max(np.abs(bie.gauss_residual(pz))) < 1e-6


def test_gauss_residual_order_convergence():
    res = [np.max(np.abs(bie.gauss_residual(bie.panelize(lshape(), q)))) for q in (2, 4, 8, 16)]
    for a, b in zip(res, res[1:]):
        assert b <= a / 4 or b < 1e-11


@pytest.mark.parametrize("k", range(len(HARMONIC)))
def test_harmonic_reproduction(k):
    g = HARMONIC[k]
    sol = bie.solve_dirichlet(lshape(), g)
    pts = np.array([[0.5, 0.3], [-0.5, 0.5], [-0.3, -0.6], [-0.9, -0.9]])
    assert np.max(np.abs(sol.evaluate(pts) - g(pts[:, 0], pts[:, 1]))) < 1e-5


def test_many_sided_polygon_constant():
    poly = regular_polygon(64)
    sol = bie.solve_dirichlet(poly, HARMONIC[0], order=8, base_panels=2, depth=3)
    assert np.ptp(sol.density) < 1e-10
    assert sol.evaluate([[0.1, -0.2]])[0] == pytest.approx(1.0, abs=1e-10)


def test_agrees_with_fem():
    g = lambda x, y: x ** 2 + np.sin(2 * y) + x * y  # noqa: E731
    # g is not harmonic; both methods solve Delta u = 0 with boundary values g
    sol = bie.solve_dirichlet(lshape(), g)
    mesh = generate_graded_mesh(lshape(), 1 / 64, [1, 1, 0.3, 1, 1, 1])
    fem = solve_poisson(mesh, 0.0, g)
    pts = np.array([[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [-0.25, -0.6]])
    assert np.max(np.abs(sol.evaluate(pts) - fem.evaluate(pts))) < 1e-3


def test_compactness_probe_vertices():
    flat = Polygon.from_floats([(0, 0), (0.5, 0), (1, 0), (1, 1), (0, 1)])
    proxies = bie.corner_compactness_probe(flat, js=range(3, 9), order=8, depth=12)
    assert proxies[1].angle == pytest.approx(math.pi)
    assert max(proxies[1].norms) < 1e-12
    right = proxies[0]
    assert right.norms[-1] > 0.3
    assert right.relative_change(4) < 0.1

    lp = bie.corner_compactness_probe(lshape(), js=range(3, 9), order=8, depth=12)
    reentrant = next(p for p in lp if p.angle > math.pi)
    convex = next(p for p in lp if p.angle < math.pi)
    assert reentrant.norms[-1] >= convex.norms[-1] - 1e-6


def test_reliable_flags():
    sol = bie.solve_dirichlet(unit_square(), HARMONIC[2], order=8)
    flags = sol.reliable(np.array([[0.5, 0.5], [0.5, 1e-4]]))
    assert flags.tolist() == [True, False]


def test_condition_cap():
    with pytest.raises(bie.IllConditionedError) as info:
        bie.solve_dirichlet(unit_square(), HARMONIC[0], order=8, cond_cap=1.0)
    assert "node" in str(info.value)


def test_invalid_arguments():
    with pytest.raises(bie.BIEError):
        bie.panelize(unit_square(), order=1)
    with pytest.raises(bie.BIEError):
        bie.panelize(unit_square(), base_panels=1)
    with pytest.raises(bie.BIEError):
        bie.DenseBoundaryOperator(np.ones((2, 3)))
    with pytest.raises(bie.BIEError):
        bie.DenseBoundaryOperator(np.array([[np.nan]]))
