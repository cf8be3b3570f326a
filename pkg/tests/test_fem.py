import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from polycorner.fem import studies
from polycorner.fem.mesh import MeshError, generate_graded_mesh
from polycorner.fem.poisson import element_gradients, energy_error, solve_poisson, stiffness_matrix
from polycorner.fem.quadrature import BARY7, W7
from polycorner.fem.weighted import WeightedNormError, WeightedNormSpec, weighted_norm, weighted_norm_terms
from polycorner.geometry import lshape, unit_square

SQ = unit_square()
CORNERS = [(0, 0), (1, 0), (1, 1), (0, 1)]

# double sine series for Delta u = 2 on the unit square with u = 0 on the boundary,
# summed over odd m, n < 4000 and evaluated at (1/2, 1/2)
U_CENTER_F2 = -0.14734270653077888


@pytest.fixture(scope="module")
def mesh32():
    return generate_graded_mesh(SQ, 1 / 32)


def test_mesh_quality():
    m = generate_graded_mesh(SQ, 0.1)
    d = m.diameters()
    assert d.max() / d.min() <= 4
    assert np.degrees(m.min_angles().min()) >= 15
    assert d.max() <= 0.1 + 1e-12
    assert m.areas().sum() == pytest.approx(1.0)


def test_mesh_deterministic():
    a = generate_graded_mesh(lshape(), 1 / 8, [1, 1, 0.5, 1, 1, 1])
    b = generate_graded_mesh(lshape(), 1 / 8, [1, 1, 0.5, 1, 1, 1])
    assert a.to_text() == b.to_text()


def test_graded_mesh_node_count():
    counts = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        m = generate_graded_mesh(lshape(), h, studies.kappa_for(studies.lshape_benchmark(), 0.3))
        assert np.all(m.areas() > 0)
        assert m.areas().sum() == pytest.approx(3.0)
        counts.append(m.n_nodes * h ** 2)
    # O(h^-2) with a bounded constant
    assert max(counts) / min(counts) < 2


def test_grading_shrinks_corner_elements():
    k = studies.kappa_for(studies.lshape_benchmark(), 0.3)
    uni = generate_graded_mesh(lshape(), 1 / 16)
    grd = generate_graded_mesh(lshape(), 1 / 16, k)

    def at_corner(m):
        hit = np.any(np.all(m.nodes[m.triangles] == 0.0, axis=2), axis=1)
        return m.diameters()[hit].max()
    assert at_corner(grd) < 0.1 * at_corner(uni)


def test_mesh_errors():
    with pytest.raises(MeshError):
        generate_graded_mesh(SQ, 0.0)
    with pytest.raises(MeshError):
        generate_graded_mesh(SQ, 0.1, [0.5, 1.0])
    with pytest.raises(MeshError):
        generate_graded_mesh(SQ, 0.1, [0.0, 1, 1, 1])


def test_harmonic_reproduction_second_order():
    exact = lambda x, y: x ** 2 - y ** 2  # noqa: E731
    # the structured square mesh is nodally exact for this function
    sol = solve_poisson(generate_graded_mesh(SQ, 1 / 16), 0.0, exact)
    X = sol.mesh.nodes
    assert np.max(np.abs(sol.values - exact(X[:, 0], X[:, 1]))) < 1e-12
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32, 1 / 64):
        sol = solve_poisson(generate_graded_mesh(lshape(), h, [1, 1, 0.5, 1, 1, 1]), 0.0, exact)
        X = sol.mesh.nodes
        errs.append(np.max(np.abs(sol.values - exact(X[:, 0], X[:, 1]))))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 1.6)


def test_linear_exact():
    sol = solve_poisson(generate_graded_mesh(lshape(), 1 / 8), 0.0, lambda x, y: 2 * x - y + 1)
    X = sol.mesh.nodes
    assert np.max(np.abs(sol.values - (2 * X[:, 0] - X[:, 1] + 1))) < 1e-12


def test_series_oracle(mesh32):
    u = solve_poisson(mesh32, 2.0).evaluate([[0.5, 0.5]])[0]
    assert u == pytest.approx(U_CENTER_F2, abs=2e-3)
    v = solve_poisson(mesh32, -1.0).evaluate([[0.5, 0.5]])[0]
    assert v == pytest.approx(-U_CENTER_F2 / 2, abs=2e-3)


def test_zero_data_zero_solution(mesh32):
    sol = solve_poisson(mesh32, 0.0, 0.0)
    assert np.all(sol.values == 0)


def test_maximum_principle(mesh32):
    # Delta u = 1 >= 0 makes u subharmonic: it stays below its boundary values
    g = lambda x, y: np.sin(3 * x) * y  # noqa: E731
    sol = solve_poisson(mesh32, 1.0, g)
    X = mesh32.nodes
    bmax = np.max(g(X[sol.dirichlet_nodes, 0], X[sol.dirichlet_nodes, 1]))
    assert np.max(sol.values) <= bmax + 1e-12


def test_galerkin_orthogonality(mesh32):
    # u = x^3 + x y^2, Delta u = 8 x: a(u - u_h, phi_i) = 0 at every free node
    exact = lambda x, y: x ** 3 + x * y ** 2  # noqa: E731
    grad = lambda x, y: (3 * x ** 2 + y ** 2, 2 * x * y)  # noqa: E731
    sol = solve_poisson(mesh32, lambda x, y: 8 * x, exact)
    G, area = element_gradients(mesh32)
    P = mesh32.nodes[mesh32.triangles]
    # the seven-point rule is exact for the quadratic grad u
    mean = np.zeros((len(P), 2))
    for q in range(len(W7)):
        xq = np.einsum("k,tkd->td", BARY7[q], P)
        mean += W7[q] * np.stack(grad(xq[:, 0], xq[:, 1]), 1)
    a_u = np.zeros(mesh32.n_nodes)
    np.add.at(a_u, mesh32.triangles, area[:, None] * np.einsum("tkd,td->tk", G, mean))
    a_uh = stiffness_matrix(mesh32) @ sol.values
    free = np.setdiff1d(np.arange(mesh32.n_nodes), sol.dirichlet_nodes)
    assert np.max(np.abs(a_u - a_uh)[free]) < 1e-12
    assert energy_error(sol, grad) < 0.1


def test_energy_error_decreases():
    errs = []
    for h in (1 / 4, 1 / 8, 1 / 16, 1 / 32):
        b = studies.smooth_benchmark()
        sol = solve_poisson(generate_graded_mesh(b.polygon, h), b.f, b.exact)
        errs.append(energy_error(sol, b.grad))
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))


def test_weighted_norm_zero(mesh32):
    sol = solve_poisson(mesh32, 0.0, 0.0)
    assert weighted_norm(sol, WeightedNormSpec(0.3, 2), CORNERS) == 0.0


def test_weighted_norm_homogeneous(mesh32):
    s1 = solve_poisson(mesh32, 1.0)
    s3 = solve_poisson(mesh32, 3.0)
    spec = WeightedNormSpec(0.5, 2)
    assert weighted_norm(s3, spec, CORNERS) == pytest.approx(3 * weighted_norm(s1, spec, CORNERS), rel=1e-10)


def test_weighted_norm_nonintegrable():
    sol = solve_poisson(generate_graded_mesh(SQ, 1 / 8), 0.0, 1.0)
    terms = weighted_norm_terms(sol, WeightedNormSpec(0.0, 1), CORNERS)
    assert terms[0] == math.inf and terms[1] < 1e-20


def test_weighted_norm_constant_oracle():
    # u = 1, a = -1/2: the order-0 term is the integral of 1 / dist(x, corners)
    sol = solve_poisson(generate_graded_mesh(SQ, 1 / 8), 0.0, 1.0)
    t0 = weighted_norm_terms(sol, WeightedNormSpec(-0.5, 0), CORNERS)[0]
    quarter = dblquad(lambda y, x: 1 / math.hypot(x, y), 0, 0.5, lambda x: 0, lambda x: x)[0]
    assert 8 * quarter == pytest.approx(4 * math.log(1 + math.sqrt(2)), rel=1e-10)
    # the nearest-corner distance has kinks inside elements, which limits the rule
    assert t0 == pytest.approx(8 * quarter, rel=1e-4)


def test_order_one_term_is_h1_seminorm(mesh32):
    sol = solve_poisson(mesh32, 1.0)
    t1 = weighted_norm_terms(sol, WeightedNormSpec(0.0, 1), CORNERS)[1]
    assert t1 == pytest.approx(sol.energy(), rel=1e-10)


def test_unit_weight_is_l2(mesh32):
    # a = -1 makes the order-0 weight r^0, so the term is the exact L2 norm of the P1 function
    sol = solve_poisson(mesh32, 1.0, lambda x, y: x + y)
    t0 = weighted_norm_terms(sol, WeightedNormSpec(-1.0, 0), CORNERS)[0]
    area = mesh32.areas()
    local = (np.ones((3, 3)) + np.eye(3)) / 12
    v = sol.values[mesh32.triangles]
    mass = np.sum(area * np.einsum("ti,ij,tj->t", v, local, v))
    assert t0 == pytest.approx(mass, rel=1e-12)


def test_weighted_norm_order_limit():
    with pytest.raises(WeightedNormError):
        WeightedNormSpec(0.0, 3)


def test_smooth_convergence_slope():
    res = studies.convergence_study(studies.smooth_benchmark(), [1 / 4, 1 / 8, 1 / 16, 1 / 32])
    assert abs(res.slope - 1.0) < 0.05
    with pytest.raises(studies.FemError):
        studies.convergence_study(studies.smooth_benchmark(), [1 / 4, 1 / 8])


def test_corner_probe_harmonic_has_no_log():
    # data x^2 - y^2 is harmonic and smooth: no log term should be found
    probe = studies.corner_singularity_probe(0.0, lambda x, y: x ** 2 - y ** 2, hs=(1 / 16, 1 / 32))
    assert max(abs(c) for c in probe.log_coefficients) < 1e-8


def test_corner_probe_constant_source():
    probe = studies.corner_singularity_probe(1.0, hs=(1 / 16, 1 / 32))
    assert probe.log_coefficients[-1] == pytest.approx(1 / math.pi, rel=0.05)


def test_corner_fit_ill_conditioned(mesh32):
    sol = solve_poisson(mesh32, 1.0)
    with pytest.raises(studies.IllConditionedFit):
        studies.fit_corner_expansion(sol, 0.05, 0.06)
