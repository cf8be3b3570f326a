import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polycorner import spectra
from polycorner.spectra import (BOUNDING, DIRAC, LAPLACE, NONBOUNDING, CrossSectionData, EndStructure,
                                Face, SpectrumSet)

INF = math.inf
endpoint = st.floats(-50, 50)
interval = st.tuples(endpoint, endpoint).map(lambda t: (min(t), max(t)))


@settings(max_examples=60, deadline=None)
@given(st.lists(interval, max_size=6), st.lists(endpoint, max_size=6))
def test_spectrum_set_normalization(ivs, pts):
    S = SpectrumSet(tuple(ivs), tuple(pts))
    assert S.normalized() == S
    for (a, b), (c, d) in zip(S.intervals, S.intervals[1:]):
        assert b < c
    for p in pts:
        assert S.contains(p)
    for lo, hi in ivs:
        assert S.contains((lo + hi) / 2)
    assert S.union(S) == S


def test_spectrum_set_errors_and_str():
    with pytest.raises(spectra.SpectraError):
        SpectrumSet(((2, 1),))
    assert str(SpectrumSet(((1, INF),))) == "[1, inf)"
    assert SpectrumSet.real_line().is_real_line()
    assert str(SpectrumSet.empty()) == "{}"


def test_laplace_cylinder_and_multicylinder():
    for end in (spectra.cylinder(), spectra.multicylinder()):
        assert spectra.essential_spectrum_laplace(end) == SpectrumSet(((0.0, INF),))


def test_laplace_shifted_cross_section():
    data = CrossSectionData(LAPLACE, (3.0, 5.0, 5.0, 12.0))
    end = EndStructure((Face(1, data),))
    assert spectra.essential_spectrum_laplace(end) == SpectrumSet(((3.0, INF),))
    assert spectra.laplace_fredholm(end, 2.9)
    assert not spectra.laplace_fredholm(end, 3.0)


@pytest.mark.parametrize("lam", [-1.0, -1e-9, 0.0, 0.5, 4.0])
def test_fredholm_dual_to_essential_spectrum(lam):
    end = spectra.cylinder()
    assert spectra.laplace_fredholm(end, lam) == (lam not in spectra.essential_spectrum_laplace(end))
    assert spectra.laplace_fredholm(end, -1.0)


def test_dirac_cases():
    non = spectra.essential_spectrum_dirac(spectra.cylinder(DIRAC, NONBOUNDING))
    assert non == SpectrumSet(((-INF, -0.5), (0.5, INF)))
    assert not non.contains(0.0)
    assert spectra.essential_spectrum_dirac(spectra.cylinder(DIRAC, BOUNDING)).is_real_line()
    corner = EndStructure(spectra.cylinder(DIRAC, NONBOUNDING).faces, has_zero_dim_face=True)
    assert spectra.essential_spectrum_dirac(corner).is_real_line()


def test_dirac_fredholm_invertible():
    end = spectra.cylinder(DIRAC, NONBOUNDING)
    assert spectra.dirac_fredholm_invertible(end, False) == spectra.DiracFredholm(True, True)
    assert spectra.dirac_fredholm_invertible(end, True) == spectra.DiracFredholm(True, False)
    bnd = spectra.cylinder(DIRAC, BOUNDING)
    assert spectra.dirac_fredholm_invertible(bnd, False) == spectra.DiracFredholm(False, False)


def test_kind_mismatch():
    with pytest.raises(spectra.SpectraError):
        spectra.essential_spectrum_laplace(spectra.cylinder(DIRAC))
    with pytest.raises(spectra.SpectraError):
        spectra.circle_dirac_data("periodic")
    with pytest.raises(spectra.SpectraError):
        CrossSectionData(LAPLACE, (-1.0,))
    with pytest.raises(spectra.SpectraError):
        EndStructure(())


def test_discretized_cylinder_bottom():
    ev = spectra.discretized_laplace_cylinder(64, 10.0, 256)
    assert abs(ev[0]) < 1e-10
    # the t-direction ladder (pi j / L)^2 sits below the first circle mode
    assert ev[1] == pytest.approx((math.pi / 10) ** 2, rel=1e-3)


def test_discretized_cylinder_fills_in():
    counts = [np.sum(spectra.discretized_laplace_cylinder(32, L, int(8 * L)) < 4.0) for L in (5, 10, 20)]
    assert counts[0] < counts[1] < counts[2]


def test_circle_dirac_discrete():
    half = spectra.discretized_dirac_circle(NONBOUNDING, 32)
    assert np.allclose(half, np.arange(-15.5, 16.0))
    whole = spectra.discretized_dirac_circle(BOUNDING, 32)
    assert np.sum(np.abs(whole) < 1e-10) == 2  # k = 0 and the zeroed Nyquist mode
    assert np.allclose(whole, -whole[::-1])
    data = spectra.dirac_data_from_discretization(BOUNDING, 32)
    assert spectra.essential_spectrum_dirac(EndStructure((Face(1, data),))).is_real_line()
    data = spectra.dirac_data_from_discretization(NONBOUNDING, 32)
    assert spectra.essential_spectrum_dirac(EndStructure((Face(1, data),))).intervals[1][0] == pytest.approx(0.5)


def test_dirac_cylinder_symmetry_and_gap():
    sp_ = spectra.discretized_dirac_cylinder(NONBOUNDING, 16, 4.0, 32)
    ev = sp_.eigenvalues
    assert np.allclose(ev, -ev[::-1], atol=1e-10)
    assert np.min(np.abs(ev)) > 0.5 - 1e-12


def test_square_law_small():
    for spin in (NONBOUNDING, BOUNDING):
        assert spectra.dirac_square_law_defect(spin, 16, 4.0, 16) < 1e-8


def test_size_cap():
    with pytest.raises(spectra.SizeCapError):
        spectra.discretized_laplace_cylinder(64, 10.0, 256, cap=1000)
    with pytest.raises(spectra.SizeCapError):
        spectra.discretized_dirac_cylinder(NONBOUNDING, 64, 40.0, cap=1000)
    with pytest.raises(spectra.SpectraError):
        spectra.circle_dirac_matrix(NONBOUNDING, 15)
