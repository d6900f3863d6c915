import math

import numpy as np
import pytest

from zerolab import geometry as G
from zerolab.errors import DomainError, ModelConstructionError, ZerolabError


def test_fs_base_density_value():
    m = G.fubini_study()
    assert np.isclose(G.base_density(m, 0.0), 1.0 / math.pi)
    assert np.isclose(G.base_density(m, 1.0), 1.0 / (4.0 * math.pi))


def test_fs_total_mass_is_one():
    from scipy.integrate import quad
    m = G.fubini_study()
    val, _ = quad(lambda r: 2 * math.pi * r
                  * float(np.real(G.base_density(m, complex(r, 0)))),
                  0.0, np.inf)
    assert np.isclose(val, 1.0, rtol=1e-9)


def test_curvature_equals_base_for_compatible_delta():
    m = G.poincare_weighted(0.07)
    z = np.array([0.0, 0.5, 1.0 + 2.0j, 5.0, 30.0j])
    assert np.allclose(G.curvature_density(m, z), G.base_density(m, z),
                       rtol=1e-13)


def test_curvature_differs_for_generic_delta():
    m = G.poincare_weighted(0.07, delta=0.6)
    z = np.array([0.5, 2.0])
    assert not np.allclose(G.curvature_density(m, z), G.base_density(m, z))


def test_curvature_scales_with_degree():
    m = G.poincare_weighted()
    z = np.array([0.3 + 0.4j])
    assert np.allclose(G.curvature_density(m, z, degree=7),
                       7 * G.curvature_density(m, z))


def test_weight_log_oracle():
    m = G.fubini_study()
    assert np.isclose(G.weight_log(m, 4, 1.0), -4 * math.log(2.0))
    h = G.hyperbolic_gamma2()
    assert np.isclose(G.weight_log(h, 3, 0.5 + 2.0j), 6 * math.log(2.0))


def test_weight_log_numerical_laplacian_matches_curvature():
    # curvature_density = laplacian(-weight_log)/(4 pi) per unit degree
    m = G.poincare_weighted(0.05)
    z0, h = 0.6 + 0.3j, 1e-4
    stencil = np.array([z0, z0 + h, z0 - h, z0 + 1j * h, z0 - 1j * h])
    w = G.weight_log(m, 1, stencil)
    lap = (w[1] + w[2] + w[3] + w[4] - 4 * w[0]) / h ** 2
    assert np.isclose(-lap / (4 * math.pi), G.curvature_density(m, z0),
                      rtol=1e-5)


def test_model_validation():
    with pytest.raises(ModelConstructionError):
        G.poincare_weighted(-0.1)
    with pytest.raises(ModelConstructionError):
        G.poincare_weighted(0.05, delta=-1.0)
    with pytest.raises(ModelConstructionError):
        G.poincare_weighted(0.05, offset=1.0)  # breaks -log||s0||^2 >= 2
    with pytest.raises(ModelConstructionError):
        G.hyperbolic_gamma2(-0.5)


def test_upper_half_plane_chart_guard():
    h = G.hyperbolic_gamma2()
    with pytest.raises(DomainError):
        G.base_density(h, np.array([0.5 - 1.0j]))


def test_region_membership():
    r = G.box(-1, 1, -2, 2)
    assert r.contains(0.5 + 1.0j)
    assert not r.contains(1.5)
    a = G.annulus(1.0 + 0j, 0.5, 2.0)
    assert a.contains(2.0)
    assert not a.contains(1.1)
    with pytest.raises(ZerolabError):
        G.box(1, -1, 0, 1)
    with pytest.raises(ZerolabError):
        G.box(0, 1, -1, 1, chart=G.UPPER_HALF_PLANE)


def test_predicted_mass_fs_disk():
    # FS mass of |z| <= r is r^2/(1+r^2)
    m = G.fubini_study()
    for r in (0.5, 1.0, 2.0):
        got = G.predicted_mass(m, G.disk(0j, r))
        assert np.isclose(got, r * r / (1 + r * r), rtol=1e-7)


def test_predicted_mass_hyperbolic_box():
    # integral of 1/(2 pi y^2) over [x0,x1]x[y0,y1]
    m = G.hyperbolic_gamma2()
    got = G.predicted_mass(m, G.box(-0.5, 0.5, 0.4, 1.5,
                                    chart=G.UPPER_HALF_PLANE))
    exact = (1 / 0.4 - 1 / 1.5) / (2 * math.pi)
    assert np.isclose(got, exact, rtol=1e-8)


def test_predicted_mass_empty_region():
    assert G.predicted_mass(G.fubini_study(), None) == 0.0


def test_testform_properties():
    phi = G.TestForm(center=1.0 + 0j, radius=0.5)
    assert phi(1.0 + 0j) == 1.0
    assert phi(2.0 + 0j) == 0.0
    assert phi.c2_norm >= 1.0
    assert np.allclose(phi.scaled(3.0)(np.array([1.0 + 0j])), 3.0)
    with pytest.raises(ModelConstructionError):
        G.TestForm(center=0j, radius=-1.0)
