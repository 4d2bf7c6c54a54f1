import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chexpand.errors import ConfigurationError, GeometryError
from chexpand.geometry2d import (TWO_PI, BoundaryCurve, BoundaryDatum, Circle, ComponentDatum, Domain,
                                 FourierStar, TubeChart, check_admissibility, curvature,
                                 datum_convergence, slice_weight)

STAR = FourierStar(1.0, (0.1, 0.0, 0.05), (0.0, 0.08))
THETA = np.linspace(0.0, TWO_PI, 37)[:-1]


def fd_curvature(curve, theta, h=1e-5):
    # kappa = -(dN/ds) . T for the inward normal N
    dn = (curve.normal(theta + h) - curve.normal(theta - h)) / (2 * h * curve.speed(theta))
    return -np.sum(dn * curve.tangent(theta), axis=0)


def test_circle_curvatures():
    assert np.allclose(curvature(Circle(1.0), THETA), 1.0)
    assert np.allclose(curvature(Circle(2.5), THETA), 0.4)


def test_hole_has_negative_curvature():
    inner = Domain.annulus(0.5, 1.5).components[1]
    assert np.allclose(curvature(inner, THETA), -2.0)
    assert np.allclose(fd_curvature(inner, THETA), -2.0, atol=1e-8)


def test_star_curvature_against_normal_differences():
    assert np.allclose(curvature(STAR, THETA), fd_curvature(STAR, THETA), atol=1e-7)


def test_curves_are_closed_and_lengths_integrate():
    for curve in (Circle(1.3), Circle(0.5, clockwise=True), STAR):
        assert np.allclose(curve.position(0.0), curve.position(TWO_PI), atol=1e-12)
    assert Circle(1.3).length() == pytest.approx(TWO_PI * 1.3, abs=1e-10)
    theta, cum = Circle(2.0).arclength_table(64)
    assert cum[-1] == pytest.approx(4 * math.pi, abs=1e-10)


def test_degenerate_parametrization_raises():
    class Pinched(BoundaryCurve):
        def position(self, th):
            return np.array([np.cos(th) ** 3, np.sin(th) ** 3])

        def d1(self, th):
            return np.array([-3 * np.cos(th) ** 2 * np.sin(th), 3 * np.sin(th) ** 2 * np.cos(th)])

        def d2(self, th):
            return np.zeros((2,) + np.shape(th))

    with pytest.raises(GeometryError):
        curvature(Pinched(), np.array([0.0, 0.3]))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, TWO_PI, exclude_max=True), st.floats(0.0, 1.0))
def test_tube_inversion_recovers_coordinates(theta, frac):
    chart = TubeChart(STAR, Domain.star(1.0, (0.1, 0.0, 0.05), (0.0, 0.08)).tube_width())
    t = frac * chart.delta
    th, tt = chart.invert(chart.phi(theta, t))
    assert abs(math.remainder(th - theta, TWO_PI)) < 1e-9 and abs(tt - t) < 1e-9


def test_tube_jacobian_by_finite_differences():
    chart = TubeChart(STAR, 0.2)
    h = 1e-6
    for theta in THETA[::5]:
        for t in (0.0, 0.05, 0.15):
            d_th = (chart.phi(theta + h, t) - chart.phi(theta - h, t)) / (2 * h)
            d_t = (chart.phi(theta, t + h) - chart.phi(theta, t - h)) / (2 * h)
            det = abs(d_th[0] * d_t[1] - d_th[1] * d_t[0]) / STAR.speed(theta)
            assert det == pytest.approx(float(chart.jacobian(theta, t)), abs=1e-8)
        slope = (chart.jacobian(theta, h) - chart.jacobian(theta, 0.0)) / h
        assert float(slope + curvature(STAR, theta)) == pytest.approx(0.0, abs=1e-9)


def test_slice_weights():
    chart = TubeChart(Circle(1.0), 0.25)
    w = slice_weight(chart, 0.3, 0.1)
    assert w.omega0 == pytest.approx(0.9) and w.slope0 == pytest.approx(-1.0)
    inner = TubeChart(Domain.annulus(0.5, 1.5).components[1], 0.125)
    w = slice_weight(inner, 1.0, 0.125)
    # radial Jacobian (r0 + t) / r0 with r0 = 1/2
    assert w.slope0 == pytest.approx(2.0) and float(w(0.1)) == pytest.approx(1.2)
    with pytest.raises(ConfigurationError):
        slice_weight(chart, 0.0, 0.5)


def test_tube_width_default_and_focal_points():
    assert Domain.annulus(0.5, 1.5).tube_width() == pytest.approx(0.125)
    with pytest.raises(GeometryError):
        TubeChart(Circle(1.0), 1.0)


def test_admissibility_examples(well):
    disk = Domain.disk()
    ok = check_admissibility(disk, BoundaryDatum((ComponentDatum.constant(1.0),)), 64, well)
    assert ok.passed
    ann = Domain.annulus(0.5, 1.5)
    datum = BoundaryDatum((ComponentDatum.constant(1.0), ComponentDatum.constant(0.0)), kappa0=-1.0)
    assert check_admissibility(ann, datum, 128, well).passed
    arc = BoundaryDatum((ComponentDatum.arc(0.0, 1.0, 1.0, 2.0),))
    bad = check_admissibility(disk, arc, 128, well)
    assert not bad.passed and bad.arcs[0][0] == "boundary"
    lo, hi = bad.arcs[0][1:]
    assert 1.0 <= lo and hi <= 2.0 and "boundary" in bad.summary()
    with pytest.raises(ConfigurationError):
        check_admissibility(disk, arc, 16, well)


def test_datum_hypotheses_along_sweep(well):
    disk = Domain.disk()
    smooth = BoundaryDatum((ComponentDatum.fourier(0.6, (0.1,)),))
    conv = datum_convergence(disk, smooth, well, [0.04, 0.01])
    assert conv["fidelity"] == [0.0, 0.0]
    assert conv["tangential"][1] < conv["tangential"][0]
    blurred = BoundaryDatum((ComponentDatum.fourier(0.6, (0.1,)),), mollify_width=lambda e: 0.5)
    conv = datum_convergence(disk, blurred, well, [0.04, 0.01])
    # a fixed mollification width violates d_W(g_eps, g) / eps -> 0
    assert conv["fidelity"][1] > conv["fidelity"][0] > 0
