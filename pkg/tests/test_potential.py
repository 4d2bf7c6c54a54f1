import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chexpand.errors import CertificationError, DomainError
from chexpand.potential import DoubleWell, certify_growth, eval_w, geodesic_distance, well_inverse

unit = st.floats(0.0, 1.0, allow_nan=False)


class QuadraticWell(DoubleWell):
    """Quadratic wells declared with a subquadratic exponent."""

    def w(self, s):
        s = np.asarray(s, float)
        return (s - self.a) ** 2 * (s - self.b) ** 2

    def dw(self, s):
        s = np.asarray(s, float)
        return 2 * (s - self.a) * (s - self.b) * (2 * s - self.a - self.b)

    def d2w(self, s):
        s = np.asarray(s, float)
        return 2 * ((s - self.a) ** 2 + 4 * (s - self.a) * (s - self.b) + (s - self.b) ** 2)


def test_rejects_bad_parameters():
    for kwargs in ({"a": 1.0, "b": 0.0}, {"q": 1.0}, {"q": 0.0}, {"scale": 0.0}):
        with pytest.raises(ValueError):
            DoubleWell(**kwargs)


def test_wells_are_zeros(well):
    assert eval_w(well, 0.0) == 0.0 and eval_w(well, 1.0) == 0.0
    assert np.all(eval_w(well, np.linspace(0.01, 0.99, 50)) > 0)


def test_derivatives_match_finite_differences(well):
    s = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    assert np.allclose(well.dw(s), (well.w(s + h) - well.w(s - h)) / (2 * h), atol=1e-8)
    assert np.allclose(well.d2w(s), (well.dw(s + h) - well.dw(s - h)) / (2 * h), atol=1e-6)
    xa = s - well.a
    assert np.allclose(well.dw_offsets(xa, 1 - xa), well.dw(s), rtol=1e-14)
    assert np.allclose(well.d2w_offsets(xa, 1 - xa), well.d2w(s), rtol=1e-12)


def test_derivative_is_hoelder_at_the_wells(well):
    # |W'(s)| <= C dist^q with a bounded ratio as dist -> 0
    d = np.geomspace(1e-12, 1e-4, 30)
    ratio = np.abs(well.dw_offsets(d, 1 - d)) / d ** well.q
    assert np.ptp(ratio) / ratio.max() < 0.02


def test_transition_cost_matches_beta_oracle(well, oracle):
    assert math.isclose(well.c_w, oracle["geodesic_distance_a_b"], rel_tol=1e-13)


def test_distance_outside_interval_raises(well):
    with pytest.raises(DomainError):
        geodesic_distance(well, -0.1, 0.5)
    with pytest.raises(DomainError):
        geodesic_distance(well, 0.5, float("nan"))


@settings(max_examples=60, deadline=None)
@given(unit, unit, unit)
def test_distance_is_additive_on_ordered_triples(x, y, z):
    well = DoubleWell()
    r, s, t = sorted((x, y, z))
    lhs = geodesic_distance(well, r, t)
    assert abs(lhs - geodesic_distance(well, r, s) - geodesic_distance(well, s, t)) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(unit, unit)
def test_distance_is_symmetric_and_nonnegative(r, s):
    well = DoubleWell()
    d = geodesic_distance(well, r, s)
    assert d >= 0 and d == pytest.approx(geodesic_distance(well, s, r), abs=1e-15)
    assert abs(float(well.dist_to_b(r)) - float(well.dist_to_b(s))) == pytest.approx(d, abs=1e-12)


def test_near_well_distance_scaling(well):
    x = np.geomspace(1e-9, 1e-5, 12)
    d = np.array([geodesic_distance(well, 1 - xi, 1.0) for xi in x])
    slope = np.polyfit(np.log(x), np.log(d), 1)[0]
    assert slope == pytest.approx((3 + well.q) / 2, rel=1e-3)


def test_growth_certificate_bounds_hold(well):
    cert = certify_growth(well)
    assert 0 < cert.sigma < 1 and cert.delta > 0 and cert.rho > 0
    dist = np.geomspace(1e-6 * cert.delta, cert.delta, 200)
    w = well.w_offsets(1 - dist, dist)
    e = 1 + well.q
    assert np.all(cert.sigma * dist ** e <= w) and np.all(w <= dist ** e / cert.sigma)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0))
def test_well_inverse_round_trip(frac):
    well = DoubleWell()
    cert = certify_growth(well)
    t = frac * cert.rho
    s = well_inverse(well, t, cert)
    assert 1 - cert.delta <= s <= 1
    # s is exact to an ulp, so W(s) is exact to |W'(s)| ulp
    x_est = 1.1 * t ** (1 / (1 + well.q))
    slack = abs(float(well.dw_offsets(1 - x_est, x_est))) * 4e-16 + 1e-10 * t
    assert abs(float(well.w(s)) - t) <= slack


def test_well_inverse_rejects_out_of_range(well):
    cert = certify_growth(well)
    with pytest.raises(DomainError):
        well_inverse(well, 2 * cert.rho, cert)


def test_quadratic_wells_fail_certification():
    with pytest.raises(CertificationError):
        certify_growth(QuadraticWell())


def test_certificate_serializes(well):
    assert set(certify_growth(well).as_dict()) == {"sigma", "delta", "rho"}
