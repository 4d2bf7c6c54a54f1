import csv
import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from chexpand.errors import ConfigurationError, DomainError
from chexpand.potential import DoubleWell
from chexpand.profile import build_profile, hitting_time, psi, tail_integral, tail_integral_time


@pytest.mark.parametrize("alpha", ["0.0", "0.2", "0.5"])
def test_hitting_time_matches_beta_oracle(well, oracle, alpha):
    assert math.isclose(hitting_time(well, float(alpha)), oracle["hitting_time"][alpha], rel_tol=1e-12)


@pytest.mark.parametrize("alpha", ["0.0", "0.2", "0.5"])
def test_tail_integral_matches_oracle(well, oracle, alpha):
    assert math.isclose(tail_integral(well, float(alpha)), oracle["tail_integral"][alpha], rel_tol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.2, 0.5, 0.9])
def test_tail_integral_two_routes_agree(well, alpha):
    # distance form against the time form driven by the inverted profile
    prof = build_profile(well, alpha)
    assert tail_integral_time(prof) == pytest.approx(tail_integral(well, alpha), rel=1e-10)


def test_profile_solves_the_ode(well):
    prof = build_profile(well, 0.2)
    t = np.linspace(0.1, prof.hitting_time - 0.1, 40)
    h = 1e-5
    fd = (prof.z(t + h) - prof.z(t - h)) / (2 * h)
    assert np.max(np.abs(fd - np.sqrt(well.w(prof.z(t))))) < 1e-8


def test_profile_inverts_travel_time(well):
    prof = build_profile(well, 0.0)
    t = np.linspace(0.0, prof.hitting_time, 57)[1:-1]
    assert np.allclose(psi(well, 0.0, prof.z(t)), t, rtol=0, atol=1e-11)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
@example(0.0, 1e-10, 0.5)  # start deep inside the slow escape from a
def test_semigroup_property(alpha, fs, ft):
    well = DoubleWell()
    prof = build_profile(well, alpha)
    s = fs * prof.hitting_time
    mid = prof.z(s)
    if mid >= well.b:
        return
    later = build_profile(well, float(mid))
    t = ft * later.hitting_time
    assert prof.z(s + t) == pytest.approx(later.z(t), abs=1e-11)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.99))
def test_profile_is_monotone_and_arrives(alpha):
    well = DoubleWell()
    prof = build_profile(well, alpha)
    t = np.linspace(0.0, 1.2 * prof.hitting_time, 300)
    z = prof.z(t)
    assert np.all(np.diff(z) >= 0) and z[0] == alpha and z[-1] == well.b


def test_start_at_b_is_constant(well):
    prof = build_profile(well, 1.0)
    assert prof.hitting_time == 0.0 and prof.z(3.0) == 1.0
    assert tail_integral(well, 1.0) == 0.0 and tail_integral_time(prof) == 0.0


def test_invalid_inputs(well):
    with pytest.raises(ConfigurationError):
        build_profile(well, 0.2, resolution=4)
    with pytest.raises(DomainError):
        build_profile(well, 1.5)


def test_csv_export(well, tmp_path):
    path = build_profile(well, 0.2).to_csv(tmp_path / "p.csv", n=11)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "z", "dz", "dist_to_b"] and len(rows) == 12
    assert float(rows[-1][1]) == 1.0 and float(rows[-1][3]) == 0.0
    empty = build_profile(well, 1.0).to_csv(tmp_path / "e.csv")
    assert len(list(csv.reader(empty.open()))) == 1
