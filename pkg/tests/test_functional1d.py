import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import beta

from chexpand.errors import UsageError
from chexpand.functional1d import (EL_TOL, delta_pointwise, el_residual, energy_g0, energy_g1_sharp,
                                   energy_g2, minimize, nodal_derivative, rescaled_view,
                                   theta_constant, transition_time)
from chexpand.setup1d import BoundaryData1D, Grid, Weight


@pytest.fixture(scope="module")
def solved(well):
    weight = Weight.affine(0.5, 0.3)
    data = BoundaryData1D(0.2, 1.0, 0.2)
    return weight, data, minimize(well, weight, data, Grid.for_eps(0.01, 0.5))


def test_constant_b_has_zero_energy(well):
    weight = Weight.affine(0.5, 0.3)
    v = np.ones(101)
    assert energy_g0(well, weight, v, 0.01) == 0.0
    assert energy_g2(well, weight, v, 0.01, 1.0) == 0.0


def test_energy_of_linear_field(well):
    # v(t) = t on [0, 1]: int W = B(5/2, 5/2) and the gradient part is eps^2
    v = np.linspace(0.0, 1.0, 201)
    got = energy_g0(well, Weight.constant(1.0), v, 0.01)
    assert got == pytest.approx(beta(2.5, 2.5) + 0.01 ** 2, rel=1e-4)


def test_shape_mismatch_is_usage_error(well):
    with pytest.raises(UsageError):
        energy_g0(well, Weight.constant(0.5), np.ones(11), 0.01, Grid.for_eps(0.01, 0.5))
    with pytest.raises(UsageError):
        energy_g0(well, Weight.constant(0.5), np.ones(2), 0.01)


def test_minimizer_satisfies_discrete_equation(well, solved):
    weight, data, res = solved
    assert res.el_residual <= EL_TOL
    assert np.max(np.abs(el_residual(well, weight, res.v, 0.01))) <= 1e-6
    assert res.v[0] == 0.2 and res.v[-1] == 1.0
    assert res.energy_g0_raw <= res.recovery_energy_g0


def test_minimizer_beats_perturbations(well, solved, rng):
    weight, data, res = solved
    base = energy_g0(well, weight, res.v, 0.01)
    for _ in range(5):
        bump = np.zeros_like(res.v)
        bump[1:-1] = 1e-4 * rng.standard_normal(res.v.size - 2)
        assert energy_g0(well, weight, np.clip(res.v + bump, 0, 1), 0.01) >= base


def test_delta_closed_form_matches_pointwise(well, solved):
    weight, _, res = solved
    assert np.max(np.abs(res.delta_profile - delta_pointwise(res, well, 0.01))) <= 1e-7


def test_transition_time_and_rescaled_view(well, solved):
    _, data, res = solved
    c, theta = theta_constant(well, 0.01, 1.0)
    assert float(well.w(theta)) >= 2 * 0.01 and c >= 1
    th, s = transition_time(res, well, 0.01, 1.0)
    assert th == theta and 0 < s < 0.5
    view = rescaled_view(res, 0.01, well, windows=(1.0, 2.0))
    assert view.sup_distance[1.0] <= view.sup_distance[2.0] < 0.05


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=7, max_size=7))
def test_nodal_derivative_is_exact_for_sextics(coeffs):
    p = np.polynomial.Polynomial(coeffs)
    t = np.linspace(0.0, 1.0, 41)
    got = nodal_derivative(p(t), t[1] - t[0])
    assert np.allclose(got, p.deriv()(t), atol=1e-7)


def test_sharp_energy_counts_jumps_and_boundary(well):
    weight = Weight.affine(0.5, 0.5)
    c = well.c_w
    assert energy_g1_sharp(well, weight, [], 1.0, (1.0, 1.0)) == 0.0
    assert energy_g1_sharp(well, weight, [0.2], 0.0, (0.0, 1.0)) == pytest.approx(c * 1.1)
    assert energy_g1_sharp(well, weight, [], 0.0, (0.0, 1.0)) == pytest.approx(c * 1.25)
    with pytest.raises(UsageError):
        energy_g1_sharp(well, weight, [0.6], 0.0, (0.0, 1.0))
