import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewlab.core import Polynomial1D
from skewlab.family import GOLDEN, base_polynomial
from skewlab.siegel import (
    continued_fraction,
    invariant_circle,
    is_noble,
    linearize,
    polar_mesh,
    rotation_number,
)


@pytest.fixture(scope="module")
def sd():
    return linearize(base_polynomial(3, GOLDEN), 200)


def test_low_order_coefficients(sd):
    lam = sd.lam
    assert abs(sd.phi_coeffs[1] - 1) == 0
    assert abs(sd.phi_coeffs[2]) == 0
    # order 3 of p(phi(zeta)) = phi(lambda zeta): lambda b3 + 1 = lambda^3 b3
    assert abs(sd.phi_coeffs[3] - 1 / (lam**3 - lam)) < 1e-14


def test_conjugacy_residual(sd):
    assert sd.conjugacy_residual(0.5 * sd.radius_estimate) < 1e-8


def test_radius_estimate_range(sd):
    assert 0.3 < sd.radius_estimate < 0.6
    assert sd.radius_estimate <= sd.root_test_radius


def test_rotation_number_recovered(sd):
    circle = invariant_circle(sd, 0.5 * sd.radius_estimate)
    assert abs(rotation_number(sd, circle, 2000) - GOLDEN) < 1e-6


def test_circle_radius_checked(sd):
    with pytest.raises(ValueError):
        invariant_circle(sd, 0.9 * sd.radius_estimate)


def test_perturbation_shrinks_radius(sd):
    lam = sd.lam
    bigger = linearize(Polynomial1D((0, lam, 0.5, 1)), 200)
    assert bigger.radius_estimate < sd.radius_estimate


def test_rational_rotation_rejected():
    with pytest.raises(ValueError):
        linearize(Polynomial1D((0, -1, 0, 1)), 50)


def test_non_unit_multiplier_rejected():
    with pytest.raises(ValueError):
        linearize(Polynomial1D((0, 0.5, 0, 1)), 50)


def test_golden_mean_is_noble():
    assert continued_fraction(GOLDEN, 10) == [0] + [1] * 9
    assert is_noble(GOLDEN)
    assert not is_noble(math.sqrt(2) - 1)
    assert not is_noble(0.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 0.5), st.floats(0, 2 * math.pi))
def test_phi_inverse_round_trip(sd_rel, angle):
    sd = linearize(base_polynomial(3, GOLDEN), 120)
    zeta = sd_rel * sd.radius_estimate * np.exp(1j * angle)
    back = sd.phi_inverse(sd.phi(zeta))
    assert abs(back - zeta) < 1e-12


def test_polar_mesh_layout(sd):
    mesh = polar_mesh(sd, 0.05, 4, 16)
    assert mesh.zeta.size == 65 and mesh.zeta[0] == 0
    assert np.allclose(np.abs(mesh.zeta[1:17]), 0.0125)
    with pytest.raises(ValueError):
        polar_mesh(sd, sd.radius_estimate)
