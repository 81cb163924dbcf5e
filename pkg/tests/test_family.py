import math

import numpy as np
import pytest

from skewlab.family import (
    REFUTED,
    VERIFIED,
    basin_boundary,
    build_family,
    central_polynomial,
    check_a2,
    find_misiurewicz_parameter,
    nontrivial_fixed_point,
    base_polynomial,
    verify_assumptions,
)


@pytest.fixture(scope="module")
def params():
    return find_misiurewicz_parameter(3)


def test_degree_two_rejected():
    with pytest.raises(ValueError, match="d >= 3"):
        build_family(2, 1.0)
    with pytest.raises(ValueError, match="d >= 3"):
        find_misiurewicz_parameter(2)


def test_cubic_parameter_matches_closed_form(params):
    # q0(c) = -c^3/6 = m and m^2/3 - c m/2 = 1 give u^3 + 9u^2 - 108 = 0 for u = c^2
    roots = np.roots([1, 9, 0, -108])
    u = max(r.real for r in roots if abs(r.imag) < 1e-12)
    assert abs(params.c - math.sqrt(u)) < 1e-10
    assert abs(params.m - (-params.c**3 / 6)) < 1e-10
    assert abs(params.m + math.sqrt(3) / 2) < 1e-10
    assert abs(params.multiplier - 2.25) < 1e-10


def test_misiurewicz_relations_hold(params):
    q0 = params.q0()
    assert abs(q0(params.c) - params.m) < 1e-14
    assert abs(q0(params.m) - params.m) < 1e-14
    assert abs(q0.derivative()(params.m)) > 1


def test_quartic_parameter_is_certified():
    p4 = find_misiurewicz_parameter(4)
    q0 = p4.q0()
    assert abs(q0(p4.c) - p4.m) < 1e-12
    assert abs(q0.derivative()(p4.m)) > 1
    report = verify_assumptions(p4)
    assert report.verdicts["A2"] == VERIFIED


def test_assumptions_verified(params):
    report = verify_assumptions(params)
    assert report.verdicts == {"A1": VERIFIED, "A2": VERIFIED, "A3": VERIFIED}
    assert report.A1["min_multiplier_modulus"] > 1
    assert report.A3["escape_inequality"]


def test_a2_refutes_wrong_landing(params):
    q0 = params.q0()
    bb = basin_boundary(q0)
    res = check_a2(q0, params.c, params.m + 0.01, 1, 1, bb)
    assert res["verdict"] == REFUTED


def test_basin_membership_levels(params):
    bb = basin_boundary(params.q0())
    assert bb.membership(params.m) == "member"
    assert bb.membership(0j) == "outside"
    assert bb.membership(3.0) == "outside"
    assert bb.contains(np.array([0j]))[0]


def test_central_polynomial_has_critical_points_zero_and_c():
    c = 1.3 + 0.2j
    dq = central_polynomial(3, c).derivative()
    assert abs(dq(0)) == 0 and abs(dq(c)) < 1e-14


def test_nontrivial_fixed_point_is_fixed():
    p = base_polynomial(3, (math.sqrt(5) - 1) / 2)
    z1 = nontrivial_fixed_point(p)
    assert abs(p(z1) - z1) < 1e-13 and abs(z1) > 0.1
