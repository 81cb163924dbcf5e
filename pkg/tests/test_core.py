import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewlab.core import (
    CriticalBranchError,
    FiberPolynomial,
    Polynomial1D,
    SkewProduct,
    critical_locus,
    evaluate,
    iterate,
)
from skewlab.family import build_family

finite = st.floats(-2, 2, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def test_trailing_zeros_trimmed():
    poly = Polynomial1D((1, 2, 0, 0))
    assert poly.degree == 1
    assert Polynomial1D((0, 0)).is_zero()


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        Polynomial1D((1, float("nan")))


@given(st.lists(cplx, min_size=1, max_size=6), cplx)
def test_horner_matches_numpy(coeffs, x):
    poly = Polynomial1D(tuple(coeffs))
    ref = np.polyval(np.array(poly.coefficients)[::-1], x)
    assert abs(poly(x) - ref) <= 1e-12 * (1 + abs(ref))


def test_fiber_polynomial_needs_constant_top():
    with pytest.raises(ValueError):
        FiberPolynomial((Polynomial1D((0,)), Polynomial1D((0,)), Polynomial1D((0, 1))))


def test_degree_mismatch_rejected():
    p = Polynomial1D((0, 1, 1))
    q = FiberPolynomial((Polynomial1D((0,)), Polynomial1D((0,)), Polynomial1D((0,)), Polynomial1D((1,))))
    with pytest.raises(ValueError):
        SkewProduct(p, q)


@settings(max_examples=50, deadline=None)
@given(cplx, cplx)
def test_family_matches_formula(z, w):
    c = 3**0.5
    f = build_family(3, c)
    lam = f.p.coefficients[1]
    z1, w1 = f(z, w)
    assert abs(z1 - (lam * z + z**3)) < 1e-12
    assert abs(w1 - (w**3 / 3 - c * w**2 / 2 + z)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(cplx, cplx)
def test_partial_derivatives_by_differences(z, w):
    f = build_family(3, 3**0.5)
    h = 1e-6
    dw = (f.q(z, w + h) - f.q(z, w - h)) / (2 * h)
    dz = (f.q(z + h, w) - f.q(z - h, w)) / (2 * h)
    assert abs(f.q.dw(z, w) - dw) < 1e-6
    assert abs(f.q.dz(z, w) - dz) < 1e-6


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 3), st.floats(0, 6.283), st.floats(1.0001, 50), st.floats(0, 6.283))
def test_escape_radius_doubles(rz, az, scale, aw):
    f = build_family(3, 3**0.5)
    R = f.escape_radius()
    z = rz * np.exp(1j * az)
    w = R * scale * np.exp(1j * aw)
    assert abs(f.q(z, w)) >= 2 * abs(w)


def test_critical_locus_of_family():
    c = 3**0.5
    comps = critical_locus(build_family(3, c))
    fiber = sorted(x.locus.real for x in comps if x.kind == "fiber-critical")
    assert fiber[0] == 0.0
    assert abs(fiber[1] - c) < 1e-14
    base = [x for x in comps if x.kind == "base-critical"]
    assert len(base) == 2


def test_critical_locus_rejects_moving_critical_points():
    p = Polynomial1D((0, 0.5, 0, 1))
    q = FiberPolynomial((Polynomial1D((0,)), Polynomial1D((0, 1)), Polynomial1D((0,)), Polynomial1D((1,))))
    with pytest.raises(CriticalBranchError):
        critical_locus(SkewProduct(p, q))


def test_cocycle_is_product_of_derivatives():
    f = build_family(3, 3**0.5)
    rec = iterate(f, 0.01, -0.5, 6)
    prod = 1.0
    for (z, w) in rec.points[:-1]:
        prod *= f.q.dw(z, w)
    assert abs(rec.vertical_cocycle[-1] - prod) < 1e-12 * abs(prod)


def test_iterate_flags_escape():
    f = build_family(3, 3**0.5)
    rec = iterate(f, 0, 5.0, 50)
    assert rec.escaped and rec.escape_index is not None


def test_overflow_reported_as_escape():
    f = build_family(3, 3**0.5)
    *_, escaped = evaluate(f, 0, 1e200)
    assert escaped
