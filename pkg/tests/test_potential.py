import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewlab.family import build_family
from skewlab.potential import (
    BAND,
    GridSpec,
    fiber_greens,
    green_value,
    green_values,
    hull_diameter,
    julia_slice,
    param_green,
    polynomial_green,
    critical_polynomial,
)

CANON = build_family(3, 3**0.5)


def test_cube_map_green_is_log_modulus(cube_map):
    for w in (1.5, 3 + 4j, 1e3):
        est = green_value(cube_map, 0, w)
        assert est.escaped
        assert abs(est.value - math.log(abs(w))) <= est.error_bound + 1e-15


def test_cube_map_bounded_orbit_has_zero_potential(cube_map):
    est = green_value(cube_map, 0, 0.5)
    assert est.value == 0.0 and not est.escaped


def test_cube_map_depth_five_preimages(cube_map):
    # preimages of 2 at depth 5 carry potential log 2 / 3^5 exactly
    w = 2 ** (1 / 243) * np.exp(2j * np.pi * np.arange(243) / 243)
    v, _, e, _ = fiber_greens(cube_map, 0, w)
    assert np.all(np.abs(v - math.log(2) / 3**5) <= e + 1e-15)


def test_bottcher_asymptotic_at_large_w():
    est = green_value(CANON, 0, 1e6)
    assert abs(est.value - (math.log(1e6) - math.log(3) / 2)) < 1e-6


def test_bottcher_against_direct_iteration():
    # forty direct steps in extended precision
    import mpmath

    mpmath.mp.dps = 50
    w = mpmath.mpc(50)
    for _ in range(40):
        w = w**3 / 3 - mpmath.sqrt(3) * w**2 / 2
    oracle = float((mpmath.log(abs(w)) - mpmath.log(3) / 2) / mpmath.mpf(3) ** 40)
    est = green_value(CANON, 0, 50)
    assert abs(est.value - oracle) <= est.error_bound + 1e-14


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 10), st.floats(0, 6.283))
def test_functional_equation(x, y, r, a):
    z, w = complex(x, y), r * np.exp(1j * a)
    g0 = green_value(CANON, z, w)
    z1, w1 = CANON(z, w)
    g1 = green_value(CANON, z1, w1)
    assert abs(g1.value - 3 * g0.value) <= g1.error_bound + 3 * g0.error_bound


def test_error_bound_respects_tolerance():
    v, _, e, esc = green_values(CANON, np.array([0.3, 1.5]), np.array([4.0, 2.0]), tol=1e-10)
    assert esc.all() and np.all(e < 2e-10)


def test_polynomial_green_matches_two_variable_on_central_fiber():
    q0 = critical_polynomial(3**0.5, 0, 3)
    a = polynomial_green(q0, 5.0)
    b = green_value(CANON, 0, 5.0)
    assert abs(a.value - b.value) <= a.error_bound + b.error_bound


def test_param_green_vanishes_for_bounded_critical_orbits():
    pg = param_green(3**0.5, 0, 3)
    assert pg.value == 0.0


@given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99))
def test_grid_index_round_trip(u, v):
    g = GridSpec(0.5 - 0.2j, 1.5, 64, 48)
    pts = g.points()
    i, j = g.index(pts)
    assert np.array_equal(i, np.repeat(np.arange(48)[:, None], 64, axis=1))
    assert np.array_equal(j, np.repeat(np.arange(64)[None, :], 48, axis=0))
    w = complex(0.5 + u * g.half_width, -0.2 + v * g.half_height)
    ii, jj = g.index(np.array([w]))
    assert abs(pts[ii[0], jj[0]] - w) <= g.pixel_diagonal / 2 + 1e-12


@settings(max_examples=30)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=40))
def test_hull_diameter_matches_brute_force(pts):
    w = np.array([complex(a, b) for a, b in pts])
    brute = np.abs(w[:, None] - w[None, :]).max()
    assert abs(hull_diameter(w) - brute) < 1e-9


def test_cube_map_slice_is_unit_circle(cube_map):
    js = julia_slice(cube_map, 0, GridSpec(0j, 1.2, 200, 200), 256)
    band = js.band_points()
    assert np.all(np.abs(np.abs(band) - 1) <= 2 * js.grid.pixel_diagonal)
    assert abs(js.diameter_estimate - 2) < 2 * js.grid.pixel_diagonal


def test_canonical_slice_contains_m_in_band():
    js = julia_slice(CANON, 0, GridSpec(0j, 1.0, 400, 400), 2048)
    m = -(3**0.5) / 2
    assert js.distance_to_band(np.array([m]))[0] <= js.grid.pixel_diagonal
    assert js.unresolved_fraction <= 0.01
    assert set(np.unique(js.membership)) <= {0, 1, 2}
    assert (js.membership == BAND).sum() > 0


def test_slice_is_thread_independent(cube_map):
    from skewlab import kernels

    old = kernels.set_threads(None)
    try:
        kernels.set_threads(1)
        a = julia_slice(CANON, 0.01, GridSpec(0j, 1.0, 96, 96), 256)
        kernels.set_threads(min(8, kernels.numba.config.NUMBA_NUM_THREADS))
        b = julia_slice(CANON, 0.01, GridSpec(0j, 1.0, 96, 96), 256)
    finally:
        kernels.set_threads(old)
    assert np.array_equal(a.membership, b.membership)
    assert a.potential.tobytes() == b.potential.tobytes()


def test_green_rejects_bad_depth():
    with pytest.raises(ValueError):
        green_values(CANON, 0, 1, n_max=0)
