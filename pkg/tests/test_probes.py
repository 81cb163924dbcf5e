import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from skewlab import probes as P
from skewlab.potential import GridSpec, fiber_greens, julia_slice
from skewlab.motion import graph_transform


# ---------------------------------------------------------------- slice measure


def test_cube_map_preimages_on_unit_circle(cube_map):
    s = P.sample_slice_measure(cube_map, 0.0, 5, 2.0)
    assert s.total == 243 and len(s.points) == 243
    assert np.allclose(np.abs(s.points), 2 ** (1 / 243), atol=1e-12)
    v, _, _, _ = fiber_greens(cube_map, 0.0, s.points)
    assert np.allclose(v, math.log(2) / 243, atol=1e-12)
    assert abs(s.weights.sum() - 1) < 1e-12


def test_exceptional_seed_rejected(cube_map):
    with pytest.raises(ValueError, match="exceptional"):
        P.sample_slice_measure(cube_map, 0.0, 4, 0.0)


def test_subsample_is_seeded(ws):
    a = P.sample_slice_measure(ws.f, 0.01, 8, 2.0, cap=100, seed=3)
    b = P.sample_slice_measure(ws.f, 0.01, 8, 2.0, cap=100, seed=3)
    c = P.sample_slice_measure(ws.f, 0.01, 8, 2.0, cap=100, seed=4)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.points.tobytes() != c.points.tobytes()
    assert a.total == 3**8


def test_sample_potential_small(ws):
    s = P.sample_slice_measure(ws.f, 0.01 + 0.01j, 8, 2.0)
    v, _, _, _ = fiber_greens(ws.f, s.z, s.points)
    assert v.max() < 1e-3


def test_two_seed_equidistribution(ws):
    z = 0.02 - 0.01j
    a = P.sample_slice_measure(ws.f, z, 10, 2.0)
    b = P.sample_slice_measure(ws.f, z, 10, 3.0)
    test_fn = lambda w: np.abs(w) ** 2
    assert abs(np.mean(test_fn(a.points)) - np.mean(test_fn(b.points))) < 1e-2


def test_preimages_solve_the_fiber_equation(ws):
    targets = np.array([0.3, -1 + 0.5j])
    pre = P.fiber_preimages(ws.f, 0.02, targets)
    assert np.allclose(ws.f.q(0.02, pre), np.repeat(targets, 3), atol=1e-12)


# ---------------------------------------------------------------- expansivity


@pytest.fixture(scope="module")
def slice0(ws):
    return julia_slice(ws.f, 0.0, GridSpec(0j, 1.0, 256, 256), 1024)


def test_expansivity_trivial_when_already_separated(ws, slice0):
    band = slice0.band_points()
    A = np.array([band[np.argmin(band.real)], band[np.argmax(band.real)]])
    cert = P.expansivity_probe(ws.f, 0.0, A, 10, ws.delta.value, slice0)
    assert cert.verdict == "pass" and cert.measured["first_n"] == 0


def test_expansivity_near_m(ws, slice0):
    m = ws.params.m
    dh = ws.delta.value
    # one point on each side of J_0 along the real axis: the outer one escapes
    cert = P.expansivity_probe(ws.f, 0.0, np.array([m - 5e-7, m + 5e-7]), 200, dh, slice0)
    bound = math.ceil(math.log(0.75 * dh / 1e-6) / math.log(2.25)) + 5
    assert cert.verdict == "pass" and cert.measured["first_n"] <= bound


def test_expansivity_rejects_interior_points(ws, slice0):
    with pytest.raises(ValueError, match="band"):
        P.expansivity_probe(ws.f, 0.0, np.array([0.01, 0.02]), 10, ws.delta.value, slice0)


def test_expansivity_certificate_reproducible(ws, slice0):
    s = ws.slice_sample(0.0, 8)
    A = P.localized_cluster(s, 20, 5)
    a = P.expansivity_probe(ws.f, 0.0, A, 200, ws.delta.value, slice0)
    b = P.expansivity_probe(ws.f, 0.0, A, 200, ws.delta.value, slice0)
    assert a.dumps() == b.dumps()


# ---------------------------------------------------------------- intersections


def test_intersection_on_invariant_circle(ws):
    cert = P.postcritical_intersection(ws.f, ws.siegel, ws.motion, 0.02, ws.params.c, ws.boundary)
    assert cert.verdict == "pass" and cert.measured["confirmed"] >= 1


def test_decoupled_intersection_everywhere(ws):
    f0 = ws.params.family(beta=0.0)
    mo = graph_transform(f0, ws.skeleton, ws.mesh, depth=30, points=ws.skeleton.periodic_points)
    cert = P.postcritical_intersection(f0, ws.siegel, mo, 0.02, ws.params.c, ws.boundary, n_samples=32)
    assert cert.verdict == "pass" and cert.measured["everywhere"]


def test_intersection_outside_neighborhood_rejected(ws):
    with pytest.raises(ValueError):
        P.postcritical_intersection(ws.f, ws.siegel, ws.motion, 2 * ws.config.nradius, ws.params.c, ws.boundary)


# ---------------------------------------------------------------- Fatou graphs


def test_horizontal_graph_near_attracting_section_is_fatou_like(ws):
    g = P.constant_candidate(0j, 0j, ws.radii["r"])
    assert P.fatou_graph_test(ws.f, g, 200, ws.delta.value).verdict == "pass"


def test_leaf_graph_is_fatou_like(ws):
    g = P.leaf_candidate(ws.f, ws.m_point, 0j, ws.radii["r"])
    assert P.classify_graph(ws.f, g, 200, ws.delta.value)["classification"] == "fatou-like"


def test_transverse_seed_is_non_normal(ws):
    z = 0j
    w = ws.params.m
    slope = P.leaf_slope(ws.f, ws.m_point, z)
    g = P.tangent_candidate(z, w, P.rotated_slope(slope, math.pi / 4, 0.0), ws.radii["r"])
    cert = P.fatou_graph_test(ws.f, g, 200, ws.delta.value)
    assert cert.verdict == "fail" and cert.measured["classification"] == "non-normal"


def test_rotated_slope_zero_angle_is_identity():
    assert abs(P.rotated_slope(0.3 - 0.2j, 0.0, 1.0) - (0.3 - 0.2j)) < 1e-14


def test_radii_satisfy_cauchy_constraint(ws):
    rad = ws.radii
    M, dh, r, r0 = rad["working_bound"], ws.delta.value, rad["r"], rad["r0"]
    assert 0 < r <= r0
    assert 4 * M * r / (2 * r0 - r) <= dh / 4 + 1e-12


def test_disjointness_identical_graphs_trivial(ws):
    g = P.leaf_candidate(ws.f, ws.m_point, 0j, ws.radii["r"])
    cert = P.fatou_disjointness_check(ws.f, g, g, 50, ws.delta.value, labels=("fatou-like", "fatou-like"))
    assert cert.verdict == "pass" and cert.measured["outcome"] == "trivial"


def test_disjointness_distinct_leaves(ws):
    r = ws.radii["r"]
    a = P.leaf_candidate(ws.f, ws.skeleton.periodic_points[0], 0j, r)
    b = P.leaf_candidate(ws.f, ws.skeleton.periodic_points[1], 0j, r)
    cert = P.fatou_disjointness_check(ws.f, a, b, 100, ws.delta.value)
    assert cert.measured["outcome"] == "disjoint"


def test_disjointness_flags_contradiction(ws):
    r = ws.radii["r"]
    leaf = P.leaf_candidate(ws.f, ws.m_point, 0j, r)
    slope = P.leaf_slope(ws.f, ws.m_point, 0j)
    seed = P.tangent_candidate(0j, complex(leaf.values[0]), P.rotated_slope(slope, math.pi / 4, 0.0), r)
    cert = P.fatou_disjointness_check(ws.f, leaf, seed, 200, ws.delta.value, labels=("fatou-like", "fatou-like"))
    assert cert.measured["intersect"]
    assert cert.measured["outcome"].startswith("contradiction")
    assert cert.verdict == "fail"


# ---------------------------------------------------------------- ramification


def _roots_in_disk(coeffs_ascending, radius):
    roots = npoly.polyroots(coeffs_ascending)
    return int((np.abs(roots) < radius).sum())


def _compose(p, n):
    out = np.array([0, 1], dtype=complex)
    for _ in range(n):
        acc = np.zeros(1, dtype=complex)
        for c in p[::-1]:
            acc = npoly.polyadd(npoly.polymul(acc, out), [c])
        out = acc
    return out


def test_ramification_decoupled_control(cube_map):
    alpha, gamma, rho = 0.2 + 0.1j, 0.01 + 0.005j, 0.02
    omega = P.Bidisk(0j, rho, 0j, 2.0)
    p = np.array(cube_map.p.coefficients)
    for n in (1, 2, 3):
        res = P.ramification_points(cube_map, alpha, gamma, omega, n)
        target = npoly.polyadd(_compose(p, n), [gamma / alpha])
        assert res["count"] == _roots_in_disk(target, rho)


def test_ramification_first_level_matches_branch_roots(ws):
    alpha, gamma, rho = 0.2 + 0.1j, 0.01 + 0.005j, 0.02
    f = ws.f
    omega = P.Bidisk(0j, rho, 0j, 3.5)
    res = P.ramification_points(f, alpha, gamma, omega, 1)
    p = np.array(f.p.coefficients)
    expected = 0
    for kappa in (0.0, ws.params.c):
        # q_z(kappa) = q0(kappa) + z must equal alpha p(z) + gamma
        poly = npoly.polysub([complex(ws.q0(kappa)) - gamma, 1.0], alpha * p)
        expected += _roots_in_disk(poly, rho)
    assert res["count"] == expected


def test_ramification_monotone_in_region(ws):
    alpha, gamma = 0.2 + 0.1j, 0.01 + 0.005j
    small = P.Bidisk(0j, 0.01, 0j, 3.5)
    large = P.Bidisk(0j, 0.02, 0j, 3.5)
    for n in (1, 2, 3):
        assert P.ramification_points(ws.f, alpha, gamma, small, n)["count"] <= P.ramification_points(ws.f, alpha, gamma, large, n)["count"]


def test_ramification_growth_slope(ws):
    from skewlab.pipeline import ramification_default

    cert = ramification_default(ws, 5)
    m = cert.measured
    assert m["stable"]
    assert m["counts"] == sorted(m["counts"])
    assert m["newton_z_roots"] == m["argument_principle_z_roots"]
