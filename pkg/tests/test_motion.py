import math

import numpy as np

from skewlab.motion import (
    branch_tubes,
    contraction_ratios,
    expansion_constants,
    graph_transform,
    pullback,
    vertical_expansion,
)
from skewlab.siegel import BaseMesh


def test_skeleton_points_are_repelling_and_on_boundary(ws):
    sk = ws.skeleton
    assert len(sk.periodic_points) >= 3
    for s in sk.periodic_points:
        assert abs(s.multiplier) > 1
        assert float(sk.boundary.distance(s.w)) <= 2 * sk.boundary.pixel
    assert any(abs(s.w - ws.params.m) < 1e-12 for s in sk.periodic_points)


def test_skeleton_orbits_are_exact(ws):
    q0 = ws.q0
    for s in ws.skeleton.preperiodic_samples[::50]:
        orb = s.orbit(len(s.prefix) + 3)
        assert np.all(np.abs(q0(orb[:-1]) - orb[1:]) < 1e-9)


def test_equivariance_residuals(ws):
    assert max(leaf.residual for leaf in ws.motion.leaves) < 1e-6


def test_leaves_pass_through_skeleton_at_origin(ws):
    for leaf in ws.motion.leaves[::25]:
        assert abs(leaf.samples[0] - leaf.base.w) < 1e-12


def test_leaves_are_disjoint(ws):
    assert ws.motion.min_gap() > 0


def test_m_leaf_expansion_rate(ws):
    leaf = next(l for l in ws.motion.leaves if l.base.w == ws.m_point.w)
    origin = BaseMesh(0.0, 0, 0, np.array([0j]), np.array([0j]))
    assert abs(vertical_expansion(ws.f, leaf, 50, origin) - math.log(2.25)) < 1e-3
    assert vertical_expansion(ws.f, leaf, 50, ws.mesh) > 0


def test_periodic_leaves_contract_under_graph_transform(ws):
    leaf = next(l for l in ws.motion.leaves if l.base.w == ws.m_point.w)
    ratios = contraction_ratios(leaf)
    assert ratios.size > 5
    assert np.median(ratios) < 0.6
    assert leaf.converged_depth < ws.motion.depth


def test_expansion_constants_exceed_one(ws):
    periodic = [l for l in ws.motion.leaves if l.base.periodic]
    res = expansion_constants(ws.f, periodic, ws.mesh, 30)
    assert res["beta_hat"] > 1.5 and not res["inconclusive"]


def test_decoupled_leaves_are_horizontal(ws):
    f0 = ws.params.family(beta=0.0)
    pts = ws.skeleton.periodic_points
    mo = graph_transform(f0, ws.skeleton, ws.mesh, depth=30, points=pts)
    for leaf in mo.leaves:
        assert np.all(np.abs(leaf.samples - leaf.base.w) < 1e-12)


def test_tubes_positive(ws):
    paths = np.array([s.orbit(10) for s in ws.skeleton.periodic_points])
    tubes = branch_tubes(ws.q0, paths)
    assert tubes.shape == (len(paths), 10) and np.all(tubes > 0)


def test_pullback_flags_tube_violation(ws):
    s = ws.m_point
    path = s.orbit(20)[None, :]
    tiny = np.full((1, 20), 1e-12)
    res = pullback(ws.f, path, ws.mesh.z[1:3], tiny)
    assert res.failed[0]


def test_motion_is_deterministic(ws):
    pts = ws.skeleton.periodic_points
    a = graph_transform(ws.f, ws.skeleton, ws.mesh, points=pts)
    b = graph_transform(ws.f, ws.skeleton, ws.mesh, points=pts)
    assert all(x.samples.tobytes() == y.samples.tobytes() for x, y in zip(a.leaves, b.leaves))
