"""Equivariant holomorphic motion of the hyperbolic set (boundary of the basin of 0).

A leaf gamma_w through a skeleton point w is obtained by pulling back along the
base orbit: with z_j = p^j(z) and w_j the exact skeleton orbit of w,

    gamma_w(z) = lim_K  g_{z_0} o ... o g_{z_{K-1}} (w_K),

where g_{z_j} is the branch of q_{z_j}^{-1} near w_j. Because q_0 expands along
the skeleton, each inverse branch contracts and the limit converges
geometrically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .core import Polynomial1D, SkewProduct
from .family import BasinBoundary, basin_boundary, periodic_points
from .siegel import BaseMesh


class SkeletonError(RuntimeError):
    pass


class BranchError(RuntimeError):
    pass


@dataclass(frozen=True)
class SkeletonPoint:
    """A point of the hyperbolic set with its exact forward orbit.

    The orbit is ``prefix`` followed by ``cycle`` repeated forever; the
    first entry is the point itself.
    """

    prefix: tuple[complex, ...]
    cycle: tuple[complex, ...]
    multiplier: complex

    @property
    def w(self) -> complex:
        return self.prefix[0] if self.prefix else self.cycle[0]

    @property
    def period(self) -> int:
        return len(self.cycle)

    @property
    def periodic(self) -> bool:
        return not self.prefix

    def orbit(self, n: int) -> np.ndarray:
        """w_0 .. w_n."""
        out = np.empty(n + 1, dtype=np.complex128)
        lp = len(self.prefix)
        for j in range(n + 1):
            out[j] = self.prefix[j] if j < lp else self.cycle[(j - lp) % self.period]
        return out

    def image(self) -> "SkeletonPoint":
        if self.prefix:
            return SkeletonPoint(self.prefix[1:], self.cycle, self.multiplier)
        return SkeletonPoint((), self.cycle[1:] + self.cycle[:1], self.multiplier)

    def to_json(self) -> dict:
        return {"w": self.w, "prefix_length": len(self.prefix), "period": self.period, "multiplier": self.multiplier}


@dataclass(frozen=True, eq=False)
class HyperbolicSkeleton:
    q0: Polynomial1D
    periodic_points: list
    preperiodic_samples: list
    boundary: BasinBoundary

    @property
    def points(self) -> list:
        return list(self.periodic_points) + list(self.preperiodic_samples)

    def nearest(self, w: complex) -> SkeletonPoint:
        pts = self.points
        return pts[int(np.argmin([abs(s.w - w) for s in pts]))]

    def to_json(self) -> dict:
        return {
            "periodic": [s.to_json() for s in self.periodic_points],
            "preperiodic_count": len(self.preperiodic_samples),
            "boundary_pixel": self.boundary.pixel,
        }


def _preimages(q0: Polynomial1D, y: complex) -> np.ndarray:
    coeffs = list(q0.coefficients)
    coeffs[0] -= y
    poly = Polynomial1D(tuple(coeffs))
    roots = poly.roots()
    dpoly = poly.derivative()
    for _ in range(3):
        slope = dpoly(roots)
        safe = np.abs(slope) > 1e-14
        roots = np.where(safe, roots - poly(roots) / np.where(safe, slope, 1.0), roots)
    return roots


def build_skeleton(
    q0: Polynomial1D,
    period_max: int = 3,
    boundary: BasinBoundary | None = None,
    levels: int = 0,
    region: tuple[complex, float] | None = None,
    n_seeds: int = 400,
    tol_pixels: float = 2.0,
    dedup: float = 1e-9,
) -> HyperbolicSkeleton:
    """Repelling periodic points on the basin boundary plus ``levels`` of backward preimages.

    When ``region`` = (center, radius) is given, only preimages inside it are
    returned (the full tree is still explored to reach them).
    """
    bb = boundary if boundary is not None else basin_boundary(q0)
    seeds = bb.points[:: max(1, len(bb.points) // n_seeds)]
    tol = tol_pixels * bb.pixel
    periodic: list[SkeletonPoint] = []
    for pp in periodic_points(q0, period_max, seeds):
        if abs(pp.multiplier) <= 1.0 or float(bb.distance(pp.w)) > tol:
            continue
        cycle = [pp.w]
        for _ in range(pp.period - 1):
            cycle.append(complex(q0(cycle[-1])))
        periodic.append(SkeletonPoint((), tuple(cycle), pp.multiplier))
    if not periodic:
        raise SkeletonError("no repelling periodic points found on the basin boundary")
    known = [s.w for s in periodic]
    frontier = list(periodic)
    pre: list[SkeletonPoint] = []
    for _ in range(levels):
        nxt = []
        for s in frontier:
            for v in _preimages(q0, s.w):
                v = complex(v)
                if float(bb.distance(v)) > tol or any(abs(v - k) < dedup for k in known):
                    continue
                known.append(v)
                sp = SkeletonPoint((v,) + s.prefix, s.cycle, s.multiplier)
                nxt.append(sp)
        pre.extend(nxt)
        frontier = nxt
    if region is not None:
        center, radius = region
        pre = [s for s in pre if abs(s.w - center) <= radius]
    pre.sort(key=lambda s: (len(s.prefix), round(s.w.real, 12), round(s.w.imag, 12)))
    return HyperbolicSkeleton(q0, periodic, pre, bb)


# ---------------------------------------------------------------- pullback


def branch_tubes(q0: Polynomial1D, paths: np.ndarray) -> np.ndarray:
    """Half the distance from w_j to the other preimages of w_{j+1}, for every step."""
    n_leaf, n = paths.shape
    tubes = np.empty((n_leaf, n - 1))
    cache: dict[complex, np.ndarray] = {}
    for i in range(n_leaf):
        for j in range(n - 1):
            y = complex(paths[i, j + 1])
            if y not in cache:
                cache[y] = _preimages(q0, y)
            dist = np.abs(cache[y] - paths[i, j])
            others = np.sort(dist)[1:]
            tubes[i, j] = 0.5 * others.min() if len(others) else np.inf
    return tubes


@dataclass
class Pullback:
    values: np.ndarray  # (n_leaf, n_points) gamma at the base points
    chain: np.ndarray | None  # (n_keep+1, n_leaf, n_points) gamma_{w_j}(z_j), j = 0..n_keep
    failed: np.ndarray  # (n_leaf,) bool
    min_derivative: np.ndarray  # (n_leaf,)


def pullback(
    f: SkewProduct,
    paths: np.ndarray,
    zs: np.ndarray,
    tubes: np.ndarray | None = None,
    keep_chain: int = 0,
    min_derivative: float = 1e-6,
    newton_steps: int = 40,
    starts: np.ndarray | None = None,
) -> Pullback:
    """Evaluate leaves at base points ``zs`` by pulling back along the base orbit.

    ``paths`` has shape (n_leaf, K+1) and holds the skeleton orbits w_0..w_K.
    Newton for each inverse branch is seeded at w_j; a leaf fails when the
    solution leaves its tube or the fiber derivative degenerates. With
    ``starts`` the pull-back of leaf i begins at step starts[i] < K instead
    (used to evaluate several truncation depths in one pass).
    """
    paths = np.atleast_2d(np.asarray(paths, dtype=np.complex128))
    zs = np.asarray(zs, dtype=np.complex128).ravel()
    n_leaf, kp1 = paths.shape
    depth = kp1 - 1
    zorb = np.empty((kp1, zs.size), dtype=np.complex128)
    zorb[0] = zs
    for j in range(1, kp1):
        zorb[j] = f.p(zorb[j - 1])
    zcoefs = f.q.fiber_coefficients(zorb[:depth].ravel()).reshape(depth, zs.size, f.d + 1)
    if tubes is None:
        tubes = np.full((n_leaf, max(depth, 1)), np.inf)
    if starts is None:
        starts = np.full(n_leaf, depth, dtype=np.int64)
    vals, chain, failed, mind = kernels.pullback_chains(
        paths, zcoefs, np.ascontiguousarray(tubes, dtype=np.float64), np.asarray(starts, dtype=np.int64),
        keep_chain, min_derivative, newton_steps,
    )
    if depth == 0:
        vals = np.repeat(paths[:, :1], zs.size, axis=1)
    return Pullback(vals, chain if keep_chain else None, failed.any(axis=1), mind.min(axis=1))


@dataclass(frozen=True, eq=False)
class MotionLeaf:
    base: SkeletonPoint
    samples: np.ndarray  # gamma_w at mesh.z
    transform_depth: int
    residual: float  # equivariance residual on the mesh
    increments: np.ndarray  # sup-norm change between consecutive depths (periodic leaves)
    converged_depth: int
    min_derivative: float

    @property
    def base_label(self) -> complex:
        return self.base.w

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "samples": self.samples,
            "transform_depth": self.transform_depth,
            "residual": self.residual,
            "converged_depth": self.converged_depth,
            "min_derivative": self.min_derivative,
        }


@dataclass(frozen=True, eq=False)
class Motion:
    f: SkewProduct
    skeleton: HyperbolicSkeleton
    mesh: BaseMesh
    leaves: list
    failures: list
    depth: int
    _paths: dict = field(default_factory=dict, repr=False)

    def paths(self, depth: int | None = None) -> np.ndarray:
        depth = self.depth if depth is None else depth
        if depth not in self._paths:
            self._paths[depth] = np.array([leaf.base.orbit(depth) for leaf in self.leaves])
        return self._paths[depth]

    def evaluate(self, zs, depth: int | None = None) -> np.ndarray:
        """Values of every leaf at arbitrary base points: shape (n_leaf, len(zs))."""
        return pullback(self.f, self.paths(depth), zs).values

    def base_points(self) -> np.ndarray:
        return np.array([leaf.base.w for leaf in self.leaves])

    def min_gap(self) -> float:
        """Smallest vertical distance between distinct leaves over the mesh."""
        vals = np.array([leaf.samples for leaf in self.leaves])
        if len(vals) < 2:
            return np.inf
        best = np.inf
        for i in range(vals.shape[1]):
            col = vals[:, i]
            tree = cKDTree(np.column_stack([col.real, col.imag]))
            dist, _ = tree.query(np.column_stack([col.real, col.imag]), k=2)
            best = min(best, float(dist[:, 1].min()))
        return best

    def to_json(self) -> dict:
        return {
            "mesh": {"zeta": self.mesh.zeta, **self.mesh.to_json()},
            "depth": self.depth,
            "leaves": [leaf.to_json() for leaf in self.leaves],
            "failures": self.failures,
        }


def graph_transform(
    f: SkewProduct,
    skeleton: HyperbolicSkeleton,
    mesh: BaseMesh,
    depth: int = 60,
    tol: float = 1e-14,
    points: list | None = None,
) -> Motion:
    """Leaves through skeleton points over the shared base mesh."""
    pts = skeleton.points if points is None else points
    paths = np.array([s.orbit(depth) for s in pts])
    tubes = branch_tubes(skeleton.q0, paths)
    main = pullback(f, paths, mesh.z, tubes)
    img_paths = np.array([s.image().orbit(depth) for s in pts])
    img = pullback(f, img_paths, f.p(mesh.z)).values
    residual = np.abs(f.q(mesh.z[None, :], main.values) - img).max(axis=1)
    leaves, failures = [], []
    for i, s in enumerate(pts):
        if main.failed[i] or not np.isfinite(residual[i]):
            failures.append({"w": s.w, "reason": "inverse branch left its tube or degenerated"})
            continue
        incs = np.zeros(0)
        conv = depth
        if s.periodic:
            incs, conv = _depth_history(f, s, mesh, depth, tol)
        leaves.append(MotionLeaf(s, main.values[i], depth, float(residual[i]), incs, conv, float(main.min_derivative[i])))
    return Motion(f, skeleton, mesh, leaves, failures, depth)


def _depth_history(f: SkewProduct, s: SkeletonPoint, mesh: BaseMesh, depth: int, tol: float) -> tuple[np.ndarray, int]:
    ks = np.arange(depth + 1)
    paths = np.repeat(s.orbit(depth)[None, :], depth + 1, axis=0)
    vals = pullback(f, paths, mesh.z, starts=ks).values  # row k = depth-k graph
    incs = np.abs(np.diff(vals, axis=0)).max(axis=1)
    below = np.flatnonzero(incs < tol)
    conv = int(below[0]) + 1 if below.size else depth
    return incs, conv


def contraction_ratios(leaf: MotionLeaf, floor: float = 1e-12) -> np.ndarray:
    """Per-period ratios of successive depth increments above the rounding floor."""
    inc = leaf.increments
    per = leaf.base.period
    ok = (inc[:-per] > floor) & (inc[per:] > floor)
    return (inc[per:] / np.where(ok, inc[:-per], 1.0))[ok]


def expansion_chain(f: SkewProduct, leaf_point: SkeletonPoint, zs: np.ndarray, n: int, depth: int = 60) -> np.ndarray:
    """log|d/dw q_z^n| along the leaf orbit; returns array (n, len(zs)) of per-step logs."""
    path = leaf_point.orbit(n + depth)[None, :]
    pb = pullback(f, path, zs, keep_chain=n)
    zorb = np.empty((n, len(zs)), dtype=np.complex128)
    zorb[0] = zs
    for j in range(1, n):
        zorb[j] = f.p(zorb[j - 1])
    return np.log(np.abs(f.q.dw(zorb, pb.chain[:n, 0, :])))


def vertical_expansion(f: SkewProduct, leaf: MotionLeaf, n: int, mesh: BaseMesh, depth: int | None = None) -> float:
    """min over mesh points of (1/n) log|d/dw q_z^n| along the leaf."""
    logs = expansion_chain(f, leaf.base, mesh.z, n, leaf.transform_depth if depth is None else depth)
    return float(logs.sum(axis=0).min() / n)


def expansion_constants(f: SkewProduct, leaves: list, mesh: BaseMesh, n_max: int = 50) -> dict:
    """Least-squares fit of min cocycle growth to C beta^n over the given leaves."""
    cum = None
    for leaf in leaves:
        logs = np.cumsum(expansion_chain(f, leaf.base, mesh.z, n_max, leaf.transform_depth), axis=0).min(axis=1)
        cum = logs if cum is None else np.minimum(cum, logs)
    ns = np.arange(1, n_max + 1)
    slope, intercept = np.polyfit(ns, cum, 1)
    beta_hat = float(np.exp(slope))
    return {"C_hat": float(np.exp(intercept)), "beta_hat": beta_hat, "inconclusive": beta_hat <= 1.01}
