"""Quantitative probes: slice measures, expansivity, post-critical intersections,
Fatou-graph tests and ramification growth. Each probe returns a ProbeCertificate."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .certificates import ProbeCertificate, content_hash
from .core import SkewProduct
from .family import BasinBoundary, basin_window
from .motion import Motion, SkeletonPoint, _preimages, pullback
from .potential import GridSpec, JuliaSlice, filled_radius, fiber_greens, julia_slice
from .siegel import SiegelData


class RootFindingError(RuntimeError):
    pass


def _map_inputs(f: SkewProduct) -> dict:
    return {"map": f.to_json(), "map_hash": content_hash(f.to_json())}


# ---------------------------------------------------------------- slice measure


@dataclass(frozen=True, eq=False)
class SliceSample:
    z: complex
    points: np.ndarray
    weights: np.ndarray
    depth: int
    w0: complex
    total: int  # d^depth before subsampling

    def to_json(self) -> dict:
        return {"z": self.z, "depth": self.depth, "w0": self.w0, "total": self.total, "count": len(self.points)}


def fiber_preimages(f: SkewProduct, z: complex, targets: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """All d preimages under q_z of every target, ordered per target; shape (len(targets) * d,)."""
    d = f.d
    targets = np.asarray(targets, dtype=np.complex128).ravel()
    coefs = f.q.fiber(z).as_array()
    lead = coefs[d]
    comp = np.zeros((targets.size, d, d), dtype=np.complex128)
    for t in range(d):
        comp[:, 0, t] = -coefs[d - 1 - t] / lead
    comp[:, 0, d - 1] = -(coefs[0] - targets) / lead
    for t in range(1, d):
        comp[:, t, t - 1] = 1.0
    roots = np.linalg.eigvals(comp)
    tgt = np.repeat(targets[:, None], d, axis=1)
    for _ in range(3):
        val = f.q(z, roots) - tgt
        der = f.q.dw(z, roots)
        ok = np.abs(der) > 1e-14
        roots = np.where(ok, roots - val / np.where(ok, der, 1.0), roots)
    resid = np.abs(f.q(z, roots) - tgt)
    if not np.all(resid <= tol * (1.0 + np.abs(tgt))):
        raise RootFindingError(f"preimage residual {resid.max():.3e} above tolerance in fiber z={z}")
    order = np.lexsort((roots.imag, roots.real), axis=-1)
    roots = np.take_along_axis(roots, order, axis=1)
    return roots.ravel()


def _base_orbit(f: SkewProduct, z: complex, n: int) -> list[complex]:
    zs = [complex(z)]
    for _ in range(n):
        zs.append(complex(f.p(zs[-1])))
    return zs


def sample_slice_measure(
    f: SkewProduct, z: complex, depth: int, w0: complex, cap: int | None = None, seed: int = 0
) -> SliceSample:
    """Equal-weight sample of mu_z: the d^depth solutions of q_z^depth(w) = w0."""
    zs = _base_orbit(f, z, depth)
    probe = fiber_preimages(f, zs[1], [w0]) if depth >= 2 else None
    if probe is not None:
        second = fiber_preimages(f, zs[0], probe)
        distinct = len({(round(v.real, 9), round(v.imag, 9)) for v in second})
        if distinct == 1:
            raise ValueError(f"w0={w0} is exceptional: its preimage tree collapses")
    pts = np.array([complex(w0)])
    for j in range(depth - 1, -1, -1):
        pts = fiber_preimages(f, zs[j], pts)
    total = len(pts)
    if cap is not None and total > cap:
        rng = np.random.default_rng(seed)
        pts = pts[np.sort(rng.choice(total, cap, replace=False))]
    return SliceSample(complex(z), pts, np.full(len(pts), 1.0 / len(pts)), depth, complex(w0), total)


# ---------------------------------------------------------------- expansivity


def _diameter(points: np.ndarray) -> float:
    if points.ndim == 1:
        return float(np.abs(points[:, None] - points[None, :]).max()) if len(points) > 1 else 0.0
    diff = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((np.abs(diff) ** 2).sum(-1)).max())


def expansivity_probe(
    f: SkewProduct,
    z: complex,
    A: np.ndarray,
    n_iter: int,
    delta_hat: float,
    js: JuliaSlice | None = None,
    tol_pixels: float = 2.0,
) -> ProbeCertificate:
    """Iterate a finite subset of J_z until its diameter exceeds 0.75 delta_hat."""
    t0 = time.perf_counter()
    A = np.asarray(A, dtype=np.complex128).ravel()
    if len(A) < 2:
        raise ValueError("A needs at least two points")
    if js is None:
        js = julia_slice(f, z, GridSpec(0j, 1.0, 256, 256), 1024)
    dist = js.distance_to_band(A) / js.grid.pixel_diagonal
    if np.any(dist > tol_pixels):
        raise ValueError(f"A is not contained in the J_z band (max distance {dist.max():.2f} pixels)")
    zs = _base_orbit(f, z, n_iter)
    r_esc = f.escape_radius()
    w = A.copy()
    hit = None
    diams = []
    escaped = 0
    with np.errstate(all="ignore"):
        for n in range(n_iter + 1):
            diam = _diameter(w)
            diams.append(diam)
            if diam > 0.75 * delta_hat:
                hit = n
                break
            if n == n_iter:
                break
            w = f.q(zs[n], w)
            escaped = int((~(np.abs(w) <= r_esc)).sum())
    inputs = {
        **_map_inputs(f),
        "z": z,
        "A": A,
        "n_iter": n_iter,
        "delta_hat": delta_hat,
        "band_tolerance_pixels": tol_pixels,
    }
    measured = {
        "first_n": hit,
        "max_diameter": float(max(diams)),
        "diameters": diams,
        "escaped_points": escaped,
        "max_band_distance_pixels": float(dist.max()),
    }
    cert = ProbeCertificate("expansivity", inputs, measured, "pass" if hit is not None else "fail")
    cert.runtime = time.perf_counter() - t0
    return cert


def localized_cluster(sample: SliceSample, size: int, seed: int) -> np.ndarray:
    """``size`` nearest sample points to a randomly chosen sample point."""
    rng = np.random.default_rng(seed)
    x = sample.points[rng.integers(len(sample.points))]
    order = np.argsort(np.abs(sample.points - x), kind="stable")
    return sample.points[order[:size]]


# ---------------------------------------------------------------- intersections


def _nearest_leaf(W: np.ndarray, leaf_vals: np.ndarray):
    dist = np.abs(W[None, :] - leaf_vals)
    idx = np.argmin(dist, axis=0)
    cols = np.arange(W.size)
    approach = dist[idx, cols]
    gap = np.abs(leaf_vals - leaf_vals[idx, cols][None, :])
    gap[idx, cols] = np.inf
    return idx, approach, gap.min(axis=0)


def postcritical_intersection(
    f: SkewProduct,
    sd: SiegelData,
    motion: Motion,
    r: float,
    critical: complex,
    coarse: BasinBoundary,
    n_samples: int = 256,
    window_resolution: int = 600,
    n_bisect: int = 30,
    max_leaves: int = 400,
) -> ProbeCertificate:
    """Crossings of W = f(C x {critical}) with the leaves of the motion over an invariant circle.

    W over the circle is transported to the central fiber along the nearest
    leaf (holonomy L = W - gamma_w + w); a crossing is a change of membership
    of L in the immediate basin of 0, refined by bisection in the circle
    parameter and confirmed when the nearest sampled leaf is closer than the
    local leaf spacing.
    """
    t0 = time.perf_counter()
    if not 0 < r <= motion.mesh.radius + 1e-15:
        raise ValueError(f"circle radius {r} outside the base neighborhood (radius {motion.mesh.radius})")
    if abs(f.q.dw(0.0, critical)) > 1e-9 * max(1.0, abs(critical)) ** (f.d - 1):
        raise ValueError("critical must be a fiber-critical value w_c")
    w_img = complex(f.q(0.0, critical))
    t = np.arange(n_samples) / n_samples

    def W_of(tt):
        zeta = r * np.exp(2j * np.pi * np.asarray(tt))
        z = sd.phi(zeta)
        return f.p(z), f.q(z, critical)

    zp, W = W_of(t)
    spread = float(np.abs(W - w_img).max())
    bases = motion.base_points()
    order = np.argsort(np.abs(bases - w_img), kind="stable")
    radius_sel = 4.0 * spread + 1e-3
    chosen = [i for i in order if abs(bases[i] - w_img) <= radius_sel][:max_leaves]
    if len(chosen) < 32:
        chosen = list(order[:32])
    chosen = np.array(sorted(chosen))
    paths = motion.paths()[chosen]
    base_sel = bases[chosen]

    def holonomy(tt):
        zp_, W_ = W_of(tt)
        vals = pullback(f, paths, zp_).values
        idx, approach, gap = _nearest_leaf(W_, vals)
        return W_ - vals[idx, np.arange(W_.size)] + base_sel[idx], approach, gap

    L, approach, gap = holonomy(t)
    half = max(3.0 * float(np.abs(L - w_img).max()), 20 * coarse.grid.pixel / window_resolution * 10)
    window = basin_window(f.q.fiber(0.0), w_img, half, window_resolution, coarse)
    inside = window.contains(L)
    touching = approach < 1e-12
    inputs = {
        **_map_inputs(f),
        "r": r,
        "critical": critical,
        "n_samples": n_samples,
        "window_resolution": window_resolution,
        "n_bisect": n_bisect,
        "mesh": motion.mesh.to_json(),
        "depth": motion.depth,
        "leaves_used": len(chosen),
    }
    measured = {
        "loop_spread": spread,
        "holonomy_radius": float(np.abs(L - w_img).max()),
        "window_half_width": half,
        "window_pixel": window.grid.pixel_diagonal,
    }
    if touching.all():
        measured.update({"crossings": [], "sign_changes": 0, "confirmed": n_samples, "everywhere": True})
        return _finish(ProbeCertificate("intersections", inputs, measured, "pass"), t0)
    changes = np.flatnonzero(inside != np.roll(inside, -1))
    crossings = []
    for k in changes:
        lo, hi = t[k], t[k] + 1.0 / n_samples
        s_lo = inside[k]
        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            Lm, _, _ = holonomy(np.array([mid]))
            if window.contains(Lm)[0] == s_lo:
                lo = mid
            else:
                hi = mid
        tm = 0.5 * (lo + hi)
        Lm, appr, gp = holonomy(np.array([tm]))
        appr, gp = float(appr[0]), float(gp[0])
        entry = {"t": tm % 1.0, "approach": appr, "leaf_gap": gp}
        tol = max(gp, window.grid.pixel_diagonal)
        if appr > tol:
            zp_m, W_m = W_of(np.array([tm]))
            refined = _shadow_leaf(f, motion, complex(Lm[0]), coarse)
            if refined is not None:
                val = pullback(f, refined.orbit(motion.depth + len(refined.prefix))[None, :], zp_m).values[0, 0]
                entry["refined_leaf"] = refined.w
                entry["refined_approach"] = float(abs(W_m[0] - val))
                appr = min(appr, entry["refined_approach"])
        entry["confirmed"] = bool(appr <= tol)
        crossings.append(entry)
    n_conf = sum(c["confirmed"] for c in crossings) + int(touching.sum())
    measured.update(
        {"crossings": crossings, "sign_changes": int(len(changes)), "confirmed": n_conf, "everywhere": False}
    )
    if n_conf >= 1:
        verdict = "pass"
    elif len(changes):
        verdict = "inconclusive"
    else:
        verdict = "fail"
    return _finish(ProbeCertificate("intersections", inputs, measured, verdict), t0)


def _shadow_leaf(f: SkewProduct, motion: Motion, L: complex, coarse: BasinBoundary, depths=range(3, 9)) -> SkeletonPoint | None:
    """A point of E0 within reach of L, found by following the forward orbit of L
    to the nearest skeleton point and pulling it back along the same branches."""
    q0 = motion.skeleton.q0
    orbit = [complex(L)]
    for _ in range(max(depths)):
        orbit.append(complex(q0(orbit[-1])))
    pts = motion.skeleton.points
    best, best_dist = None, np.inf
    for k in depths:
        s = pts[int(np.argmin([abs(p.w - orbit[k]) for p in pts]))]
        chain = [s.w]
        for j in range(k - 1, -1, -1):
            pre = _preimages(q0, chain[0])
            chain.insert(0, complex(pre[np.argmin(np.abs(pre - orbit[j]))]))
        dist = abs(chain[0] - L)
        if dist < best_dist and float(coarse.distance(chain[0])) <= 2 * coarse.pixel:
            best, best_dist = SkeletonPoint(tuple(chain[:-1]) + s.prefix, s.cycle, s.multiplier), dist
    return best


def _finish(cert: ProbeCertificate, t0: float) -> ProbeCertificate:
    cert.runtime = time.perf_counter() - t0
    return cert


# ---------------------------------------------------------------- Fatou graphs


def disk_mesh(center: complex, radius: float, n_rings: int = 4, n_angles: int = 12) -> np.ndarray:
    rr = radius * np.arange(1, n_rings + 1) / n_rings
    ang = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    return np.concatenate([[complex(center)], (center + rr[:, None] * ang[None, :]).ravel()])


@dataclass(frozen=True, eq=False)
class FatouGraphCandidate:
    """A holomorphic graph over D(center, 2r) given by samples and an evaluator.

    ``source`` is "leaf" (a leaf of the motion, ``leaf`` set), "tangent"
    (affine graph through ``anchor`` with ``slope``) or "user" (samples only).
    """

    center: complex
    r: float
    base: np.ndarray
    values: np.ndarray
    source: str
    leaf: SkeletonPoint | None = None
    anchor: complex | None = None
    slope: complex | None = None
    meta: dict = field(default_factory=dict)

    @property
    def inner(self) -> np.ndarray:
        return np.abs(self.base - self.center) <= self.r * (1 + 1e-12)

    def evaluate(self, f: SkewProduct, zeta: np.ndarray, depth: int = 60) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=np.complex128)
        if self.source == "leaf":
            return pullback(f, self.leaf.orbit(depth)[None, :], zeta).values[0]
        if self.source == "tangent":
            return self.anchor + self.slope * (zeta - self.center)
        raise ValueError("user-supplied candidates can only be evaluated at their samples")

    def to_json(self) -> dict:
        return {
            "center": self.center,
            "r": self.r,
            "source": self.source,
            "base": self.base,
            "values": self.values,
            "leaf": self.leaf.to_json() if self.leaf is not None else None,
            "slope": self.slope,
            "meta": self.meta,
        }


def leaf_candidate(f: SkewProduct, point: SkeletonPoint, center: complex, r: float, depth: int = 60) -> FatouGraphCandidate:
    base = disk_mesh(center, 2 * r)
    vals = pullback(f, point.orbit(depth)[None, :], base).values[0]
    return FatouGraphCandidate(complex(center), r, base, vals, "leaf", leaf=point)


def tangent_candidate(anchor_z: complex, anchor_w: complex, slope: complex, r: float, meta: dict | None = None) -> FatouGraphCandidate:
    base = disk_mesh(anchor_z, 2 * r)
    vals = anchor_w + slope * (base - anchor_z)
    return FatouGraphCandidate(complex(anchor_z), r, base, vals, "tangent", anchor=complex(anchor_w), slope=complex(slope), meta=meta or {})


def constant_candidate(center: complex, w: complex, r: float) -> FatouGraphCandidate:
    return tangent_candidate(center, w, 0j, r, {"kind": "horizontal"})


def rotated_slope(slope: complex, alpha: float, psi: float) -> complex:
    """Slope of the direction obtained by turning (1, slope) by angle alpha toward its orthogonal complement."""
    v0 = np.array([1.0, slope]) / math.hypot(1.0, abs(slope))
    u = np.array([-np.conj(slope), 1.0]) / math.hypot(1.0, abs(slope))
    v = math.cos(alpha) * v0 + math.sin(alpha) * np.exp(1j * psi) * u
    return complex(v[1] / v[0])


def leaf_slope(f: SkewProduct, point: SkeletonPoint, z: complex, h: float = 1e-5, depth: int = 60) -> complex:
    pts = np.array([z + h, z - h])
    vals = pullback(f, point.orbit(depth)[None, :], pts).values[0]
    return complex((vals[0] - vals[1]) / (2 * h))


def choose_radii(delta_hat: float, working_bound: float, n_radius: float, sd: SiegelData) -> dict:
    """Radii (r0, r) for Fatou-graph tests.

    r0 = n_radius / 4. A graph over D(z, 2 r0) inside |w| <= M has, by Cauchy,
    diam over D(z, r) at most 4 M r / (2 r0 - r), which stays below delta/4 for
    r < 2 delta r0 / (16 M + delta). The distortion k of phi on the base disk
    further limits r <= r0 / k^2 so that p-images of D(z, 2 r0) cover D(p^n z, 2r).
    """
    r0 = n_radius / 4.0
    ring = n_radius * np.exp(2j * np.pi * np.arange(64) / 64)
    dphi = np.abs(sd.dphi(np.concatenate([[0j], ring, 0.5 * ring])))
    distortion = float(dphi.max() / dphi.min())
    cauchy = 2.0 * delta_hat * r0 / (16.0 * working_bound + delta_hat)
    r = float(min(cauchy, r0 / distortion**2))
    return {"r0": r0, "r": r, "distortion": distortion, "cauchy_bound": float(cauchy), "working_bound": working_bound}


def working_bound(f: SkewProduct, sd: SiegelData, n_radius: float) -> float:
    ring = sd.phi(n_radius * np.exp(2j * np.pi * np.arange(64) / 64))
    return float(filled_radius(f, float(np.abs(ring).max())))


def _graph_orbit(f: SkewProduct, g: FatouGraphCandidate, n_iter: int, depth: int):
    """Yield (z_n, w_n) arrays for the inner samples of f^n(g), n = 0..n_iter."""
    zeta = g.base[g.inner]
    if g.source == "leaf":
        pb = pullback(f, g.leaf.orbit(n_iter + depth)[None, :], zeta, keep_chain=n_iter)
        z = zeta.copy()
        for n in range(n_iter + 1):
            yield z, pb.chain[n, 0]
            z = f.p(z)
    else:
        z, w = zeta.copy(), g.values[g.inner].copy()
        with np.errstate(all="ignore"):
            for n in range(n_iter + 1):
                yield z, w
                z, w = f.p(z), f.q(z, w)


def classify_graph(f: SkewProduct, g: FatouGraphCandidate, n_iter: int, delta_hat: float, depth: int = 60) -> dict:
    r_esc = f.escape_radius()
    diams = []
    label = "inconclusive"
    first = None
    for n, (z, w) in enumerate(_graph_orbit(f, g, n_iter, depth)):
        if not np.all(np.abs(w) <= r_esc):
            label, first = "non-normal", n
            break
        diam = _diameter(np.column_stack([z, w]))
        diams.append(diam)
        if diam > 0.75 * delta_hat:
            label, first = "non-normal", n
            break
    else:
        if max(diams) < 0.25 * delta_hat:
            label = "fatou-like"
    return {"classification": label, "first_n": first, "max_diameter": float(max(diams)) if diams else None}


def fatou_graph_test(f: SkewProduct, g: FatouGraphCandidate, n_iter: int, delta_hat: float, depth: int = 60) -> ProbeCertificate:
    t0 = time.perf_counter()
    res = classify_graph(f, g, n_iter, delta_hat, depth)
    verdict = {"fatou-like": "pass", "non-normal": "fail", "inconclusive": "inconclusive"}[res["classification"]]
    inputs = {**_map_inputs(f), "candidate": g, "n_iter": n_iter, "delta_hat": delta_hat, "depth": depth}
    return _finish(ProbeCertificate("fatou", inputs, res, verdict), t0)


def _winding(values: np.ndarray) -> float:
    ph = np.unwrap(np.angle(np.append(values, values[0])))
    return float((ph[-1] - ph[0]) / (2 * math.pi))


def fatou_disjointness_check(
    f: SkewProduct,
    g1: FatouGraphCandidate,
    g2: FatouGraphCandidate,
    n_iter: int,
    delta_hat: float,
    labels: tuple[str, str] | None = None,
    n_circle: int = 512,
    depth: int = 60,
) -> ProbeCertificate:
    """Pairwise disjointness of Fatou graphs over D(z, r).

    Intersection is detected by the winding number of g1 - g2 on |zeta - z| = r.
    If two Fatou-like graphs intersect, their base points stay within
    delta/2 forever, which is incompatible with expansivity once the base
    points separate beyond 0.75 delta: that situation is reported as a
    contradiction.
    """
    t0 = time.perf_counter()
    if abs(g1.center - g2.center) > 1e-14 or abs(g1.r - g2.r) > 1e-14:
        raise ValueError("candidates must live over the same disk")
    if labels is None:
        labels = (
            classify_graph(f, g1, n_iter, delta_hat, depth)["classification"],
            classify_graph(f, g2, n_iter, delta_hat, depth)["classification"],
        )
    circle = g1.center + g1.r * np.exp(2j * np.pi * np.arange(n_circle) / n_circle)
    diff = g1.evaluate(f, circle, depth) - g2.evaluate(f, circle, depth)
    center_gap = abs(complex(g1.evaluate(f, np.array([g1.center]), depth)[0] - g2.evaluate(f, np.array([g2.center]), depth)[0]))
    identical = bool(np.all(np.abs(diff) < 1e-12) and center_gap < 1e-12)
    winding = 0 if identical else int(round(_winding(diff)))
    intersect = identical or winding != 0
    measured = {"labels": list(labels), "identical": identical, "winding": winding, "intersect": intersect}
    both_fatou = labels == ("fatou-like", "fatou-like")
    verdict = "pass"
    if identical:
        measured["outcome"] = "trivial"
    elif not intersect:
        measured["outcome"] = "disjoint"
    elif not both_fatou:
        measured["outcome"] = "precondition-unmet"
        verdict = "inconclusive"
    else:
        seps = []
        g1o = _graph_orbit(f, _center_only(g1), n_iter, depth)
        g2o = _graph_orbit(f, _center_only(g2), n_iter, depth)
        sep_at = None
        for n, ((z1, w1), (z2, w2)) in enumerate(zip(g1o, g2o)):
            s = float(np.sqrt(abs(z1[0] - z2[0]) ** 2 + abs(w1[0] - w2[0]) ** 2))
            seps.append(s)
            if s > 0.75 * delta_hat and sep_at is None:
                sep_at = n
        measured.update({"max_separation": max(seps), "separation_step": sep_at})
        measured["outcome"] = "contradiction-with-expansivity" if sep_at is not None else "contradiction-no-separation"
        verdict = "fail"
    inputs = {**_map_inputs(f), "g1": g1, "g2": g2, "n_iter": n_iter, "delta_hat": delta_hat, "n_circle": n_circle}
    return _finish(ProbeCertificate("disjointness", inputs, measured, verdict), t0)


def _center_only(g: FatouGraphCandidate) -> FatouGraphCandidate:
    base = np.array([g.center])
    return FatouGraphCandidate(g.center, 0.0, base, g.values[:1], g.source, g.leaf, g.anchor, g.slope, g.meta)


# ---------------------------------------------------------------- ramification


@dataclass(frozen=True)
class Bidisk:
    z0: complex
    rz: float
    w0: complex
    rw: float

    def contains(self, z, w) -> np.ndarray:
        return (np.abs(np.asarray(z) - self.z0) < self.rz) & (np.abs(np.asarray(w) - self.w0) < self.rw)

    def to_json(self) -> dict:
        return {"z0": self.z0, "rz": self.rz, "w0": self.w0, "rw": self.rw}


def _branch_function(f: SkewProduct, z: np.ndarray, n: int, j: int, kappa: complex, alpha: complex, gamma: complex):
    """F(z) = q^{n-j}_{z_j}(kappa) - alpha p^n(z) - gamma and its z-derivative."""
    dp = f.p.derivative()
    zk, dzk = z.copy(), np.ones_like(z)
    for _ in range(j):
        zk, dzk = f.p(zk), dp(zk) * dzk
    w, dw = np.full_like(z, kappa), np.zeros_like(z)
    for _ in range(j, n):
        w, dw = f.q(zk, w), f.q.dz(zk, w) * dzk + f.q.dw(zk, w) * dw
        zk, dzk = f.p(zk), dp(zk) * dzk
    return w - alpha * zk - gamma, dw - alpha * dzk


def _newton_roots(fun, disk_center: complex, radius: float, grid: int, dedup: float = 1e-7) -> tuple[np.ndarray, float]:
    xs = np.linspace(-1.0, 1.0, grid)
    seeds = (xs[None, :] + 1j * xs[:, None]).ravel() * radius * 1.05 + disk_center
    z = seeds.copy()
    with np.errstate(all="ignore"):
        for _ in range(80):
            val, der = fun(z)
            z = z - val / der
        val, der = fun(z)
    ok = np.isfinite(z) & (np.abs(val) < 1e-10) & (np.abs(z - disk_center) < radius)
    roots: list[complex] = []
    min_der = np.inf
    for zz, dd in zip(z[ok], der[ok]):
        if all(abs(zz - r) >= dedup for r in roots):
            roots.append(complex(zz))
            min_der = min(min_der, abs(dd))
    roots.sort(key=lambda v: (round(v.real, 9), round(v.imag, 9)))
    return np.array(roots, dtype=np.complex128), min_der


def _argument_count(fun, center: complex, radius: float, start: int = 4096, max_samples: int = 1 << 20) -> int | None:
    m = start
    while m <= max_samples:
        zc = center + radius * np.exp(2j * np.pi * np.arange(m) / m)
        val, _ = fun(zc)
        ph = np.angle(np.append(val, val[0]))
        steps = np.angle(np.exp(1j * np.diff(ph)))
        if np.all(np.abs(steps) < math.pi / 4):
            return int(round(steps.sum() / (2 * math.pi)))
        m *= 4
    return None


def ramification_points(
    f: SkewProduct, alpha: complex, gamma: complex, omega: Bidisk, n: int, grid: int = 16, critical: list | None = None
) -> dict:
    """Solutions in omega of q_z^n(w) = alpha p^n(z) + gamma with d/dw q_z^n(w) = 0.

    d/dw q_z^n vanishes exactly when some q_{z_j}^j(w) is a critical point kappa
    of q (these are z-independent here), so the system splits into the
    one-variable equations q^{n-j}_{z_j}(kappa) = alpha p^n(z) + gamma for z,
    followed by the d^j backward preimages of kappa in the fiber over z.
    """
    if critical is None:
        if not f.z_independent_critical():
            raise ValueError("ramification counts need z-independent fiber critical points")
        from .core import critical_locus

        critical = [c.locus for c in critical_locus(f) if c.kind == "fiber-critical"]
    points: list[tuple[complex, complex]] = []
    branches = []
    min_der = np.inf
    for j in range(n):
        for kappa in critical:

            def fun(z, j=j, kappa=kappa):
                return _branch_function(f, z, n, j, kappa, alpha, gamma)

            roots, md = _newton_roots(fun, omega.z0, omega.rz, grid)
            min_der = min(min_der, md)
            winding = _argument_count(fun, omega.z0, omega.rz)
            count_w = 0
            for z in roots:
                zs = _base_orbit(f, z, j)
                ws = np.array([complex(kappa)])
                for i in range(j - 1, -1, -1):
                    ws = fiber_preimages(f, zs[i], ws)
                for w in ws:
                    if omega.contains(z, w) and all(abs(z - a) >= 1e-7 or abs(w - b) >= 1e-7 for a, b in points):
                        points.append((complex(z), complex(w)))
                        count_w += 1
            branches.append({"j": j, "kappa": kappa, "z_roots": len(roots), "argument_principle": winding, "points": count_w})
    return {"count": len(points), "points": points, "branches": branches, "min_branch_derivative": float(min_der)}


def ramification_growth(
    f: SkewProduct,
    alpha: complex,
    gamma: complex,
    omega: Bidisk,
    n_max: int = 6,
    grid: int = 16,
    seed: int = 0,
    max_retries: int = 5,
) -> ProbeCertificate:
    """Counts rho_n of ramification points in omega and the slope of log rho_n."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    gamma_used = complex(gamma)
    attempts = []
    for attempt in range(max_retries + 1):
        coarse = [ramification_points(f, alpha, gamma_used, omega, n, grid) for n in range(1, n_max + 1)]
        degenerate = any(r["min_branch_derivative"] < 1e-8 for r in coarse)
        attempts.append({"gamma": gamma_used, "degenerate": degenerate})
        if not degenerate:
            break
        gamma_used = complex(gamma) + 1e-3 * complex(rng.standard_normal(), rng.standard_normal())
    fine = [ramification_points(f, alpha, gamma_used, omega, n, 2 * grid) for n in range(1, n_max + 1)]
    rho = np.array([r["count"] for r in coarse], dtype=float)
    rho_fine = np.array([r["count"] for r in fine], dtype=float)
    change = np.abs(rho_fine - rho) / np.maximum(rho, 1.0)
    stable = bool(np.all(change <= 0.05))
    argument = [sum(b["argument_principle"] or 0 for b in r["branches"]) for r in coarse]
    newton_z = [sum(b["z_roots"] for b in r["branches"]) for r in coarse]
    ns = np.arange(1, n_max + 1)
    bound = math.log(f.d) + 0.15
    if np.all(rho > 0):
        slope = float(np.polyfit(ns, np.log(rho), 1)[0])
    else:
        slope = None
    if slope is None or not stable:
        verdict = "inconclusive"
    else:
        verdict = "pass" if slope <= bound else "fail"
    inputs = {
        **_map_inputs(f),
        "alpha": alpha,
        "gamma": gamma,
        "omega": omega,
        "n_max": n_max,
        "grid": grid,
        "seed": seed,
    }
    measured = {
        "gamma_used": gamma_used,
        "attempts": attempts,
        "counts": rho.astype(int).tolist(),
        "counts_refined": rho_fine.astype(int).tolist(),
        "relative_change": change.tolist(),
        "stable": stable,
        "newton_z_roots": newton_z,
        "argument_principle_z_roots": argument,
        "slope": slope,
        "bound": bound,
        "branches": [r["branches"] for r in coarse],
    }
    return _finish(ProbeCertificate("ramification", inputs, measured, verdict), t0)


# ---------------------------------------------------------------- helpers for sampling


def fiber_potential_check(f: SkewProduct, sample: SliceSample, n_max: int = 64) -> np.ndarray:
    v, _, _, _ = fiber_greens(f, sample.z, sample.points, n_max)
    return v
