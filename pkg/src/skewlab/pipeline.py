"""Lazily built objects shared by the command line and the acceptance runner,
plus the multi-configuration probe campaigns."""

from __future__ import annotations

import math
import time
from functools import cached_property

import numpy as np

from . import probes as P
from .certificates import ProbeCertificate, cached, content_hash, decode_complex
from .config import RunConfig
from .family import (
    VERIFIED,
    FamilyParams,
    basin_boundary,
    build_family,
    central_polynomial,
    find_misiurewicz_parameter,
    verify_assumptions,
)
from .motion import build_skeleton, graph_transform
from .potential import GridSpec, delta_hat, julia_slice
from .siegel import linearize, polar_mesh


class UncertifiedParameters(ValueError):
    pass


def _params_from_doc(doc: dict) -> FamilyParams:
    p = doc["params"]
    return FamilyParams(
        int(p["d"]),
        decode_complex(p["c"]),
        decode_complex(p["beta"]),
        float(p["theta"]),
        decode_complex(p["m"]),
        decode_complex(p["multiplier"]),
        int(p["k"]),
        int(p["period"]),
    )


def parameter_certificate(d: int, beta: complex, theta: float) -> tuple[dict, object]:
    """Finder output with its assumption report, from the cache when available."""
    key = {"kind": "params", "d": d, "beta": complex(beta), "theta": theta}

    def build() -> dict:
        params = find_misiurewicz_parameter(d, beta=beta, theta=theta)
        report = verify_assumptions(params)
        return {"params": params.to_json(), "assumptions": report.to_json()}

    return cached("params", key, build)


def a2_verdict(doc: dict) -> str:
    return doc["assumptions"]["verdicts"]["A2"]


class Workspace:
    """Everything derived from one RunConfig, built on first use."""

    def __init__(self, config: RunConfig):
        self.config = config

    @cached_property
    def certificate(self) -> dict:
        cfg = self.config
        doc, _ = parameter_certificate(cfg.d, cfg.beta, cfg.theta)
        return doc

    @cached_property
    def params(self) -> FamilyParams:
        cfg = self.config
        if cfg.c is None:
            return _params_from_doc(self.certificate)
        certified = _params_from_doc(self.certificate) if not cfg.unchecked else None
        if certified is not None and abs(certified.c - complex(cfg.c)) < 1e-10:
            return certified
        if not cfg.unchecked:
            raise UncertifiedParameters(
                f"c={cfg.c} has no parameter certificate (certified c={certified.c}); pass --unchecked to proceed"
            )
        q0 = central_polynomial(cfg.d, complex(cfg.c))
        m = complex(q0(complex(cfg.c)))
        return FamilyParams(cfg.d, complex(cfg.c), complex(cfg.beta), cfg.theta, m, complex(q0.derivative()(m)))

    @cached_property
    def f(self):
        p = self.params
        return build_family(p.d, p.c, self.config.beta, p.theta)

    @cached_property
    def q0(self):
        return self.params.q0()

    @cached_property
    def siegel(self):
        return linearize(self.f.p, 200)

    @cached_property
    def boundary(self):
        return basin_boundary(self.q0)

    @cached_property
    def skeleton(self):
        return build_skeleton(self.q0, boundary=self.boundary, levels=6)

    @cached_property
    def mesh(self):
        return polar_mesh(self.siegel, self.config.nradius)

    @cached_property
    def motion(self):
        return graph_transform(self.f, self.skeleton, self.mesh)

    @cached_property
    def delta(self):
        n = 8
        zeta = self.config.nradius * np.sqrt(np.arange(n) / (n - 1))[:, None] * np.exp(2j * np.pi * np.arange(n) / n)[None, :]
        return delta_hat(self.f, zeta.ravel(), self.siegel.phi, resolution=200)

    @cached_property
    def radii(self) -> dict:
        bound = P.working_bound(self.f, self.siegel, self.config.nradius)
        return P.choose_radii(self.delta.value, bound, self.config.nradius, self.siegel)

    @cached_property
    def m_point(self):
        return self.skeleton.nearest(self.params.m)

    def random_base_point(self, rng: np.random.Generator) -> complex:
        zeta = self.config.nradius * math.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        return complex(self.siegel.phi(zeta))

    def slice_sample(self, z: complex, depth: int = 10, cap: int | None = None, seed: int = 0) -> P.SliceSample:
        """Slice sample seeded on the leaf through m over p^depth(z), so that it lies on J_z."""
        zn = z
        for _ in range(depth):
            zn = complex(self.f.p(zn))
        w0 = complex(P.pullback(self.f, self.m_point.orbit(60)[None, :], np.array([zn])).values[0, 0])
        return P.sample_slice_measure(self.f, z, depth, w0, cap=cap, seed=seed)


def _aggregate(kind: str, ws: Workspace, inputs: dict, runs: list[dict], verdict: str, measured: dict, t0: float) -> ProbeCertificate:
    cert = ProbeCertificate(
        kind,
        {"map_hash": content_hash(ws.f.to_json()), "params": ws.params, **inputs},
        {**measured, "runs": runs},
        verdict,
    )
    cert.runtime = time.perf_counter() - t0
    return cert


def expansivity_campaign(ws: Workspace, n_configs: int = 100, size: int = 50, n_iter: int = 200, depth: int = 10) -> ProbeCertificate:
    t0 = time.perf_counter()
    rng = np.random.default_rng(ws.config.seed)
    dh = ws.delta.value
    runs = []
    for i in range(n_configs):
        z = ws.random_base_point(rng)
        sample = ws.slice_sample(z, depth)
        A = P.localized_cluster(sample, size, int(rng.integers(2**31)))
        js = julia_slice(ws.f, z, GridSpec(0j, 1.0, 256, 256), 1024)
        cert = P.expansivity_probe(ws.f, z, A, n_iter, dh, js)
        runs.append({"z": z, "first_n": cert.measured["first_n"], "max_band_distance_pixels": cert.measured["max_band_distance_pixels"], "verdict": cert.verdict})
    rate = sum(r["verdict"] == "pass" for r in runs) / n_configs
    measured = {"pass_rate": rate, "delta_hat": dh}
    inputs = {"n_configs": n_configs, "size": size, "n_iter": n_iter, "depth": depth, "seed": ws.config.seed}
    return _aggregate("expansivity", ws, inputs, runs, "pass" if rate >= 0.95 else "fail", measured, t0)


def intersection_campaign(ws: Workspace, n_circles: int = 20, lo: float = 0.2, hi: float = 0.8) -> ProbeCertificate:
    t0 = time.perf_counter()
    radii = np.linspace(lo, hi, n_circles) * ws.config.nradius
    runs = []
    for r in radii:
        cert = P.postcritical_intersection(ws.f, ws.siegel, ws.motion, float(r), ws.params.c, ws.boundary)
        runs.append({"r": float(r), "confirmed": cert.measured["confirmed"], "crossings": cert.measured["crossings"], "verdict": cert.verdict})
    ok = all(r["confirmed"] >= 1 for r in runs)
    any_fail = any(r["verdict"] == "fail" for r in runs)
    verdict = "pass" if ok else ("fail" if any_fail else "inconclusive")
    measured = {"circles_with_crossing": sum(r["confirmed"] >= 1 for r in runs), "total_crossings": sum(r["confirmed"] for r in runs)}
    return _aggregate("intersections", ws, {"n_circles": n_circles, "radii": radii}, runs, verdict, measured, t0)


ROTATIONS = (math.pi / 8, math.pi / 4, 3 * math.pi / 8)
PHASES = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


def fatou_campaign(ws: Workspace, n_leaves: int = 40, n_samples: int = 10, n_iter: int = 200) -> ProbeCertificate:
    """Leaf-aligned candidates against rotated tangent seeds through slice samples."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(ws.config.seed)
    f, dh, r = ws.f, ws.delta.value, ws.radii["r"]
    leaves = ws.motion.leaves
    stride = max(1, len(leaves) // n_leaves)
    leaf_runs = []
    for leaf in leaves[::stride][:n_leaves]:
        z = ws.random_base_point(rng)
        res = P.classify_graph(f, P.leaf_candidate(f, leaf.base, z, r), n_iter, dh)
        leaf_runs.append({"w": leaf.base.w, "z": z, **res})
    seed_runs = []
    for _ in range(n_samples):
        z = ws.random_base_point(rng)
        sample = ws.slice_sample(z, 10, cap=256, seed=int(rng.integers(2**31)))
        w = complex(sample.points[rng.integers(len(sample.points))])
        slope = P.leaf_slope(f, ws.skeleton.nearest(w), z)
        for alpha in ROTATIONS:
            for psi in PHASES:
                g = P.tangent_candidate(z, w, P.rotated_slope(slope, alpha, psi), r, {"alpha": alpha, "psi": psi})
                seed_runs.append({"z": z, "w": w, "alpha": alpha, "psi": psi, **P.classify_graph(f, g, n_iter, dh)})
    leaf_nn = sum(x["classification"] == "non-normal" for x in leaf_runs)
    seed_rate = sum(x["classification"] == "non-normal" for x in seed_runs) / max(1, len(seed_runs))
    measured = {
        "leaf_non_normal": leaf_nn,
        "leaf_fatou_like": sum(x["classification"] == "fatou-like" for x in leaf_runs),
        "seed_non_normal_rate": seed_rate,
        "radii": ws.radii,
        "delta_hat": dh,
        "leaf_runs": leaf_runs,
    }
    verdict = "pass" if leaf_nn == 0 and seed_rate >= 0.8 else "fail"
    inputs = {"n_leaves": n_leaves, "n_samples": n_samples, "n_iter": n_iter, "rotations": ROTATIONS, "phases": PHASES, "seed": ws.config.seed}
    return _aggregate("fatou", ws, inputs, seed_runs, verdict, measured, t0)


def disjointness_demo(ws: Workspace, n_iter: int = 200) -> ProbeCertificate:
    """Two distinct leaves over a common disk, then a leaf against a tangent seed crossing it."""
    t0 = time.perf_counter()
    f, dh, r = ws.f, ws.delta.value, ws.radii["r"]
    z = complex(ws.mesh.z[0])
    a, b = ws.m_point, ws.skeleton.periodic_points[0]
    if a.w == b.w:
        b = ws.skeleton.periodic_points[1]
    g1 = P.leaf_candidate(f, a, z, r)
    g2 = P.leaf_candidate(f, b, z, r)
    w = complex(g1.values[0])
    g3 = P.tangent_candidate(z, w, P.rotated_slope(P.leaf_slope(f, a, z), ROTATIONS[1], 0.0), r)
    pair_leaves = P.fatou_disjointness_check(f, g1, g2, n_iter, dh)
    pair_cross = P.fatou_disjointness_check(f, g1, g3, n_iter, dh)
    runs = [
        {"pair": "leaf-leaf", "verdict": pair_leaves.verdict, **pair_leaves.measured},
        {"pair": "leaf-tangent", "verdict": pair_cross.verdict, **pair_cross.measured},
    ]
    ok = pair_leaves.measured["outcome"] == "disjoint"
    return _aggregate("disjointness", ws, {"n_iter": n_iter, "r": r, "z": z}, runs, "pass" if ok else "fail", {}, t0)


def ramification_default(ws: Workspace, n_max: int = 6) -> ProbeCertificate:
    from .potential import filled_radius

    omega = P.Bidisk(0j, 0.4 * ws.config.nradius, 0j, float(filled_radius(ws.f, 1.0)))
    return P.ramification_growth(ws.f, 0.2 + 0.1j, 0.01 + 0.005j, omega, n_max=n_max, seed=ws.config.seed)


def coincidence_default(ws: Workspace, n_points: int = 200) -> ProbeCertificate:
    from .potential import julia_coincidence_probe

    rng = np.random.default_rng(ws.config.seed)
    pts = []
    for i in range(n_points // 2):
        z = ws.random_base_point(rng)
        s = ws.slice_sample(z, 8, cap=4, seed=i)
        pts.append((z, complex(s.points[0])))
    for _ in range(n_points - len(pts)):
        z = ws.random_base_point(rng)
        pts.append((z, complex(2.5 * math.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random()))))
    return julia_coincidence_probe(ws.f, np.array(pts))


def certified_ok(doc: dict) -> bool:
    return a2_verdict(doc) == VERIFIED
