"""The ten acceptance criteria, shared by `skewlab verify` and the test suite."""

from __future__ import annotations

import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pipeline
from .config import RunConfig
from .family import GOLDEN, find_misiurewicz_parameter
from .motion import vertical_expansion
from .potential import green_value, green_values
from .siegel import invariant_circle, linearize, rotation_number


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    runtime: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}"

    def to_json(self) -> dict:
        # runtimes stay out of the serialized summary so reruns compare equal
        return {"number": self.number, "name": self.name, "passed": self.passed, "measured": self.measured}


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def green_equation(ws: pipeline.Workspace, n_points: int = 10_000) -> CriterionResult:
    rng = np.random.default_rng(ws.config.seed)
    z = rng.uniform(-2, 2, n_points) + 1j * rng.uniform(-2, 2, n_points)
    w = rng.uniform(0.1, 10, n_points) * np.exp(2j * np.pi * rng.random(n_points))
    f = ws.f

    def run():
        g0, _, e0, _ = green_values(f, z, w)
        z1, w1 = f(z, w)
        g1, _, e1, _ = green_values(f, z1, w1)
        excess = np.abs(g1 - f.d * g0) - (e1 + f.d * e0)
        return excess

    excess, dt = _timed(run)
    violations = int((excess > 0).sum())
    return CriterionResult(
        1, "Green functional equation", violations == 0 and dt < 10.0,
        {"points": n_points, "violations": violations, "max_excess": float(excess.max())}, dt,
    )


def bottcher_asymptotic(ws: pipeline.Workspace) -> CriterionResult:
    f = ws.f
    w = 1e6
    est = green_value(f, 0.0, w)
    # independent oracle: 40 direct steps in extended precision
    import mpmath

    mpmath.mp.dps = 60
    zz, ww = mpmath.mpc(0), mpmath.mpc(w)
    p = [mpmath.mpc(c) for c in f.p.coefficients]
    rows = [[mpmath.mpc(c) for c in row.coefficients] for row in f.q.rows]
    for _ in range(40):
        A = [sum(c * zz**k for k, c in enumerate(row)) for row in rows]
        ww = sum(a * ww**j for j, a in enumerate(A))
        zz = sum(c * zz**k for k, c in enumerate(p))
    oracle = float((mpmath.log(abs(ww)) + mpmath.log(abs(mpmath.mpc(f.q.leading))) / (f.d - 1)) / mpmath.mpf(f.d) ** 40)
    target = math.log(w) - math.log(3) / 2
    err = abs(est.value - target)
    return CriterionResult(
        2, "Bottcher asymptotic", err < 1e-6 and abs(oracle - est.value) < 1e-10,
        {"G": est.value, "target": target, "error": err, "oracle": oracle, "oracle_gap": abs(oracle - est.value)},
    )


def parameter_certificate(ws: pipeline.Workspace) -> CriterionResult:
    params, dt = _timed(lambda: find_misiurewicz_parameter(3, beta=ws.config.beta, theta=ws.config.theta))
    errs = {
        "c": abs(params.c - math.sqrt(3)),
        "m": abs(params.m + math.sqrt(3) / 2),
        "multiplier": abs(params.multiplier - 2.25),
    }
    return CriterionResult(3, "parameter certificate", max(errs.values()) < 1e-10 and dt < 1.0, {**errs, "runtime_ok": dt < 1.0}, dt)


def siegel_linearization(ws: pipeline.Workspace) -> CriterionResult:
    sd = linearize(ws.f.p, 200)
    res = sd.conjugacy_residual(0.5 * sd.radius_estimate)
    circle = invariant_circle(sd, 0.5 * sd.radius_estimate)
    rho = rotation_number(sd, circle)
    err = abs(rho - GOLDEN)
    return CriterionResult(
        4, "Siegel linearization", res < 1e-8 and err < 1e-6,
        {"radius_estimate": sd.radius_estimate, "residual": res, "rotation": rho, "rotation_error": err},
    )


def motion_equivariance(ws: pipeline.Workspace) -> CriterionResult:
    mo = ws.motion
    worst = max(leaf.residual for leaf in mo.leaves)
    m_leaf = next(leaf for leaf in mo.leaves if leaf.base.w == ws.m_point.w)
    at0 = vertical_expansion(ws.f, m_leaf, 50, _single_point_mesh(ws))
    across = vertical_expansion(ws.f, m_leaf, 50, ws.mesh)
    target = math.log(abs(ws.params.multiplier))
    ok = worst < 1e-6 and abs(at0 - target) < 1e-3 and across > 0
    return CriterionResult(
        5, "motion equivariance", ok,
        {"leaves": len(mo.leaves), "failures": len(mo.failures), "max_residual": worst, "rate_at_0": at0, "target": target, "min_rate_mesh": across},
    )


def _single_point_mesh(ws: pipeline.Workspace):
    from .siegel import BaseMesh

    return BaseMesh(0.0, 0, 0, np.array([0j]), np.array([0j]))


def expansivity(ws: pipeline.Workspace, n_configs: int = 100) -> CriterionResult:
    cert, dt = _timed(lambda: pipeline.expansivity_campaign(ws, n_configs))
    rate = cert.measured["pass_rate"]
    firsts = [r["first_n"] for r in cert.measured["runs"] if r["first_n"] is not None]
    return CriterionResult(
        6, "expansivity", rate >= 0.95 and dt < 300.0,
        {"configs": n_configs, "pass_rate": rate, "max_first_n": max(firsts) if firsts else None, "delta_hat": cert.measured["delta_hat"]}, dt,
    )


def intersections(ws: pipeline.Workspace, n_circles: int = 20) -> CriterionResult:
    cert = pipeline.intersection_campaign(ws, n_circles)
    per = [r["confirmed"] for r in cert.measured["runs"]]
    return CriterionResult(7, "post-critical intersections", min(per) >= 1, {"circles": n_circles, "confirmed_per_circle": per})


def ramification(ws: pipeline.Workspace, n_max: int = 6) -> CriterionResult:
    cert = pipeline.ramification_default(ws, n_max)
    m = cert.measured
    ok = m["slope"] is not None and m["slope"] <= math.log(3) + 0.15 and m["stable"]
    return CriterionResult(
        8, "ramification growth", ok,
        {"counts": m["counts"], "counts_refined": m["counts_refined"], "slope": m["slope"], "bound": m["bound"], "stable": m["stable"]},
    )


def fatou_asymmetry(ws: pipeline.Workspace, n_leaves: int = 40, n_samples: int = 10) -> CriterionResult:
    cert = pipeline.fatou_campaign(ws, n_leaves, n_samples)
    m = cert.measured
    ok = m["leaf_non_normal"] == 0 and m["seed_non_normal_rate"] >= 0.8
    return CriterionResult(
        9, "Fatou probe asymmetry", ok,
        {"leaf_non_normal": m["leaf_non_normal"], "leaf_fatou_like": m["leaf_fatou_like"], "seed_non_normal_rate": m["seed_non_normal_rate"]},
    )


DETERMINISM_COMMANDS = (
    ("find-params",),
    ("render-slice", "--grid", "128x128", "--nmax", "512"),
    ("linearize",),
    ("probe", "ramification", "--nmax", "4"),
    ("probe", "expansivity", "--samples", "3"),
    ("probe", "intersections", "--circles", "2"),
)


def determinism(ws: pipeline.Workspace, commands=DETERMINISM_COMMANDS) -> CriterionResult:
    """Rerun CLI commands with one and eight threads in fresh caches and compare every output byte."""
    digests: dict[int, dict[str, bytes]] = {}
    codes = {}
    with tempfile.TemporaryDirectory() as tmp:
        for threads in (1, 8):
            root = Path(tmp) / f"t{threads}"
            env = dict(os.environ, SKEWLAB_CACHE=str(root / "cache"))
            for i, cmd in enumerate(commands):
                out = root / "out" / str(i)
                proc = subprocess.run(
                    [sys.executable, "-m", "skewlab", *cmd, "--threads", str(threads), "--out", str(out)],
                    env=env, capture_output=True,
                )
                codes[(threads, i)] = proc.returncode
            files = sorted(p for p in (root / "out").rglob("*") if p.is_file())
            digests[threads] = {str(p.relative_to(root / "out")): p.read_bytes() for p in files}
    same = digests[1] == digests[8] and len(digests[1]) > 0
    diff = sorted(k for k in set(digests[1]) | set(digests[8]) if digests[1].get(k) != digests[8].get(k))
    usable = all(codes[(1, i)] == codes[(8, i)] and codes[(1, i)] in (0, 2, 3) for i in range(len(commands)))
    return CriterionResult(
        10, "determinism across thread counts", same and usable,
        {"files": len(digests[1]), "differing": diff, "exit_codes": [codes[(1, i)] for i in range(len(commands))]},
    )


CRITERIA = {
    1: green_equation,
    2: bottcher_asymptotic,
    3: parameter_certificate,
    4: siegel_linearization,
    5: motion_equivariance,
    6: expansivity,
    7: intersections,
    8: ramification,
    9: fatou_asymmetry,
    10: determinism,
}

QUICK = {
    1: lambda ws: green_equation(ws, 2_000),
    6: lambda ws: expansivity(ws, 10),
    7: lambda ws: intersections(ws, 4),
    8: lambda ws: ramification(ws, 4),
    9: lambda ws: fatou_asymmetry(ws, 10, 2),
}


def run_criterion(n: int, ws: pipeline.Workspace | None = None, quick: bool = False) -> CriterionResult:
    ws = ws or pipeline.Workspace(RunConfig())
    fn = QUICK.get(n, CRITERIA[n]) if quick else CRITERIA[n]
    t0 = time.perf_counter()
    res = fn(ws)
    if not res.runtime:
        res.runtime = time.perf_counter() - t0
    return res


def run_all(ws: pipeline.Workspace | None = None, quick: bool = False, numbers=None) -> list[CriterionResult]:
    ws = ws or pipeline.Workspace(RunConfig())
    if numbers is None:
        numbers = [n for n in CRITERIA if not (quick and n == 10)]
    return [run_criterion(n, ws, quick) for n in numbers]
