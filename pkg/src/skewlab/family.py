"""The example family q_z(w) = w^d/d - c w^(d-1)/(d-1) + beta z over p(z) = lambda z + z^d.

Critical points of q_0 are 0 (super-attracting, multiplicity d-1) and c.
The free parameter c is tuned so that q_0^k(c) lands on a repelling
periodic point m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import kernels
from .core import FiberPolynomial, Polynomial1D, SkewProduct, doubling_radius
from .potential import GridSpec, param_green, trap_radius

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
VERIFIED, REFUTED, INCONCLUSIVE = "verified-numerically", "refuted", "inconclusive"


class ParameterSearchError(RuntimeError):
    """No admissible parameter was found from the seed scan."""


def fiber_polynomial(d: int, c: complex, beta: complex) -> FiberPolynomial:
    rows = [Polynomial1D((0j,)) for _ in range(d + 1)]
    rows[0] = Polynomial1D((0j, complex(beta)))
    rows[d - 1] = Polynomial1D((-complex(c) / (d - 1),))
    rows[d] = Polynomial1D((1.0 / d,))
    return FiberPolynomial(tuple(rows))


def base_polynomial(d: int, theta: float) -> Polynomial1D:
    coeffs = [0j] * (d + 1)
    coeffs[1] = complex(math.cos(2 * math.pi * theta), math.sin(2 * math.pi * theta))
    coeffs[d] = 1.0
    return Polynomial1D(tuple(coeffs))


def central_polynomial(d: int, c: complex) -> Polynomial1D:
    """q_0(w) = w^d/d - c w^(d-1)/(d-1)."""
    coeffs = [0j] * (d + 1)
    coeffs[d - 1] = -complex(c) / (d - 1)
    coeffs[d] = 1.0 / d
    return Polynomial1D(tuple(coeffs))


def build_family(d: int, c: complex, beta: complex = 1.0, theta: float = GOLDEN) -> SkewProduct:
    if d < 3:
        raise ValueError("d >= 3 required")
    return SkewProduct(base_polynomial(d, theta), fiber_polynomial(d, c, beta))


@dataclass(frozen=True)
class FamilyParams:
    d: int
    c: complex
    beta: complex
    theta: float
    m: complex
    multiplier: complex
    k: int = 1
    period: int = 1
    residuals: dict = field(default_factory=dict, compare=False)

    def q0(self) -> Polynomial1D:
        return central_polynomial(self.d, self.c)

    def family(self, beta: complex | None = None) -> SkewProduct:
        return build_family(self.d, self.c, self.beta if beta is None else beta, self.theta)

    def with_beta(self, beta: complex) -> "FamilyParams":
        return FamilyParams(self.d, self.c, beta, self.theta, self.m, self.multiplier, self.k, self.period, self.residuals)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "c": self.c,
            "beta": self.beta,
            "theta": self.theta,
            "m": self.m,
            "multiplier": self.multiplier,
            "k": self.k,
            "period": self.period,
            "residuals": self.residuals,
        }


# ---------------------------------------------------------------- parameter search


def _orbit_with_c_derivative(d: int, c, w, dw, steps: int):
    """Iterate q_{0,c} on w while tracking dw/dc."""
    for _ in range(steps):
        q = w**d / d - c * w ** (d - 1) / (d - 1)
        qp = w ** (d - 1) - c * w ** (d - 2)
        qc = -(w ** (d - 1)) / (d - 1)
        w, dw = q, qp * dw + qc
    return w, dw


def _misiurewicz_residual(d: int, c, k: int, period: int):
    m, dm = _orbit_with_c_derivative(d, c, c, 1.0 + 0 * c, k)
    y, dy = _orbit_with_c_derivative(d, c, m, dm, period)
    return y - m, dy - dm, m


def _mp_residuals(d: int, c: complex, m: complex, k: int, period: int, dps: int = 50) -> dict:
    """Residuals of the defining equations re-evaluated in extended precision."""
    with mpmath.workdps(dps):
        cc, mm = mpmath.mpc(c), mpmath.mpc(m)

        def q(w):
            return w**d / d - cc * w ** (d - 1) / (d - 1)

        def qp(w):
            return w ** (d - 1) - cc * w ** (d - 2)

        w = cc
        for _ in range(k):
            w = q(w)
        landing = abs(w - mm)
        y, mult = mm, mpmath.mpf(1)
        for _ in range(period):
            mult *= qp(y)
            y = q(y)
        return {
            "landing": float(landing),
            "periodic": float(abs(y - mm)),
            "multiplier": complex(mult),
        }


def _polish_extended(d: int, c: complex, k: int, period: int, dps: int = 40) -> complex:
    with mpmath.workdps(dps):
        cc = mpmath.mpc(c)
        for _ in range(8):
            h, dh, _ = _misiurewicz_residual(d, cc, k, period)
            if dh == 0:
                break
            cc -= h / dh
        return complex(cc)


def _minimal_period(q0: Polynomial1D, w: complex, period: int, tol: float = 1e-8) -> int:
    y = w
    for n in range(1, period + 1):
        y = q0(y)
        if abs(y - w) < tol * max(1.0, abs(w)) and period % n == 0:
            return n
    return period


def _candidate(d: int, c: complex, k: int, period: int, theta: float, beta: complex, extended: bool) -> FamilyParams | None:
    if extended:
        c = _polish_extended(d, c, k, period)
    if abs(c) < 1e-6 or not np.isfinite(c):
        return None
    q0 = central_polynomial(d, c)
    m = c
    for _ in range(k):
        m = q0(m)
    if abs(m) < 1e-6 or abs(m - c) < 1e-6:
        return None
    if _minimal_period(q0, m, period) != period:
        return None
    res = _mp_residuals(d, c, m, k, period)
    mult = res["multiplier"]
    if not abs(mult) > 1.0 + 1e-9:
        return None
    if res["landing"] >= 1e-12 or res["periodic"] >= 1e-12:
        return None
    residuals = {"landing": res["landing"], "periodic": res["periodic"]}
    return FamilyParams(d, complex(c), complex(beta), theta, complex(m), mult, k, period, residuals)


def _closed_form_seeds(d: int, k: int, period: int) -> list[complex]:
    """For d = 3, k = 1, period 1: m = -c^3/6 and u = c^2 solves u^3 + 9u^2 - 108 = 0."""
    if (d, k, period) != (3, 1, 1):
        return []
    out = []
    for u in np.roots([1.0, 9.0, 0.0, -108.0]):
        if abs(u.imag) < 1e-12 and u.real > 0:
            out.append(complex(math.sqrt(u.real)))
    return out


def find_misiurewicz_parameter(
    d: int,
    k: int = 1,
    period: int = 1,
    beta: complex = 1.0,
    theta: float = GOLDEN,
    extended: bool = True,
    require_boundary: bool = True,
    seed_shape: tuple[int, int] = (26, 21),
    resolution: int = 600,
) -> FamilyParams:
    """Solve q_0^k(c) = m, q_0^period(m) = m with |(q_0^period)'(m)| > 1.

    Candidates come from a closed form when one exists and otherwise from a
    Newton scan over c in [0.5, 3] x [-1, 1]. They are ordered by residual
    decade, then seed index. With ``require_boundary`` the first candidate
    whose m lies on the rasterized boundary of the immediate basin of 0 wins.
    """
    if d < 3:
        raise ValueError("d >= 3 required")
    seeds = _closed_form_seeds(d, k, period)
    xs = np.linspace(0.5, 3.0, seed_shape[0])
    ys = np.linspace(-1.0, 1.0, seed_shape[1])
    grid = (xs[None, :] + 1j * ys[:, None]).ravel()
    c = grid.copy()
    with np.errstate(all="ignore"):
        for _ in range(80):
            h, dh, _ = _misiurewicz_residual(d, c, k, period)
            c = c - h / dh
        h, _, _ = _misiurewicz_residual(d, c, k, period)
    scan = [(float(abs(h[i])), i, complex(c[i])) for i in range(len(c)) if np.isfinite(c[i]) and abs(h[i]) < 1e-8]
    ordered = [(0.0, -1 - i, s) for i, s in enumerate(seeds)] + scan

    def key(item):
        res, idx, _ = item
        decade = max(-14, math.floor(math.log10(res))) if res > 0 else -14
        return (decade, idx)

    chosen: list[FamilyParams] = []
    for _, _, cand in sorted(ordered, key=key):
        params = _candidate(d, cand, k, period, theta, beta, extended)
        if params is None or any(abs(params.c - q.c) < 1e-9 for q in chosen):
            continue
        chosen.append(params)
        if not require_boundary:
            return params
        bb = basin_boundary(params.q0(), resolution=resolution)
        if bb.membership(params.m) == "member":
            return params
    raise ParameterSearchError(f"no admissible parameter for d={d}, k={k}, period={period}")


# ---------------------------------------------------------------- basin of 0


@dataclass(frozen=True, eq=False)
class BasinBoundary:
    points: np.ndarray
    grid: GridSpec
    basin: np.ndarray  # bool mask of the immediate basin component
    unresolved: int
    trap_radius: float
    n_max: int
    _tree: cKDTree = field(repr=False, default=None)

    @property
    def pixel(self) -> float:
        return self.grid.pixel_diagonal

    def distance(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.complex128)
        dist, _ = self._tree.query(np.column_stack([w.ravel().real, w.ravel().imag]))
        return dist.reshape(w.shape)

    def membership(self, w: complex) -> str:
        """'member' within one pixel diagonal, 'outside' beyond three, else 'inconclusive'."""
        dist = float(self.distance(w))
        if dist <= self.pixel:
            return "member"
        if dist > 3 * self.pixel:
            return "outside"
        return "inconclusive"

    def contains(self, w) -> np.ndarray:
        i, j = self.grid.index(w)
        ok = (i >= 0) & (i < self.grid.height) & (j >= 0) & (j < self.grid.width)
        out = np.zeros(np.shape(w), dtype=bool)
        out[ok] = self.basin[i[ok], j[ok]]
        return out


def _basin_raster(q0: Polynomial1D, grid: GridSpec, n_max: int):
    d = q0.degree
    mags = [abs(a) for a in q0.coefficients]
    r_k = _filled_radius_1d(q0)
    r_trap = trap_radius(mags, r_k, contracting=True)
    r_esc = doubling_radius(q0.leading, q0.abs_sum(1.0, below=d))
    coefs = q0.as_array()[None, :]
    status, _, _ = kernels.classify_grid(grid.points(), coefs, r_esc, r_trap, n_max, 0.0, 0)
    return status, r_trap


def _filled_radius_1d(q0: Polynomial1D) -> float:
    d = q0.degree
    desc = [abs(q0.leading)] + [-abs(q0.coefficients[j]) for j in range(d - 1, -1, -1)]
    desc[-2] -= 1.0
    roots = np.roots(desc)
    real = [r.real for r in roots if abs(r.imag) < 1e-9 and r.real > 0]
    return max(real)


def basin_boundary(q0: Polynomial1D, grid: GridSpec | None = None, n_max: int = 500, resolution: int = 800) -> BasinBoundary:
    """Boundary pixels of the immediate basin of the super-attracting point 0."""
    b = q0.coefficients
    if abs(b[0]) > 1e-12 or abs(b[1]) > 1e-12:
        raise ValueError("0 must be a super-attracting fixed point of q0")
    r_k = _filled_radius_1d(q0)
    if grid is None:
        grid = GridSpec(0j, 1.02 * r_k, resolution, resolution)
    status, r_trap = _basin_raster(q0, grid, n_max)
    trapped = status == kernels.TRAPPED
    labels, _ = ndimage.label(trapped)  # 4-connectivity
    i0, j0 = grid.index(0j)
    lab0 = labels[int(i0), int(j0)]
    if lab0 == 0:
        raise ValueError("origin pixel is not captured; refine the grid")
    basin = labels == lab0
    eroded = ndimage.binary_erosion(basin, structure=np.ones((3, 3), dtype=bool), border_value=0)
    edge = basin & ~eroded
    pts = grid.points()[edge]
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    unresolved = int((status == kernels.BOUNDED).sum())
    return BasinBoundary(pts, grid, basin, unresolved, r_trap, n_max, tree)


def basin_window(q0: Polynomial1D, center: complex, half: float, resolution: int, coarse: BasinBoundary, n_max: int = 800) -> BasinBoundary:
    """High-resolution immediate-basin mask on a small window.

    Window components of the captured set are attributed to the immediate
    basin when most of their pixels fall in the coarse global basin mask.
    """
    grid = GridSpec(complex(center), half, resolution, resolution)
    status, r_trap = _basin_raster(q0, grid, n_max)
    trapped = status == kernels.TRAPPED
    labels, n_lab = ndimage.label(trapped)
    pts = grid.points()
    in_coarse = coarse.contains(pts)
    basin = np.zeros(trapped.shape, dtype=bool)
    if n_lab:
        idx = np.arange(1, n_lab + 1)
        frac = ndimage.mean(in_coarse.astype(float), labels, idx)
        good = idx[frac > 0.5]
        basin = np.isin(labels, good)
    eroded = ndimage.binary_erosion(basin, structure=np.ones((3, 3), dtype=bool), border_value=1)
    edge = basin & ~eroded
    bpts = pts[edge]
    tree = cKDTree(np.column_stack([bpts.real, bpts.imag])) if len(bpts) else cKDTree(np.zeros((1, 2)) + 1e300)
    return BasinBoundary(bpts, grid, basin, int((status == kernels.BOUNDED).sum()), r_trap, n_max, tree)


# ---------------------------------------------------------------- periodic points


@dataclass(frozen=True)
class PeriodicPoint:
    w: complex
    period: int
    multiplier: complex


def _iterate_with_derivative(q0: Polynomial1D, w, n: int):
    dq = q0.derivative()
    der = np.ones_like(w)
    for _ in range(n):
        der = der * dq(w)
        w = q0(w)
    return w, der


def periodic_points(q0: Polynomial1D, period_max: int, seeds: np.ndarray, dedup: float = 1e-9) -> list[PeriodicPoint]:
    """Periodic points of period <= period_max reached by Newton from ``seeds``."""
    seeds = np.asarray(seeds, dtype=np.complex128).ravel()
    found: list[PeriodicPoint] = []
    for n in range(1, period_max + 1):
        w = seeds.copy()
        with np.errstate(all="ignore"):
            for _ in range(60):
                y, der = _iterate_with_derivative(q0, w, n)
                w = w - (y - w) / (der - 1.0)
            y, _ = _iterate_with_derivative(q0, w, n)
        ok = np.isfinite(w) & (np.abs(y - w) < 1e-10 * np.maximum(1.0, np.abs(w)))
        for cand in w[ok]:
            cand = complex(cand)
            if any(abs(cand - p.w) < dedup for p in found):
                continue
            per = _minimal_period(q0, cand, n)
            _, mult = _iterate_with_derivative(q0, np.array([cand]), per)
            found.append(PeriodicPoint(cand, per, complex(mult[0])))
    found.sort(key=lambda p: (p.period, round(p.w.real, 9), round(p.w.imag, 9)))
    return found


# ---------------------------------------------------------------- assumptions


@dataclass(frozen=True)
class AssumptionReport:
    A1: dict
    A2: dict
    A3: dict
    verdicts: dict
    caveats: list

    def to_json(self) -> dict:
        return {"A1": self.A1, "A2": self.A2, "A3": self.A3, "verdicts": self.verdicts, "caveats": self.caveats}


def nontrivial_fixed_point(p: Polynomial1D) -> complex:
    """A fixed point of p other than 0 (smallest modulus, then argument)."""
    coeffs = list(p.coefficients)
    coeffs[1] -= 1.0
    roots = [complex(r) for r in Polynomial1D(tuple(coeffs)).roots() if abs(r) > 1e-9]
    return min(roots, key=lambda r: (round(abs(r), 12), math.atan2(r.imag, r.real)))


def check_a1(q0: Polynomial1D, bb: BasinBoundary, period_max: int = 3, n_seeds: int = 400) -> dict:
    seeds = bb.points[:: max(1, len(bb.points) // n_seeds)]
    pts = periodic_points(q0, period_max, seeds)
    on_boundary = [pp for pp in pts if float(bb.distance(pp.w)) <= 2 * bb.pixel]
    mults = [abs(pp.multiplier) for pp in on_boundary]
    edge = np.zeros(bb.basin.shape, dtype=bool)
    i, j = bb.grid.index(bb.points)
    edge[i, j] = True
    labels, n_comp = ndimage.label(edge, structure=np.ones((3, 3), dtype=bool))
    sizes = np.bincount(labels.ravel())[1:] if n_comp else np.zeros(1)
    score = float(sizes.max() / sizes.sum()) if n_comp else 0.0
    if on_boundary and min(mults) <= 1.0:
        verdict = REFUTED
    elif not on_boundary or n_comp != 1:
        verdict = INCONCLUSIVE
    else:
        verdict = VERIFIED
    return {
        "periodic_points": [{"w": pp.w, "period": pp.period, "multiplier": pp.multiplier} for pp in on_boundary],
        "min_multiplier_modulus": min(mults) if mults else None,
        "boundary_components": int(n_comp),
        "connectivity_score": score,
        "pixel": bb.pixel,
        "verdict": verdict,
    }


def check_a2(q0: Polynomial1D, c: complex, m: complex, k: int, period: int, bb: BasinBoundary) -> dict:
    y = complex(c)
    for _ in range(k):
        y = q0(y)
    landing = abs(y - m)
    z = complex(m)
    mult = 1.0 + 0j
    for _ in range(period):
        mult *= q0.derivative()(z)
        z = q0(z)
    periodic = abs(z - m)
    membership = bb.membership(m)
    dist = float(bb.distance(m))
    if landing >= 1e-12 or periodic >= 1e-12 or abs(mult) <= 1.0 or membership == "outside":
        verdict = REFUTED
    elif membership == "member":
        verdict = VERIFIED
    else:
        verdict = INCONCLUSIVE
    return {
        "landing_residual": landing,
        "periodic_residual": periodic,
        "multiplier": mult,
        "multiplier_modulus": abs(mult),
        "m_membership": membership,
        "m_distance": dist,
        "critical_point_distance": float(bb.distance(c)),
        "pixel": bb.pixel,
        "verdict": verdict,
    }


def check_a3(params: FamilyParams, z1: complex, beta: complex, n_iter: int = 200) -> dict:
    d = params.d
    a = complex(beta * z1) ** (1.0 / d)
    q1 = critical_polynomial_fiber(params, z1, beta)
    r_esc = doubling_radius(q1.leading, q1.abs_sum(1.0, below=d))
    w = complex(params.c)
    escaped_at = None
    for n in range(1, n_iter + 1):
        w = q1(w)
        if not abs(w) <= r_esc:
            escaped_at = n
            break
    pg = param_green(params.c, a, d)
    g_image = d * pg.g_at_c
    return {
        "beta": beta,
        "z1": z1,
        "a": a,
        "escape_radius": r_esc,
        "escaped_at": escaped_at,
        "g_critical_image": g_image,
        "G_param": pg.value,
        "escape_inequality": bool(g_image > pg.value),
        "verdict": VERIFIED if escaped_at is not None else INCONCLUSIVE,
    }


def critical_polynomial_fiber(params: FamilyParams, z1: complex, beta: complex) -> Polynomial1D:
    """q_{z1} for a fixed point z1 of p, i.e. P_{c,a} with a^d = beta z1."""
    coeffs = list(params.q0().coefficients)
    coeffs[0] = complex(beta) * complex(z1)
    return Polynomial1D(tuple(coeffs))


def verify_assumptions(
    params: FamilyParams,
    z1: complex | None = None,
    beta: complex | None = None,
    period_max: int = 3,
    resolution: int = 800,
) -> AssumptionReport:
    q0 = params.q0()
    if z1 is None:
        z1 = nontrivial_fixed_point(base_polynomial(params.d, params.theta))
    if beta is None:
        beta = params.beta
    bb = basin_boundary(q0, resolution=resolution)
    a1 = check_a1(q0, bb, period_max)
    a2 = check_a2(q0, params.c, params.m, params.k, params.period, bb)
    a3 = check_a3(params, complex(z1), complex(beta))
    caveats = [
        "A1 connectivity is judged on the rasterized boundary at the working resolution",
    ]
    if a2["critical_point_distance"] <= 2 * bb.pixel:
        caveats.append(
            "the free critical point c itself lies within two pixels of the boundary of the immediate basin of 0"
        )
    if a3["verdict"] == INCONCLUSIVE:
        caveats.append("the critical point c stays bounded in the fiber over z1 for this beta")
    verdicts = {"A1": a1["verdict"], "A2": a2["verdict"], "A3": a3["verdict"]}
    return AssumptionReport(a1, a2, a3, verdicts, caveats)
