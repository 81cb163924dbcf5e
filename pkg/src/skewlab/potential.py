"""Green potentials, vertical filled Julia sets and slice rasters.

Escape-rate estimates use the weighted sup-norm

    Phi(z, w) = max(log|z| + l_p, log|w| + l_q),   l = log|lead| / (d - 1),

which is exactly multiplicative (Phi -> d Phi) under the leading homogeneous
part. Along an orbit, |Phi(F x) - d Phi(x)| <= tau(Phi(x)) with
tau(Phi) = -log(1 - K e^{-Phi}) once Phi exceeds a threshold Phi*, and beyond
Phi* the errors shrink at least geometrically. This yields a rigorous tail
bound d^{-n} tau(Phi_n) 2 / (2d - 1) for the truncated limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError, cKDTree

from . import kernels
from .certificates import ProbeCertificate, content_hash
from .core import Polynomial1D, SkewProduct, doubling_radius

EPS = np.finfo(float).eps
PHI_CAP = 100.0
EXTRA_STEPS = 64


@dataclass(frozen=True)
class GreenEstimate:
    value: float
    depth: int
    error_bound: float
    escaped: bool


@dataclass(frozen=True)
class EscapeModel:
    """Constants of the certified escape criterion for one potential."""

    d: int
    k_t: float  # tau(Phi) = -log(1 - k_t e^{-Phi})
    phi_star: float  # escape threshold
    bounded_log: float  # bound on Phi at the first step beyond Phi*

    def tau(self, phi):
        return -np.log1p(-self.k_t * np.exp(-phi))

    def tail(self, phi, depth):
        return self.tau(phi) * 2.0 / (2 * self.d - 1) / float(self.d) ** depth

    def bounded_error(self, n_max: int) -> float:
        return (self.bounded_log + math.log(2.0)) / float(self.d) ** (n_max + 1)


def _threshold(d: int, k_t: float, phi_min: float) -> float:
    return max(math.log(2.0 * k_t) if k_t > 0 else -math.inf, phi_min, 2.0 * math.log(2.0) / (d - 1))


def two_variable_model(f: SkewProduct) -> EscapeModel:
    if not f.diagonal_top():
        raise ValueError("escape bounds need the only degree-d terms to be z^d and w^d")
    d = f.d
    ap, aq = abs(f.p.leading), abs(f.q.leading)
    lp, lq = math.log(ap) / (d - 1), math.log(aq) / (d - 1)
    c0, c1 = min(math.exp(lp), math.exp(lq)), max(math.exp(lp), math.exp(lq))

    def lower(m: float) -> float:
        return max(math.exp(lp) * f.p.abs_sum(m, below=d), math.exp(lq) * f.q.lower_bound_sum(m, m))

    k_t = lower(1.0) * c1 / c0**d
    phi_star = _threshold(d, k_t, math.log(c1))
    bounded = math.log(math.exp(d * phi_star) + lower(max(1.0, math.exp(phi_star) / c0)))
    return EscapeModel(d, k_t, phi_star, bounded)


def fiber_model(f: SkewProduct, z_bound: float) -> EscapeModel:
    """Escape constants for w -> q_z(w) valid while the base orbit stays in |z| <= z_bound."""
    d = f.d
    lq = math.log(abs(f.q.leading)) / (d - 1)
    k_t = f.q.lower_bound_sum(z_bound, 1.0) * math.exp((2 - d) * lq)
    phi_star = _threshold(d, k_t, lq)
    m = max(1.0, math.exp(phi_star - lq))
    bounded = math.log(math.exp(d * phi_star) + math.exp(lq) * f.q.lower_bound_sum(z_bound, m))
    return EscapeModel(d, k_t, phi_star, bounded)


def polynomial_model(poly: Polynomial1D) -> EscapeModel:
    d = poly.degree
    lq = math.log(abs(poly.leading)) / (d - 1)
    low = poly.abs_sum(1.0, below=d)
    k_t = low * math.exp((2 - d) * lq)
    phi_star = _threshold(d, k_t, lq)
    m = max(1.0, math.exp(phi_star - lq))
    bounded = math.log(math.exp(d * phi_star) + math.exp(lq) * poly.abs_sum(m, below=d))
    return EscapeModel(d, k_t, phi_star, bounded)


def _drive(step, phi_of, state, model: EscapeModel, n_max: int, tol: float, extra: int = EXTRA_STEPS):
    """Shared vectorized escape loop.

    ``state`` is a tuple of equally shaped complex arrays advanced by ``step``;
    ``phi_of`` maps a state to Phi. Returns value, depth, error, escaped arrays.
    """
    shape = state[0].shape
    value = np.zeros(shape)
    depth = np.zeros(shape, dtype=np.int64)
    error = np.zeros(shape)
    escaped = np.zeros(shape, dtype=bool)
    esc_at = np.full(shape, -1, dtype=np.int64)
    active = np.ones(shape, dtype=bool)
    d = model.d
    n = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        while active.any():
            phi = phi_of(state)
            newly = active & ~escaped & (phi >= model.phi_star)
            escaped |= newly
            esc_at[newly] = n
            scale = float(d) ** (-n)
            tail = np.where(escaped & active, model.tail(np.where(escaped, phi, model.phi_star), n), np.inf)
            done_esc = active & escaped & ((tail <= tol) | (phi >= PHI_CAP) | (n - esc_at >= extra))
            if done_esc.any():
                val = scale * phi[done_esc]
                value[done_esc] = val
                depth[done_esc] = n
                error[done_esc] = tail[done_esc] + 4 * EPS * (np.abs(val) + scale * (n + 1))
                active &= ~done_esc
            if n >= n_max:
                done_b = active & ~escaped
                if done_b.any():
                    depth[done_b] = n
                    error[done_b] = model.bounded_error(n_max)
                    active &= ~done_b
            if not active.any():
                break
            state = step(state, active)
            n += 1
    return value, depth, error, escaped


def green_values(f: SkewProduct, z, w, n_max: int = 64, tol: float = 1e-12):
    """Vectorized :func:`green_value`; returns (value, depth, error_bound, escaped) arrays."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    model = two_variable_model(f)
    d = f.d
    lp = math.log(abs(f.p.leading)) / (d - 1)
    lq = math.log(abs(f.q.leading)) / (d - 1)
    z = np.array(z, dtype=np.complex128, ndmin=1)
    w = np.array(w, dtype=np.complex128, ndmin=1)
    z, w = np.broadcast_arrays(z, w)
    z, w = z.copy(), w.copy()

    def phi_of(state):
        zz, ww = state
        return np.maximum(np.log(np.abs(zz)) + lp, np.log(np.abs(ww)) + lq)

    def step(state, active):
        zz, ww = state
        z1, w1 = zz.copy(), ww.copy()
        z1[active] = f.p(zz[active])
        w1[active] = f.q(zz[active], ww[active])
        return z1, w1

    return _drive(step, phi_of, (z, w), model, n_max, tol)


def green_value(f: SkewProduct, z: complex, w: complex, n_max: int = 64, tol: float = 1e-12) -> GreenEstimate:
    v, n, e, esc = green_values(f, z, w, n_max, tol)
    return GreenEstimate(float(v[0]), int(n[0]), float(e[0]), bool(esc[0]))


def base_orbit(f: SkewProduct, z: complex, n: int) -> np.ndarray:
    """z_0 .. z_n under p; raises if the base orbit leaves the certified disk."""
    out = np.empty(n + 1, dtype=np.complex128)
    out[0] = z
    r = f.base_radius
    zz = complex(z)
    for k in range(1, n + 1):
        zz = complex(f.p(zz))
        out[k] = zz
        if not abs(zz) <= r:
            raise ValueError(f"base orbit of z={z} escapes; fiber potentials need z in K_p")
    if abs(z) > r:
        raise ValueError(f"base point z={z} lies outside K_p")
    return out


def fiber_greens(f: SkewProduct, z: complex, w, n_max: int = 64, tol: float = 1e-12):
    """Vectorized fiber Green function g_z at the points ``w`` of a single fiber."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    zs = base_orbit(f, z, n_max + EXTRA_STEPS + 1)
    coefs = f.q.fiber_coefficients(zs)
    model = fiber_model(f, f.base_radius)
    d = f.d
    lq = math.log(abs(f.q.leading)) / (d - 1)
    w = np.array(w, dtype=np.complex128, ndmin=1).copy()
    counter = np.zeros(w.shape, dtype=np.int64)

    def phi_of(state):
        return np.log(np.abs(state[0])) + lq

    def step(state, active):
        ww, k = state
        w1, k1 = ww.copy(), k.copy()
        rows = coefs[k[active]]
        acc = rows[:, d]
        x = ww[active]
        for t in range(d - 1, -1, -1):
            acc = acc * x + rows[:, t]
        w1[active] = acc
        k1[active] += 1
        return w1, k1

    return _drive(step, phi_of, (w, counter), model, n_max, tol)


def fiber_green(f: SkewProduct, z: complex, w: complex, n_max: int = 64, tol: float = 1e-12) -> GreenEstimate:
    v, n, e, esc = fiber_greens(f, z, w, n_max, tol)
    return GreenEstimate(float(v[0]), int(n[0]), float(e[0]), bool(esc[0]))


def polynomial_greens(poly: Polynomial1D, w, n_max: int = 64, tol: float = 1e-12):
    model = polynomial_model(poly)
    lq = math.log(abs(poly.leading)) / (poly.degree - 1)
    w = np.array(w, dtype=np.complex128, ndmin=1).copy()

    def phi_of(state):
        return np.log(np.abs(state[0])) + lq

    def step(state, active):
        w1 = state[0].copy()
        w1[active] = poly(state[0][active])
        return (w1,)

    return _drive(step, phi_of, (w,), model, n_max, tol)


def polynomial_green(poly: Polynomial1D, w: complex, n_max: int = 64, tol: float = 1e-12) -> GreenEstimate:
    v, n, e, esc = polynomial_greens(poly, w, n_max, tol)
    return GreenEstimate(float(v[0]), int(n[0]), float(e[0]), bool(esc[0]))


@dataclass(frozen=True)
class ParamGreen:
    c: complex
    a: complex
    g_at_0: float
    g_at_c: float
    value: float
    error_bound: float


def critical_polynomial(c: complex, a: complex, d: int) -> Polynomial1D:
    """P_{c,a}(w) = w^d/d - c w^(d-1)/(d-1) + a^d."""
    coeffs = [0j] * (d + 1)
    coeffs[0] = complex(a) ** d
    coeffs[d - 1] = -complex(c) / (d - 1)
    coeffs[d] = 1.0 / d
    return Polynomial1D(tuple(coeffs))


def param_green(c: complex, a: complex, d: int, n_max: int = 256) -> ParamGreen:
    """Parameter Green function max(g_P(0), g_P(c)) for P = P_{c,a}."""
    if d < 3:
        raise ValueError("d >= 3 required")
    poly = critical_polynomial(c, a, d)
    v, _, e, _ = polynomial_greens(poly, np.array([0.0, c]), n_max)
    return ParamGreen(complex(c), complex(a), float(v[0]), float(v[1]), float(max(v[0], v[1])), float(max(e)))


# ---------------------------------------------------------------- slices


@dataclass(frozen=True)
class GridSpec:
    """Square-pixel raster; row 0 is the top (largest imaginary part)."""

    center: complex = 0j
    half_width: float = 2.0
    width: int = 256
    height: int = 256

    @property
    def pixel(self) -> float:
        return 2.0 * self.half_width / self.width

    @property
    def half_height(self) -> float:
        return self.pixel * self.height / 2.0

    @property
    def pixel_diagonal(self) -> float:
        return self.pixel * math.sqrt(2.0)

    def xs(self) -> np.ndarray:
        return self.center.real - self.half_width + (np.arange(self.width) + 0.5) * self.pixel

    def ys(self) -> np.ndarray:
        return self.center.imag + self.half_height - (np.arange(self.height) + 0.5) * self.pixel

    def points(self) -> np.ndarray:
        return self.xs()[None, :] + 1j * self.ys()[:, None]

    def index(self, w) -> tuple[np.ndarray, np.ndarray]:
        w = np.asarray(w)
        j = np.floor((w.real - (self.center.real - self.half_width)) / self.pixel).astype(int)
        i = np.floor((self.center.imag + self.half_height - w.imag) / self.pixel).astype(int)
        return i, j

    def contains_disk(self, radius: float) -> bool:
        c = self.center
        return (
            c.real - self.half_width <= -radius
            and c.real + self.half_width >= radius
            and c.imag - self.half_height <= -radius
            and c.imag + self.half_height >= radius
        )

    def covering(self, radius: float) -> "GridSpec":
        """Smallest enlargement (same pixel counts, square pixels) containing D(0, radius)."""
        if self.contains_disk(radius):
            return self
        c = self.center
        x0 = min(c.real - self.half_width, -radius)
        x1 = max(c.real + self.half_width, radius)
        y0 = min(c.imag - self.half_height, -radius)
        y1 = max(c.imag + self.half_height, radius)
        pix = max((x1 - x0) / self.width, (y1 - y0) / self.height)
        return GridSpec(complex((x0 + x1) / 2, (y0 + y1) / 2), pix * self.width / 2, self.width, self.height)

    def to_json(self) -> dict:
        return {
            "center": [repr(self.center.real), repr(self.center.imag)],
            "half_width": self.half_width,
            "width": self.width,
            "height": self.height,
        }


EXTERIOR, BAND, INTERIOR = 0, 1, 2


@dataclass(frozen=True, eq=False)
class JuliaSlice:
    z: complex
    grid: GridSpec
    membership: np.ndarray  # uint8: 0 escaping, 1 boundary band, 2 interior
    potential: np.ndarray  # float64 fiber Green values
    diameter_estimate: float
    n_max: int
    unresolved: int
    escape_radius: float
    trap_radius: float
    k_radius: float
    _tree: list = field(default_factory=list, repr=False)

    @property
    def band_count(self) -> int:
        return int((self.membership == BAND).sum())

    @property
    def unresolved_fraction(self) -> float:
        return self.unresolved / max(1, self.band_count)

    def band_points(self) -> np.ndarray:
        return self.grid.points()[self.membership == BAND]

    def distance_to_band(self, w) -> np.ndarray:
        if not self._tree:
            pts = self.band_points()
            self._tree.append(cKDTree(np.column_stack([pts.real, pts.imag])))
        w = np.asarray(w, dtype=np.complex128)
        dist, _ = self._tree[0].query(np.column_stack([w.ravel().real, w.ravel().imag]))
        return dist.reshape(w.shape)

    def metadata(self) -> dict:
        return {
            "z": [repr(self.z.real), repr(self.z.imag)],
            "grid": self.grid.to_json(),
            "n_max": self.n_max,
            "diameter_estimate": self.diameter_estimate,
            "unresolved": self.unresolved,
            "band_pixels": self.band_count,
            "escape_radius": self.escape_radius,
            "trap_radius": self.trap_radius,
            "k_radius": self.k_radius,
        }


def _positive_root(coeffs_desc: list[float]) -> float:
    roots = np.roots(coeffs_desc)
    real = [r.real for r in roots if abs(r.imag) < 1e-9 * max(1.0, abs(r)) and r.real > 0]
    return max(real) if real else 0.0


def filled_radius(f: SkewProduct, z_bound: float) -> float:
    """r with K_z inside D(0, r): largest root of |a| r^d - sum_j |A_j| r^j - r."""
    d = f.d
    mags = [row.abs_sum(z_bound) for row in f.q.rows[:-1]]
    desc = [abs(f.q.leading)] + [-mags[j] for j in range(d - 1, -1, -1)]
    desc[-2] -= 1.0
    return _positive_root(desc)


def trap_radius(rows_abs: list[float], r_max: float, contracting: bool = False) -> float:
    """Largest r <= r_max with sum_j rows_abs[j] r^j <= r (or <= r/2 when contracting).

    Every disk with this property is mapped into itself by every fiber map
    whose coefficient magnitudes are bounded by ``rows_abs``.
    """
    rs = np.geomspace(1e-6, max(r_max, 1e-6), 4000)
    lhs = sum(m * rs**j for j, m in enumerate(rows_abs))
    ok = lhs <= (0.5 if contracting else 1.0) * rs * (1 - 1e-12)
    return float(rs[ok].max()) if ok.any() else 0.0


def hull_diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    xy = np.column_stack([points.real, points.imag])
    try:
        xy = xy[ConvexHull(xy).vertices]
    except (QhullError, ValueError):
        pass
    diff = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def julia_slice(f: SkewProduct, z: complex, grid: GridSpec | None = None, n_max: int = 4096) -> JuliaSlice:
    """Raster of K_z: escaping pixels, the boundary band (numerical J_z) and the interior."""
    z = complex(z)
    zs = base_orbit(f, z, 2 * n_max + EXTRA_STEPS)
    z_bound = float(np.abs(zs).max())
    coefs = f.q.fiber_coefficients(zs)
    lower = f.q.lower_bound_sum(max(1.0, z_bound))
    r_esc = doubling_radius(f.q.leading, lower)
    r_k = filled_radius(f, z_bound)
    rows_abs = [row.abs_sum(z_bound) for row in f.q.rows]
    r_trap = trap_radius(rows_abs, r_k)
    if grid is None:
        grid = GridSpec(0j, 1.05 * r_k, 256, 256)
    grid = grid.covering(1.01 * r_k)
    pts = grid.points()
    log_lead = math.log(abs(f.q.leading)) / (f.d - 1)
    status, _, pot = kernels.classify_grid(pts, coefs, r_esc, r_trap, n_max, log_lead, EXTRA_STEPS)
    escaping = status == kernels.ESCAPED
    near = ndimage.binary_dilation(escaping, structure=np.ones((3, 3), dtype=bool))
    band = near & ~escaping
    membership = np.full(status.shape, INTERIOR, dtype=np.uint8)
    membership[escaping] = EXTERIOR
    membership[band] = BAND
    check = band & (status == kernels.BOUNDED)
    unresolved = 0
    if check.any():
        st2, _ = kernels.escape_times(pts[check], coefs, r_esc, r_trap, 2 * n_max)
        unresolved = int((st2 == kernels.ESCAPED).sum())
    diam = hull_diameter(pts[band])
    return JuliaSlice(z, grid, membership, pot, diam, n_max, unresolved, r_esc, r_trap, r_k)


@dataclass(frozen=True)
class DeltaHat:
    value: float
    zeta: np.ndarray
    z: np.ndarray
    diameters: np.ndarray
    resolution: int
    n_max: int

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "zeta": self.zeta,
            "z": self.z,
            "diameters": self.diameters,
            "resolution": self.resolution,
            "n_max": self.n_max,
        }


def delta_hat(f: SkewProduct, mesh_zeta: np.ndarray, phi, resolution: int = 200, n_max: int = 512) -> DeltaHat:
    """Sampled lower approximation of min diam(J_z) over base points phi(mesh_zeta)."""
    mesh_zeta = np.asarray(mesh_zeta, dtype=np.complex128)
    if mesh_zeta.size < 64:
        raise ValueError("at least 64 fibers are required")
    zs = phi(mesh_zeta)
    diams = np.array([julia_slice(f, z, GridSpec(0j, 1.0, resolution, resolution), n_max).diameter_estimate for z in zs])
    return DeltaHat(float(diams.min()), mesh_zeta, zs, diams, resolution, n_max)


# ---------------------------------------------------------------- coincidence probe


def tangent_growth(f: SkewProduct, z, w, n_iter: int, direction=(0.6, 0.8)):
    """max_n log ||df^n v|| along the orbit for a fixed direction v; -inf growth never occurs."""
    z = np.array(z, dtype=np.complex128, ndmin=1).copy()
    w = np.array(w, dtype=np.complex128, ndmin=1).copy()
    vz = np.full(z.shape, complex(direction[0]))
    vw = np.full(z.shape, complex(direction[1]))
    log_norm = np.zeros(z.shape)
    best = np.zeros(z.shape)
    r_esc = f.escape_radius()
    alive = np.ones(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_iter):
            nz = f.p.derivative()(z) * vz
            nw = f.q.dz(z, w) * vz + f.q.dw(z, w) * vw
            z, w = f.p(z), f.q(z, w)
            norm = np.sqrt(np.abs(nz) ** 2 + np.abs(nw) ** 2)
            alive &= np.isfinite(norm) & (np.abs(w) <= r_esc) & (norm > 0)
            safe = np.where(alive, norm, 1.0)
            log_norm = np.where(alive, log_norm + np.log(safe), log_norm)
            best = np.where(alive, np.maximum(best, log_norm), best)
            vz, vw = np.where(alive, nz / safe, 1.0), np.where(alive, nw / safe, 0.0)
    return best, alive


def julia_coincidence_probe(
    f: SkewProduct,
    samples: np.ndarray,
    n_iter: int = 60,
    growth_threshold: float = math.log(1e6),
    normal_threshold: float = math.log(1e2),
    resolution: int = 256,
    slice_nmax: int = 1024,
    tolerance_pixels: float = 2.0,
) -> ProbeCertificate:
    """Check that points with non-normal tangent growth lie near a J_z band.

    ``samples`` is an (n, 2) complex array of (z, w) points. Escaping points
    and points with bounded derivative growth are excluded; points in the gap
    between the two growth thresholds count as ambiguous.
    """
    samples = np.asarray(samples, dtype=np.complex128).reshape(-1, 2)
    z, w = samples[:, 0], samples[:, 1]
    g, _, _, esc = green_values(f, z, w)
    growth, _ = tangent_growth(f, z, w, n_iter)
    escaping = esc & (g > 0)
    nonnormal = ~escaping & (growth >= growth_threshold)
    normal = ~escaping & (growth <= normal_threshold)
    ambiguous = ~(escaping | nonnormal | normal)
    distances = np.full(len(z), np.nan)
    slices: dict[complex, JuliaSlice] = {}
    for idx in np.flatnonzero(nonnormal):
        key = complex(z[idx])
        if key not in slices:
            slices[key] = julia_slice(f, key, GridSpec(0j, 1.0, resolution, resolution), slice_nmax)
        js = slices[key]
        distances[idx] = float(js.distance_to_band(w[idx])) / js.grid.pixel_diagonal
    within = nonnormal & (distances <= tolerance_pixels)
    n_nn = int(nonnormal.sum())
    frac = float(within.sum()) / n_nn if n_nn else 0.0
    if n_nn == 0:
        verdict = "inconclusive"
    else:
        verdict = "pass" if frac >= 0.95 else "fail"
    inputs = {
        "map": f.to_json(),
        "map_hash": content_hash(f.to_json()),
        "samples": samples,
        "n_iter": n_iter,
        "growth_threshold": growth_threshold,
        "normal_threshold": normal_threshold,
        "resolution": resolution,
        "slice_nmax": slice_nmax,
        "tolerance_pixels": tolerance_pixels,
    }
    measured = {
        "escaping": int(escaping.sum()),
        "normal": int(normal.sum()),
        "non_normal": n_nn,
        "ambiguous": int(ambiguous.sum()),
        "within_tolerance": int(within.sum()),
        "fraction_within": frac,
        "max_distance_pixels": float(np.nanmax(distances)) if n_nn else None,
    }
    return ProbeCertificate("julia-coincidence", inputs, measured, verdict)
