"""Linearization of p at an irrationally indifferent fixed point.

The linearizer phi(zeta) = zeta + b_2 zeta^2 + ... solves p(phi(zeta)) = phi(lambda zeta).
Writing phi^j = sum_k P_j[k] zeta^k, order k of the functional equation gives

    b_k (lambda^k - lambda) = sum_{j >= 2} a_j P_j[k],

where the right side only involves b_1 .. b_{k-1}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import Polynomial1D

RADIUS_CAP = 1.0


@dataclass(frozen=True, eq=False)
class SiegelData:
    p: Polynomial1D
    theta: float
    lam: complex
    phi_coeffs: np.ndarray  # b_0 .. b_n, b_0 = 0, b_1 = 1
    divisors: np.ndarray  # |lambda^k - lambda| for k = 0 .. n
    truncation: int
    radius_estimate: float
    root_test_radius: float
    orbit_radius: float

    def phi(self, zeta):
        b = self.phi_coeffs
        zeta = np.asarray(zeta, dtype=np.complex128)
        acc = np.full(zeta.shape, b[-1], dtype=np.complex128)
        for coef in b[-2::-1]:
            acc = acc * zeta + coef
        return acc

    def dphi(self, zeta):
        b = self.phi_coeffs
        k = np.arange(len(b))
        db = (k * b)[1:]
        zeta = np.asarray(zeta, dtype=np.complex128)
        acc = np.full(zeta.shape, db[-1], dtype=np.complex128)
        for coef in db[-2::-1]:
            acc = acc * zeta + coef
        return acc

    def phi_inverse(self, z, seed=None, steps: int = 50):
        """Newton solve of phi(zeta) = z starting from ``seed`` (default z)."""
        z = np.asarray(z, dtype=np.complex128)
        zeta = z.copy() if seed is None else np.asarray(seed, dtype=np.complex128).copy()
        for _ in range(steps):
            delta = (self.phi(zeta) - z) / self.dphi(zeta)
            zeta = zeta - delta
            if np.all(np.abs(delta) <= 1e-16 * np.maximum(1.0, np.abs(zeta))):
                break
        return zeta

    def conjugacy_residual(self, r: float, n_samples: int = 512) -> float:
        zeta = r * np.exp(2j * np.pi * np.arange(n_samples) / n_samples)
        return float(np.max(np.abs(self.p(self.phi(zeta)) - self.phi(self.lam * zeta))))

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "lambda": self.lam,
            "phi_coeffs": self.phi_coeffs,
            "truncation": self.truncation,
            "radius_estimate": self.radius_estimate,
            "root_test_radius": self.root_test_radius,
            "orbit_radius": self.orbit_radius,
            "min_divisor": float(self.divisors[2:].min()) if self.truncation >= 2 else None,
            "log_divisors": np.log(self.divisors[2:]) if self.truncation >= 2 else [],
        }


def continued_fraction(x: float, n_terms: int = 20) -> list[int]:
    out = []
    for _ in range(n_terms):
        a = math.floor(x)
        out.append(int(a))
        frac = x - a
        if frac < 1e-12:
            break
        x = 1.0 / frac
    return out


def is_noble(theta: float, prefix: int = 4, check: int = 16) -> bool:
    """True when the continued fraction of theta ends in ones (within double precision)."""
    cf = continued_fraction(theta % 1.0, prefix + check)
    return len(cf) == prefix + check and all(a == 1 for a in cf[prefix + 1 :])


def _series(p: Polynomial1D, n_terms: int) -> tuple[np.ndarray, np.ndarray]:
    a = p.as_array()
    lam = a[1]
    deg = p.degree
    b = np.zeros(n_terms + 1, dtype=np.complex128)
    b[1] = 1.0
    powers = np.zeros((deg + 1, n_terms + 1), dtype=np.complex128)
    powers[1, 1] = 1.0
    div = np.abs(lam ** np.arange(n_terms + 1) - lam)
    for k in range(2, n_terms + 1):
        rhs = 0j
        for j in range(2, deg + 1):
            powers[j, k] = np.dot(b[1:k], powers[j - 1, k - 1 : 0 : -1])
            rhs += a[j] * powers[j, k]
        b[k] = rhs / (lam**k - lam)
        powers[1, k] = b[k]
    return b, div


def _orbit_ok(p: Polynomial1D, starts: np.ndarray, steps: int) -> bool:
    z = starts.copy()
    bound = 2.0 * np.abs(starts)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            z = p(z)
            if not np.all(np.abs(z) <= bound):
                return False
    return True


def linearize(p: Polynomial1D, n_terms: int = 200, cap: float = RADIUS_CAP) -> SiegelData:
    """Power series of the linearizer of p at 0 together with its radius estimate."""
    a = p.coefficients
    if abs(a[0]) != 0:
        raise ValueError("0 must be a fixed point of p")
    lam = a[1] if len(a) > 1 else 0j
    if abs(abs(lam) - 1.0) > 1e-12:
        raise ValueError("multiplier at 0 must have modulus 1")
    ks = np.arange(2, n_terms + 1)
    if np.any(np.abs(lam ** ks - lam) < 1e-14):
        raise ValueError("multiplier is a root of unity at this truncation (rational rotation number)")
    theta = (cmath.phase(lam) / (2 * math.pi)) % 1.0
    b, div = _series(p, n_terms)
    sd = SiegelData(p, theta, lam, b, div, n_terms, 0.0, 0.0, 0.0)
    root, orbit = _radius_parts(sd, cap)
    return SiegelData(p, theta, lam, b, div, n_terms, min(root, orbit), root, orbit)


def _radius_parts(sd: SiegelData, cap: float, steps: int = 10_000, n_angles: int = 16) -> tuple[float, float]:
    b = sd.phi_coeffs
    n = sd.truncation
    ks = np.arange(n // 2, n + 1)
    mags = np.abs(b[ks])
    nz = mags > 1e-300
    root = float(np.min(mags[nz] ** (-1.0 / ks[nz]))) if nz.any() else math.inf
    r_max = min(root, cap)
    angles = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    orbit = 0.0
    for i in range(40):
        r = r_max * (1.0 - i / 40.0)
        if _orbit_ok(sd.p, sd.phi(r * angles), steps):
            orbit = r
            break
    return min(root, cap), orbit


def siegel_radius(sd: SiegelData, cap: float = RADIUS_CAP) -> float:
    """min(root-test radius of the series, largest r whose sampled orbits stay within 2x)."""
    root, orbit = _radius_parts(sd, cap)
    return min(root, orbit)


@dataclass(frozen=True, eq=False)
class InvariantCircle:
    r: float
    t: np.ndarray
    samples: np.ndarray
    rotation: float
    residual: float

    def to_json(self) -> dict:
        return {"r": self.r, "n_samples": len(self.t), "rotation": self.rotation, "residual": self.residual}


def invariant_circle(sd: SiegelData, r: float, n_samples: int = 512) -> InvariantCircle:
    if not 0 < r <= 0.8 * sd.radius_estimate:
        raise ValueError(f"radius {r} outside (0, 0.8 * r_hat] with r_hat = {sd.radius_estimate}")
    t = np.arange(n_samples) / n_samples
    zeta = r * np.exp(2j * np.pi * t)
    samples = sd.phi(zeta)
    residual = float(np.max(np.abs(sd.p(samples) - sd.phi(sd.lam * zeta))))
    return InvariantCircle(r, t, samples, sd.theta, residual)


def rotation_number(sd: SiegelData, circle: InvariantCircle, n_iter: int = 10_000) -> float:
    """Rotation number of p on the circle, from lifted angle increments in the linear coordinate."""
    orbit = np.empty(n_iter + 1, dtype=np.complex128)
    z = complex(circle.samples[0])
    for n in range(n_iter + 1):
        orbit[n] = z
        z = complex(sd.p(z))
    # seeds from the ideal rotation; Newton then recovers the actual coordinates
    seeds = circle.r * sd.lam ** np.arange(n_iter + 1)
    zeta = sd.phi_inverse(orbit, seed=seeds)
    steps = (np.angle(zeta[1:] / zeta[:-1]) / (2 * math.pi)) % 1.0
    return float(steps.mean())


@dataclass(frozen=True, eq=False)
class BaseMesh:
    """Polar mesh in the linearizing coordinate: the origin plus radii x angles."""

    radius: float
    n_radii: int
    n_angles: int
    zeta: np.ndarray
    z: np.ndarray

    @property
    def radii(self) -> np.ndarray:
        return self.radius * np.arange(1, self.n_radii + 1) / self.n_radii

    def to_json(self) -> dict:
        return {"radius": self.radius, "n_radii": self.n_radii, "n_angles": self.n_angles}


def polar_mesh(sd: SiegelData, radius: float, n_radii: int = 4, n_angles: int = 16) -> BaseMesh:
    if not 0 < radius <= 0.8 * sd.radius_estimate:
        raise ValueError("mesh radius must lie inside 0.8 * r_hat")
    rr = radius * np.arange(1, n_radii + 1) / n_radii
    ang = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    zeta = np.concatenate([[0j], (rr[:, None] * ang[None, :]).ravel()])
    return BaseMesh(radius, n_radii, n_angles, zeta, sd.phi(zeta))
