"""Polynomial skew products f(z, w) = (p(z), q_z(w)) on C^2.

Coefficients are stored in ascending order and every evaluation uses Horner's
scheme with a fixed summation order, so results are bitwise reproducible.
All evaluation routines accept numpy arrays as well as scalars.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Polynomial1D",
    "FiberPolynomial",
    "SkewProduct",
    "OrbitRecord",
    "CriticalComponent",
    "CriticalBranchError",
    "evaluate",
    "iterate",
    "vertical_derivative",
    "critical_locus",
    "doubling_radius",
]


class CriticalBranchError(ValueError):
    """Fiber critical points depend on z and cannot be tracked as global branches."""


def _as_complex_tuple(values: Sequence[complex]) -> tuple[complex, ...]:
    return tuple(complex(v) for v in values)


@dataclass(frozen=True)
class Polynomial1D:
    """Polynomial a_0 + a_1 x + ... + a_D x^D with a_D != 0.

    The zero polynomial is represented by ``(0,)`` and has degree 0; it only
    appears as a coefficient row of a :class:`FiberPolynomial`.
    """

    coefficients: tuple[complex, ...]

    def __post_init__(self) -> None:
        coeffs = list(_as_complex_tuple(self.coefficients))
        if not coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        if not all(np.isfinite(c.real) and np.isfinite(c.imag) for c in coeffs):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> complex:
        return self.coefficients[-1]

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coefficients[0] == 0

    def as_array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=np.complex128)

    def __call__(self, x):
        coeffs = self.coefficients
        acc = coeffs[-1] + 0 * x
        for a in coeffs[-2::-1]:
            acc = acc * x + a
        return acc

    def derivative(self) -> "Polynomial1D":
        if self.degree == 0:
            return Polynomial1D((0,))
        return Polynomial1D(tuple(k * a for k, a in enumerate(self.coefficients) if k > 0))

    def abs_sum(self, radius: float = 1.0, below: int | None = None) -> float:
        """Sum of |a_k| radius^k over k < below (all k when below is None)."""
        top = len(self.coefficients) if below is None else below
        return float(sum(abs(a) * radius**k for k, a in enumerate(self.coefficients[:top])))

    def roots(self) -> np.ndarray:
        if self.degree == 0:
            return np.zeros(0, dtype=np.complex128)
        return np.roots(self.as_array()[::-1])

    def to_json(self) -> list[list[str]]:
        return [[repr(c.real), repr(c.imag)] for c in self.coefficients]


@dataclass(frozen=True)
class FiberPolynomial:
    """q(z, w) = sum_j A_j(z) w^j where each A_j is a Polynomial1D in z.

    ``rows[j]`` is A_j; the top row must be a nonzero constant (regularity).
    """

    rows: tuple[Polynomial1D, ...]

    def __post_init__(self) -> None:
        rows = tuple(r if isinstance(r, Polynomial1D) else Polynomial1D(tuple(r)) for r in self.rows)
        if len(rows) < 3:
            raise ValueError("w-degree must be at least 2")
        top = rows[-1]
        if top.degree != 0 or top.coefficients[0] == 0:
            raise ValueError("w-leading coefficient must be a nonzero constant in z")
        object.__setattr__(self, "rows", rows)

    @property
    def degree(self) -> int:
        return len(self.rows) - 1

    @property
    def leading(self) -> complex:
        return self.rows[-1].coefficients[0]

    def __call__(self, z, w):
        rows = self.rows
        acc = rows[-1](z) + 0 * w
        for row in rows[-2::-1]:
            acc = acc * w + row(z)
        return acc

    def fiber(self, z: complex) -> Polynomial1D:
        """The one-variable polynomial w -> q(z, w) for fixed z."""
        return Polynomial1D(tuple(row(complex(z)) for row in self.rows))

    def fiber_coefficients(self, zs: np.ndarray) -> np.ndarray:
        """Coefficient table of q_{z} for each z in ``zs``; shape (len(zs), d+1)."""
        zs = np.asarray(zs, dtype=np.complex128)
        out = np.empty((zs.size, self.degree + 1), dtype=np.complex128)
        for j, row in enumerate(self.rows):
            out[:, j] = row(zs.ravel())
        return out

    def dw(self, z, w):
        rows = self.rows
        d = self.degree
        acc = d * rows[d](z) + 0 * w
        for j in range(d - 1, 0, -1):
            acc = acc * w + j * rows[j](z)
        return acc

    def dww(self, z, w):
        rows = self.rows
        d = self.degree
        acc = d * (d - 1) * rows[d](z) + 0 * w
        for j in range(d - 1, 1, -1):
            acc = acc * w + j * (j - 1) * rows[j](z)
        return acc

    def dz(self, z, w):
        drows = [r.derivative() for r in self.rows]
        acc = drows[-1](z) + 0 * w
        for row in drows[-2::-1]:
            acc = acc * w + row(z)
        return acc

    def dwz(self, z, w):
        rows = self.rows
        d = self.degree
        acc = d * rows[d].derivative()(z) + 0 * w
        for j in range(d - 1, 0, -1):
            acc = acc * w + j * rows[j].derivative()(z)
        return acc

    def coefficient_table(self) -> np.ndarray:
        """C[j, k] = coefficient of w^j z^k."""
        kmax = max(r.degree for r in self.rows)
        table = np.zeros((self.degree + 1, kmax + 1), dtype=np.complex128)
        for j, row in enumerate(self.rows):
            table[j, : row.degree + 1] = row.coefficients
        return table

    def lower_bound_sum(self, z_bound: float, w_radius: float = 1.0) -> float:
        """sum over non-leading terms of |C_jk| z_bound^k w_radius^j."""
        return float(sum(row.abs_sum(z_bound) * w_radius**j for j, row in enumerate(self.rows[:-1])))

    def to_json(self) -> list:
        return [row.to_json() for row in self.rows]


def doubling_radius(leading: complex, lower_sum: float) -> float:
    """Radius R with |q(w)| >= 2|w| whenever |w| > R.

    ``lower_sum`` bounds the sum of the non-leading coefficient magnitudes on
    the working region. For |w| >= 1 the lower-order part is at most
    lower_sum |w|^(d-1), so |q| >= |w|^(d-1) (|a||w| - lower_sum) >= 2|w|.
    """
    return max(10.0, (lower_sum + 2.0) / abs(leading))


@dataclass(frozen=True)
class SkewProduct:
    p: Polynomial1D
    q: FiberPolynomial
    d: int = field(init=False)

    def __post_init__(self) -> None:
        if self.p.degree < 2:
            raise ValueError("base polynomial must have degree >= 2")
        if self.p.degree != self.q.degree:
            raise ValueError(f"deg p = {self.p.degree} differs from w-degree of q = {self.q.degree}")
        object.__setattr__(self, "d", self.p.degree)

    def __call__(self, z, w):
        return self.p(z), self.q(z, w)

    @property
    def base_radius(self) -> float:
        """|z| > base_radius forces |p(z)| >= 2|z|, so K_p lies in this disk."""
        return max(1.0, (self.p.abs_sum(1.0, below=self.d) + 2.0) / abs(self.p.leading))

    def escape_radius(self, z_bound: float | None = None) -> float:
        """Certified vertical escape radius for base points with |z| <= z_bound."""
        if z_bound is None:
            z_bound = self.base_radius
        return doubling_radius(self.q.leading, self.q.lower_bound_sum(max(1.0, z_bound)))

    def diagonal_top(self) -> bool:
        """True if the only terms of total degree d are z^d and w^d."""
        for j, row in enumerate(self.q.rows[:-1]):
            if row.degree + j >= self.d and not row.is_zero():
                return False
        return True

    def z_independent_critical(self) -> bool:
        return all(row.degree == 0 for row in self.q.rows[1:])

    def to_json(self) -> dict:
        return {"d": self.d, "p": self.p.to_json(), "q": self.q.to_json()}


@dataclass(frozen=True)
class OrbitRecord:
    points: np.ndarray
    vertical_cocycle: np.ndarray
    escaped: bool
    escape_index: int | None

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CriticalComponent:
    kind: str  # "base-critical" or "fiber-critical"
    locus: complex
    label: str
    multiplicity: int = 1


def evaluate(f: SkewProduct, z: complex, w: complex) -> tuple[complex, complex, bool]:
    """One step of f. Non-finite results are reported through the escaped flag."""
    with np.errstate(over="ignore", invalid="ignore"):
        z1 = complex(f.p(complex(z)))
        w1 = complex(f.q(complex(z), complex(w)))
    escaped = not (np.isfinite(w1.real) and np.isfinite(w1.imag) and np.isfinite(z1.real) and np.isfinite(z1.imag))
    return z1, w1, escaped


def iterate(f: SkewProduct, z: complex, w: complex, n_max: int, escape_radius: float | None = None) -> OrbitRecord:
    """Forward orbit with the running vertical derivative of q_z^n."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if escape_radius is None:
        escape_radius = f.escape_radius()
    if escape_radius <= 0:
        raise ValueError("escape_radius must be positive")
    z, w = complex(z), complex(w)
    pts = [(z, w)]
    cocycle = [1.0 + 0.0j]
    escaped = False
    index = None
    if abs(w) > escape_radius:
        return OrbitRecord(np.array(pts, dtype=np.complex128), np.array(cocycle), True, 0)
    for n in range(1, n_max + 1):
        deriv = vertical_derivative(f, z, w)
        z, w, overflow = evaluate(f, z, w)
        pts.append((z, w))
        cocycle.append(cocycle[-1] * deriv)
        if overflow or abs(w) > escape_radius:
            escaped, index = True, n
            break
    return OrbitRecord(np.array(pts, dtype=np.complex128), np.array(cocycle, dtype=np.complex128), escaped, index)


def vertical_derivative(f: SkewProduct, z: complex, w: complex) -> complex:
    return complex(f.q.dw(complex(z), complex(w)))


def _cluster_roots(roots: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    groups: list[list[complex]] = []
    for r in sorted(roots, key=lambda x: (round(x.real, 6), round(x.imag, 6))):
        for g in groups:
            if abs(g[0] - r) < tol:
                g.append(r)
                break
        else:
            groups.append([r])
    return [(complex(np.mean(g)), len(g)) for g in groups]


def critical_locus(f: SkewProduct, tol: float = 1e-6) -> list[CriticalComponent]:
    """Critical components of f: fiber-critical lines C x {w_c} and Crit(p) x C.

    Only maps whose w-critical points do not depend on z are supported;
    otherwise :class:`CriticalBranchError` is raised and the caller should
    locate critical points fiber by fiber.
    """
    if not f.z_independent_critical():
        raise CriticalBranchError("fiber critical points depend on z; use per-fiber root finding")
    comps = []
    for w_c, mult in _critical_points(f.q.fiber(0.0), tol):
        comps.append(CriticalComponent("fiber-critical", w_c, f"C x {{{w_c:.12g}}}", mult))
    for z_c, mult in _critical_points(f.p, tol):
        comps.append(CriticalComponent("base-critical", z_c, f"{{{z_c:.12g}}} x C", mult))
    return comps


def _critical_points(poly: Polynomial1D, tol: float) -> list[tuple[complex, int]]:
    """Roots of poly' with multiplicities; a root at 0 is split off exactly."""
    coeffs = list(poly.derivative().coefficients)
    zero_mult = 0
    while len(coeffs) > 1 and coeffs[0] == 0:
        coeffs.pop(0)
        zero_mult += 1
    rest = Polynomial1D(tuple(coeffs))
    dd = rest.derivative()
    polished = []
    for r in rest.roots():
        for _ in range(3):
            slope = dd(r)
            if slope == 0:
                break
            r = r - rest(r) / slope
        polished.append(complex(r))
    out = [(0j, zero_mult)] if zero_mult else []
    out.extend(_cluster_roots(np.array(polished), tol))
    return out
