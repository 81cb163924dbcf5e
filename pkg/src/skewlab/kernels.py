"""Compiled pixel kernels.

Each pixel is computed independently with a fixed operation order, so the
output does not depend on how rows are distributed across threads.
"""

from __future__ import annotations

import os

# Allow thread counts above the core count so that `--threads 8` is always
# accepted; must be set before numba is imported.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numba  # noqa: E402
import numpy as np  # noqa: E402
from numba import njit, prange  # noqa: E402

ESCAPED = 1
TRAPPED = 2
BOUNDED = 0


def set_threads(n: int | None) -> int:
    """Set the worker count for parallel kernels; returns the active count."""
    if n is not None:
        numba.set_num_threads(int(n))
    return numba.get_num_threads()


@njit(cache=True, parallel=True)
def classify_grid(grid, coefs, escape_radius, trap_radius, n_max, log_lead, extra_steps):
    """Iterate w -> q_{z_k}(w) for every pixel.

    ``coefs[k]`` holds the ascending w-coefficients of the k-th fiber map
    (rows beyond the table reuse the last one). A pixel is ESCAPED once
    |w| > escape_radius, TRAPPED once |w| <= trap_radius (a certified forward
    invariant disk), BOUNDED if neither happens by n_max.

    After escape the orbit runs up to ``extra_steps`` more steps (while |w|
    stays below 1e30) and the potential (log|w_n| + log_lead) / d^n is stored.
    """
    h, wdt = grid.shape
    n_rows, ncoef = coefs.shape
    d = ncoef - 1
    status = np.zeros((h, wdt), dtype=np.int8)
    iters = np.zeros((h, wdt), dtype=np.int32)
    potential = np.zeros((h, wdt), dtype=np.float64)
    for i in prange(h):
        for j in range(wdt):
            w = grid[i, j]
            st = BOUNDED
            n = 0
            while n < n_max:
                a = abs(w)
                if a > escape_radius:
                    st = ESCAPED
                    break
                if a <= trap_radius:
                    st = TRAPPED
                    break
                k = n if n < n_rows else n_rows - 1
                acc = coefs[k, d]
                for t in range(d - 1, -1, -1):
                    acc = acc * w + coefs[k, t]
                w = acc
                n += 1
            if st == BOUNDED and abs(w) > escape_radius:
                st = ESCAPED
            status[i, j] = st
            iters[i, j] = n
            if st == ESCAPED:
                m = n
                e = 0
                while e < extra_steps and abs(w) < 1e30:
                    k = m if m < n_rows else n_rows - 1
                    acc = coefs[k, d]
                    for t in range(d - 1, -1, -1):
                        acc = acc * w + coefs[k, t]
                    w = acc
                    m += 1
                    e += 1
                potential[i, j] = (np.log(abs(w)) + log_lead) / float(d) ** m
    return status, iters, potential


@njit(cache=True, parallel=True)
def escape_times(points, coefs, escape_radius, trap_radius, n_max):
    """1-D variant of :func:`classify_grid` without potentials."""
    n_pts = points.shape[0]
    n_rows, ncoef = coefs.shape
    d = ncoef - 1
    status = np.zeros(n_pts, dtype=np.int8)
    iters = np.zeros(n_pts, dtype=np.int32)
    for i in prange(n_pts):
        w = points[i]
        st = BOUNDED
        n = 0
        while n < n_max:
            a = abs(w)
            if a > escape_radius:
                st = ESCAPED
                break
            if a <= trap_radius:
                st = TRAPPED
                break
            k = n if n < n_rows else n_rows - 1
            acc = coefs[k, d]
            for t in range(d - 1, -1, -1):
                acc = acc * w + coefs[k, t]
            w = acc
            n += 1
        if st == BOUNDED and abs(w) > escape_radius:
            st = ESCAPED
        status[i] = st
        iters[i] = n
    return status, iters


@njit(cache=True, parallel=True)
def pullback_chains(paths, zcoefs, tubes, starts, keep, min_derivative, newton_steps):
    """Inverse-branch pull-back for every (leaf, base point) pair.

    ``paths[l, j]`` is the skeleton orbit, ``zcoefs[j, s]`` the w-coefficients
    of q_{z_j} at base point s. Step j solves q_{z_j}(v) = u by Newton seeded at
    paths[l, j]; steps j >= starts[l] are skipped (v = paths[l, j]).
    """
    n_leaf, kp1 = paths.shape
    depth = kp1 - 1
    n_pts = zcoefs.shape[1]
    d = zcoefs.shape[2] - 1
    values = np.empty((n_leaf, n_pts), dtype=np.complex128)
    chain = np.empty((keep + 1, n_leaf, n_pts), dtype=np.complex128)
    failed = np.zeros((n_leaf, n_pts), dtype=np.bool_)
    mind = np.full((n_leaf, n_pts), np.inf)
    for idx in prange(n_leaf * n_pts):
        l = idx // n_pts
        s = idx % n_pts
        u = paths[l, depth]
        bad = False
        dmin = np.inf
        for j in range(depth - 1, -1, -1):
            seed = paths[l, j]
            v = seed
            if j < starts[l]:
                for _ in range(newton_steps):
                    acc = zcoefs[j, s, d]
                    dacc = d * zcoefs[j, s, d]
                    for t in range(d - 1, -1, -1):
                        acc = acc * v + zcoefs[j, s, t]
                        if t > 0:
                            dacc = dacc * v + t * zcoefs[j, s, t]
                    step = (acc - u) / dacc
                    v = v - step
                    if abs(step) <= 2e-15 * max(1.0, abs(v)):
                        break
            dacc = d * zcoefs[j, s, d]
            for t in range(d - 1, 0, -1):
                dacc = dacc * v + t * zcoefs[j, s, t]
            der = abs(dacc)
            if der < dmin:
                dmin = der
            if not (np.isfinite(v.real) and np.isfinite(v.imag)) or der < min_derivative:
                bad = True
            if abs(v - seed) > tubes[l, j]:
                bad = True
            u = v
            if j <= keep:
                chain[j, l, s] = v
        values[l, s] = u
        failed[l, s] = bad
        mind[l, s] = dmin
    return values, chain, failed, mind
