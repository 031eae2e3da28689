"""Brute-force reference implementations used only by the test-suite.

Nothing in here shares code with the package; each function follows the
textbook definition as directly as possible.
"""

import itertools
import math

import numpy as np


def cdf_quantile(values, p):
    """min{z : F(z) >= p} by scanning candidate z in the sample."""
    values = np.asarray(values, dtype=float)
    n = values.size
    best = None
    for z in np.unique(values):
        # count with exact integer arithmetic against p * n
        if np.count_nonzero(values <= z) >= p * n - 1e-9:
            best = z if best is None else min(best, z)
    return float(best)


def ru_super_grid(values, p, num=20001):
    """Minimise eta + E[(Z - eta)_+]/(1-p) over sample points and a fine grid."""
    values = np.asarray(values, dtype=float)
    grid = np.concatenate([values, np.linspace(values.min(), values.max(), num)])
    obj = grid + np.maximum(values[None, :] - grid[:, None], 0).mean(axis=1) / (1 - p)
    i = int(np.argmin(obj))
    return float(obj[i]), float(grid[i])


def ru_sub_grid(values, p, num=20001):
    values = np.asarray(values, dtype=float)
    grid = np.concatenate([values, np.linspace(values.min(), values.max(), num)])
    obj = grid - np.maximum(grid[:, None] - values[None, :], 0).mean(axis=1) / p
    i = int(np.argmax(obj))
    return float(obj[i]), float(grid[i])


def tail_integral(values, lo, hi):
    """Exact integral of the empirical quantile function over [lo, hi].

    The quantile function is constant on ((j-1)/n, j/n]; integrate it piece by
    piece using Python floats and fractions of the unit interval.
    """
    z = sorted(float(v) for v in values)
    n = len(z)
    total = 0.0
    for j in range(1, n + 1):
        a, b = (j - 1) / n, j / n
        overlap = min(b, hi) - max(a, lo)
        if overlap > 0:
            total += overlap * z[j - 1]
    return total


def dominates(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_indices(points):
    pts = [np.asarray(p, dtype=float) for p in points]
    return [
        i
        for i, p in enumerate(pts)
        if not any(dominates(q, p) for j, q in enumerate(pts) if j != i)
    ]


def box_grid(lb, ub, step=0.5):
    axes = [np.arange(l, u + step / 2, step) for l, u in zip(lb, ub)]
    return np.array(list(itertools.product(*axes)))


def set_less_by_membership(lbA, ubA, lbB, ubB, kind, strict, step=0.5):
    """Set relations checked by membership over grid points of both boxes."""
    A = box_grid(lbA, ubA, step)
    B = box_grid(lbB, ubB, step)
    # le[i, j]: grid point A[i] is dominated into B[j]
    if strict:
        le = np.all(A[:, None, :] < B[None, :, :], axis=2)
    else:
        le = np.all(A[:, None, :] <= B[None, :, :], axis=2)
    lower = bool(np.all(le.any(axis=0)))  # B in A + K
    upper = bool(np.all(le.any(axis=1)))  # A in B - K
    if kind == "lower":
        return lower
    if kind == "upper":
        return upper
    return lower and upper


def segment_distance(x, a, b):
    x, a, b = (np.asarray(v, dtype=float) for v in (x, a, b))
    d = b - a
    t = np.clip(np.dot(x - a, d) / np.dot(d, d), 0, 1)
    return float(np.linalg.norm(x - (a + t * d)))


def interior_angles(points):
    """Angle at every interior point of a front sorted by the first objective."""
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    q = (pts - lo) / span
    order = sorted(range(len(q)), key=lambda i: (q[i, 0], q[i, 1]))
    out = {}
    for k in range(1, len(order) - 1):
        p, c, nx = q[order[k - 1]], q[order[k]], q[order[k + 1]]
        u, v = p - c, nx - c
        cosang = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
        out[order[k]] = math.acos(max(-1.0, min(1.0, cosang)))
    return out


def hypervolume_2d_grid(points, ref, num=400):
    """Monte-Carlo-free hypervolume estimate by counting dominated grid cells."""
    pts = np.asarray(points, dtype=float)
    lo = pts.min(axis=0)
    xs = np.linspace(lo[0], ref[0], num)
    ys = np.linspace(lo[1], ref[1], num)
    cx = (xs[:-1] + xs[1:]) / 2
    cy = (ys[:-1] + ys[1:]) / 2
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    covered = np.zeros_like(X, dtype=bool)
    for p in pts:
        covered |= (X >= p[0]) & (Y >= p[1])
    cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
    return float(covered.sum() * cell)


def finite_difference(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b, floor=1e-8):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))
