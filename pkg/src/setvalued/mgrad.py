"""Minimum-norm multi-gradients and the stochastic multi-gradient (SMG) loop.

The common descent direction for ``m`` objectives is the element of minimal
norm in the convex hull of their gradients. It is found by solving the
simplex-constrained QP ``min ||G^T lam||^2, lam in simplex``: in closed form
for two objectives, otherwise by Wolfe's active-set min-norm-point method,
which terminates exactly even on badly scaled or degenerate bundles.
Accelerated projected gradient with a support polish is kept as a
cross-check and fallback.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .smooth import DivergenceError, SmoothingSchedule, StepsizeSchedule

MultiFn = Callable[[np.ndarray, np.random.Generator, float], tuple[np.ndarray, np.ndarray]]
"""``F(x, rng, mu) -> (values, jacobian)``; jacobian rows are per-objective gradients."""


class MinNorm(NamedTuple):
    lam: np.ndarray
    g: np.ndarray


def project_simplex(v) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex (sort-and-threshold)."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise ValueError("projection needs a nonempty finite vector")
    return _project(v)


def _project(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.flatnonzero(u * np.arange(1, v.size + 1) > css)[-1]
    w = np.maximum(v - css[rho] / (rho + 1), 0.0)
    return w / w.sum()


def kkt_residual(G, lam) -> float:
    """Optimality residual of ``lam`` for the min-norm problem on rows of ``G``.

    Combines dual feasibility ``g.g_i >= ||g||^2`` with complementarity
    weighted by ``lam``.
    """
    G = np.asarray(G, dtype=float)
    lam = np.asarray(lam, dtype=float)
    g = lam @ G
    s = G @ g
    c = float(g @ g)
    dual = float(np.max(np.maximum(c - s, 0.0)))
    comp = float(np.max(lam * np.abs(s - c)))
    simplex = max(float(-lam.min()), abs(float(lam.sum()) - 1.0))
    return max(dual, comp, simplex)


def min_norm_two(g1, g2) -> MinNorm:
    """Closed-form solution for a pair of gradients."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    d = g1 - g2
    dd = float(d @ d)
    if dd == 0.0:
        t = 0.5
    else:
        t = min(max(float((g2 - g1) @ g2) / dd, 0.0), 1.0)
    lam = np.array([t, 1.0 - t])
    return MinNorm(lam, t * g1 + (1.0 - t) * g2)


def _support_solve(Q, support):
    """Minimiser of lam^T Q lam over the affine hull of the given support."""
    S = np.flatnonzero(support)
    k = S.size
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = Q[np.ix_(S, S)]
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    lam = np.zeros(Q.shape[0])
    lam[S] = sol[:k]
    return lam


def _pg_min_norm(G: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    m = G.shape[0]
    Q = G @ G.T
    L = 2.0 * float(np.linalg.eigvalsh(Q)[-1])
    lam = np.full(m, 1.0 / m)
    if L == 0.0:
        return lam
    y, t = lam.copy(), 1.0
    best, best_res = lam, kkt_residual(G, lam)
    for it in range(1, max_iter + 1):
        new = _project(y - (2.0 / L) * (Q @ y))
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        # gradient-based restart keeps the momentum from overshooting
        if (new - lam) @ (Q @ new) > 0:
            y, t_new = new.copy(), 1.0
        else:
            y = new + ((t - 1.0) / t_new) * (new - lam)
        lam, t = new, t_new
        if it % 5 == 0:
            res = kkt_residual(G, lam)
            if res < best_res:
                best, best_res = lam, res
            if res <= tol:
                return lam
            polished = _support_solve(Q, lam > 1e-12 * lam.max())
            if polished.min() >= 0.0:
                polished = polished / polished.sum()
                pres = kkt_residual(G, polished)
                if pres <= tol:
                    return polished
                if pres < best_res:
                    best, best_res = polished, pres
    return best


def _wolfe_min_norm(G: np.ndarray, max_major: int = 1000) -> np.ndarray:
    """Wolfe's min-norm-point algorithm on the rows of ``G``."""
    m = G.shape[0]
    Q = G @ G.T
    scale = float(np.max(np.diag(Q)))
    eps = 1e-14 * scale
    S = [int(np.argmin(np.diag(Q)))]
    w = np.ones(1)
    for _ in range(max_major):
        x = w @ G[S]
        xx = float(x @ x)
        s = G @ x
        j = int(np.argmin(s))
        if xx - s[j] <= eps or j in S:
            break
        S.append(j)
        w = np.append(w, 0.0)
        while True:
            # minimiser of the norm on the affine hull of the corral
            a = _support_solve(Q[np.ix_(S, S)], np.ones(len(S), dtype=bool))
            if np.all(a > 0):
                w = a
                break
            neg = a <= 0
            theta = float(np.min(w[neg] / (w[neg] - a[neg])))
            w = w + theta * (a - w)
            keep = w > 1e-15
            # drop at least one point so the minor cycle terminates
            if keep.all():
                keep[np.flatnonzero(neg)[np.argmin(w[neg])]] = False
            S = [S[i] for i in np.flatnonzero(keep)]
            w = w[keep]
            w = w / w.sum()
    lam = np.zeros(m)
    lam[S] = np.maximum(w, 0.0)
    return lam / lam.sum()


def min_norm_multigradient(bundle, method: str = "auto", tol: float = 1e-10, max_iter: int = 100) -> MinNorm:
    """Minimum-norm element of the convex hull of the bundle's rows.

    ``method`` selects the solver: ``"closed"`` (``m == 2`` only), ``"pg"``
    (projected gradient for at most ``max_iter`` iterations, then the
    active-set solve if the KKT residual is still above ``tol``), ``"wolfe"``
    (active set, then projected gradient if needed) or ``"auto"`` (closed
    form for two gradients, ``"wolfe"`` otherwise). An all-zero bundle returns
    the uniform weights.
    """
    G = np.atleast_2d(np.asarray(bundle, dtype=float))
    if not np.all(np.isfinite(G)):
        raise ValueError("gradient bundle contains non-finite entries")
    m = G.shape[0]
    if m == 1:
        return MinNorm(np.ones(1), G[0].copy())
    if method == "closed" or (method == "auto" and m == 2):
        if m != 2:
            raise ValueError("closed form needs exactly two gradients")
        return min_norm_two(G[0], G[1])
    if method not in ("auto", "pg", "wolfe"):
        raise ValueError(f"unknown method {method!r}")
    if not np.any(G):
        return MinNorm(np.full(m, 1.0 / m), np.zeros(G.shape[1]))
    solvers = [lambda: _pg_min_norm(G, tol, max_iter), lambda: _wolfe_min_norm(G)]
    if method != "pg":
        solvers.reverse()
    lam = solvers[0]()
    res = kkt_residual(G, lam)
    if res > tol:
        alt = solvers[1]()
        if kkt_residual(G, alt) < res:
            lam = alt
    return MinNorm(lam, lam @ G)


def smg_run(
    objectives: MultiFn,
    x0,
    steps: int,
    alphas: StepsizeSchedule = StepsizeSchedule(),
    mus: SmoothingSchedule = SmoothingSchedule(),
    seed: int = 0,
    rng: np.random.Generator | None = None,
    step_offset: int = 0,
) -> np.ndarray:
    """Stochastic multi-gradient method on smoothed objectives.

    ``objectives(x, rng, mu)`` returns all ``m`` values and the ``(m, n)``
    stochastic jacobian from one shared realization. Schedules are indexed
    from ``step_offset + 1``, so chained short runs can continue one decay.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    rng = np.random.default_rng(seed) if rng is None else rng
    x = np.array(x0, dtype=float)
    for j in range(1, steps + 1):
        k = step_offset + j
        try:
            _, J = objectives(x, rng, mus(k))
            g = min_norm_multigradient(J).g
        except (ValueError, FloatingPointError) as exc:
            raise DivergenceError(f"objective evaluation failed at iteration {j}: {exc}") from exc
        x = x - alphas(k) * g
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"non-finite iterate at iteration {j}")
    return x
