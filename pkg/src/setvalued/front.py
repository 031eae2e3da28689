"""Pareto-front approximation by perturbed short SMG runs, plus knee selection.

The archive driver keeps a list of mutually nondominated candidates. Each
outer iteration perturbs every candidate, runs a short SMG trajectory from
each original and perturbed point, evaluates the endpoints on the full data,
merges them into the archive and drops dominated entries. When the archive
exceeds its capacity, the most crowded entries are removed first.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .mgrad import MultiFn, smg_run
from .smooth import DivergenceError, SmoothingSchedule, StepsizeSchedule

log = logging.getLogger(__name__)


def _points(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2:
        raise ValueError("objective vectors must share one dimension")
    return P


def prune_nondominated(points) -> list[int]:
    """Indices of points not dominated by any other point.

    Domination means ``<=`` in every component and ``<`` in at least one, so
    duplicated vectors survive together.
    """
    try:
        P = _points(points)
    except ValueError as exc:  # ragged input
        raise ValueError("objective vectors must share one dimension") from exc
    keep = []
    for i in range(P.shape[0]):
        le = np.all(P <= P[i], axis=1)
        lt = np.any(P < P[i], axis=1)
        if not np.any(le & lt):
            keep.append(i)
    return keep


def crowding_distance(F) -> np.ndarray:
    """NSGA-II crowding distance; boundary points of any objective get ``inf``."""
    F = _points(F)
    k, m = F.shape
    dist = np.zeros(k)
    if k <= 2:
        return np.full(k, np.inf)
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        col = F[order, j]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def hypervolume_2d(F, ref) -> float:
    """Area dominated by a bi-objective point set and bounded by ``ref``."""
    F = _points(F)
    ref = np.asarray(ref, dtype=float)
    pts = F[np.all(F < ref, axis=1)]
    if pts.size == 0:
        return 0.0
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    area, best_y = 0.0, ref[1]
    for x, y in pts:
        if y < best_y:
            area += (ref[0] - x) * (best_y - y)
            best_y = y
    return float(area)


@dataclass
class ParetoArchive:
    """Parameter vectors ``X`` (rows) with their objective vectors ``F``."""

    X: np.ndarray
    F: np.ndarray
    capacity: int | None = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if self.X.shape[0] != self.F.shape[0]:
            raise ValueError("X and F must have the same number of rows")

    def __len__(self) -> int:
        return self.F.shape[0]

    @property
    def m(self) -> int:
        return self.F.shape[1]

    def is_nondominated(self) -> bool:
        return len(prune_nondominated(self.F)) == len(self)

    def to_csv(self, path) -> None:
        m, n = self.F.shape[1], self.X.shape[1]
        header = [f"f_{i + 1}" for i in range(m)] + [f"x_{i + 1}" for i in range(n)]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for f, x in zip(self.F, self.X):
                w.writerow([repr(float(v)) for v in np.concatenate([f, x])])

    @classmethod
    def from_csv(cls, path) -> "ParetoArchive":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        m = sum(h.startswith("f_") for h in header)
        body = body.reshape(-1, len(header))
        return cls(body[:, m:], body[:, :m])


def truncate_by_crowding(F, capacity: int) -> list[int]:
    """Indices kept after repeatedly dropping the most crowded point."""
    idx = list(range(_points(F).shape[0]))
    F = _points(F)
    while len(idx) > capacity:
        d = crowding_distance(F[idx])
        # among ties drop the latest entry so earlier candidates persist
        worst = max(range(len(idx)), key=lambda i: (-d[i], i))
        del idx[worst]
    return idx


@dataclass(frozen=True)
class PFSMGConfig:
    outer_iterations: int = 20
    perturbations: int = 3
    magnitude: float = 0.05
    inner_steps: int = 30
    capacity: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("outer_iterations", "inner_steps", "capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.perturbations < 0:
            raise ValueError("perturbations must be nonnegative")
        if not self.magnitude > 0:
            raise ValueError("perturbation magnitude must be positive")


@dataclass(frozen=True)
class MultiObjectiveProblem:
    """A stochastic multi-objective problem.

    ``stochastic(x, rng, mu)`` gives sampled values and jacobian for SMG;
    ``evaluate(x)`` gives the deterministic full-data objective vector.
    """

    stochastic: MultiFn
    evaluate: Callable[[np.ndarray], np.ndarray]


def _dedupe(X: np.ndarray) -> list[int]:
    seen, keep = set(), []
    for i, x in enumerate(X):
        key = x.tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return keep


def pf_smg_run(
    problem: MultiObjectiveProblem,
    starts: Sequence,
    cfg: PFSMGConfig = PFSMGConfig(),
    alphas: StepsizeSchedule = StepsizeSchedule(),
    mus: SmoothingSchedule = SmoothingSchedule(),
    callback: Callable[[int, ParetoArchive, list], None] | None = None,
) -> ParetoArchive:
    """Approximate the Pareto front of ``problem`` starting from ``starts``.

    Trajectories started in outer iteration ``t`` index the schedules from
    ``(t - 1) * inner_steps + 1``, so stepsize and smoothing keep decaying
    across iterations. ``callback(t, merged, kept)`` receives the merged,
    pruned archive before capacity truncation and the indices that survive it.
    """
    if len(starts) == 0:
        raise ValueError("need at least one starting point")
    X = np.array([np.asarray(s, dtype=float) for s in starts])
    F = np.array([problem.evaluate(x) for x in X])
    keep = [i for i in _dedupe(X) if i in set(prune_nondominated(F))]
    X, F = X[keep], F[keep]
    keep = truncate_by_crowding(F, cfg.capacity)
    X, F = X[keep], F[keep]

    for t in range(1, cfg.outer_iterations + 1):
        new_X, new_F = [], []
        for i, x in enumerate(X):
            sigma = cfg.magnitude * (1.0 + float(np.linalg.norm(x)))
            for j in range(cfg.perturbations + 1):
                rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, t, i, j]))
                start = x if j == 0 else x + sigma * rng.standard_normal(x.shape)
                try:
                    end = smg_run(
                        problem.stochastic, start, cfg.inner_steps, alphas, mus,
                        rng=rng, step_offset=(t - 1) * cfg.inner_steps,
                    )
                except DivergenceError as exc:
                    log.warning("dropping candidate (t=%d, i=%d, j=%d): %s", t, i, j, exc)
                    continue
                f = np.asarray(problem.evaluate(end), dtype=float)
                if not np.all(np.isfinite(f)):
                    log.warning("dropping candidate (t=%d, i=%d, j=%d): non-finite objectives", t, i, j)
                    continue
                new_X.append(end)
                new_F.append(f)
        if new_X:
            X = np.vstack([X, np.array(new_X)])
            F = np.vstack([F, np.array(new_F)])
        uniq = _dedupe(X)
        X, F = X[uniq], F[uniq]
        nd = prune_nondominated(F)
        X, F = X[nd], F[nd]
        keep = truncate_by_crowding(F, cfg.capacity)
        if callback is not None:
            callback(t, ParetoArchive(X.copy(), F.copy(), cfg.capacity), list(keep))
        X, F = X[keep], F[keep]
    return ParetoArchive(X, F, cfg.capacity)


class KneeSelection(NamedTuple):
    index: int
    angle: float
    lower: tuple
    upper: tuple

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "angle": None if math.isnan(self.angle) else self.angle,
            "normalization": {"lower": list(self.lower), "upper": list(self.upper)},
        }


def _normalize(F: np.ndarray):
    lo, hi = F.min(axis=0), F.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (F - lo) / span, lo, hi


def knee_select(front) -> KneeSelection:
    """Knee of a bi-objective front by smallest interior angle.

    Objectives are min-max normalised, points sorted by the first objective,
    and the interior point whose two neighbours subtend the smallest angle is
    returned. Fronts with fewer than three points fall back to the smallest
    normalised objective sum (angle reported as ``nan``). Ties go to the
    smaller first objective.
    """
    F = front.F if isinstance(front, ParetoArchive) else _points(front)
    if F.shape[0] == 0:
        raise ValueError("cannot select a knee from an empty front")
    if F.shape[1] != 2:
        raise ValueError("knee selection needs exactly two objectives")
    Q, lo, hi = _normalize(F)
    order = np.lexsort((Q[:, 1], Q[:, 0]))
    bounds = (tuple(float(v) for v in lo), tuple(float(v) for v in hi))

    best, best_angle = None, math.inf
    for k in range(1, len(order) - 1):
        c = Q[order[k]]
        u, v = Q[order[k - 1]] - c, Q[order[k + 1]] - c
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0 or nv == 0:
            continue
        ang = math.acos(min(1.0, max(-1.0, float(u @ v) / (nu * nv))))
        if ang < best_angle:  # strict: earlier (smaller f_1) wins ties
            best, best_angle = int(order[k]), ang
    if best is None:
        sums = Q.sum(axis=1)
        best = int(min(order, key=lambda i: (sums[i], Q[i, 0])))
        return KneeSelection(best, math.nan, *bounds)
    return KneeSelection(best, best_angle, *bounds)


def knee_position(front, index: int, axis: int = 0) -> float:
    """Normalised position of ``front[index]`` along one objective, in [0, 1]."""
    F = front.F if isinstance(front, ParetoArchive) else _points(front)
    col = F[:, axis]
    lo, hi = col.min(), col.max()
    if hi == lo:
        return 0.5
    return float((col[index] - lo) / (hi - lo))


class RVOKnee(NamedTuple):
    x: np.ndarray
    weights: tuple[float, float]
    knee_indices: tuple[int, int]
    distances: tuple[float, float]


def _plane_knee(F: np.ndarray, slots):
    P = F[:, list(slots)]
    if np.all(P == P[0]):
        return None
    nd = prune_nondominated(P)
    if np.all(P[nd] == P[nd][0]):
        # one point is ideal for the plane: no trade-off, distance undefined
        return None
    sel = knee_select(P[nd])
    idx = nd[sel.index]
    Q, _, _ = _normalize(P[nd])
    dist = float(np.linalg.norm(Q[sel.index]))
    return idx, dist


def rvo_knee_combine(archive: ParetoArchive, accuracy_slots=(2, 0), fairness_slots=(3, 1)) -> RVOKnee:
    """Blend the accuracy-plane and fairness-plane knees of a 4-objective front.

    Each plane's knee is found on the nondominated part of the orthogonal
    projection. A knee far from its plane's ideal point (in normalised
    coordinates) gets less weight: ``w_plane = 1 - d_plane / (d_acc + d_fair)``.
    A plane whose nondominated projection is a single point carries no
    trade-off information and gets weight zero; if both planes are degenerate the weights are 0.5 each.

    Default slots follow the ``(F_ub; F_lb)`` stacking with
    ``F_lb = (sub acc, sub fair)`` and ``F_ub = (super acc, super fair)``.
    """
    if len(archive) == 0:
        raise ValueError("cannot combine knees of an empty archive")
    if archive.m != 4:
        raise ValueError("RVO knee combination needs a 4-objective archive")
    acc = _plane_knee(archive.F, accuracy_slots)
    fair = _plane_knee(archive.F, fairness_slots)
    if acc is None and fair is None:
        return RVOKnee(archive.X[0].copy(), (0.5, 0.5), (0, 0), (0.0, 0.0))
    if fair is None:
        return RVOKnee(archive.X[acc[0]].copy(), (1.0, 0.0), (acc[0], acc[0]), (acc[1], 0.0))
    if acc is None:
        return RVOKnee(archive.X[fair[0]].copy(), (0.0, 1.0), (fair[0], fair[0]), (0.0, fair[1]))
    (ia, da), (jf, df) = acc, fair
    total = da + df
    if total == 0:
        wa, wf = 0.5, 0.5
    else:
        wa, wf = 1.0 - da / total, 1.0 - df / total
        s = wa + wf
        wa, wf = wa / s, wf / s
    x = wa * archive.X[ia] + wf * archive.X[jf]
    return RVOKnee(x, (wa, wf), (ia, jf), (da, df))


def write_knee_json(path, knee: KneeSelection, **extra) -> None:
    payload = knee.to_json()
    payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
