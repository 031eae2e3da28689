"""Shift evaluation: per-replication losses, their mean/variance, and FRPA."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..learn import Dataset, ShiftSpec, accuracy, covariance_fairness, logistic_losses, resample_shift_indices
from ..risk import subquantile, superquantile
from .config import ExperimentConfig

log = logging.getLogger(__name__)

# loss that each method is judged by
DESIGNATED = {"erm": "loss", "ivo": "tail", "rvo": "fairness", "bi": "fairness"}


def mean_var(values) -> tuple[float, float | None]:
    """Mean and sample variance (``n - 1`` denominator); variance is None for one value."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no replications")
    m = float(v.mean())
    if v.size < 2:
        return m, None
    return m, float(max(np.var(v, ddof=1), 0.0))


def frpa(v_fair: float | None, m_acc: float | None) -> float | None:
    """Fairness variance per unit of mean accuracy; None when undefined."""
    if v_fair is None or m_acc is None or m_acc == 0:
        return None
    return float(v_fair) / float(m_acc)


def tail_loss(losses, lam: float, p_lower: float, p_upper: float) -> float:
    """``lam * sub_{p_lower} + (1 - lam) * super_{p_upper}`` of the losses."""
    return lam * subquantile(losses, p_lower) + (1.0 - lam) * superquantile(losses, p_upper)


def replication_losses(sol, test: Dataset) -> dict:
    losses = logistic_losses(sol.theta, test.X, test.y)[0]
    out = {"loss": float(losses.mean()), "accuracy": accuracy(sol.theta, test)}
    if sol.lam is not None:
        out["tail"] = tail_loss(losses, sol.lam, sol.p_lower, sol.p_upper)
    if test.a is not None:
        out["fairness"] = covariance_fairness(sol.theta, test.X, test.a)[0]
    return out


def summarize(raw: dict) -> dict:
    cell = {}
    for name, values in raw.items():
        m, v = mean_var(values)
        cell[name] = {"M": m, "V": v, "raw": list(values)}
    if "fairness" in cell:
        cell["frpa"] = frpa(cell["fairness"]["V"], cell["accuracy"]["M"])
    return cell


@dataclass
class MetricsReport:
    shift_grid: list
    n_test: int
    n_rep: int
    seed: int
    skipped: list = field(default_factory=list)
    methods: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "shift_grid": list(self.shift_grid),
            "n_test": self.n_test,
            "n_rep": self.n_rep,
            "seed": self.seed,
            "skipped": list(self.skipped),
            "methods": self.methods,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(d["shift_grid"], d["n_test"], d["n_rep"], d["seed"], d["skipped"], d["methods"])

    def cell(self, method: str, rho: float) -> dict:
        return self.methods[method]["per_rho"][rho_key(rho)]

    def stat(self, method: str, rho: float, name: str, which: str = "V"):
        return self.cell(method, rho)[name][which]


def rho_key(rho: float) -> str:
    return repr(float(rho))


def evaluate_shift(solutions, pool: Dataset, cfg: ExperimentConfig) -> MetricsReport:
    """Score every solution on the same shifted test sets for each fraction in the grid.

    Test sets depend on ``(seed, rho, r)`` only, so comparisons are paired.
    Fractions the pool cannot supply are skipped and listed in ``skipped``.
    """
    report = MetricsReport(list(cfg.shift_grid), cfg.n_test, cfg.n_rep, cfg.seed)
    for sol in solutions:
        report.methods[sol.method] = {"designated": DESIGNATED.get(sol.method, "loss"), "per_rho": {}}
    for rho in cfg.shift_grid:
        spec = ShiftSpec(rho, cfg.n_test, cfg.n_rep, cfg.seed)
        if not spec.feasible(pool):
            log.warning("skipping positive fraction %s: pool too small for n_test=%d", rho, cfg.n_test)
            report.skipped.append(rho)
            continue
        raw = {sol.method: {} for sol in solutions}
        for r in range(cfg.n_rep):
            test = pool.subset(resample_shift_indices(pool, spec, r))
            for sol in solutions:
                for name, value in replication_losses(sol, test).items():
                    raw[sol.method].setdefault(name, []).append(value)
        for sol in solutions:
            report.methods[sol.method]["per_rho"][rho_key(rho)] = summarize(raw[sol.method])
    return report
