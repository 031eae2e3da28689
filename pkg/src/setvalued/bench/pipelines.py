"""Training pipelines for the ERM baseline and the IVO, RVO and BI models.

Every pipeline starts from the zero parameter vector and draws minibatches
with replacement from the training split. Stochastic objectives use the
smoothed tails; archives are scored with exact (unsmoothed) functionals on
the full training split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pandas as pd

from ..front import (
    MultiObjectiveProblem,
    ParetoArchive,
    knee_position,
    knee_select,
    pf_smg_run,
    rvo_knee_combine,
)
from ..learn import (
    DataError,
    Dataset,
    Preprocessor,
    Schema,
    covariance_fairness,
    fixed_groups,
    frame_to_strings,
    grouped_fairness,
    load_table,
    logistic_losses,
    row_indices,
    split_indices,
    two_gaussian_frame,
    two_gaussian_schema,
)
from ..mgrad import smg_run
from ..risk import subquantile, superquantile
from ..setorder import vectorize
from ..smooth import smoothed_tail, ssg_run
from .config import METHODS, ConfigError, ExperimentConfig


class TrainData(NamedTuple):
    train: Dataset
    pool: Dataset


@dataclass
class TrainedSolution:
    method: str
    theta: np.ndarray
    archive: ParetoArchive | None = None
    knee: dict = field(default_factory=dict)
    lam: float | None = None
    p_lower: float | None = None
    p_upper: float | None = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if not np.all(np.isfinite(self.theta)):
            raise ValueError(f"{self.method}: non-finite parameters")

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "theta": self.theta.tolist(),
            "knee": self.knee,
            "lam": self.lam,
            "p_lower": self.p_lower,
            "p_upper": self.p_upper,
        }

    @classmethod
    def from_json(cls, d: dict, archive: ParetoArchive | None = None) -> "TrainedSolution":
        return cls(d["method"], np.array(d["theta"], dtype=float), archive, d.get("knee", {}),
                   d.get("lam"), d.get("p_lower"), d.get("p_upper"))


def _schema(cfg: ExperimentConfig) -> Schema:
    if cfg.schema is None:
        raise ConfigError("a schema is required when --data is given")
    try:
        if isinstance(cfg.schema, dict):
            return Schema.from_dict(cfg.schema)
        return Schema.from_json(cfg.schema)
    except OSError as exc:
        raise ConfigError(f"cannot read schema {cfg.schema}: {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid schema: {exc}") from exc


def prepare_data(cfg: ExperimentConfig) -> TrainData:
    """Load (or synthesize), split, and encode with training-split statistics."""
    if cfg.data is None:
        syn = dict(cfg.synthetic)
        schema = two_gaussian_schema(int(syn.get("d", 10)))
        df = frame_to_strings(two_gaussian_frame(seed=cfg.seed, **syn))
    else:
        schema = _schema(cfg)
        df = load_table(cfg.data, schema)
    tr, te = split_indices(len(df), cfg.train_fraction, cfg.seed)
    if tr.size == 0 or te.size == 0:
        raise DataError("train/test split left an empty side")
    train_df: pd.DataFrame = row_indices(df, tr)
    pre = Preprocessor(schema).fit(train_df)
    return TrainData(pre.transform(train_df), pre.transform(row_indices(df, te)))


def _data(cfg, data):
    return prepare_data(cfg) if data is None else data


def _batch(rng, n, size):
    return rng.integers(0, n, size=size)


def _need_sensitive(train: Dataset, method: str) -> bool:
    """Raise without a sensitive column; return True if it is informative."""
    if train.a is None:
        raise DataError(f"{method} needs a sensitive attribute column")
    # a constant attribute makes the fairness loss identically zero; its zero
    # gradient would pin the multi-gradient at 0, so such rows are left out
    return bool(np.any(train.a != train.a[0]))


def run_erm(cfg: ExperimentConfig, data: TrainData | None = None) -> TrainedSolution:
    """Plain stochastic gradient on the mean logistic loss."""
    train = _data(cfg, data).train

    def objective(x, rng, mu):
        idx = _batch(rng, len(train), cfg.batch_size)
        losses, grads = logistic_losses(x, train.X[idx], train.y[idx])
        return float(losses.mean()), grads.mean(axis=0)

    x = ssg_run(objective, np.zeros(train.d + 1), cfg.budget, cfg.stepsizes(), cfg.smoothing(), seed=cfg.seed)
    return TrainedSolution("erm", x)


def _stack(spec, lb_rows, ub_rows):
    return np.array([lb_rows[c] if b == "lb" else ub_rows[c] for b, c in spec.slots])


def run_ivo(cfg: ExperimentConfig, data: TrainData | None = None) -> TrainedSolution:
    """Interval model: lower bound subquantile, upper bound superquantile of the loss."""
    train = _data(cfg, data).train
    pl, pu = cfg.p_lower, cfg.p_upper

    def full_lb(x):
        return [subquantile(logistic_losses(x, train.X, train.y)[0], pl)]

    def full_ub(x):
        return [superquantile(logistic_losses(x, train.X, train.y)[0], pu)]

    spec = vectorize(full_lb, full_ub, k=1)

    def stochastic(x, rng, mu):
        idx = _batch(rng, len(train), cfg.batch_size)
        losses, grads = logistic_losses(x, train.X[idx], train.y[idx])
        lo = smoothed_tail(losses, grads, "sub", pl, mu)
        hi = smoothed_tail(losses, grads, "super", pu, mu)
        return _stack(spec, [lo.value], [hi.value]), _stack(spec, [lo.grad], [hi.grad])

    x0 = np.zeros(train.d + 1)
    if pl == 1.0 and pu == 0.0:
        # both bounds are the mean loss, so the front is a single point
        x = smg_run(stochastic, x0, cfg.budget, cfg.stepsizes(), cfg.smoothing(), seed=cfg.seed)
        archive = ParetoArchive(x[None, :], spec(x)[None, :])
    else:
        problem = MultiObjectiveProblem(stochastic, spec)
        archive = pf_smg_run(problem, [x0], cfg.pfsmg_config(), cfg.stepsizes(), cfg.smoothing())
    if len(archive) == 0:
        raise RuntimeError("ivo: empty Pareto archive")
    knee = knee_select(archive.F)
    lam = knee_position(archive.F, knee.index, axis=spec.slot("lb", 0))
    return TrainedSolution("ivo", archive.X[knee.index].copy(), archive, knee.to_json(), lam, pl, pu)


def run_rvo(cfg: ExperimentConfig, data: TrainData | None = None) -> TrainedSolution:
    """Rectangle model over (logistic loss, group fairness loss) tails.

    The fairness loss is a dataset-level quantity, so its per-scenario values
    come from groups of ``fairness_group_size`` rows: random groups in each
    stochastic step, a fixed partition of the training split for scoring.
    """
    train = _data(cfg, data).train
    informative = _need_sensitive(train, "rvo")
    pl, pu = cfg.p_lower, cfg.p_upper
    s, G = cfg.fairness_group_size, cfg.fairness_groups
    groups = fixed_groups(len(train), s, cfg.seed)
    Xg, ag = train.X[groups], train.a[groups]

    def _full(x):
        acc = logistic_losses(x, train.X, train.y)[0]
        fair = grouped_fairness(x, Xg, ag)[0]
        return acc, fair

    def full_lb(x):
        acc, fair = _full(x)
        return [subquantile(acc, pl), subquantile(fair, pl)]

    def full_ub(x):
        acc, fair = _full(x)
        return [superquantile(acc, pu), superquantile(fair, pu)]

    spec = vectorize(full_lb, full_ub, k=2)
    acc_rows = [spec.slot("lb", 0), spec.slot("ub", 0)]

    def evaluate(x):
        acc, fair = _full(x)
        return spec.assemble([subquantile(acc, pl), subquantile(fair, pl)],
                             [superquantile(acc, pu), superquantile(fair, pu)])

    def stochastic(x, rng, mu):
        idx = _batch(rng, len(train), G * s).reshape(G, s)
        losses, grads = logistic_losses(x, train.X[idx.ravel()], train.y[idx.ravel()])
        fv, fg = grouped_fairness(x, train.X[idx], train.a[idx])
        lo = [smoothed_tail(losses, grads, "sub", pl, mu), smoothed_tail(fv, fg, "sub", pl, mu)]
        hi = [smoothed_tail(losses, grads, "super", pu, mu), smoothed_tail(fv, fg, "super", pu, mu)]
        vals = _stack(spec, [t.value for t in lo], [t.value for t in hi])
        J = _stack(spec, [t.grad for t in lo], [t.grad for t in hi])
        return (vals, J) if informative else (vals[acc_rows], J[acc_rows])

    problem = MultiObjectiveProblem(stochastic, evaluate)
    archive = pf_smg_run(problem, [np.zeros(train.d + 1)], cfg.pfsmg_config(), cfg.stepsizes(), cfg.smoothing())
    if len(archive) == 0:
        raise RuntimeError("rvo: empty Pareto archive")
    comb = rvo_knee_combine(
        archive,
        accuracy_slots=(spec.slot("lb", 0), spec.slot("ub", 0)),
        fairness_slots=(spec.slot("lb", 1), spec.slot("ub", 1)),
    )
    knee = {
        "knee_indices": list(comb.knee_indices),
        "weights": list(comb.weights),
        "distances": list(comb.distances),
    }
    return TrainedSolution("rvo", comb.x, archive, knee, None, pl, pu)


def run_bi(cfg: ExperimentConfig, data: TrainData | None = None) -> TrainedSolution:
    """Bi-objective baseline: mean logistic loss against the fairness loss."""
    train = _data(cfg, data).train
    informative = _need_sensitive(train, "bi")

    def evaluate(x):
        loss = float(logistic_losses(x, train.X, train.y)[0].mean())
        return np.array([loss, covariance_fairness(x, train.X, train.a)[0]])

    def stochastic(x, rng, mu):
        idx = _batch(rng, len(train), cfg.batch_size)
        losses, grads = logistic_losses(x, train.X[idx], train.y[idx])
        if not informative:
            return np.array([losses.mean()]), grads.mean(axis=0)[None, :]
        fv, fg = covariance_fairness(x, train.X[idx], train.a[idx])
        return np.array([losses.mean(), fv]), np.array([grads.mean(axis=0), fg])

    problem = MultiObjectiveProblem(stochastic, evaluate)
    archive = pf_smg_run(problem, [np.zeros(train.d + 1)], cfg.pfsmg_config(), cfg.stepsizes(), cfg.smoothing())
    if len(archive) == 0:
        raise RuntimeError("bi: empty Pareto archive")
    knee = knee_select(archive.F)
    return TrainedSolution("bi", archive.X[knee.index].copy(), archive, knee.to_json())


RUNNERS = {"erm": run_erm, "ivo": run_ivo, "rvo": run_rvo, "bi": run_bi}


def run_method(method: str, cfg: ExperimentConfig, data: TrainData | None = None) -> TrainedSolution:
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    return RUNNERS[method](cfg, data)
