"""Tabular data ingestion, logistic regression losses and shifted test sets.

Parameters of a logistic model are handled as one flat vector
``theta = (w_1, ..., w_d, b)``; :class:`LogisticModel` is a thin view on it.
Labels are stored as ``-1/+1``; ``Dataset.y01`` gives the ``0/1`` view.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.special import expit


class DataError(ValueError):
    """Input data cannot be turned into a usable dataset."""


@dataclass(frozen=True)
class Schema:
    """Column roles for a delimited table.

    ``positive`` lists the raw label values mapped to ``+1``. ``sensitive`` is
    an optional column; when ``sensitive_positive`` is given the attribute is
    the indicator of that value, otherwise the column is parsed as a number.
    """

    label: str
    positive: tuple = ("1",)
    categorical: tuple = ()
    continuous: tuple = ()
    sensitive: str | None = None
    sensitive_positive: str | None = None
    missing: str = "?"
    delimiter: str = ","

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown schema keys: {sorted(unknown)}")
        d = dict(d)
        pos = d.get("positive", ("1",))
        d["positive"] = tuple(str(v) for v in (pos if isinstance(pos, (list, tuple)) else [pos]))
        for key in ("categorical", "continuous"):
            d[key] = tuple(d.get(key, ()))
        if d.get("sensitive_positive") is not None:
            d["sensitive_positive"] = str(d["sensitive_positive"])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "Schema":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "positive": list(self.positive),
            "categorical": list(self.categorical),
            "continuous": list(self.continuous),
            "sensitive": self.sensitive,
            "sensitive_positive": self.sensitive_positive,
            "missing": self.missing,
            "delimiter": self.delimiter,
        }


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    a: np.ndarray | None = None
    feature_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise DataError("features must be 2-D with one label per row")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError("labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.a is not None:
            a = np.asarray(self.a, dtype=float)
            if a.shape != y.shape:
                raise DataError("sensitive attribute needs one value per row")
            object.__setattr__(self, "a", a)

    def __len__(self) -> int:
        return self.y.size

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def y01(self) -> np.ndarray:
        return (self.y > 0).astype(int)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        a = None if self.a is None else self.a[idx]
        return Dataset(self.X[idx], self.y[idx], a, self.feature_names)


def load_table(path, schema: Schema) -> pd.DataFrame:
    """Read a delimited file as strings and drop rows containing the missing marker."""
    try:
        df = pd.read_csv(path, sep=schema.delimiter, dtype=str, keep_default_na=False,
                         skipinitialspace=True)
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    df.columns = [c.strip() for c in df.columns]
    needed = [schema.label, *schema.categorical, *schema.continuous]
    if schema.sensitive is not None:
        needed.append(schema.sensitive)
    missing_cols = [c for c in needed if c not in df.columns]
    if missing_cols:
        raise DataError(f"unknown column(s) {missing_cols} in {path}")
    df = df[list(dict.fromkeys(needed))].apply(lambda s: s.str.strip())
    bad = (df == schema.missing) | (df == "")
    df = df[~bad.any(axis=1)].reset_index(drop=True)
    if df.empty:
        raise DataError(f"no rows left in {path} after removing missing values")
    return df


@dataclass
class Preprocessor:
    """One-hot encodes categoricals and z-scores continuous columns.

    Statistics come from the frame passed to :meth:`fit`; unseen categories
    at transform time encode as all zeros.
    """

    schema: Schema
    means: dict = field(default_factory=dict)
    stds: dict = field(default_factory=dict)
    levels: dict = field(default_factory=dict)

    def fit(self, df: pd.DataFrame) -> "Preprocessor":
        for col in self.schema.continuous:
            v = _numeric(df[col], col)
            self.means[col] = float(v.mean())
            sd = float(v.std(ddof=0))
            self.stds[col] = sd if sd > 0 else 1.0
        for col in self.schema.categorical:
            self.levels[col] = sorted(df[col].unique())
        return self

    @property
    def feature_names(self) -> tuple:
        names = list(self.schema.continuous)
        for col in self.schema.categorical:
            names += [f"{col}={lvl}" for lvl in self.levels[col]]
        return tuple(names)

    def transform(self, df: pd.DataFrame) -> Dataset:
        blocks = []
        for col in self.schema.continuous:
            blocks.append(((_numeric(df[col], col) - self.means[col]) / self.stds[col])[:, None])
        for col in self.schema.categorical:
            vals = df[col].to_numpy()
            blocks.append(np.stack([vals == lvl for lvl in self.levels[col]], axis=1).astype(float))
        X = np.hstack(blocks) if blocks else np.zeros((len(df), 0))
        y = np.where(df[self.schema.label].isin(self.schema.positive), 1.0, -1.0)
        a = None
        if self.schema.sensitive is not None:
            col = df[self.schema.sensitive]
            if self.schema.sensitive_positive is not None:
                a = (col == self.schema.sensitive_positive).to_numpy(dtype=float)
            else:
                a = _numeric(col, self.schema.sensitive)
        return Dataset(X, y, a, self.feature_names)


def _numeric(series: pd.Series, name: str) -> np.ndarray:
    try:
        return pd.to_numeric(series, errors="raise").to_numpy(dtype=float)
    except (ValueError, TypeError) as exc:
        raise DataError(f"unparseable numeric value in column {name!r}: {exc}") from exc


def ingest_dataset(path, schema: Schema) -> Dataset:
    """Load, clean and encode a file using statistics of the file itself."""
    df = load_table(path, schema)
    return Preprocessor(schema).fit(df).transform(df)


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float = 0.0

    @classmethod
    def from_vector(cls, theta) -> "LogisticModel":
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:-1], float(theta[-1]))

    def to_vector(self) -> np.ndarray:
        return np.append(np.asarray(self.weights, dtype=float), self.bias)


def _theta(model) -> np.ndarray:
    if isinstance(model, LogisticModel):
        return model.to_vector()
    return np.asarray(model, dtype=float)


def _design(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def margins(model, X) -> np.ndarray:
    theta = _theta(model)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] + 1 != theta.size:
        raise ValueError(f"feature dimension {X.shape[1]} does not match model {theta.size - 1}")
    return X @ theta[:-1] + theta[-1]


def predict_proba(model, u):
    """``sigmoid(w . u + b)`` for one feature vector or each row of a matrix."""
    p = expit(margins(model, u))
    return float(p[0]) if np.ndim(u) == 1 else p


def predict(model, X) -> np.ndarray:
    """Labels in ``{-1, +1}``; probability exactly 0.5 maps to ``+1``."""
    return np.where(margins(model, X) >= 0.0, 1.0, -1.0)


def logistic_losses(theta, X, y):
    """Per-sample ``log(1 + exp(-y * m))`` and gradients w.r.t. ``theta``."""
    m = X @ theta[:-1] + theta[-1]
    z = -y * m
    losses = np.logaddexp(0.0, z)
    coef = -y * expit(z)
    grads = np.hstack([coef[:, None] * X, coef[:, None]])
    return losses, grads


def sample_losses(model, data: Dataset, indices=None):
    theta = _theta(model)
    if theta.size != data.d + 1:
        raise ValueError("model dimension does not match the dataset")
    if indices is None:
        return logistic_losses(theta, data.X, data.y)
    idx = np.asarray(indices, dtype=int)
    if idx.size and (idx.min() < -len(data) or idx.max() >= len(data)):
        raise IndexError("sample index out of range")
    return logistic_losses(theta, data.X[idx], data.y[idx])


def covariance_fairness(theta, X, a):
    """Squared covariance between ``a`` and the predicted probability, with gradient."""
    n = a.size
    if n == 0:
        raise ValueError("fairness loss needs at least one sample")
    phi = expit(X @ theta[:-1] + theta[-1])
    ac = a - a.mean()
    cov = float(ac @ phi) / n
    w = ac * phi * (1.0 - phi) / n
    dcov = np.append(w @ X, w.sum())
    return cov * cov, 2.0 * cov * dcov


def fairness_loss(model, data: Dataset):
    if data.a is None:
        raise DataError("dataset has no sensitive attribute")
    return covariance_fairness(_theta(model), data.X, data.a)


def grouped_fairness(theta, Xg, ag):
    """Fairness loss of each group in a ``(groups, size, d)`` stack."""
    phi = expit(Xg @ theta[:-1] + theta[-1])
    ac = ag - ag.mean(axis=1, keepdims=True)
    s = ag.shape[1]
    cov = (ac * phi).sum(axis=1) / s
    w = ac * phi * (1.0 - phi) / s
    dcov = np.concatenate([np.einsum("gs,gsd->gd", w, Xg), w.sum(axis=1)[:, None]], axis=1)
    return cov**2, 2.0 * cov[:, None] * dcov


def accuracy(model, data: Dataset) -> float:
    if len(data) == 0:
        raise ValueError("accuracy of an empty dataset is undefined")
    return float(np.mean(predict(model, data.X) == data.y))


@dataclass(frozen=True)
class ShiftSpec:
    """Test-set resampling at a fixed positive-class fraction."""

    rho: float
    n_test: int
    n_rep: int = 30
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("positive fraction must lie in (0, 1)")
        if self.n_test < 1 or self.n_rep < 1:
            raise ValueError("n_test and n_rep must be positive")

    @property
    def n_pos(self) -> int:
        return int(round(self.rho * self.n_test))

    def feasible(self, pool: Dataset) -> bool:
        n_pos_pool = int(np.sum(pool.y > 0))
        return n_pos_pool >= self.n_pos and len(pool) - n_pos_pool >= self.n_test - self.n_pos

    def rng(self, r: int) -> np.random.Generator:
        # the stream depends on (seed, rho, r) only, so every model sees the same sets
        return np.random.default_rng([self.seed, int(round(self.rho * 1_000_000)), r])


def resample_shift_indices(pool: Dataset, spec: ShiftSpec, r: int) -> np.ndarray:
    if not spec.feasible(pool):
        raise DataError(
            f"cannot draw {spec.n_pos} positives and {spec.n_test - spec.n_pos} negatives from the pool"
        )
    rng = spec.rng(r)
    pos = np.flatnonzero(pool.y > 0)
    neg = np.flatnonzero(pool.y < 0)
    idx = np.concatenate([
        rng.choice(pos, spec.n_pos, replace=False),
        rng.choice(neg, spec.n_test - spec.n_pos, replace=False),
    ])
    return rng.permutation(idx)


def resample_shift(pool: Dataset, spec: ShiftSpec, r: int) -> Dataset:
    """Subsample ``pool`` without replacement to the positive fraction ``spec.rho``."""
    return pool.subset(resample_shift_indices(pool, spec, r))


def two_gaussian_frame(
    n: int,
    d: int = 10,
    pos_frac: float = 0.3,
    separation: float = 1.5,
    pos_scale: float = 2.0,
    neg_scale: float = 0.7,
    group_shift: float = 1.0,
    seed: int = 0,
) -> pd.DataFrame:
    """Synthetic binary task with class-dependent noise and a group-linked feature.

    The label is positive with probability ``pos_frac``; positives have
    feature noise ``pos_scale`` and negatives ``neg_scale``. The binary group
    ``a`` is more frequent among positives and also shifts feature ``u0``.
    """
    rng = np.random.default_rng(seed)
    y = rng.random(n) < pos_frac
    a = (rng.random(n) < np.where(y, 0.7, 0.4)).astype(int)
    direction = np.ones(d) / math.sqrt(d)
    mean = np.where(y, 0.5, -0.5)[:, None] * separation * direction
    scale = np.where(y, pos_scale, neg_scale)[:, None]
    U = mean + scale * rng.standard_normal((n, d))
    U[:, 0] += group_shift * (a - 0.5)
    cols = {f"u{j}": U[:, j] for j in range(d)}
    cols["group"] = a
    cols["label"] = y.astype(int)
    return pd.DataFrame(cols)


def two_gaussian_schema(d: int = 10) -> Schema:
    return Schema(
        label="label", positive=("1",), continuous=tuple(f"u{j}" for j in range(d)),
        sensitive="group",
    )


def frame_to_strings(df: pd.DataFrame) -> pd.DataFrame:
    """Render a numeric frame the way :func:`load_table` would have read it."""
    return df.apply(lambda s: s.map(repr) if s.dtype.kind == "f" else s.astype(str))


def split_indices(n: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(train_fraction * n))
    return np.sort(perm[:k]), np.sort(perm[k:])


def fixed_groups(n: int, size: int, seed: int) -> np.ndarray:
    """Partition ``range(n)`` into full groups of ``size`` (remainder dropped)."""
    perm = np.random.default_rng(seed).permutation(n)
    g = n // size
    if g == 0:
        raise ValueError("group size exceeds the number of samples")
    return perm[: g * size].reshape(g, size)


def row_indices(df: pd.DataFrame, idx: Sequence[int]) -> pd.DataFrame:
    return df.iloc[np.asarray(idx, dtype=int)].reset_index(drop=True)
