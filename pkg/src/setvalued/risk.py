"""Quantile, subquantile and superquantile functionals on empirical samples.

Two routes are provided for the tail functionals:

* the tail-average form, which integrates the piecewise-constant empirical
  quantile function exactly over ``[p, 1]`` (superquantile) or ``[0, p]``
  (subquantile);
* the Rockafellar-Uryasev variational form, evaluated at the empirical
  ``p``-quantile, which is where the optimum over the auxiliary scalar is
  attained for a discrete distribution.

Boundary levels follow the usual extensions: ``superquantile(s, 0)`` is the
mean and ``superquantile(s, 1)`` the maximum; ``subquantile(s, 0)`` is the
minimum and ``subquantile(s, 1)`` the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

# Slack used when deciding whether p*n sits on an integer. Keeps 0.1*30 on
# the jump at 3 instead of rounding up to 4.
_INDEX_EPS = 1e-9


@dataclass(frozen=True)
class EmpiricalSample:
    """Finite real-valued sample with a cached ascending view."""

    values: np.ndarray
    sorted: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0:
            raise ValueError("empirical sample must contain at least one value")
        if not np.all(np.isfinite(values)):
            raise ValueError("empirical sample contains non-finite values")
        values = values.copy()
        values.setflags(write=False)
        ordered = np.sort(values, kind="stable")
        ordered.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sorted", ordered)

    def __len__(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(np.mean(self.values))

    def negate(self) -> "EmpiricalSample":
        return EmpiricalSample(-self.values)


SampleLike = Union[EmpiricalSample, np.ndarray, list, tuple]


class TailValue(NamedTuple):
    """Value of a variational tail functional and its optimal auxiliary scalar."""

    value: float
    eta: float


def as_sample(s: SampleLike) -> EmpiricalSample:
    if isinstance(s, EmpiricalSample):
        return s
    return EmpiricalSample(np.asarray(s, dtype=float))


def check_level(p: float) -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"risk level must lie in [0, 1], got {p!r}")
    return p


def quantile_index(n: int, p: float) -> int:
    """0-based position of the left-continuous empirical ``p``-quantile."""
    k = math.ceil(p * n - _INDEX_EPS)
    return min(max(k, 1), n) - 1


def is_jump_level(n: int, p: float) -> bool:
    """True when ``p`` is one of the empirical CDF levels ``1/n, ..., (n-1)/n``."""
    pn = p * n
    j = round(pn)
    return 1 <= j <= n - 1 and abs(pn - j) <= _INDEX_EPS


def empirical_quantile(s: SampleLike, p: float) -> float:
    """Smallest sample value whose empirical CDF reaches ``p``.

    This is the order statistic of (1-based) rank ``ceil(p * n)``.
    """
    s = as_sample(s)
    p = check_level(p)
    if p <= 0.0:
        raise ValueError("empirical quantile is defined for p in (0, 1]")
    return float(s.sorted[quantile_index(len(s), p)])


def _upper_tail_weights(n: int, p: float) -> np.ndarray:
    # Lebesgue measure of ((j-1)/n, j/n] intersected with [p, 1].
    j = np.arange(1, n + 1, dtype=float)
    return np.clip(j / n - np.maximum(p, (j - 1) / n), 0.0, None)


def _lower_tail_weights(n: int, p: float) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=float)
    return np.clip(np.minimum(p, j / n) - (j - 1) / n, 0.0, None)


def superquantile(s: SampleLike, p: float) -> float:
    """Mean of the upper ``(1 - p)`` tail of the empirical distribution."""
    s = as_sample(s)
    p = check_level(p)
    if p == 0.0:
        return s.mean()
    if p == 1.0:
        return float(s.sorted[-1])
    w = _upper_tail_weights(len(s), p)
    return float(np.dot(w, s.sorted) / (1.0 - p))


def subquantile(s: SampleLike, p: float) -> float:
    """Mean of the lower ``p`` tail of the empirical distribution."""
    s = as_sample(s)
    p = check_level(p)
    if p == 0.0:
        return float(s.sorted[0])
    if p == 1.0:
        return s.mean()
    w = _lower_tail_weights(len(s), p)
    return float(np.dot(w, s.sorted) / p)


def _interior_level(p: float) -> float:
    p = check_level(p)
    if p == 0.0 or p == 1.0:
        raise ValueError(
            "variational form needs p in (0, 1); use the boundary extensions instead"
        )
    return p


def superquantile_ru(s: SampleLike, p: float) -> TailValue:
    """``min_eta eta + E[max(Z - eta, 0)] / (1 - p)`` at the empirical quantile."""
    s = as_sample(s)
    p = _interior_level(p)
    eta = empirical_quantile(s, p)
    excess = np.maximum(s.values - eta, 0.0).sum()
    return TailValue(eta + excess / (len(s) * (1.0 - p)), eta)


def subquantile_ru(s: SampleLike, p: float) -> TailValue:
    """``max_eta eta - E[max(eta - Z, 0)] / p`` at the empirical quantile."""
    s = as_sample(s)
    p = _interior_level(p)
    eta = empirical_quantile(s, p)
    shortfall = np.maximum(eta - s.values, 0.0).sum()
    return TailValue(eta - shortfall / (len(s) * p), eta)


def tail_functional(s: SampleLike, p: float, mode: str) -> float:
    """Dispatch to :func:`subquantile` (``mode="sub"``) or :func:`superquantile`."""
    if mode == "sub":
        return subquantile(s, p)
    if mode == "super":
        return superquantile(s, p)
    raise ValueError(f"mode must be 'sub' or 'super', got {mode!r}")
