"""Smoothed sub/superquantile objectives and the smoothing stochastic gradient loop.

The hinge ``max(0, t)`` is replaced by the scaled softplus
``mu * log(1 + exp(t / mu))``, which overestimates the hinge by at most
``mu * log 2`` (attained at ``t = 0``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import expit

from .risk import check_level, quantile_index


LossFn = Callable[[np.ndarray, object], tuple[np.ndarray, np.ndarray]]
"""``loss_fn(x, batch) -> (losses, grads)`` with ``grads`` of shape ``(n, dim)``."""

StochasticFn = Callable[[np.ndarray, np.random.Generator, float], tuple[float, np.ndarray]]
"""``f(x, rng, mu) -> (value, grad)``; draws its own sample from ``rng``."""


class DivergenceError(FloatingPointError):
    """A stochastic gradient loop produced a non-finite gradient or iterate."""


def smooth_hinge(t, mu: float):
    """Softplus smoothing of ``max(0, t)``.

    Returns ``(value, derivative)``; both broadcast over array ``t``.
    """
    if not mu > 0:
        raise ValueError(f"smoothing parameter must be positive, got {mu!r}")
    t = np.asarray(t, dtype=float)
    s = t / mu
    # max(t, 0) + mu*log1p(exp(-|t|/mu)) never underestimates the hinge
    value = np.maximum(t, 0.0) + mu * np.log1p(np.exp(-np.abs(s)))
    deriv = expit(s)
    if np.ndim(value) == 0:
        return float(value), float(deriv)
    return value, deriv


@dataclass(frozen=True)
class SmoothingSchedule:
    """``mu_k = max(mu0 / k**decay, floor)`` for ``k = 1, 2, ...``."""

    mu0: float = 0.1
    decay: float = 0.5
    floor: float = 1e-8

    def __post_init__(self):
        if self.mu0 <= 0 or self.decay <= 0 or self.floor < 0:
            raise ValueError("need mu0 > 0, decay > 0, floor >= 0")

    def __call__(self, k: int) -> float:
        return max(self.mu0 / k**self.decay, self.floor)


@dataclass(frozen=True)
class StepsizeSchedule:
    """``alpha_k = alpha0 / (1 + rate * (k - 1))`` for ``k = 1, 2, ...``.

    The first step uses ``alpha0`` itself.
    """

    alpha0: float = 1.3
    rate: float = 0.0

    def __post_init__(self):
        if self.alpha0 <= 0 or self.rate < 0:
            raise ValueError("need alpha0 > 0 and rate >= 0")

    def __call__(self, k: int) -> float:
        return self.alpha0 / (1.0 + self.rate * (k - 1))


class TailEval(NamedTuple):
    value: float
    grad: np.ndarray
    eta: float


def smoothed_tail(losses, grads, mode: str, p: float, mu: float, eta: float | None = None) -> TailEval:
    """Smoothed empirical tail functional of per-sample ``losses``.

    ``grads[i]`` is the gradient of ``losses[i]``. The auxiliary ``eta`` is the
    empirical ``p``-quantile of the losses unless given, and is held constant
    when differentiating. Boundary levels fall back to the unsmoothed
    extensions: the mean (``sub`` at 1, ``super`` at 0), the minimum (``sub``
    at 0) and the maximum (``super`` at 1), each with the gradient of the
    selected sample(s).
    """
    z = np.asarray(losses, dtype=float)
    G = np.asarray(grads, dtype=float)
    n = z.size
    if n == 0:
        raise ValueError("empty batch")
    p = check_level(p)
    if mode not in ("sub", "super"):
        raise ValueError(f"mode must be 'sub' or 'super', got {mode!r}")

    if (mode == "sub" and p == 1.0) or (mode == "super" and p == 0.0):
        return TailEval(float(z.mean()), G.mean(axis=0), float("nan"))
    if mode == "sub" and p == 0.0:
        i = int(np.argmin(z))
        return TailEval(float(z[i]), G[i].copy(), float(z[i]))
    if mode == "super" and p == 1.0:
        i = int(np.argmax(z))
        return TailEval(float(z[i]), G[i].copy(), float(z[i]))

    if eta is None:
        k = quantile_index(n, p)
        eta = float(np.partition(z, k)[k])
    if mode == "super":
        scale = 1.0 / (n * (1.0 - p))
        h, dh = smooth_hinge(z - eta, mu)
        value = eta + scale * np.sum(h)
    else:
        scale = 1.0 / (n * p)
        h, dh = smooth_hinge(eta - z, mu)
        value = eta - scale * np.sum(h)
    grad = scale * (np.asarray(dh) @ G)
    return TailEval(float(value), grad, float(eta))


@dataclass(frozen=True)
class SmoothedTailObjective:
    """Smoothed sub- or superquantile of a per-sample loss at level ``p``."""

    mode: str
    p: float
    loss_fn: LossFn

    def __post_init__(self):
        if self.mode not in ("sub", "super"):
            raise ValueError(f"mode must be 'sub' or 'super', got {self.mode!r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError("tail objectives need p in (0, 1)")


def tail_objective_eval(obj: SmoothedTailObjective, x, batch, mu: float, eta: float | None = None) -> TailEval:
    if not mu > 0:
        raise ValueError(f"smoothing parameter must be positive, got {mu!r}")
    losses, grads = obj.loss_fn(np.asarray(x, dtype=float), batch)
    return smoothed_tail(losses, grads, obj.mode, obj.p, mu, eta)


def _check_finite(k: int, g: np.ndarray, x: np.ndarray) -> None:
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(x))):
        raise DivergenceError(f"non-finite gradient or iterate at iteration {k}")


def ssg_run(
    objective: StochasticFn,
    x0,
    steps: int,
    alphas: StepsizeSchedule = StepsizeSchedule(),
    mus: SmoothingSchedule = SmoothingSchedule(),
    seed: int = 0,
    rng: np.random.Generator | None = None,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Smoothing stochastic gradient method.

    Iterates ``x_{k+1} = x_k - alpha_k * grad f~(x_k, xi_k, mu_k)`` for
    ``k = 1..steps`` and returns the last iterate. Passing ``rng`` overrides
    ``seed``.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    rng = np.random.default_rng(seed) if rng is None else rng
    x = np.array(x0, dtype=float)
    for k in range(1, steps + 1):
        _, g = objective(x, rng, mus(k))
        g = np.asarray(g, dtype=float)
        _check_finite(k, g, x)
        x = x - alphas(k) * g
        if callback is not None:
            callback(k, x)
    _check_finite(steps, np.zeros(1), x)
    return x
