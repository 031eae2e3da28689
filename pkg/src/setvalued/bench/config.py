"""Experiment configuration with JSON loading and a resolved echo."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..front import PFSMGConfig
from ..smooth import SmoothingSchedule, StepsizeSchedule

METHODS = ("erm", "ivo", "rvo", "bi")
DEFAULT_SHIFT_GRID = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.40, 0.50)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def _default_pfsmg() -> dict:
    return {"outer_iterations": 10, "perturbations": 3, "magnitude": 0.05, "inner_steps": 30, "capacity": 20}


def _default_synthetic() -> dict:
    return {"n": 5000, "d": 10, "pos_frac": 0.3}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on.

    ``data=None`` uses the synthetic two-Gaussian task (``synthetic`` holds its
    arguments, seeded by ``seed``). Stepsizes are
    ``alpha0 / (1 + alpha_rate * (k - 1))``. ``schema`` is a path to a JSON schema or the schema itself.
    """

    data: str | None = None
    schema: str | dict | None = None
    p_lower: float = 0.1
    p_upper: float = 0.9
    budget: int = 1500
    alpha0: float = 1.3
    alpha_rate: float = 1.0
    mu0: float = 0.1
    mu_decay: float = 0.5
    mu_floor: float = 1e-8
    batch_size: int = 64
    fairness_group_size: int = 32
    fairness_groups: int = 8
    pfsmg: dict = field(default_factory=_default_pfsmg)
    shift_grid: tuple = DEFAULT_SHIFT_GRID
    n_test: int = 500
    n_rep: int = 30
    seed: int = 0
    train_fraction: float = 0.8
    synthetic: dict = field(default_factory=_default_synthetic)
    out: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "shift_grid", tuple(float(r) for r in self.shift_grid))
        object.__setattr__(self, "pfsmg", {**_default_pfsmg(), **dict(self.pfsmg)})
        object.__setattr__(self, "synthetic", {**_default_synthetic(), **dict(self.synthetic)})
        checks = [
            (self.budget >= 1, "budget must be at least 1"),
            (0.0 <= self.p_lower <= 1.0 and 0.0 <= self.p_upper <= 1.0, "tail levels must lie in [0, 1]"),
            (self.alpha0 > 0, "alpha0 must be positive"),
            (self.alpha_rate >= 0, "alpha_rate must be nonnegative"),
            (self.n_rep >= 1 and self.n_test >= 1, "n_rep and n_test must be positive"),
            (self.batch_size >= 1, "batch_size must be positive"),
            (self.fairness_group_size >= 2 and self.fairness_groups >= 1, "invalid fairness grouping"),
            (0.0 < self.train_fraction < 1.0, "train_fraction must lie in (0, 1)"),
            (all(0.0 < r < 1.0 for r in self.shift_grid), "shift fractions must lie in (0, 1)"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        try:
            self.pfsmg_config()
            self.smoothing()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(d)

    def replace(self, **changes) -> "ExperimentConfig":
        return self.from_dict({**self.to_dict(), **changes})

    def stepsizes(self) -> StepsizeSchedule:
        return StepsizeSchedule(self.alpha0, self.alpha_rate)

    def smoothing(self) -> SmoothingSchedule:
        return SmoothingSchedule(self.mu0, self.mu_decay, self.mu_floor)

    def pfsmg_config(self) -> PFSMGConfig:
        return PFSMGConfig(seed=self.seed, **self.pfsmg)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["shift_grid"] = list(self.shift_grid)
        return d
