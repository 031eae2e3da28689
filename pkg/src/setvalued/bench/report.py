"""Deterministic JSON/CSV output for runs and evaluations."""

from __future__ import annotations

import json
from pathlib import Path

from .config import ExperimentConfig


def write_json(path, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def write_solution(out: Path, sol) -> list[Path]:
    """Write ``solution_<m>.json`` plus the archive CSV and knee JSON when present."""
    paths = [out / f"solution_{sol.method}.json"]
    write_json(paths[0], sol.to_json())
    if sol.archive is not None:
        paths.append(out / f"front_{sol.method}.csv")
        sol.archive.to_csv(paths[-1])
        paths.append(out / f"knee_{sol.method}.json")
        write_json(paths[-1], {"method": sol.method, "lam": sol.lam, **sol.knee})
    return paths


def write_report(report, out_dir, solutions=(), cfg: ExperimentConfig | None = None) -> list[Path]:
    """Emit ``metrics.json``, per-method fronts and knees, and the resolved config."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        if report is not None:
            paths.append(out / "metrics.json")
            write_json(paths[-1], report.to_dict())
        for sol in solutions:
            paths += write_solution(out, sol)
        if cfg is not None:
            paths.append(out / "config.json")
            write_json(paths[-1], cfg.to_dict())
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return paths
