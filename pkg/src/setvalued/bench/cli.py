"""Command line entry point.

Training subcommands (``erm``, ``ivo``, ``rvo``, ``bi``) write the solution,
its archive and knee, and the resolved config into ``--out``. ``eval-shift``
scores the solutions found in ``--out``; ``report`` trains every applicable
method and evaluates them in one go.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..front import ParetoArchive
from ..learn import DataError
from ..smooth import DivergenceError
from .config import METHODS, ConfigError, ExperimentConfig
from .metrics import evaluate_shift
from .pipelines import TrainedSolution, prepare_data, run_method
from .report import write_report

EXIT_CONFIG, EXIT_DATA, EXIT_RUN = 2, 3, 1


def _grid(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad shift grid {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--data", help="delimited data file (synthetic task if omitted)")
    common.add_argument("--schema", help="JSON column-role schema for --data")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--p-lower", type=float, dest="p_lower")
    common.add_argument("--p-upper", type=float, dest="p_upper")
    common.add_argument("--budget", type=int)
    common.add_argument("--alpha0", type=float)
    common.add_argument("--nrep", type=int, dest="n_rep")
    common.add_argument("--shift-grid", type=_grid, dest="shift_grid")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="setvalued", description="Set-valued learning experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for m in METHODS:
        sub.add_parser(m, parents=[common], help=f"train the {m} model")
    sub.add_parser("eval-shift", parents=[common], help="evaluate saved solutions under class shift")
    sub.add_parser("report", parents=[common], help="train all methods and evaluate")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    overrides = {
        k: getattr(args, k)
        for k in ("data", "schema", "seed", "out", "p_lower", "p_upper", "budget", "alpha0", "n_rep", "shift_grid")
        if getattr(args, k) is not None
    }
    return cfg.replace(**overrides) if overrides else cfg


def load_solutions(out: Path) -> list[TrainedSolution]:
    sols = []
    for m in METHODS:
        path = out / f"solution_{m}.json"
        if not path.exists():
            continue
        front = out / f"front_{m}.csv"
        archive = ParetoArchive.from_csv(front) if front.exists() else None
        sols.append(TrainedSolution.from_json(json.loads(path.read_text(encoding="utf-8")), archive))
    if not sols:
        raise ConfigError(f"no saved solutions in {out}; run a training subcommand first")
    return sols


def run(args) -> None:
    cfg = resolve_config(args)
    out = Path(cfg.out)
    data = prepare_data(cfg)
    if args.command in METHODS:
        sol = run_method(args.command, cfg, data)
        write_report(None, out, [sol], cfg)
    elif args.command == "eval-shift":
        report = evaluate_shift(load_solutions(out), data.pool, cfg)
        write_report(report, out, (), cfg)
    else:
        methods = [m for m in METHODS if data.train.a is not None or m in ("erm", "ivo")]
        sols = [run_method(m, cfg, data) for m in methods]
        write_report(evaluate_shift(sols, data.pool, cfg), out, sols, cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, OSError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    return 0


if __name__ == "__main__":
    sys.exit(main())
