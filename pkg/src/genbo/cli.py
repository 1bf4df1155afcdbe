"""``genbo`` command line: run experiments, plot regret curves, self-check gradients."""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from genbo import plotting, selfcheck
from genbo.blackbox import EhrlichFunction
from genbo.config import load_config
from genbo.engine import ExperimentConfig, Method, run_experiment
from genbo.errors import ConfigError, GenBOError, RunFailed


def _run_cell(config: ExperimentConfig, seed: int):
    """Worker entry point. Returns ``(result, error_message)``; never raises GenBO errors."""
    try:
        return run_experiment(config, seed), None
    except RunFailed as exc:
        return exc.partial, str(exc)
    except GenBOError as exc:
        return None, f"{config.method.label} seed {seed}: {exc}"


def _save_artifacts(result, out: Path) -> None:
    state = result.state
    if state is None:
        return
    if state.config.method.method is Method.GENBO:
        state.params.save(out / "checkpoints" / f"{result.label}_seed{result.seed}.json")
    if isinstance(state.task, EhrlichFunction):
        task_file = out / "tasks" / f"seed{result.seed}.json"
        if not task_file.exists():
            state.task.save(task_file)


def cmd_run(config_path, out_dir, parallelism: int = 1, force: bool = False) -> int:
    try:
        plan = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        if not force:
            print(f"error: {out} exists and is not empty (use --force to overwrite)", file=sys.stderr)
            return 2
        shutil.rmtree(out)
    for sub in ("checkpoints", "tasks"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    cells = [(exp, seed) for exp in plan.experiments for seed in plan.seeds]
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(_run_cell, *zip(*cells)))
    else:
        outcomes = [_run_cell(exp, seed) for exp, seed in cells]

    rows, errors = [], []
    for (exp, seed), (result, err) in zip(cells, outcomes):
        if result is not None:
            rows.extend(plotting.result_rows(result))
            _save_artifacts(result, out)
        if err:
            errors.append(err)
    csv_path = out / "results.csv"
    plotting.write_csv(csv_path, rows)
    (out / "config.json").write_text(json.dumps([e.to_dict() for e in plan.experiments], indent=2) + "\n")

    if errors:
        for err in errors:
            print(f"run failed: {err}", file=sys.stderr)
        print(f"partial results written to {csv_path}", file=sys.stderr)
        return 1

    curves = plotting.read_curves(csv_path)
    (out / "summary.json").write_text(json.dumps(plotting.summarize(curves), indent=2) + "\n")
    plotting.plot_regret(curves, out / "regret.svg")
    for method, stats in plotting.summarize(curves).items():
        print(f"{method:<40} final regret {stats['final_regret_mean']:.4g} +- {stats['final_regret_std']:.4g}")
    print(f"wrote {csv_path}, summary.json, regret.svg to {out}")
    return 0


def cmd_plot(csv_path, out_svg) -> int:
    try:
        curves = plotting.read_curves(csv_path)
    except OSError as exc:
        print(f"error: cannot read {csv_path}: {exc.strerror}", file=sys.stderr)
        return 2
    except plotting.SchemaError as exc:
        print(f"error: {csv_path}: {exc}", file=sys.stderr)
        return 2
    Path(out_svg).parent.mkdir(parents=True, exist_ok=True)
    plotting.plot_regret(curves, out_svg)
    return 0


def cmd_selfcheck() -> int:
    return selfcheck.main()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genbo", description="Generative Bayesian optimization experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log round-level diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every (method, seed) cell of a config")
    run.add_argument("--config", required=True, help="TOML experiment config")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--parallelism", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("--force", action="store_true", help="overwrite a nonempty output directory")

    plot = sub.add_parser("plot", help="render regret curves from results.csv")
    plot.add_argument("--csv", required=True)
    plot.add_argument("--out", required=True, help="output SVG path")

    sub.add_parser("selfcheck", help="finite-difference gradient and normalization checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "run":
        if args.parallelism < 1:
            print("error: --parallelism must be >= 1", file=sys.stderr)
            return 2
        return cmd_run(args.config, args.out, args.parallelism, args.force)
    if args.command == "plot":
        return cmd_plot(args.csv, args.out)
    return cmd_selfcheck()


if __name__ == "__main__":
    sys.exit(main())
