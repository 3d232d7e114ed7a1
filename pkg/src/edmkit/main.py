import argparse
import asyncio
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import questionary
from dotenv import load_dotenv

from edmkit.classifiers import ClassifierFactory, collection_cube
from edmkit.costs import CostMatrices, CostSpec, LinearDelay, TableDelay, build_cost_matrices, load_cost_spec
from edmkit.data import TimeSeriesDataset, default_timestamps, load_ucr_tsv, make_synthetic, write_ucr_tsv
from edmkit.errors import ConfigError, DataError, EdmError, InvalidParam, MemberFitError
from edmkit.pipeline import (
    EvaluationReport,
    fit_pipeline,
    pipeline_from_blob,
    pipeline_to_blob,
    reports_index_rows,
    score,
    serialize_report,
)
from edmkit.triggers import fixed_time_costs
from edmkit.utils.config import RunConfig, SyntheticParams, parse_config
from edmkit.utils.logger import logger
from edmkit.utils.rng import split_seeds
from edmkit.utils.store import ModelStore

COMMANDS = ["bench", "sweep", "synth", "dump-trigger"]
INDEX_COLUMNS = ["trigger", "alpha", "avg_cost", "accuracy", "earliness", "status"]
PIPELINE_NAME = "pipeline"


def _comma_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_args(argv: Optional[List[str]] = None):
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(description="edmkit - cost-sensitive early classification of time series")
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="Command to run (menu when omitted)")
    parser.add_argument("--config", type=str, default=None, help="Path to a YAML or JSON configuration file")
    parser.add_argument("--train", type=str, help="Training split in UCR TSV format")
    parser.add_argument("--test", type=str, help="Test split in UCR TSV format")
    parser.add_argument("--trigger", type=str, help="Trigger model name")
    parser.add_argument("--classifier", type=str, help="Base classifier name (knn | logistic)")
    parser.add_argument("--alpha", type=float, help="Linear delay cost weight")
    parser.add_argument("--theta", type=float, help="Fixed threshold for the threshold trigger (skips fitting)")
    parser.add_argument("--timestamps", type=int, help="Number of monitored timestamps")
    parser.add_argument("--folds", type=int, help="Out-of-fold calibration folds")
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--jobs", type=int, help="Worker count (default: EDM_JOBS or 1)")
    parser.add_argument("--output", type=str, help="Output directory")
    parser.add_argument("--no-normalize", action="store_true", help="Skip per-prefix z-normalization")
    parser.add_argument("--triggers", type=_comma_list, help="Comma-separated triggers for sweep")
    parser.add_argument("--alphas", type=lambda v: [float(a) for a in _comma_list(v)], help="Comma-separated alphas")
    parser.add_argument("--n-per-class", type=int, help="Synthetic series per class")
    parser.add_argument("--length", type=int, help="Synthetic series length")
    parser.add_argument("--t-star", type=int, help="Synthetic divergence time")
    parser.add_argument("--gap", type=float, help="Synthetic class-1 shift after t-star")
    parser.add_argument("--noise-sd", type=float, help="Synthetic noise standard deviation")
    parser.add_argument("--model", type=str, help="Pipeline blob for dump-trigger")
    return parser.parse_args(argv)


def config_from_args(args) -> RunConfig:
    """Merge flags over the configuration file."""
    overrides = {
        "dataset.train": args.train,
        "dataset.test": args.test,
        "dataset.normalize": False if args.no_normalize else None,
        "dataset.synthetic.n_per_class": args.n_per_class,
        "dataset.synthetic.length": args.length,
        "dataset.synthetic.t_star": args.t_star,
        "dataset.synthetic.gap": args.gap,
        "dataset.synthetic.noise_sd": args.noise_sd,
        "cost.alpha": args.alpha,
        "classifier.name": args.classifier,
        "trigger.name": args.trigger,
        "sweep.triggers": args.triggers,
        "sweep.alphas": args.alphas,
        "timestamps": args.timestamps,
        "folds": args.folds,
        "seed": args.seed,
        "jobs": args.jobs,
        "output": args.output,
    }
    config = parse_config(args.config, overrides)
    if args.train or args.test:
        config = replace(config, synthetic=None)
    if args.theta is not None:
        config = replace(config, trigger_params={**config.trigger_params, "theta": args.theta})
    return config


def synthetic_pair(params: SyntheticParams, seed: int) -> Tuple[TimeSeriesDataset, TimeSeriesDataset]:
    """Train and test splits drawn from independent child seeds."""
    train_seed, test_seed = split_seeds(seed, 2)
    fields = (params.n_per_class, params.length, params.t_star, params.gap, params.noise_sd)
    return (
        make_synthetic(*fields, seed=train_seed, name="synthetic_TRAIN"),
        make_synthetic(*fields, seed=test_seed, name="synthetic_TEST"),
    )


def load_datasets(config: RunConfig) -> Tuple[TimeSeriesDataset, TimeSeriesDataset]:
    """
    Load (or generate) the train/test pair described by ``config``.

    Explicit train/test paths take precedence over synthetic parameters. Series are
    returned raw; normalization happens per prefix inside the pipeline.

    Raises:
        InvalidParam: If the config names no dataset, or only one of the two paths.
        DataError: If a dataset file is missing or malformed.
    """
    if config.train or config.test:
        if not (config.train and config.test):
            raise InvalidParam("dataset needs both train and test paths")
        for path in (config.train, config.test):
            if not Path(path).is_file():
                raise DataError(f"Dataset file not found: {path}")
        train = load_ucr_tsv(config.train)
        test = load_ucr_tsv(config.test, label_map=train.label_map)
    elif config.synthetic is not None:
        train, test = synthetic_pair(config.synthetic, config.seed)
    else:
        raise InvalidParam("dataset needs both train and test paths, or synthetic parameters")
    return train, test


def build_cost(config: RunConfig, n_classes: int, length: int, alpha: Optional[float] = None) -> CostMatrices:
    """
    Cost setting for a run: a cost spec file if configured, otherwise the inline costs.

    Inline misclassification costs default to 0/1 and the delay to ``alpha * t / L``.
    """
    if config.cost_spec_file:
        return build_cost_matrices(load_cost_spec(config.cost_spec_file))

    timestamps = tuple(default_timestamps(length, config.timestamps))
    if config.misclf is not None:
        try:
            misclf = np.asarray(config.misclf, dtype=float)
        except (TypeError, ValueError) as e:
            raise InvalidParam(f"cost.misclf must be a square matrix of reals: {e}")
        if misclf.ndim != 2:
            raise InvalidParam(f"cost.misclf must be a square matrix, got shape {misclf.shape}")
    else:
        misclf = 1.0 - np.eye(n_classes)
    if config.delay_table is not None:
        delay = TableDelay(values=tuple(float(v) for v in config.delay_table))
    else:
        delay = LinearDelay(alpha=config.alpha if alpha is None else float(alpha))
    spec = CostSpec(
        n_classes=n_classes,
        timestamps=timestamps,
        misclf=tuple(tuple(float(v) for v in row) for row in misclf),
        delay=delay,
    )
    return build_cost_matrices(spec)


def run_bench(
    config: RunConfig,
    train: TimeSeriesDataset,
    test: TimeSeriesDataset,
    trigger: Optional[str] = None,
    alpha: Optional[float] = None,
    jobs: Optional[int] = None,
):
    """
    Fit and score one pipeline.

    Returns:
        Tuple[EvaluationReport, EarlyClassifierPipeline]: The report (with the fixed-time
        baselines in ``extras``) and the fitted pipeline.
    """
    trigger = trigger or config.trigger
    jobs = config.jobs if jobs is None else jobs
    run_config = replace(
        config,
        trigger=trigger,
        alpha=config.alpha if alpha is None else float(alpha),
        trigger_params=config.trigger_params if trigger == config.trigger else {},
    )
    cost = build_cost(run_config, train.n_classes, train.length, run_config.alpha)
    base_config = ClassifierFactory.config_from_params(run_config.classifier, run_config.classifier_params)

    pipeline = fit_pipeline(
        train,
        cost,
        base_config,
        trigger,
        run_config.trigger_params,
        folds=run_config.folds,
        seed=run_config.seed,
        jobs=jobs,
        normalize=run_config.normalize,
    )
    report = score(pipeline, test, jobs=jobs, seed=run_config.seed, config_digest=run_config.digest())

    baselines = fixed_time_costs(collection_cube(pipeline.collection, test), cost)
    logger.info(f"Fixed-time baselines: first={baselines[0]:.6f} last={baselines[-1]:.6f}")
    extras = {
        "alpha": run_config.alpha,
        "classifier_params": ClassifierFactory.describe(base_config),
        "fixed_time_first_cost": float(baselines[0]),
        "fixed_time_last_cost": float(baselines[-1]),
        "trigger_params": pipeline.trigger.to_dict(),
    }
    return replace(report, jobs=config.jobs, extras=extras), pipeline


def write_report(report: EvaluationReport, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_report(report))
    logger.info(f"Report written to {path}")
    return path


def cmd_bench(config: RunConfig) -> Path:
    """Fit on train, score on test, write ``report.json`` and the pipeline blob."""
    train, test = load_datasets(config)
    report, pipeline = run_bench(config, train, test)
    output = Path(config.output)
    path = write_report(report, output / "report.json")
    ModelStore(output).save(PIPELINE_NAME, pipeline_to_blob(pipeline))
    print(
        f"{report.trigger}: avg_cost={report.avg_cost:.6f} accuracy={report.accuracy:.4f} "
        f"earliness={report.earliness:.4f} -> {path}"
    )
    return path


def report_name(trigger: str, alpha: float) -> str:
    return f"{trigger}_alpha{alpha:g}.json"


async def run_sweep_async(
    config: RunConfig, train: TimeSeriesDataset, test: TimeSeriesDataset
) -> List[Dict[str, Any]]:
    """Run every (trigger, alpha) combination concurrently; one index row per combination."""
    combos = [(trigger, alpha) for trigger in config.sweep_triggers for alpha in config.sweep_alphas]
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=config.jobs) as executor:
        tasks = [
            loop.run_in_executor(executor, run_bench, config, train, test, trigger, alpha, 1)
            for trigger, alpha in combos
        ]
        results = await asyncio.gather(*tasks, return_exceptions=True)

    output = Path(config.output)
    rows = []
    for (trigger, alpha), result in zip(combos, results):
        row = {"trigger": trigger, "alpha": alpha, "avg_cost": "", "accuracy": "", "earliness": ""}
        if isinstance(result, Exception):
            logger.error(f"Sweep combination {trigger}/alpha={alpha} failed: {result}")
            row["status"] = f"error: {result}"
        else:
            report, _ = result
            write_report(report, output / report_name(trigger, alpha))
            row.update(
                avg_cost=repr(report.avg_cost), accuracy=repr(report.accuracy), earliness=repr(report.earliness)
            )
            row["status"] = "ok"
        rows.append(row)
    return reports_index_rows(rows)


def cmd_sweep(config: RunConfig) -> Path:
    """
    Cartesian product of triggers and alphas, plus ``index.csv``.

    Raises:
        InvalidParam: If either list is empty.
    """
    if not config.sweep_triggers or not config.sweep_alphas:
        raise InvalidParam("sweep needs non-empty trigger and alpha lists")
    train, test = load_datasets(config)
    rows = asyncio.run(run_sweep_async(config, train, test))

    index_path = Path(config.output) / "index.csv"
    index_path.parent.mkdir(parents=True, exist_ok=True)
    with open(index_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=INDEX_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    failed = sum(row["status"] != "ok" for row in rows)
    logger.info(f"Sweep finished: {len(rows)} combinations, {failed} failed, index at {index_path}")
    print(f"{len(rows) - failed}/{len(rows)} combinations succeeded -> {index_path}")
    return index_path


def cmd_synth(config: RunConfig) -> Tuple[Path, Path]:
    """Write a synthetic train/test pair as UCR TSV files."""
    params = config.synthetic or SyntheticParams()
    train, test = synthetic_pair(params, config.seed)
    output = Path(config.output)
    paths = write_ucr_tsv(train, output / "synthetic_TRAIN.tsv"), write_ucr_tsv(test, output / "synthetic_TEST.tsv")
    logger.info(f"Synthetic datasets written to {paths[0]} and {paths[1]}")
    print(f"Wrote {paths[0]} and {paths[1]}")
    return paths


def cmd_dump_trigger(config: RunConfig, model: Optional[str] = None) -> Dict[str, Any]:
    """
    Print the fitted trigger parameters of a stored pipeline as JSON.

    Raises:
        DataError: If no pipeline blob is found.
    """
    path = Path(model) if model else ModelStore(config.output).path_for(PIPELINE_NAME)
    if not path.is_file():
        raise DataError(f"Pipeline file not found: {path}")
    pipeline = pipeline_from_blob(path.read_bytes())
    parameters = pipeline.trigger.to_dict()
    print(json.dumps(parameters, indent=2, sort_keys=True))
    return parameters


def run_command(command: str, config: RunConfig, args) -> None:
    if command == "bench":
        cmd_bench(config)
    elif command == "sweep":
        cmd_sweep(config)
    elif command == "synth":
        cmd_synth(config)
    elif command == "dump-trigger":
        cmd_dump_trigger(config, args.model)


def exit_code_for(error: EdmError) -> int:
    if isinstance(error, MemberFitError) and isinstance(error.cause, EdmError):
        return exit_code_for(error.cause)
    if isinstance(error, ConfigError):
        return 2
    if isinstance(error, DataError):
        return 3
    return 1


def main_menu(config: RunConfig, args):
    """Display and handle the main menu."""
    while True:
        choice = questionary.select("Choose a command:", choices=COMMANDS + ["Exit"]).ask()
        if choice is None or choice == "Exit":
            break
        try:
            run_command(choice, config, args)
        except EdmError as e:
            logger.error(f"Error in {choice}: {e}")
            print(f"Error: {e}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the edm command."""
    load_dotenv()
    args = parse_args(argv)

    try:
        config = config_from_args(args)
        logger.info(f"Starting edmkit {args.command or 'menu'} (seed={config.seed}, jobs={config.jobs})")
        if args.command is None:
            main_menu(config, args)
        else:
            run_command(args.command, config, args)
    except EdmError as e:
        logger.error(f"Command {args.command} failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except KeyboardInterrupt:
        print("\nExiting...")
    finally:
        logger.info("Shutting down edmkit")
    return 0


if __name__ == "__main__":
    sys.exit(main())
