import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

import pandas as pd

from .analysis.two_sample import TestFamily
from .config import settings
from .data.dataset import Dataset, load_csv, split_train_valid, write_csv
from .data.synthgen import SynthConfig, generate
from .database.db_manager import get_db_manager
from .evaluation.experiment import run_experiment
from .evaluation.metrics import metric_for, task_error
from .evaluation.tuning import DEFAULT_GRID, parse_grid, tune_plim
from .exceptions import ConfigError, DataError, InvariantViolation, UsageError
from .stream.graph import DsModel, TaskKind, model_summary
from .stream.serialization import save_model
from .training.ensembles import (
    Ensemble,
    EnsembleConfig,
    EnsemblePreset,
    load_predictor,
    predict_dataset,
    save_ensemble,
    train_ensemble,
)
from .training.trainer import SplitMode, TrainConfig, train
from .utils.logger import setup_logger

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors share the error path"""

    def error(self, message):
        raise UsageError(message)


def _add_data_args(parser, required=True):
    parser.add_argument('--data', required=required, help='CSV file with a header row')
    parser.add_argument('--schema', help='sidecar schema (JSON); inferred from the data when omitted')
    parser.add_argument('--label', help='label column name (required without --schema)')


def _add_train_args(parser):
    parser.add_argument('--p-lim', type=float, default=settings.DS_DEFAULT_P_LIM, help='significance threshold')
    parser.add_argument('--family', choices=[f.value for f in TestFamily], default=TestFamily.NONPARAMETRIC.value)
    parser.add_argument('--mode', choices=[m.value for m in SplitMode], default=SplitMode.EXACT.value)
    parser.add_argument('--no-merge', action='store_true', help='disable leaf merging')
    parser.add_argument('--min-split', type=int, default=2, help='smallest leaf that may be split')
    parser.add_argument('--seed', type=int, default=settings.DS_DEFAULT_SEED)
    parser.add_argument('--threads', type=int, default=settings.DS_THREADS)


def _add_ensemble_args(parser):
    parser.add_argument('--ensemble', choices=[p.value for p in EnsemblePreset])
    parser.add_argument('--members', type=int, default=10)


def _add_synth_args(parser):
    parser.add_argument('--task', choices=[t.value for t in TaskKind], default=TaskKind.CLASSIFICATION.value)
    parser.add_argument('--n-samples', type=int, default=10000)
    parser.add_argument('--noise-std', type=float, default=0.1)
    parser.add_argument('--num-classes', type=int, default=2)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='decision_stream', description='Decision Stream learner')
    commands = parser.add_subparsers(dest='command', metavar='command', parser_class=ArgumentParser)
    commands.required = True

    p = commands.add_parser('train', help='train a model (or an ensemble) from a CSV')
    _add_data_args(p)
    p.add_argument('--model', required=True, help='output model file')
    p.add_argument('--out', help='training trace CSV (default: <model>.trace.csv)')
    _add_train_args(p)
    _add_ensemble_args(p)

    p = commands.add_parser('predict', help='write predictions for a CSV')
    p.add_argument('--model', required=True)
    p.add_argument('--data', required=True)
    p.add_argument('--schema', help='schema for models stored without one')
    p.add_argument('--out', help='predictions CSV (default: standard output)')

    p = commands.add_parser('evaluate', help='print the error of a model on a labeled CSV')
    p.add_argument('--model', required=True)
    p.add_argument('--data', required=True)
    p.add_argument('--schema', help='schema for models stored without one')

    p = commands.add_parser('tune', help='sweep p_lim on a validation set')
    p.add_argument('--data', required=True, nargs='+', help='train CSV, optionally followed by a validation CSV')
    p.add_argument('--schema')
    p.add_argument('--label')
    p.add_argument('--grid', help='comma-separated p_lim values')
    p.add_argument('--out', help='sweep CSV')
    _add_train_args(p)

    p = commands.add_parser('synth', help='generate a synthetic dataset')
    _add_synth_args(p)
    p.add_argument('--seed', type=int, default=settings.DS_DEFAULT_SEED)
    p.add_argument('--threads', type=int, default=settings.DS_THREADS)
    p.add_argument('--out', required=True, help='output CSV')
    p.add_argument('--schema', help='sidecar schema path (default: next to --out)')

    p = commands.add_parser('experiment', help='compare the stream with its ablation and a tree baseline')
    _add_data_args(p, required=False)
    _add_synth_args(p)
    _add_train_args(p)
    _add_ensemble_args(p)
    p.add_argument('--grid', help='tune p_lim over these values first')
    p.add_argument('--baseline-depth', type=int, default=5)
    p.add_argument('--out', help='results CSV (default: standard output)')

    p = commands.add_parser('inspect', help='print a model summary')
    p.add_argument('--model', required=True)
    return parser


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        p_lim=args.p_lim,
        family=args.family,
        split_mode=args.mode,
        merge_enabled=not args.no_merge,
        min_samples_split=args.min_split,
        seed=args.seed,
        threads=args.threads,
    )


def _load_training_data(args, path: str) -> Dataset:
    if not args.schema and not args.label:
        raise UsageError('--label is required when no --schema is given')
    return load_csv(path, schema=args.schema, label_column=args.label)


def _prediction_schema(predictor, args):
    if predictor.schema is not None:
        return predictor.schema
    if not args.schema:
        raise UsageError('the model stores no schema; pass --schema')
    return args.schema


def _record_run(command: str, config: TrainConfig, task: TaskKind, model: Optional[DsModel] = None,
                metric: Optional[str] = None, error: Optional[float] = None) -> Optional[int]:
    db = get_db_manager()
    if db is None:
        return None
    summary = model_summary(model) if model is not None else None
    return db.record_run({
        'command': command,
        'task': task.value,
        'p_lim': config.p_lim,
        'test_family': config.family.value,
        'split_mode': config.split_mode.value,
        'merge_enabled': config.merge_enabled,
        'seed': config.seed,
        'metric': metric,
        'error': error,
        'depth': summary.depth if summary else None,
        'node_count': summary.nodes if summary else None,
    })


def _write_frame(frame: pd.DataFrame, path: Optional[str]):
    if path:
        frame.to_csv(path, index=False)
    else:
        frame.to_csv(sys.stdout, index=False)


def cmd_train(args) -> int:
    dataset = _load_training_data(args, args.data)
    config = _train_config(args)
    if args.ensemble:
        ensemble_config = EnsembleConfig.preset(
            args.ensemble, n_members=args.members, base=config, seed=args.seed, threads=args.threads
        )
        ensemble = train_ensemble(dataset, ensemble_config)
        save_ensemble(ensemble, args.model)
        print(f"members={len(ensemble.members)}")
        return EXIT_OK

    model, trace = train(dataset, config)
    save_model(model, args.model)
    trace.to_csv(args.out or f"{args.model}.trace.csv")
    _record_run('train', config, model.task, model)
    print(model_summary(model))
    return EXIT_OK


def cmd_predict(args) -> int:
    predictor = load_predictor(args.model)
    dataset = load_csv(args.data, schema=_prediction_schema(predictor, args), require_label=False, unseen='sentinel')
    predictions = predict_dataset(predictor, dataset)
    label = dataset.schema.label
    if label.is_classification and label.classes is not None:
        values = [label.classes[int(p)] for p in predictions]
    elif label.is_classification:
        values = [int(p) for p in predictions]
    else:
        values = [repr(float(p)) for p in predictions]
    _write_frame(pd.DataFrame({'prediction': values}), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    predictor = load_predictor(args.model)
    dataset = load_csv(args.data, schema=_prediction_schema(predictor, args), unseen='sentinel')
    error = task_error(predictor.task, predict_dataset(predictor, dataset), dataset.require_labels())
    print(f"metric={metric_for(predictor.task)} error={error:.2f}")
    return EXIT_OK


def cmd_tune(args) -> int:
    if len(args.data) > 2:
        raise UsageError('--data takes a training CSV and at most one validation CSV')
    dataset = _load_training_data(args, args.data[0])
    if len(args.data) == 2:
        train_set = dataset
        valid_set = load_csv(args.data[1], schema=dataset.schema, unseen='sentinel')
    else:
        train_set, valid_set = split_train_valid(dataset, settings.DS_VALID_FRACTION, args.seed)
    grid = parse_grid(args.grid) if args.grid else DEFAULT_GRID
    config = _train_config(args)
    sweep = tune_plim(train_set, valid_set, grid, config)
    if args.out:
        sweep.to_csv(args.out)

    db = get_db_manager()
    if db is not None:
        task = TaskKind.CLASSIFICATION if dataset.is_classification else TaskKind.REGRESSION
        run_id = _record_run('tune', replace(config, p_lim=sweep.best_p_lim), task,
                             metric=metric_for(task), error=sweep.best_error)
        db.record_sweep(run_id, sweep.grid)
    print(f"best_p_lim={sweep.best_p_lim:g} error={sweep.best_error:.2f}")
    return EXIT_OK


def _synth_config(args) -> SynthConfig:
    return SynthConfig(
        n_samples=args.n_samples,
        task=args.task,
        seed=args.seed,
        noise_std=args.noise_std,
        num_classes=args.num_classes,
        threads=args.threads,
    )


def cmd_synth(args) -> int:
    dataset = generate(_synth_config(args))
    schema_path = args.schema or f"{os.path.splitext(args.out)[0]}.schema.json"
    write_csv(dataset, args.out, schema_path)
    logger.info(f"Wrote {dataset.row_count} rows to {args.out} and the schema to {schema_path}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.data:
        dataset = _load_training_data(args, args.data)
    else:
        dataset = generate(_synth_config(args))
    train_set, test_set = split_train_valid(dataset, settings.DS_VALID_FRACTION, args.seed)
    config = _train_config(args)
    ensemble = None
    if args.ensemble:
        ensemble = EnsembleConfig.preset(args.ensemble, n_members=args.members, seed=args.seed, threads=args.threads)
    grid = parse_grid(args.grid) if args.grid else None
    results = run_experiment(train_set, test_set, config, args.baseline_depth, ensemble, grid)

    db = get_db_manager()
    if db is not None:
        task = TaskKind.CLASSIFICATION if dataset.is_classification else TaskKind.REGRESSION
        for row in results.itertuples(index=False):
            db.record_run({
                'command': f"experiment:{row.model}", 'task': task.value, 'p_lim': config.p_lim,
                'test_family': config.family.value, 'split_mode': config.split_mode.value,
                'merge_enabled': row.model != 'ds_no_merge', 'seed': config.seed, 'metric': row.metric,
                'error': float(row.error), 'depth': int(row.depth), 'node_count': int(row.nodes),
            })
    _write_frame(results, args.out)
    return EXIT_OK


def cmd_inspect(args) -> int:
    predictor = load_predictor(args.model)
    if isinstance(predictor, Ensemble):
        for i, member in enumerate(predictor.members):
            print(f"member={i} {model_summary(member.model)}")
    else:
        print(model_summary(predictor))
    return EXIT_OK


COMMANDS = {
    'train': cmd_train,
    'predict': cmd_predict,
    'evaluate': cmd_evaluate,
    'tune': cmd_tune,
    'synth': cmd_synth,
    'experiment': cmd_experiment,
    'inspect': cmd_inspect,
}


def run(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    try:
        try:
            setup_logger()
        except ValueError as e:
            raise ConfigError(f"bad DS_LOG level '{settings.DS_LOG}'") from e
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except InvariantViolation as e:
        print(f"error: invariant violation: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:
        logger.exception(f"Unexpected failure: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
