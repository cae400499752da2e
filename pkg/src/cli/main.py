"""
Metaclust - Command Line
========================

    metaclust train     --config run.json [--seed N] [--out DIR] [--resume STATE]
    metaclust cluster   --model checkpoint.json --data points.csv [--out FILE]
    metaclust evaluate  --model checkpoint.json --data test.csv [--n-tasks N] [--seed N] [--out FILE]
                        [--vb-steps-sweep S ...] [--runtime | --no-runtime]
    metaclust ablate    --config run.json [--seed N] [--out DIR]
    metaclust gradcheck [--seed N] [--size N] [--out FILE]
    metaclust synth     --config run.json [--seed N] [--out DIR]
    metaclust pretrain  --config run.json [--seed N] [--out DIR]

Exit codes: 0 success, 1 check failure, 2 configuration, 3 data,
4 model/data mismatch, 5 infeasible synthetic specification.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..data import (
    LabeledDataset,
    Standardizer,
    gen_synthetic,
    load_csv,
    pca_embed,
    save_csv,
    split_by_category,
    standardize,
    write_split_manifest,
)
from ..encoder import EncoderParams, init_params, load_checkpoint, save_checkpoint
from ..errors import ContractError, MetaclustError, ModelMismatchError
from ..training import (
    TrainConfig,
    TrainMode,
    cluster_instances,
    evaluate,
    load_training_state,
    proto_accuracy,
    proto_pretrain,
    save_training_state,
    sweep_vb_steps,
    train,
    write_training_log,
)
from .config import EvaluationSection, RunConfig, load_run_config, parse_run_config
from .selfcheck import run_selfcheck


logger = logging.getLogger(__name__)


def configure_logging() -> None:
    """Root logging from the LOG_LEVEL environment variable (default info)"""
    level = os.environ.get('LOG_LEVEL', 'info').upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )


def write_json(document: Dict[str, Any], path: Optional[str]) -> None:
    text = json.dumps(document, indent=2)
    if path is None:
        print(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text + '\n', encoding='utf-8')


# === Data and model preparation ===

Splits = Tuple[LabeledDataset, LabeledDataset, LabeledDataset]


def resolve_data(config: RunConfig) -> Splits:
    """Train/validation/test from explicit CSVs, one CSV split by category, or the synthetic family"""
    paths = config.data
    if paths.train or paths.validation or paths.test:
        if not (paths.train and paths.validation and paths.test):
            raise ContractError("data.train, data.validation and data.test must be given together")
        return load_csv(paths.train), load_csv(paths.validation), load_csv(paths.test)
    if paths.dataset:
        split = split_by_category(load_csv(paths.dataset), config.split_spec())
    else:
        split = split_by_category(gen_synthetic(config.synthetic_spec(), config.seed), config.split_spec())
    return split.train, split.validation, split.test


def prepare_data(config: RunConfig) -> Tuple[Splits, Optional[Standardizer]]:
    train_data, val_data, test_data = resolve_data(config)
    if not config.standardize:
        return (train_data, val_data, test_data), None
    (train_data, val_data, test_data), fitted = standardize(train_data, val_data, test_data)
    return (train_data, val_data, test_data), fitted


def initial_params(config: RunConfig, train_data: LabeledDataset, mode: Optional[str] = None) -> EncoderParams:
    """Seeded initial weights, proto-pretrained when enabled"""
    params = init_params(config.encoder_config(train_data.dim, mode), config.seed)
    if config.pretrain.enabled and not params.config.identity_encoder:
        params = proto_pretrain(params, train_data, config.pretrain_config()).params
    return params


def model_extra(config: RunConfig, mode: str, standardizer: Optional[Standardizer], **fields) -> Dict[str, Any]:
    return {
        'config': config.effective(),
        'seed': config.seed,
        'mode': mode,
        'standardizer': standardizer.to_dict() if standardizer else None,
        **fields,
    }


def load_model(path: str) -> Tuple[EncoderParams, Dict[str, Any], TrainConfig, Optional[Standardizer]]:
    params, extra = load_checkpoint(path)
    if extra.get('config'):
        train_config = parse_run_config(extra['config']).train_config(extra.get('mode'))
    else:
        train_config = TrainConfig(max_clusters=params.config.max_clusters)
    scaler = Standardizer.from_dict(extra['standardizer']) if extra.get('standardizer') else None
    return params, extra, train_config, scaler


def model_inputs(params: EncoderParams, data: LabeledDataset, scaler: Optional[Standardizer]) -> np.ndarray:
    if data.dim != params.config.input_dim:
        raise ModelMismatchError(
            f"Data has {data.dim} features but the model expects {params.config.input_dim}"
        )
    return scaler.transform(data.X) if scaler else data.X


def _report_row(name: str, kind: str, report) -> Dict[str, Any]:
    return {'name': name, 'kind': kind, 'mean_ari': report.mean, 'stderr': report.stderr, 'n_tasks': report.n_tasks}


# === Commands ===

def cmd_train(args) -> int:
    config = load_run_config(args.config, {'seed': args.seed, 'output_dir': args.out})
    (train_data, val_data, _), scaler = prepare_data(config)
    out = Path(config.output_dir)

    resume = load_training_state(args.resume) if args.resume else None
    params = resume.params if resume else initial_params(config, train_data)
    result = train(params, train_data, val_data, config.train_config(), resume=resume)

    save_checkpoint(result.params, out / 'checkpoint.json', model_extra(
        config, config.mode, scaler, best_validation=result.best_validation, best_epoch=result.best_epoch,
    ))
    write_training_log(result.records, out / 'training_log.jsonl', header={'config': config.effective(), 'seed': config.seed})
    save_training_state(result.state, out / 'training_state.json')
    write_json(config.effective(), str(out / 'config.json'))
    print(f"best validation ARI {result.best_validation:.4f} at epoch {result.best_epoch}; wrote {out}")
    return 0


def cmd_cluster(args) -> int:
    params, extra, train_config, scaler = load_model(args.model)
    data = load_csv(args.data, require_labels=False)
    result = cluster_instances(params, model_inputs(params, data, scaler), train_config,
                               vb_steps=args.vb_steps, seed=args.seed)
    write_json({
        'config': extra.get('config'),
        'seed': args.seed,
        'model': str(args.model),
        'n_instances': data.n_instances,
        **result.to_dict(),
    }, args.out)
    return 0


def evaluation_settings(extra: Dict[str, Any], args) -> EvaluationSection:
    """The checkpoint's evaluation section with command-line overrides applied"""
    section = parse_run_config(extra.get('config') or {}).evaluation
    flags = {
        'n_tasks': args.n_tasks,
        'vb_steps_sweep': args.vb_steps_sweep,
        'report_runtime': args.runtime,
    }
    return section.model_copy(update={k: v for k, v in flags.items() if v is not None})


def cmd_evaluate(args) -> int:
    params, extra, train_config, scaler = load_model(args.model)
    settings = evaluation_settings(extra, args)
    data = load_csv(args.data)
    data = data.with_features(model_inputs(params, data, scaler))
    report = evaluate(params, data, train_config, settings.n_tasks, seed=args.seed, workers=settings.workers)
    document = {
        'config': extra.get('config'),
        'seed': args.seed,
        'model': str(args.model),
        **report.to_dict(include_runtime=settings.report_runtime),
    }
    if settings.vb_steps_sweep:
        sweep = sweep_vb_steps(params, data, train_config, settings.vb_steps_sweep, settings.n_tasks,
                               seed=args.seed, workers=settings.workers)
        document['vb_steps_sweep'] = {str(s): {'mean_ari': r.mean, 'stderr': r.stderr} for s, r in sweep.items()}
    write_json(document, args.out)
    return 0


def _train_and_evaluate(config: RunConfig, mode: str, train_data, val_data, test_data):
    params = initial_params(config, train_data, mode)
    result = train(params, train_data, val_data, config.train_config(mode))
    return evaluate(result.params, test_data, config.train_config(mode), config.evaluation.n_tasks,
                    seed=config.seed, workers=config.evaluation.workers)


def _baseline(config: RunConfig, name: str, train_data, test_data):
    """VB from random initial rows on raw, PCA or proto-pretrained representations"""
    no_fr = TrainMode.NO_FR_INIT.value
    if name == 'proto':
        params = init_params(config.encoder_config(train_data.dim, no_fr), config.seed)
        params = proto_pretrain(params, train_data, config.pretrain_config()).params
        data = test_data
    else:
        if name == 'pca':
            dims = min(config.encoder.representation_dim, train_data.dim, train_data.n_instances)
            _, (_, test_data) = pca_embed(train_data, dims, test_data)
        identity = config.encoder_config(test_data.dim, TrainMode.IDENTITY_ENCODER.value)
        params = init_params(identity, config.seed)
        data = test_data
    return evaluate(params, data, config.train_config(no_fr), config.evaluation.n_tasks,
                    seed=config.seed, workers=config.evaluation.workers)


def cmd_ablate(args) -> int:
    config = load_run_config(args.config, {'seed': args.seed, 'output_dir': args.out})
    (train_data, val_data, test_data), _ = prepare_data(config)
    rows: List[Dict[str, Any]] = []

    for mode in config.modes:
        logger.info("Ablation mode %s", mode)
        rows.append(_report_row(mode, 'mode', _train_and_evaluate(config, mode, train_data, val_data, test_data)))

    for name in config.evaluation.baselines:
        logger.info("Baseline %s", name)
        rows.append(_report_row(name, 'baseline', _baseline(config, name, train_data, test_data)))

    for count in config.evaluation.train_category_counts:
        m = max(1, min(count, train_data.n_categories))
        subset = train_data.subset(range(m))
        report = _train_and_evaluate(config, TrainMode.FULL.value, subset, val_data, test_data)
        rows.append(_report_row(f"train_categories={m}", 'train_categories', report))

    document = {'config': config.effective(), 'seed': config.seed, 'rows': rows}
    write_json(document, str(Path(config.output_dir) / 'ablation.json'))
    for row in rows:
        stderr = '-' if row['stderr'] is None else f"{row['stderr']:.4f}"
        print(f"{row['name']:<24} {row['mean_ari']:.4f} ± {stderr}")
    return 0


def cmd_gradcheck(args) -> int:
    report = run_selfcheck(seed=args.seed, size=args.size, inject_fault=args.inject_fault)
    write_json(report.to_dict(), args.out)
    if not report.passed:
        failed = [s.to_dict() for s in report.stages if s.max_relative_error >= report.tolerance]
        for stage in failed:
            logger.error("Gradient check failed in %s: %s", stage['stage'], stage['worst'])
        return 1
    return 0


def cmd_synth(args) -> int:
    config = load_run_config(args.config, {'seed': args.seed, 'output_dir': args.out})
    data = gen_synthetic(config.synthetic_spec(), config.seed)
    split = split_by_category(data, config.split_spec())
    out = Path(config.output_dir)
    for name, dataset in split.datasets().items():
        save_csv(dataset, out / f"{name}.csv")
    write_split_manifest(split, out / 'split_manifest.json', extra={'config': config.effective(), 'seed': config.seed})
    print(f"wrote {out}: {split.counts()}")
    return 0


def cmd_pretrain(args) -> int:
    config = load_run_config(args.config, {'seed': args.seed, 'output_dir': args.out})
    (train_data, val_data, _), scaler = prepare_data(config)
    params = init_params(config.encoder_config(train_data.dim), config.seed)
    result = proto_pretrain(params, train_data, config.pretrain_config())
    accuracy = proto_accuracy(result.params, val_data, config.evaluation.n_tasks, seed=config.seed)
    out = Path(config.output_dir)
    save_checkpoint(result.params, out / 'pretrained.json',
                    model_extra(config, config.mode, scaler, proto_validation_accuracy=accuracy))
    print(f"proto validation accuracy {accuracy:.4f}; wrote {out / 'pretrained.json'}")
    return 0


# === Parser ===

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='metaclust', description="Meta-learned representations for DP-GMM clustering")
    commands = parser.add_subparsers(dest='command', required=True)

    def with_config(name, handler, help_text):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('--config', help="Run configuration JSON (defaults when omitted)")
        sub.add_argument('--seed', type=int, help="Override the configured seed")
        sub.add_argument('--out', help="Override the output directory")
        sub.set_defaults(handler=handler)
        return sub

    with_config('train', cmd_train, "Meta-train an encoder").add_argument(
        '--resume', help="Continue from a training_state.json")
    with_config('ablate', cmd_ablate, "Compare pipeline modes and baselines")
    with_config('synth', cmd_synth, "Generate a synthetic dataset and split")
    with_config('pretrain', cmd_pretrain, "Prototypical pretraining of fZ")

    cluster = commands.add_parser('cluster', help="Cluster unlabeled instances")
    cluster.add_argument('--model', required=True)
    cluster.add_argument('--data', required=True)
    cluster.add_argument('--out')
    cluster.add_argument('--seed', type=int, default=0)
    cluster.add_argument('--vb-steps', type=int)
    cluster.set_defaults(handler=cmd_cluster)

    evaluation = commands.add_parser('evaluate', help="Mean ARI over held-out episodes")
    evaluation.add_argument('--model', required=True)
    evaluation.add_argument('--data', required=True)
    evaluation.add_argument('--n-tasks', type=int, help="Override evaluation.n_tasks")
    evaluation.add_argument('--seed', type=int, default=0)
    evaluation.add_argument('--out')
    evaluation.add_argument('--vb-steps-sweep', type=int, nargs='*', help="Override evaluation.vb_steps_sweep")
    evaluation.add_argument('--runtime', action=argparse.BooleanOptionalAction,
                            help="Include wall-clock runtime (overrides evaluation.report_runtime)")
    evaluation.set_defaults(handler=cmd_evaluate)

    gradcheck = commands.add_parser('gradcheck', help="Finite-difference check of all derivatives")
    gradcheck.add_argument('--seed', type=int, default=0)
    gradcheck.add_argument('--size', type=int, default=12)
    gradcheck.add_argument('--out')
    gradcheck.add_argument('--inject-fault', action='store_true', help=argparse.SUPPRESS)
    gradcheck.set_defaults(handler=cmd_gradcheck)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    logger.info("metaclust %s", args.command)
    try:
        return args.handler(args)
    except MetaclustError as e:
        logger.error("%s: %s", type(e).__name__, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main())
