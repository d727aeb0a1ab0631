"""
Command-line interface: generate, train, search, evaluate, symbolic, plot, run.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from typing import List, Optional, Sequence, Tuple

from src.config import COX_CONFIG, DATA_PATHS, EXIT_CODES, GENERATOR_CONFIG, PRESETS, SYMBOLIC_CONFIG
from src.dataset import CsvSchema, Dataset, save_datasets
from src.exceptions import InvalidArgumentError, SurvKANError, UsageError
from src.simulation import GeneratorSpec, generate


def _split_list(text: Optional[str], cast=str) -> List:
    if not text:
        return []
    try:
        return [cast(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise UsageError(f"Cannot parse list '{text}': {exc}") from exc


def _data_paths(args: argparse.Namespace, need_test: bool) -> Tuple[str, Optional[str]]:
    train_path = args.train or (os.path.join(args.data, DATA_PATHS["train_csv"]) if args.data else None)
    test_path = getattr(args, "test", None) or (os.path.join(args.data, DATA_PATHS["test_csv"]) if args.data else None)
    if not train_path:
        raise UsageError("Pass --data DIR or --train FILE")
    if need_test and not test_path:
        raise UsageError("Pass --data DIR or --test FILE")
    return train_path, test_path if need_test else None


def _schema(args: argparse.Namespace) -> CsvSchema:
    return CsvSchema(
        duration=args.duration_col,
        event=args.event_col,
        categorical=_split_list(args.categorical),
    )


def _train_config(args: argparse.Namespace):
    from src.training.trainer import TrainConfig

    overrides = {}
    for flag in ("steps", "seed"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = value
    try:
        if getattr(args, "config", None):
            with open(args.config, "r", encoding="utf-8") as handle:
                payload = json.load(handle)
            return TrainConfig.from_dict({**payload, **overrides})
        if getattr(args, "preset", None):
            return TrainConfig.from_preset(args.preset, **overrides)
        return TrainConfig(**overrides)
    except (InvalidArgumentError, json.JSONDecodeError) as exc:
        raise UsageError(f"Invalid training configuration: {exc}") from exc


def _pipeline(args: argparse.Namespace, cfg=None):
    from src.analysis.pipeline import SurvKANPipeline

    return SurvKANPipeline(cfg=cfg, out_dir=args.out, verbose=not args.quiet)


def _scaled_for_model(pipeline, args, need_test: bool) -> Tuple[Dataset, Optional[Dataset]]:
    from src.analysis.pipeline import scale_like
    from src.dataset import load_dataset

    net = pipeline.load_stage_model("model_json", "run `survkan train` first")
    train_path, test_path = _data_paths(args, need_test)
    train_ds = scale_like(load_dataset(train_path, schema=_schema(args)), net)
    test_ds = scale_like(load_dataset(test_path, schema=_schema(args)), net) if test_path else None
    return train_ds, test_ds


def _load_run_config(pipeline) -> None:
    from src.training.trainer import TrainConfig

    path = os.path.join(pipeline.out_dir, "config.json")
    if os.path.exists(path):
        pipeline.cfg = TrainConfig.load(path)


# -- commands ------------------------------------------------------------------
def cmd_generate(args: argparse.Namespace) -> int:
    try:
        spec = GeneratorSpec(
            formula=args.formula,
            n_train=args.n_train,
            n_test=args.n_test,
            baseline=args.baseline,
            noise_features=args.noise_features,
            seed=args.seed,
            beta=_split_list(args.beta, float) or None,
            censoring=not args.no_censoring,
        )
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from exc
    print(f"🔄 Generating '{spec.expression_text}' ({spec.n_train} train / {spec.n_test} test, seed {spec.seed})")
    train_ds, test_ds = generate(spec)
    paths = save_datasets({"train": train_ds, "test": test_ds}, args.out)
    censored = 1.0 - (train_ds.outcome.n_events + test_ds.outcome.n_events) / (len(train_ds) + len(test_ds))
    print(f"✅ Saved {paths['train']}, {paths['test']}, {paths['meta']} (censoring {censored:.1%})")
    return EXIT_CODES["ok"]


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _train_config(args)
    pipeline = _pipeline(args, cfg)
    train_path, _ = _data_paths(args, need_test=False)
    train_ds, _ = pipeline.load_datasets(train_path, schema=_schema(args), scale=not args.no_standardize)
    cfg.save(os.path.join(args.out, "config.json"))
    pipeline.train(train_ds)
    return EXIT_CODES["ok"]


def cmd_search(args: argparse.Namespace) -> int:
    from src.training.search import SearchSpace

    space = SearchSpace.load(args.space) if args.space else SearchSpace()
    if args.steps is not None:
        space.steps = args.steps
    pipeline = _pipeline(args)
    train_path, _ = _data_paths(args, need_test=False)
    train_ds, _ = pipeline.load_datasets(train_path, schema=_schema(args), scale=not args.no_standardize)
    pipeline.search(train_ds, space, trials=args.trials, folds=args.folds, jobs=args.jobs, seed=args.seed)
    return EXIT_CODES["ok"]


def cmd_evaluate(args: argparse.Namespace) -> int:
    pipeline = _pipeline(args)
    _load_run_config(pipeline)
    train_ds, test_ds = _scaled_for_model(pipeline, args, need_test=True)
    pipeline.evaluate(train_ds, test_ds, bootstrap=args.bootstrap, seed=args.seed)
    return EXIT_CODES["ok"]


def cmd_symbolic(args: argparse.Namespace) -> int:
    pipeline = _pipeline(args)
    _load_run_config(pipeline)
    net = pipeline.load_stage_model("model_json", "run `survkan train` first")
    train_ds, _ = _scaled_for_model(pipeline, args, need_test=False)
    pipeline.symbolize(
        net,
        train_ds,
        finetune_steps=args.finetune_steps,
        precision=args.precision,
        jobs=args.jobs,
        export_samples=args.export_samples,
    )
    return EXIT_CODES["ok"]


def cmd_plot(args: argparse.Namespace) -> int:
    from src.analysis.report import RunReport

    pipeline = _pipeline(args)
    train_ds, _ = _scaled_for_model(pipeline, args, need_test=False)
    report = RunReport.load(pipeline.path("report_json")) if os.path.exists(pipeline.path("report_json")) else None
    pipeline.plot(train_ds, report=report)
    return EXIT_CODES["ok"]


def cmd_run(args: argparse.Namespace) -> int:
    from src.training.search import SearchSpace

    cfg = _train_config(args)
    pipeline = _pipeline(args, cfg)
    train_path, test_path = _data_paths(args, need_test=True)
    train_ds, test_ds = pipeline.load_datasets(train_path, test_path, schema=_schema(args), scale=not args.no_standardize)
    space = SearchSpace.load(args.space) if args.space else None
    pipeline.run(
        train_ds,
        test_ds,
        search_trials=args.search_trials,
        space=space,
        folds=args.folds,
        jobs=args.jobs,
        bootstrap=args.bootstrap,
        seed=args.seed if args.seed is not None else 0,
        finetune_steps=args.finetune_steps,
        precision=args.precision,
        plots=not args.no_plots,
    )
    pipeline.cfg.save(os.path.join(args.out, "config.json"))
    return EXIT_CODES["ok"]


# -- parser --------------------------------------------------------------------
def _add_data_args(parser: argparse.ArgumentParser, with_test: bool) -> None:
    parser.add_argument("--data", help="directory holding train.csv / test.csv / meta.json")
    parser.add_argument("--train", help="training CSV (overrides --data)")
    if with_test:
        parser.add_argument("--test", help="test CSV (overrides --data)")
    parser.add_argument("--duration-col", default="duration")
    parser.add_argument("--event-col", default="event")
    parser.add_argument("--categorical", help="comma-separated categorical columns (raw CSVs without meta.json)")


def _add_common(parser: argparse.ArgumentParser, out_default: str = DATA_PATHS["runs"]) -> None:
    parser.add_argument("--out", default=out_default, help="run directory")
    parser.add_argument("--quiet", action="store_true", help="no progress output")


def _add_train_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--config", help="TrainConfig JSON file")
    group.add_argument("--preset", choices=sorted(PRESETS), help="published tuned configuration")
    parser.add_argument("--steps", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--no-standardize", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="survkan", description="Cox proportional-hazards KANs with symbolic hazard formulas")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic train/test pair")
    p.add_argument("--formula", default="gaussian", help="gaussian|shallow|deep|difficult|linear|custom:<expr>")
    p.add_argument("--n-train", type=int, default=GENERATOR_CONFIG["n_train"])
    p.add_argument("--n-test", type=int, default=GENERATOR_CONFIG["n_test"])
    p.add_argument("--baseline", type=float, default=GENERATOR_CONFIG["baseline"])
    p.add_argument("--noise-features", type=int, default=GENERATOR_CONFIG["noise_features"])
    p.add_argument("--beta", help="comma-separated coefficients for --formula linear")
    p.add_argument("--no-censoring", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=DATA_PATHS["synthetic"])
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train, auto-prune and save the model")
    _add_data_args(p, with_test=False)
    _add_train_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="random hyperparameter search with k-fold cross-validation")
    _add_data_args(p, with_test=False)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--folds", type=int, default=4)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int)
    p.add_argument("--space", help="SearchSpace JSON file")
    p.add_argument("--no-standardize", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="C-index with bootstrap intervals for every saved stage")
    _add_data_args(p, with_test=True)
    p.add_argument("--bootstrap", type=int, default=COX_CONFIG["bootstrap"])
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("symbolic", help="fit symbolic edges and write the hazard formula")
    _add_data_args(p, with_test=False)
    p.add_argument("--finetune-steps", type=int, default=SYMBOLIC_CONFIG["finetune_steps"])
    p.add_argument("--precision", type=int, default=SYMBOLIC_CONFIG["precision"])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--export-samples", action="store_true", help="also write per-edge (x, y) CSVs")
    _add_common(p)
    p.set_defaults(func=cmd_symbolic)

    p = sub.add_parser("plot", help="SVG panels for every active edge")
    _add_data_args(p, with_test=False)
    _add_common(p)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("run", help="search (optional), train, prune, symbolic fit and evaluate")
    _add_data_args(p, with_test=True)
    _add_train_args(p)
    p.add_argument("--search-trials", type=int, default=0)
    p.add_argument("--space", help="SearchSpace JSON file")
    p.add_argument("--folds", type=int, default=4)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--bootstrap", type=int, default=COX_CONFIG["bootstrap"])
    p.add_argument("--finetune-steps", type=int, default=SYMBOLIC_CONFIG["finetune_steps"])
    p.add_argument("--precision", type=int, default=SYMBOLIC_CONFIG["precision"])
    p.add_argument("--no-plots", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CODES["usage"]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except SurvKANError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_CODES["data"]
