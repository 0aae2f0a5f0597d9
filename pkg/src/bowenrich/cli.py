"""Command-line interface: dataset prep, embedding training, evaluation, grid search.

Every subcommand accepts ``--config PATH`` pointing at a JSON file whose keys
mirror :class:`bowenrich.harness.ExperimentConfig` (with a nested ``skipgram``
object). Precedence is CLI flag > config file > built-in default.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .corpus import DATASET_FORMATS, filter_short_subset, load_dataset
from .embedding import SkipgramHyperparams, save_word2vec_text, train_skipgram
from .harness import (
    CLASSIFIERS,
    REPORT_FORMATS,
    ExperimentConfig,
    emit_report,
    grid_search,
    prepare_embedding,
    render_table,
    run_cv,
)

__all__ = ["main", "build_parser"]


def _load_config_file(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config file must hold a JSON object")
    return cfg


def _merge_skipgram(args: argparse.Namespace, file_cfg: dict[str, Any]) -> SkipgramHyperparams:
    block = file_cfg.get("skipgram", {})
    if not isinstance(block, dict):
        raise ValueError("config key 'skipgram' must be an object")
    defaults = SkipgramHyperparams()

    def pick(flag_name: str, key: str) -> Any:
        cli_value = getattr(args, flag_name, None)
        if cli_value is not None:
            return cli_value
        return block.get(key, getattr(defaults, key))

    return SkipgramHyperparams(
        dim=pick("dim", "dim"),
        window=pick("window", "window"),
        min_count=pick("min_count", "min_count"),
        epochs=pick("epochs", "epochs"),
        negative_samples=block.get("negative_samples", defaults.negative_samples),
        learning_rate=block.get("learning_rate", defaults.learning_rate),
        seed=pick("seed", "seed"),
    )


def _merge_experiment(args: argparse.Namespace, file_cfg: dict[str, Any]) -> ExperimentConfig:
    defaults = ExperimentConfig()

    def pick(flag_name: str, key: str) -> Any:
        cli_value = getattr(args, flag_name, None)
        if cli_value is not None:
            return cli_value
        return file_cfg.get(key, getattr(defaults, key))

    embedding = getattr(args, "embedding", None)
    if embedding is None and not getattr(args, "train_domain", False):
        embedding = file_cfg.get("embedding")

    grids = {}
    for flag, key in (("n_range", "rare_threshold_grid"), ("k_range", "neighbors_grid")):
        value = getattr(args, flag, None)
        if value is None:
            value = file_cfg.get(key)
        grids[key] = tuple(value) if value is not None else None

    return ExperimentConfig(
        dataset=pick("dataset", "dataset"),
        format=pick("format", "format"),
        classifier=pick("classifier", "classifier"),
        embedding=embedding,
        skipgram=_merge_skipgram(args, file_cfg),
        rare_threshold=pick("n", "rare_threshold"),
        neighbors=pick("k", "neighbors"),
        rare_threshold_grid=grids["rare_threshold_grid"],
        neighbors_grid=grids["neighbors_grid"],
        repeats=pick("repeats", "repeats"),
        folds=pick("folds", "folds"),
        seed=pick("seed", "seed"),
        top_k=pick("top_k", "top_k"),
        svm_c=pick("svm_c", "svm_c"),
    )


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("dataset", nargs="?", default=None, help="dataset path (may come from --config)")
    parser.add_argument("--format", choices=DATASET_FORMATS, default=None, help="dataset format")
    parser.add_argument("--config", default=None, help="JSON config file mirroring the experiment fields")


def _add_evaluate_args(parser: argparse.ArgumentParser) -> None:
    _add_dataset_args(parser)
    parser.add_argument("--classifier", choices=CLASSIFIERS, default=None)
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--embedding", default=None, help="word2vec text model used for enrichment")
    source.add_argument(
        "--train-domain",
        action="store_true",
        help="train the enrichment embedding on the full corpus text (default when no --embedding)",
    )
    parser.add_argument("--n", type=int, default=None, help="rare-word training-frequency threshold")
    parser.add_argument("--k", type=int, default=None, help="neighbors added per rare word")
    parser.add_argument("--repeats", type=int, default=None)
    parser.add_argument("--folds", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None, help="master seed (derives fold and embedding seeds)")
    parser.add_argument("--top-k", dest="top_k", type=int, default=None, help="ranked prediction depth")
    parser.add_argument("--svm-c", dest="svm_c", type=float, default=None, help="SVM regularization parameter")
    parser.add_argument("--report", default=None, help="write a report file here")
    parser.add_argument("--report-format", choices=REPORT_FORMATS, default="table-text")
    # skip-gram flags shared with train-embedding
    parser.add_argument("--dim", type=int, default=None, help=argparse.SUPPRESS)
    parser.add_argument("--window", type=int, default=None, help=argparse.SUPPRESS)
    parser.add_argument("--min-count", dest="min_count", type=int, default=None, help=argparse.SUPPRESS)
    parser.add_argument("--epochs", type=int, default=None, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bowenrich",
        description="Short-text classification with embedding-neighbor enrichment of bag-of-words vectors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    prep = sub.add_parser("prep", help="convert/filter a dataset into the records format")
    _add_dataset_args(prep)
    prep.add_argument("--out", required=True, help="output records file")
    prep.add_argument("--max-tokens", type=int, default=None, help="keep documents with at most this many tokens")
    prep.add_argument(
        "--exclude-label",
        action="append",
        default=None,
        metavar="LABEL",
        help="drop documents carrying this label (repeatable)",
    )
    prep.set_defaults(handler=_cmd_prep)

    train = sub.add_parser("train-embedding", help="train a skip-gram embedding and save it as word2vec text")
    _add_dataset_args(train)
    train.add_argument("--out", required=True, help="output word2vec text file")
    train.add_argument("--dim", type=int, default=None)
    train.add_argument("--window", type=int, default=None)
    train.add_argument("--min-count", dest="min_count", type=int, default=None)
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--seed", type=int, default=None)
    train.set_defaults(handler=_cmd_train_embedding)

    evaluate = sub.add_parser("evaluate", help="run the cross-validated baseline-vs-enriched comparison")
    _add_evaluate_args(evaluate)
    evaluate.set_defaults(handler=_cmd_evaluate)

    grid = sub.add_parser("grid-search", help="tune (n, k) on the first fold, then evaluate with the winner")
    _add_evaluate_args(grid)
    grid.add_argument("--n-range", dest="n_range", type=_int_list, default=None, help="e.g. 0,1,3,5")
    grid.add_argument("--k-range", dest="k_range", type=_int_list, default=None, help="e.g. 1,3,5")
    grid.set_defaults(handler=_cmd_grid_search)

    return parser


def _resolved_dataset(cfg: ExperimentConfig) -> tuple[str, str]:
    if cfg.dataset is None:
        raise ValueError("no dataset given (positional argument or 'dataset' config key)")
    return cfg.dataset, cfg.format


def _cmd_prep(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _merge_experiment(args, file_cfg)
    dataset, format = _resolved_dataset(cfg)
    docs = load_dataset(dataset, format)
    max_tokens = args.max_tokens
    if max_tokens is None and args.exclude_label:
        # label filter only: keep every length
        max_tokens = max((len(d.tokens) for d in docs), default=0) + 1
    if max_tokens is not None:
        docs = filter_short_subset(docs, max_tokens, args.exclude_label or ())
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"id": d.id, "text": d.text, "labels": list(d.labels)}) + "\n")
    classes = {lab for d in docs for lab in d.labels}
    print(f"wrote {len(docs)} documents ({len(classes)} distinct labels) to {out}")
    return 0


def _cmd_train_embedding(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _merge_experiment(args, file_cfg)
    dataset, format = _resolved_dataset(cfg)
    docs = load_dataset(dataset, format)
    params = _merge_skipgram(args, file_cfg)
    model = train_skipgram([list(d.tokens) for d in docs], params)
    save_word2vec_text(model, args.out)
    print(f"trained {len(model)} vectors of dimension {model.dimension}; saved to {args.out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _merge_experiment(args, file_cfg)
    _resolved_dataset(cfg)
    result = run_cv(cfg)
    sys.stdout.write(render_table(result))
    if args.report is not None:
        emit_report(result, args.report_format, args.report)
        print(f"report written to {args.report}")
    return 0


def _cmd_grid_search(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _merge_experiment(args, file_cfg)
    dataset, format = _resolved_dataset(cfg)
    docs = load_dataset(dataset, format)
    embedding = prepare_embedding(cfg, docs)
    n, k = grid_search(cfg, docs=docs, embedding=embedding)
    print(f"grid search selected rare-word threshold n={n}, neighbors k={k}")
    chosen = dataclasses.replace(cfg, rare_threshold=n, neighbors=k)
    result = run_cv(chosen, docs=docs, embedding=embedding)
    sys.stdout.write(render_table(result))
    if args.report is not None:
        emit_report(result, args.report_format, args.report)
        print(f"report written to {args.report}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:  # surface one diagnostic line, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
