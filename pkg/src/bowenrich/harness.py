"""Cross-validation experiments comparing raw and neighbor-enriched classification.

One experiment trains a classifier per (repeat, fold) cell on raw
term-frequency vectors and evaluates its test fold twice: once on raw vectors
(baseline) and once on enriched vectors. The same trained model serves both
arms; only the prediction-time representation changes.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bow import vectorize
from .classify import (
    predict_mnb,
    predict_svm,
    top_k,
    train_mnb,
    train_svm_ovo,
)
from .corpus import Document, build_vocabulary, load_dataset, make_folds
from .embedding import EmbeddingModel, SkipgramHyperparams, load_word2vec_text, train_skipgram
from .enrichment import Enricher, EnrichmentConfig
from .metrics import PairedSample, error_reduction, macro_recall, micro_recall, tally, wilcoxon_signed_rank

__all__ = [
    "ExperimentConfig",
    "CellResult",
    "WilcoxonSummary",
    "EvalResult",
    "run_cv",
    "grid_search",
    "emit_report",
    "prepare_embedding",
    "render_table",
]

CLASSIFIERS = ("mnb", "svm")
REPORT_FORMATS = ("table-text", "records")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one evaluation run needs; mirrors the CLI/config-file keys.

    ``embedding`` is a word2vec-text path; when None, a domain embedding is
    trained on the full corpus text before cross-validation (the protocol
    this harness reproduces) with ``skipgram`` settings whose seed is derived
    from the master ``seed``.
    """

    dataset: str | None = None
    format: str = "records"
    classifier: str = "mnb"
    embedding: str | None = None
    skipgram: SkipgramHyperparams = field(default_factory=SkipgramHyperparams)
    rare_threshold: int = 3
    neighbors: int = 3
    rare_threshold_grid: tuple[int, ...] | None = None
    neighbors_grid: tuple[int, ...] | None = None
    repeats: int = 10
    folds: int = 10
    seed: int = 1
    top_k: int = 1
    svm_c: float = 1.0

    def __post_init__(self) -> None:
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"classifier must be one of {CLASSIFIERS}, got {self.classifier!r}")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")


@dataclass(frozen=True)
class CellResult:
    """Recalls for one (repeat, fold) evaluation cell, both arms."""

    repeat: int
    fold: int
    baseline_micro: float
    baseline_macro: float
    enriched_micro: float
    enriched_macro: float


@dataclass(frozen=True)
class WilcoxonSummary:
    statistic: float | None
    p_value: float | None
    note: str = ""


@dataclass(frozen=True)
class EvalResult:
    """Aggregate of a full cross-validation comparison."""

    cells: tuple[CellResult, ...]
    classifier: str
    rare_threshold: int
    neighbors: int
    repeats: int
    folds: int
    seed: int
    top_k: int
    baseline_micro: float
    enriched_micro: float
    baseline_macro: float
    enriched_macro: float
    micro_error_reduction: float | None
    macro_error_reduction: float | None
    micro_wilcoxon: WilcoxonSummary
    macro_wilcoxon: WilcoxonSummary


def _derive_seeds(master_seed: int) -> tuple[int, int]:
    fold_seed, embedding_seed = np.random.SeedSequence(master_seed).generate_state(2)
    return int(fold_seed), int(embedding_seed)


def prepare_embedding(cfg: ExperimentConfig, docs: Sequence[Document]) -> EmbeddingModel:
    """Load the configured embedding, or train one on the full corpus text."""
    if cfg.embedding is not None:
        return load_word2vec_text(cfg.embedding)
    _, embedding_seed = _derive_seeds(cfg.seed)
    params = dataclasses.replace(cfg.skipgram, seed=embedding_seed)
    return train_skipgram([list(d.tokens) for d in docs], params)


def _predictor(cfg: ExperimentConfig) -> tuple[Callable, Callable]:
    if cfg.classifier == "mnb":
        return lambda rows: train_mnb(rows), predict_mnb
    return lambda rows: train_svm_ovo(rows, C=cfg.svm_c), predict_svm


def _choose_prediction(ranked: list[str], gold: frozenset[str]) -> str:
    for label in ranked:
        if label in gold:
            return label
    return ranked[0]


def _evaluate_cell(
    train_docs: Sequence[Document],
    test_docs: Sequence[Document],
    cfg: ExperimentConfig,
    embedding: EmbeddingModel,
    repeat: int,
    fold: int,
) -> CellResult:
    train, predict = _predictor(cfg)
    vocab = build_vocabulary(train_docs)
    model = train((vectorize(d.tokens, vocab), d.primary_label) for d in train_docs)
    enricher = Enricher(vocab, embedding, EnrichmentConfig(cfg.rare_threshold, cfg.neighbors))

    gold = [d.label_set for d in test_docs]
    eval_class = [d.primary_label for d in test_docs]
    baseline_pred: list[str] = []
    enriched_pred: list[str] = []
    for doc in test_docs:
        ranked = top_k(predict(model, vectorize(doc.tokens, vocab)), cfg.top_k)
        baseline_pred.append(_choose_prediction(ranked, doc.label_set))
        ranked = top_k(predict(model, enricher.enrich(doc.tokens)), cfg.top_k)
        enriched_pred.append(_choose_prediction(ranked, doc.label_set))

    base_tally = tally(gold, baseline_pred, eval_class)
    enr_tally = tally(gold, enriched_pred, eval_class)
    return CellResult(
        repeat=repeat,
        fold=fold,
        baseline_micro=micro_recall(base_tally),
        baseline_macro=macro_recall(base_tally),
        enriched_micro=micro_recall(enr_tally),
        enriched_macro=macro_recall(enr_tally),
    )


def _wilcoxon_summary(baseline: Sequence[float], treatment: Sequence[float]) -> WilcoxonSummary:
    try:
        statistic, p = wilcoxon_signed_rank(PairedSample(tuple(baseline), tuple(treatment)))
    except ValueError:
        return WilcoxonSummary(statistic=None, p_value=None, note="no difference between arms")
    return WilcoxonSummary(statistic=statistic, p_value=p)


def _error_reduction_or_none(baseline: float, treatment: float) -> float | None:
    if baseline >= 1.0:
        return None
    return error_reduction(baseline, treatment)


def _summarize(cells: Sequence[CellResult], cfg: ExperimentConfig) -> EvalResult:
    baseline_micro = [c.baseline_micro for c in cells]
    enriched_micro = [c.enriched_micro for c in cells]
    baseline_macro = [c.baseline_macro for c in cells]
    enriched_macro = [c.enriched_macro for c in cells]
    b_micro = float(np.mean(baseline_micro))
    e_micro = float(np.mean(enriched_micro))
    b_macro = float(np.mean(baseline_macro))
    e_macro = float(np.mean(enriched_macro))
    return EvalResult(
        cells=tuple(cells),
        classifier=cfg.classifier,
        rare_threshold=cfg.rare_threshold,
        neighbors=cfg.neighbors,
        repeats=cfg.repeats,
        folds=cfg.folds,
        seed=cfg.seed,
        top_k=cfg.top_k,
        baseline_micro=b_micro,
        enriched_micro=e_micro,
        baseline_macro=b_macro,
        enriched_macro=e_macro,
        micro_error_reduction=_error_reduction_or_none(b_micro, e_micro),
        macro_error_reduction=_error_reduction_or_none(b_macro, e_macro),
        micro_wilcoxon=_wilcoxon_summary(baseline_micro, enriched_micro),
        macro_wilcoxon=_wilcoxon_summary(baseline_macro, enriched_macro),
    )


def run_cv(
    cfg: ExperimentConfig,
    docs: Sequence[Document] | None = None,
    embedding: EmbeddingModel | None = None,
) -> EvalResult:
    """Run the full repeated cross-validation comparison.

    Per (repeat, fold) cell: train on the other folds' raw vectors, evaluate
    the test fold with raw vectors and with enriched vectors using the shared
    embedding and the configured (rare_threshold, neighbors). The Wilcoxon
    test pairs the per-cell micro recalls (and separately the macro recalls)
    across all repeats * folds cells.
    """
    if docs is None:
        if cfg.dataset is None:
            raise ValueError("config has no dataset path and no documents were supplied")
        docs = load_dataset(cfg.dataset, cfg.format)
    if embedding is None:
        embedding = prepare_embedding(cfg, docs)
    fold_seed, _ = _derive_seeds(cfg.seed)
    plan = make_folds(docs, cfg.repeats, cfg.folds, fold_seed)

    cells: list[CellResult] = []
    for repeat in range(cfg.repeats):
        for fold in range(cfg.folds):
            train_docs = [d for d in docs if plan.fold_of(repeat, d.id) != fold]
            test_docs = [d for d in docs if plan.fold_of(repeat, d.id) == fold]
            try:
                cells.append(_evaluate_cell(train_docs, test_docs, cfg, embedding, repeat, fold))
            except (ValueError, RuntimeError) as exc:
                raise RuntimeError(f"evaluation failed at repeat {repeat}, fold {fold}: {exc}") from exc
    return _summarize(cells, cfg)


def grid_search(
    cfg: ExperimentConfig,
    rare_threshold_range: Sequence[int] | None = None,
    neighbors_range: Sequence[int] | None = None,
    docs: Sequence[Document] | None = None,
    embedding: EmbeddingModel | None = None,
) -> tuple[int, int]:
    """Pick (rare_threshold, neighbors) maximizing enriched micro recall.

    Candidates are scored on the first repeat's first fold only: the
    classifier is trained once on that cell's training folds and each
    candidate pair re-enriches the same test split. Ties prefer the smaller
    threshold, then the smaller neighbor count.
    """
    n_range = rare_threshold_range if rare_threshold_range is not None else cfg.rare_threshold_grid
    k_range = neighbors_range if neighbors_range is not None else cfg.neighbors_grid
    if not n_range or not k_range:
        raise ValueError("grid search needs non-empty ranges for both parameters")
    if docs is None:
        if cfg.dataset is None:
            raise ValueError("config has no dataset path and no documents were supplied")
        docs = load_dataset(cfg.dataset, cfg.format)
    if embedding is None:
        embedding = prepare_embedding(cfg, docs)
    fold_seed, _ = _derive_seeds(cfg.seed)
    plan = make_folds(docs, cfg.repeats, cfg.folds, fold_seed)
    train_docs = [d for d in docs if plan.fold_of(0, d.id) != 0]
    test_docs = [d for d in docs if plan.fold_of(0, d.id) == 0]

    train, predict = _predictor(cfg)
    vocab = build_vocabulary(train_docs)
    model = train((vectorize(d.tokens, vocab), d.primary_label) for d in train_docs)
    gold = [d.label_set for d in test_docs]
    eval_class = [d.primary_label for d in test_docs]

    best: tuple[int, int] | None = None
    best_score = -1.0
    for n in sorted(set(n_range)):
        for k in sorted(set(k_range)):
            enricher = Enricher(vocab, embedding, EnrichmentConfig(n, k))
            predicted = []
            for doc in test_docs:
                ranked = top_k(predict(model, enricher.enrich(doc.tokens)), cfg.top_k)
                predicted.append(_choose_prediction(ranked, doc.label_set))
            score = micro_recall(tally(gold, predicted, eval_class))
            if score > best_score:
                best_score = score
                best = (n, k)
    assert best is not None
    return best


def render_table(result: EvalResult) -> str:
    """Human-readable report: 3-decimal recalls, 2-decimal percentages."""

    def pct(value: float | None) -> str:
        return "n/a" if value is None else f"{value:.2f}%"

    def wilcoxon_line(name: str, summary: WilcoxonSummary) -> str:
        if summary.p_value is None:
            return f"Wilcoxon signed-rank ({name}): {summary.note}"
        return (
            f"Wilcoxon signed-rank ({name}): W={summary.statistic:.1f}, p={summary.p_value:.3g}"
        )

    lines = [
        "bag-of-words enrichment evaluation",
        f"classifier: {result.classifier}    rare-word threshold (n): {result.rare_threshold}    "
        f"neighbors per rare word (k): {result.neighbors}",
        f"repeats: {result.repeats}    folds: {result.folds}    master seed: {result.seed}    "
        f"ranked depth (top-k): {result.top_k}",
        "",
        f"{'':14}{'Baseline':>10}{'Enriched':>10}{'Error Reduction':>18}",
        f"{'Micro recall':14}{result.baseline_micro:>10.3f}{result.enriched_micro:>10.3f}"
        f"{pct(result.micro_error_reduction):>18}",
        f"{'Macro recall':14}{result.baseline_macro:>10.3f}{result.enriched_macro:>10.3f}"
        f"{pct(result.macro_error_reduction):>18}",
        "",
        wilcoxon_line("micro", result.micro_wilcoxon),
        wilcoxon_line("macro", result.macro_wilcoxon),
    ]
    return "\n".join(lines) + "\n"


def emit_report(result: EvalResult, format: str, path: str | Path) -> Path:
    """Write ``result`` to ``path``; re-emitting the same result is byte-identical.

    ``table-text`` mirrors :func:`render_table`; ``records`` emits one JSON
    line per (repeat, fold) cell.
    """
    path = Path(path)
    if format == "table-text":
        payload = render_table(result)
    elif format == "records":
        lines = [
            json.dumps(
                {
                    "repeat": c.repeat,
                    "fold": c.fold,
                    "baseline_micro": c.baseline_micro,
                    "baseline_macro": c.baseline_macro,
                    "enriched_micro": c.enriched_micro,
                    "enriched_macro": c.enriched_macro,
                },
                sort_keys=True,
            )
            for c in result.cells
        ]
        payload = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown report format {format!r}; expected one of {REPORT_FORMATS}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(payload)
    return path
