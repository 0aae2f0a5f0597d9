"""Short-text classification with word-embedding enrichment of bag-of-words vectors.

The library classifies short texts with linear models (multinomial naive
Bayes, one-vs-one linear SVM) over sparse term-frequency vectors, and at
prediction time enriches each rare or out-of-vocabulary token with its
nearest neighbors from a skip-gram embedding. The harness runs repeated
stratified cross-validation comparing raw against enriched representations,
with grid search and significance testing.
"""

from .bow import SparseVector, add, nonzero_count, vectorize
from .classify import (
    MNBModel,
    Prediction,
    SVMModel,
    load_model,
    predict_mnb,
    predict_svm,
    save_model,
    top_k,
    train_mnb,
    train_svm_ovo,
)
from .corpus import (
    Document,
    FoldPlan,
    Vocabulary,
    build_vocabulary,
    filter_short_subset,
    load_dataset,
    make_folds,
    tokenize,
)
from .embedding import (
    EmbeddingModel,
    SkipgramHyperparams,
    cosine,
    load_word2vec_text,
    nearest_neighbors,
    save_word2vec_text,
    train_skipgram,
)
from .enrichment import EnrichmentConfig, Enricher, enrich, find_rare_tokens, neighbor_vector
from .harness import (
    CellResult,
    EvalResult,
    ExperimentConfig,
    emit_report,
    grid_search,
    run_cv,
)
from .metrics import (
    ConfusionTally,
    PairedSample,
    error_reduction,
    macro_recall,
    micro_recall,
    tally,
    wilcoxon_signed_rank,
)

__version__ = "0.1.0"

__all__ = [
    "SparseVector",
    "add",
    "nonzero_count",
    "vectorize",
    "MNBModel",
    "Prediction",
    "SVMModel",
    "load_model",
    "predict_mnb",
    "predict_svm",
    "save_model",
    "top_k",
    "train_mnb",
    "train_svm_ovo",
    "Document",
    "FoldPlan",
    "Vocabulary",
    "build_vocabulary",
    "filter_short_subset",
    "load_dataset",
    "make_folds",
    "tokenize",
    "EmbeddingModel",
    "SkipgramHyperparams",
    "cosine",
    "load_word2vec_text",
    "nearest_neighbors",
    "save_word2vec_text",
    "train_skipgram",
    "EnrichmentConfig",
    "Enricher",
    "enrich",
    "find_rare_tokens",
    "neighbor_vector",
    "CellResult",
    "EvalResult",
    "ExperimentConfig",
    "emit_report",
    "grid_search",
    "run_cv",
    "ConfusionTally",
    "PairedSample",
    "error_reduction",
    "macro_recall",
    "micro_recall",
    "tally",
    "wilcoxon_signed_rank",
]
