"""Shared builders for synthetic corpora, embeddings, and enrichment instances."""

from __future__ import annotations

import numpy as np

from bowenrich.bow import SparseVector
from bowenrich.corpus import Document, Vocabulary, build_vocabulary
from bowenrich.embedding import EmbeddingModel
from bowenrich.enrichment import EnrichmentConfig

CLASS_NAMES = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta")


def make_doc(doc_id: str, tokens: list[str], labels: tuple[str, ...]) -> Document:
    """Document whose text round-trips the tokenizer exactly."""
    return Document(id=doc_id, text=" ".join(tokens), labels=labels)


def synthetic_dataset(
    n_classes: int = 3,
    docs_per_class: int = 30,
    seed: int = 0,
    noise_rate: float = 0.05,
) -> tuple[list[Document], EmbeddingModel]:
    """A small class-separable corpus plus a hand-built embedding.

    Each class has five signature tokens; every document mixes signature
    tokens with shared filler and carries one document-unique token. Unique
    tokens sit near their class's signature tokens in the embedding, so
    enrichment can recover class evidence for out-of-vocabulary words. A few
    documents get a wrong label so baselines stay below perfect recall.
    """
    rng = np.random.default_rng(seed)
    classes = CLASS_NAMES[:n_classes]
    shared = ["the", "of", "report", "said", "this", "week"]
    signatures = {c: [f"{c}sig{j}" for j in range(5)] for c in classes}

    docs: list[Document] = []
    all_tokens: list[str] = list(shared)
    for c in classes:
        all_tokens.extend(signatures[c])
    for ci, c in enumerate(classes):
        for i in range(docs_per_class):
            sig = [signatures[c][j] for j in rng.integers(0, 5, size=4)]
            filler = [shared[j] for j in rng.integers(0, len(shared), size=2)]
            unique = f"{c}only{i}"
            all_tokens.append(unique)
            label = c
            if rng.random() < noise_rate:
                label = classes[(ci + 1) % n_classes]
            docs.append(make_doc(f"{c}-{i}", sig + filler + [unique], (label,)))

    dim = max(8, n_classes)
    vectors = np.zeros((len(all_tokens), dim))
    direction = {c: np.eye(dim)[i] for i, c in enumerate(classes)}
    for t_i, token in enumerate(all_tokens):
        owner = next((c for c in classes if token.startswith(c)), None)
        base = direction[owner] if owner is not None else rng.normal(size=dim) * 0.3
        vectors[t_i] = base + rng.normal(size=dim) * 0.08
    return docs, EmbeddingModel(all_tokens, vectors)


def random_enrichment_instance(
    rng: np.random.Generator,
) -> tuple[list[str], Vocabulary, EmbeddingModel, EnrichmentConfig]:
    """One randomized (tokens, vocab, model, config) enrichment scenario.

    The token universe overlaps partially between the training vocabulary and
    the embedding model, so instances exercise in-vocabulary, rare, and
    out-of-vocabulary tokens as well as model-absent tokens.
    """
    universe = [f"t{i}" for i in range(14)]
    n_train_docs = int(rng.integers(1, 4))
    train_docs = []
    for d in range(n_train_docs):
        size = int(rng.integers(1, 9))
        toks = [universe[j] for j in rng.integers(0, 10, size=size)]
        train_docs.append(make_doc(f"d{d}", toks, ("x",)))
    vocab = build_vocabulary(train_docs)

    model_size = int(rng.integers(2, 13))
    model_tokens = list(rng.choice(universe, size=model_size, replace=False))
    vectors = rng.normal(size=(model_size, 4))
    model = EmbeddingModel(model_tokens, vectors)

    text_len = int(rng.integers(0, 11))
    tokens = [universe[j] for j in rng.integers(0, 14, size=text_len)]
    config = EnrichmentConfig(rare_threshold=int(rng.integers(0, 5)), neighbors=int(rng.integers(0, 4)))
    return tokens, vocab, model, config


def sparse_from_dict(entries: dict[int, int], dimension: int) -> SparseVector:
    return SparseVector(entries, dimension)
