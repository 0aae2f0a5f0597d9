"""Rare-token detection and nearest-neighbor enrichment of term vectors.

Enrichment happens at prediction time only: a text's vector gains a
frequency-1 entry for each of the nearest in-training-vocabulary neighbors of
every rare token it contains. Training vectors are never enriched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bow import SparseVector, add, vectorize
from .corpus import Vocabulary
from .embedding import EmbeddingModel, nearest_neighbors, select_top_ranked

__all__ = [
    "EnrichmentConfig",
    "find_rare_tokens",
    "neighbor_vector",
    "enrich",
    "Enricher",
]


@dataclass(frozen=True)
class EnrichmentConfig:
    """``rare_threshold``: tokens with training frequency strictly below it
    count as rare (out-of-vocabulary tokens have frequency 0). ``neighbors``:
    how many admitted neighbors each rare token contributes. Either value at 0
    disables enrichment."""

    rare_threshold: int
    neighbors: int

    def __post_init__(self) -> None:
        if self.rare_threshold < 0:
            raise ValueError("rare_threshold must be non-negative")
        if self.neighbors < 0:
            raise ValueError("neighbors must be non-negative")

    @property
    def enabled(self) -> bool:
        return self.rare_threshold > 0 and self.neighbors > 0


def find_rare_tokens(tokens: Sequence[str], vocab: Vocabulary, rare_threshold: int) -> list[str]:
    """Distinct tokens with training frequency < ``rare_threshold``, in first-occurrence order.

    Out-of-vocabulary tokens (frequency 0) are included whenever the
    threshold is positive.
    """
    seen: set[str] = set()
    rare: list[str] = []
    for token in tokens:
        if token in seen:
            continue
        seen.add(token)
        if vocab.freq(token) < rare_threshold:
            rare.append(token)
    return rare


def neighbor_vector(
    token: str,
    model: EmbeddingModel,
    vocab: Vocabulary,
    neighbors: int,
) -> SparseVector:
    """Frequency-1 vector over the up-to-``neighbors`` nearest admitted neighbors of ``token``.

    A neighbor is admitted when it occurs in the training vocabulary with
    frequency greater than zero; the similarity ranking continues past
    inadmissible tokens. A token absent from the embedding model contributes
    an empty vector.
    """
    if neighbors < 1:
        raise ValueError("neighbors must be at least 1")
    if token not in model:
        return SparseVector({}, len(vocab))
    ranked = nearest_neighbors(model, token, neighbors, admit=lambda t: vocab.freq(t) > 0)
    return SparseVector({vocab.index_of(t): 1 for t, _ in ranked}, len(vocab))


def enrich(
    tokens: Sequence[str],
    vocab: Vocabulary,
    model: EmbeddingModel,
    config: EnrichmentConfig,
) -> SparseVector:
    """Term-frequency vector of ``tokens`` plus each distinct rare token's neighbor vector.

    With ``rare_threshold`` or ``neighbors`` at 0 this is exactly
    :func:`bowenrich.bow.vectorize`.
    """
    base = vectorize(tokens, vocab)
    if not config.enabled:
        return base
    out = base
    for token in find_rare_tokens(tokens, vocab, config.rare_threshold):
        out = add(out, neighbor_vector(token, model, vocab, config.neighbors))
    return out


class Enricher:
    """Reusable enrichment context for one (vocabulary, model, config) triple.

    Precomputes the admitted candidate rows once and caches each rare token's
    neighbor vector, so enriching many texts against the same training fold is
    cheap. Produces exactly the same vectors as :func:`enrich`.
    """

    def __init__(self, vocab: Vocabulary, model: EmbeddingModel, config: EnrichmentConfig):
        self.vocab = vocab
        self.model = model
        self.config = config
        self._cache: dict[str, SparseVector] = {}
        self._unit, nonzero = model.unit_rows()
        self._query_ok = nonzero
        if config.enabled:
            admitted = [
                i
                for i, t in enumerate(model.tokens)
                if nonzero[i] and vocab.freq(t) > 0
            ]
        else:
            admitted = []
        self._cand_model_idx = np.asarray(admitted, dtype=np.int64)
        self._cand_unit = np.ascontiguousarray(self._unit[self._cand_model_idx])
        self._cand_lexrank = model.lexicographic_ranks()[self._cand_model_idx]
        self._cand_vocab_idx = np.asarray(
            [vocab.index_of(model.tokens[i]) for i in admitted], dtype=np.int64
        )

    def neighbor_vector(self, token: str) -> SparseVector:
        cached = self._cache.get(token)
        if cached is None:
            cached = self._compute_neighbor_vector(token)
            self._cache[token] = cached
        return cached

    def _compute_neighbor_vector(self, token: str) -> SparseVector:
        dim = len(self.vocab)
        query_idx = self.model.get_index(token)
        if query_idx is None or not self._query_ok[query_idx]:
            return SparseVector({}, dim)
        keep = self._cand_model_idx != query_idx
        if not np.all(keep):
            cand_unit = self._cand_unit[keep]
            cand_lexrank = self._cand_lexrank[keep]
            cand_vocab_idx = self._cand_vocab_idx[keep]
        else:
            cand_unit = self._cand_unit
            cand_lexrank = self._cand_lexrank
            cand_vocab_idx = self._cand_vocab_idx
        if cand_vocab_idx.size == 0:
            return SparseVector({}, dim)
        sims = np.clip(cand_unit @ self._unit[query_idx], -1.0, 1.0)
        chosen = select_top_ranked(sims, cand_lexrank, min(self.config.neighbors, sims.size))
        return SparseVector({int(cand_vocab_idx[j]): 1 for j in chosen}, dim)

    def enrich(self, tokens: Sequence[str]) -> SparseVector:
        base = vectorize(tokens, self.vocab)
        if not self.config.enabled:
            return base
        out = base
        for token in find_rare_tokens(tokens, self.vocab, self.config.rare_threshold):
            out = add(out, self.neighbor_vector(token))
        return out
