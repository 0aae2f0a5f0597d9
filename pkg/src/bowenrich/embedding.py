"""Skip-gram word embeddings, word2vec-text I/O, and cosine neighbor queries."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from numba import njit

__all__ = [
    "EmbeddingModel",
    "SkipgramHyperparams",
    "train_skipgram",
    "load_word2vec_text",
    "save_word2vec_text",
    "cosine",
    "nearest_neighbors",
]


class EmbeddingModel:
    """Dense vectors for a fixed token set, queried by cosine similarity.

    Immutable after construction; the vector matrix and derived caches are
    safe to share across threads.
    """

    __slots__ = ("_tokens", "_index", "_vectors", "metadata", "_unit_cache", "_lexrank_cache")

    def __init__(
        self,
        tokens: Sequence[str],
        vectors: np.ndarray,
        metadata: dict | None = None,
    ):
        vectors = np.ascontiguousarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D array")
        if vectors.shape[0] != len(tokens):
            raise ValueError(f"{len(tokens)} tokens but {vectors.shape[0]} vector rows")
        if vectors.shape[1] < 1:
            raise ValueError("vector dimension must be at least 1")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in embedding model")
        vectors.setflags(write=False)
        self._tokens = tuple(tokens)
        self._index = {t: i for i, t in enumerate(self._tokens)}
        self._vectors = vectors
        self.metadata = dict(metadata) if metadata else None
        self._unit_cache: tuple[np.ndarray, np.ndarray] | None = None
        self._lexrank_cache: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    @property
    def dimension(self) -> int:
        return self._vectors.shape[1]

    @property
    def tokens(self) -> tuple[str, ...]:
        return self._tokens

    @property
    def vectors(self) -> np.ndarray:
        """The full token-by-dimension matrix (read-only view)."""
        return self._vectors

    def index_of(self, token: str) -> int:
        return self._index[token]

    def get_index(self, token: str) -> int | None:
        return self._index.get(token)

    def vector(self, token: str) -> np.ndarray:
        return self._vectors[self._index[token]]

    def unit_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-normalized matrix plus a mask of rows with nonzero norm.

        Zero-norm rows (possible in hand-built or loaded models) are left as
        zeros and masked out: cosine similarity is undefined for them.
        """
        if self._unit_cache is None:
            norms = np.linalg.norm(self._vectors, axis=1)
            nonzero = norms > 0.0
            safe = np.where(nonzero, norms, 1.0)
            unit = self._vectors / safe[:, None]
            unit.setflags(write=False)
            nonzero.setflags(write=False)
            self._unit_cache = (unit, nonzero)
        return self._unit_cache

    def lexicographic_ranks(self) -> np.ndarray:
        """Rank of each token in alphabetical order, used to break similarity ties."""
        if self._lexrank_cache is None:
            order = sorted(range(len(self._tokens)), key=lambda i: self._tokens[i])
            ranks = np.empty(len(self._tokens), dtype=np.int64)
            for rank, i in enumerate(order):
                ranks[i] = rank
            ranks.setflags(write=False)
            self._lexrank_cache = ranks
        return self._lexrank_cache


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity of two equal-length non-zero vectors, in [-1, 1]."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape[0]} != {v.shape[0]}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def select_top_ranked(sims: np.ndarray, lexrank: np.ndarray, k: int) -> np.ndarray:
    """Positions of the ``k`` best candidates by (similarity desc, lexrank asc).

    Uses a partition fast path; exact ties at the cut are resolved by sorting
    every candidate that reaches the threshold similarity.
    """
    n = sims.size
    if k >= n:
        pool = np.arange(n)
    else:
        part = np.argpartition(-sims, k - 1)
        threshold = sims[part[k - 1]]
        pool = np.flatnonzero(sims >= threshold)
    order = np.lexsort((lexrank[pool], -sims[pool]))
    return pool[order][:k]


def nearest_neighbors(
    model: EmbeddingModel,
    token: str,
    k: int,
    admit: Callable[[str], bool] | None = None,
) -> list[tuple[str, float]]:
    """The ``k`` most cosine-similar admitted tokens to ``token``, best first.

    The query token itself is never returned. Tokens rejected by ``admit``
    are skipped and the ranking continues past them; fewer than ``k`` results
    are returned when the admitted set is smaller. Exact similarity ties are
    broken alphabetically. A query absent from the model yields an empty list.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    query_idx = model.get_index(token)
    if query_idx is None:
        return []
    unit, nonzero = model.unit_rows()
    if not nonzero[query_idx]:
        return []
    mask = nonzero.copy()
    mask[query_idx] = False
    if admit is not None:
        for i in np.flatnonzero(mask):
            if not admit(model.tokens[i]):
                mask[i] = False
    candidates = np.flatnonzero(mask)
    if candidates.size == 0:
        return []
    sims = np.clip(unit[candidates] @ unit[query_idx], -1.0, 1.0)
    chosen = select_top_ranked(sims, model.lexicographic_ranks()[candidates], min(k, candidates.size))
    return [(model.tokens[candidates[j]], float(sims[j])) for j in chosen]


def load_word2vec_text(path: str | Path) -> EmbeddingModel:
    """Load a word2vec text-format model: a ``<vocab> <dim>`` header, then one
    ``token c1 .. cd`` row per token."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: header must be '<vocab_size> <dimension>', got {header!r}")
        try:
            vocab_size, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"{path}: header must hold two integers, got {header!r}") from None
        if vocab_size < 1 or dim < 1:
            raise ValueError(f"{path}: header values must be positive, got {header!r}")
        tokens: list[str] = []
        seen: set[str] = set()
        rows = np.empty((vocab_size, dim), dtype=np.float64)
        count = 0
        for lineno, line in enumerate(fh, start=2):
            fields = line.split()
            if not fields:
                raise ValueError(f"{path}: line {lineno}: blank row")
            if count >= vocab_size:
                raise ValueError(
                    f"{path}: line {lineno}: more rows than the declared vocabulary size {vocab_size}"
                )
            token = fields[0]
            if len(fields) != dim + 1:
                raise ValueError(
                    f"{path}: line {lineno}: token {token!r} has {len(fields) - 1} components, expected {dim}"
                )
            if token in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate token {token!r}")
            seen.add(token)
            try:
                rows[count] = [float(x) for x in fields[1:]]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric component for token {token!r}") from None
            tokens.append(token)
            count += 1
    if count != vocab_size:
        raise ValueError(f"{path}: header declares {vocab_size} rows but file holds {count}")
    return EmbeddingModel(tokens, rows)


def save_word2vec_text(model: EmbeddingModel, path: str | Path) -> Path:
    """Write ``model`` in word2vec text format with full-precision components."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(model)} {model.dimension}\n")
        for token, row in zip(model.tokens, model.vectors):
            comps = " ".join(repr(float(c)) for c in row)
            fh.write(f"{token} {comps}\n")
    return path


@dataclass(frozen=True)
class SkipgramHyperparams:
    """Skip-gram training knobs.

    Defaults: 100-dimensional vectors, window 10, minimum token frequency 2,
    10 epochs, 5 negative samples, initial learning rate 0.025.
    """

    dim: int = 100
    window: int = 10
    min_count: int = 2
    epochs: int = 10
    negative_samples: int = 5
    learning_rate: float = 0.025
    seed: int = 1

    def __post_init__(self) -> None:
        for name in ("dim", "window", "min_count", "epochs", "negative_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")


# 64-bit LCG (Knuth MMIX constants); wraps modulo 2**64 inside the kernels.
_LCG_MULT = np.uint64(6364136223846793005)
_LCG_INC = np.uint64(1442695040888963407)
_INV_2_53 = 1.0 / 9007199254740992.0
_SHIFT_11 = np.uint64(11)


@njit(cache=True)
def _cdf_index(cdf, u):
    """First index with cdf[index] > u (binary search; cdf[-1] == 1.0)."""
    lo = 0
    hi = cdf.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def _sgns_train(corpus, offsets, w_in, w_out, noise_cdf, window, negatives, lr0, epochs, state):
    dim = w_in.shape[1]
    total = corpus.shape[0] * epochs
    floor_frac = 1e-4
    step = 0
    neu = np.empty(dim)
    for _ in range(epochs):
        for s in range(offsets.shape[0] - 1):
            sent_lo = offsets[s]
            sent_hi = offsets[s + 1]
            for pos in range(sent_lo, sent_hi):
                alpha = lr0 * (1.0 - (1.0 - floor_frac) * (step / total))
                center = corpus[pos]
                ctx_lo = pos - window
                if ctx_lo < sent_lo:
                    ctx_lo = sent_lo
                ctx_hi = pos + window
                if ctx_hi > sent_hi - 1:
                    ctx_hi = sent_hi - 1
                for ctx_pos in range(ctx_lo, ctx_hi + 1):
                    if ctx_pos == pos:
                        continue
                    target = corpus[ctx_pos]
                    for c in range(dim):
                        neu[c] = 0.0
                    for sample in range(negatives + 1):
                        if sample == 0:
                            out_idx = target
                            label = 1.0
                        else:
                            out_idx = target
                            tries = 0
                            while out_idx == target and tries < 100:
                                state = state * _LCG_MULT + _LCG_INC
                                u = (state >> _SHIFT_11) * _INV_2_53
                                out_idx = _cdf_index(noise_cdf, u)
                                tries += 1
                            if out_idx == target:
                                continue  # vocabulary too small to draw a negative
                            label = 0.0
                        dot = 0.0
                        for c in range(dim):
                            dot += w_in[center, c] * w_out[out_idx, c]
                        if dot > 60.0:
                            pred = 1.0
                        elif dot < -60.0:
                            pred = 0.0
                        else:
                            pred = 1.0 / (1.0 + math.exp(-dot))
                        g = (label - pred) * alpha
                        for c in range(dim):
                            neu[c] += g * w_out[out_idx, c]
                            w_out[out_idx, c] += g * w_in[center, c]
                    for c in range(dim):
                        w_in[center, c] += neu[c]
                step += 1
    return state


def train_skipgram(
    sentences: Iterable[Sequence[str]],
    params: SkipgramHyperparams | None = None,
) -> EmbeddingModel:
    """Train skip-gram vectors with negative sampling over ``sentences``.

    Each sentence is one window scope: for every position, every other token
    within ``window`` positions (and the same sentence) is a positive target
    for the center token, discriminated against ``negative_samples`` draws
    from the unigram^0.75 noise distribution via sigmoid-loss SGD. The
    learning rate decays linearly to 1e-4 of its initial value over all
    epochs. Tokens occurring fewer than ``min_count`` times are dropped before
    windowing. Training is single-threaded and bit-reproducible per seed.
    """
    if params is None:
        params = SkipgramHyperparams()
    sentences = [list(s) for s in sentences]
    counts: Counter[str] = Counter()
    for sent in sentences:
        counts.update(sent)
    kept = sorted(t for t, c in counts.items() if c >= params.min_count)
    if not kept:
        raise ValueError(f"no tokens reach min_count={params.min_count}; cannot train")
    index = {t: i for i, t in enumerate(kept)}

    encoded: list[np.ndarray] = []
    for sent in sentences:
        ids = [index[t] for t in sent if t in index]
        if ids:
            encoded.append(np.asarray(ids, dtype=np.int64))
    corpus = np.concatenate(encoded)
    lengths = np.array([0] + [e.size for e in encoded], dtype=np.int64)
    offsets = np.cumsum(lengths)

    freqs = np.array([counts[t] for t in kept], dtype=np.float64)
    noise = freqs**0.75
    cdf = np.cumsum(noise / noise.sum())
    cdf[-1] = 1.0

    rng = np.random.default_rng(params.seed)
    w_in = (rng.random((len(kept), params.dim)) - 0.5) / params.dim
    w_out = np.zeros((len(kept), params.dim))

    state = np.uint64((params.seed * 2862933555777941757 + 3037000493) & 0xFFFFFFFFFFFFFFFF)
    _sgns_train(
        corpus,
        offsets,
        w_in,
        w_out,
        cdf,
        params.window,
        params.negative_samples,
        params.learning_rate,
        params.epochs,
        state,
    )
    return EmbeddingModel(kept, w_in, metadata=asdict(params))
