"""Dataset ingestion, tokenization, vocabularies, and cross-validation fold plans."""

from __future__ import annotations

import html
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Document",
    "Vocabulary",
    "FoldPlan",
    "DATASET_FORMATS",
    "tokenize",
    "load_dataset",
    "filter_short_subset",
    "build_vocabulary",
    "make_folds",
]

DATASET_FORMATS = ("records", "reuters-sgml")

# Maximal runs of Unicode alphanumerics (underscore excluded); everything else
# separates tokens.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it into maximal alphanumeric runs.

    All non-alphanumeric characters act as separators and are dropped, so
    ``tokenize("Rasoul's supporters")`` yields ``["rasoul", "s", "supporters"]``.
    Empty input yields an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Document:
    """A labelled text instance.

    ``tokens`` is always derived from ``text`` via :func:`tokenize`.
    ``labels`` preserves source order with duplicates removed; the first entry
    is the primary label used for stratification and per-class tallies, and
    membership tests treat the tuple as a set.
    """

    id: str
    text: str
    labels: tuple[str, ...]
    tokens: tuple[str, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        deduped = tuple(dict.fromkeys(self.labels))
        if not deduped:
            raise ValueError(f"document {self.id!r} has no labels")
        object.__setattr__(self, "labels", deduped)
        object.__setattr__(self, "tokens", tuple(tokenize(self.text)))

    @property
    def primary_label(self) -> str:
        return self.labels[0]

    @property
    def label_set(self) -> frozenset[str]:
        return frozenset(self.labels)


class Vocabulary:
    """Bijection between training tokens and indices ``0..|V|-1``.

    Indices are assigned in sorted token order, which makes vectorization
    deterministic regardless of document order. ``train_freq`` counts total
    occurrences in the training documents the vocabulary was built from;
    every entry has frequency >= 1 by construction.
    """

    __slots__ = ("_tokens", "_index", "_train_freq")

    def __init__(self, counts: Mapping[str, int]):
        if not counts:
            raise ValueError("a vocabulary needs at least one token")
        tokens = sorted(counts)
        freqs = np.array([counts[t] for t in tokens], dtype=np.int64)
        if np.any(freqs < 1):
            raise ValueError("vocabulary frequencies must be at least 1")
        self._tokens = tuple(tokens)
        self._index = {t: i for i, t in enumerate(tokens)}
        self._train_freq = freqs
        self._train_freq.setflags(write=False)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    @property
    def tokens(self) -> tuple[str, ...]:
        return self._tokens

    @property
    def train_freq(self) -> np.ndarray:
        return self._train_freq

    def index_of(self, token: str) -> int:
        return self._index[token]

    def get_index(self, token: str) -> int | None:
        return self._index.get(token)

    def token_at(self, index: int) -> str:
        return self._tokens[index]

    def freq(self, token: str) -> int:
        """Training frequency of ``token``; 0 when out of vocabulary."""
        i = self._index.get(token)
        return 0 if i is None else int(self._train_freq[i])


def build_vocabulary(training_docs: Sequence[Document]) -> Vocabulary:
    """Index every distinct token of ``training_docs`` with its total count."""
    if not training_docs:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts: Counter[str] = Counter()
    for doc in training_docs:
        counts.update(doc.tokens)
    if not counts:
        raise ValueError("training documents contain no tokens")
    return Vocabulary(counts)


def load_dataset(path: str | Path, format: str = "records") -> list[Document]:
    """Load documents from ``path`` in the named format.

    ``records`` is one JSON object per line with string ``id``, string
    ``text`` and a non-empty array-of-strings ``labels``. ``reuters-sgml``
    accepts a Reuters-21578 distribution file or directory of ``*.sgm`` files
    and keeps articles that carry at least one TOPICS label and a BODY.
    """
    if format == "records":
        return _load_records(Path(path))
    if format == "reuters-sgml":
        return _load_reuters_sgml(Path(path))
    raise ValueError(f"unknown dataset format {format!r}; expected one of {DATASET_FORMATS}")


def _load_records(path: Path) -> list[Document]:
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno}: invalid record: {exc}") from None
            if not isinstance(rec, dict):
                raise ValueError(f"{path}: line {lineno}: record is not an object")
            try:
                doc_id, text, labels = rec["id"], rec["text"], rec["labels"]
            except KeyError as exc:
                raise ValueError(f"{path}: line {lineno}: record missing field {exc.args[0]!r}") from None
            if not isinstance(doc_id, str) or not isinstance(text, str):
                raise ValueError(f"{path}: line {lineno}: id and text must be strings")
            if (
                not isinstance(labels, list)
                or not labels
                or not all(isinstance(lab, str) for lab in labels)
            ):
                raise ValueError(f"{path}: line {lineno}: labels must be a non-empty array of strings")
            if doc_id in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            docs.append(Document(id=doc_id, text=text, labels=tuple(labels)))
    return docs


_REUTERS_DOC_RE = re.compile(r"<REUTERS\b([^>]*)>(.*?)</REUTERS>", re.DOTALL | re.IGNORECASE)
_NEWID_RE = re.compile(r'NEWID="(\d+)"', re.IGNORECASE)
_TOPICS_RE = re.compile(r"<TOPICS>(.*?)</TOPICS>", re.DOTALL | re.IGNORECASE)
_TOPIC_ITEM_RE = re.compile(r"<D>(.*?)</D>", re.DOTALL | re.IGNORECASE)
_BODY_RE = re.compile(r"<BODY>(.*?)</BODY>", re.DOTALL | re.IGNORECASE)


def _load_reuters_sgml(path: Path) -> list[Document]:
    files = sorted(path.glob("*.sgm")) if path.is_dir() else [path]
    if not files:
        raise ValueError(f"{path}: no .sgm files found")
    docs: list[Document] = []
    seen: set[str] = set()
    for sgm in files:
        raw = sgm.read_text(encoding="latin-1")
        for match in _REUTERS_DOC_RE.finditer(raw):
            attrs, content = match.group(1), match.group(2)
            id_match = _NEWID_RE.search(attrs)
            if id_match is None:
                raise ValueError(f"{sgm}: REUTERS element without a NEWID attribute")
            doc_id = id_match.group(1)
            topics_match = _TOPICS_RE.search(content)
            topics: list[str] = []
            if topics_match is not None:
                topics = [html.unescape(t).strip() for t in _TOPIC_ITEM_RE.findall(topics_match.group(1))]
                topics = [t for t in topics if t]
            body_match = _BODY_RE.search(content)
            if not topics or body_match is None:
                continue
            if doc_id in seen:
                raise ValueError(f"{sgm}: duplicate NEWID {doc_id}")
            seen.add(doc_id)
            docs.append(
                Document(
                    id=doc_id,
                    text=html.unescape(body_match.group(1)),
                    labels=tuple(dict.fromkeys(topics)),
                )
            )
    return docs


def filter_short_subset(
    docs: Sequence[Document],
    max_tokens: int,
    excluded_labels: Iterable[str] = (),
) -> list[Document]:
    """Keep documents of at most ``max_tokens`` tokens whose labels avoid ``excluded_labels``."""
    if max_tokens < 1:
        raise ValueError("max_tokens must be at least 1")
    excluded = frozenset(excluded_labels)
    return [
        d for d in docs if len(d.tokens) <= max_tokens and excluded.isdisjoint(d.labels)
    ]


@dataclass(frozen=True)
class FoldPlan:
    """Seeded assignment of documents to folds, one assignment per repeat."""

    repeats: int
    folds: int
    seed: int
    assignment: tuple[dict[str, int], ...]

    def fold_of(self, repeat: int, doc_id: str) -> int:
        return self.assignment[repeat][doc_id]

    def test_ids(self, repeat: int, fold: int) -> list[str]:
        return [doc_id for doc_id, f in self.assignment[repeat].items() if f == fold]


def make_folds(docs: Sequence[Document], repeats: int, folds: int, seed: int) -> FoldPlan:
    """Partition ``docs`` into ``folds`` near-equal folds, ``repeats`` times.

    Each repeat draws a fresh seeded shuffle. Classes (by primary label) with
    at least ``folds`` members are spread evenly across folds; smaller classes
    are pooled and distributed together. Fold sizes differ by at most one.
    Regenerating with the same seed and document order reproduces the plan.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if folds < 2:
        raise ValueError("folds must be at least 2")
    if len(docs) < folds:
        raise ValueError(f"need at least {folds} documents for {folds} folds, got {len(docs)}")
    if len({d.id for d in docs}) != len(docs):
        raise ValueError("documents must have distinct ids")

    rng = np.random.default_rng(seed)
    per_repeat: list[dict[str, int]] = []
    for _ in range(repeats):
        by_label: dict[str, list[str]] = {}
        for d in docs:
            by_label.setdefault(d.primary_label, []).append(d.id)
        sequence: list[str] = []
        pool: list[str] = []
        for label in sorted(by_label):
            ids = by_label[label]
            if len(ids) >= folds:
                sequence.extend(ids[i] for i in rng.permutation(len(ids)))
            else:
                pool.extend(ids)
        if pool:
            sequence.extend(pool[i] for i in rng.permutation(len(pool)))
        per_repeat.append({doc_id: pos % folds for pos, doc_id in enumerate(sequence)})
    return FoldPlan(repeats=repeats, folds=folds, seed=seed, assignment=tuple(per_repeat))
