"""Sparse integer term-frequency vectors and their arithmetic."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .corpus import Vocabulary

__all__ = ["SparseVector", "vectorize", "add", "nonzero_count"]


class SparseVector:
    """Immutable sparse vector of positive integer term frequencies.

    Entries are kept as parallel arrays of strictly increasing indices and
    positive counts, so iteration order is deterministic. Absent indices are
    zero; explicit zero entries are dropped at construction.
    """

    __slots__ = ("_indices", "_values", "_dimension")

    def __init__(
        self,
        entries: Mapping[int, int] | Iterable[tuple[int, int]],
        dimension: int,
    ):
        if dimension < 0:
            raise ValueError("dimension must be non-negative")
        items = entries.items() if isinstance(entries, Mapping) else entries
        pairs = sorted((int(i), int(c)) for i, c in items if int(c) != 0)
        indices = np.fromiter((i for i, _ in pairs), dtype=np.int64, count=len(pairs))
        values = np.fromiter((c for _, c in pairs), dtype=np.int64, count=len(pairs))
        if indices.size:
            if indices[0] < 0 or indices[-1] >= dimension:
                raise ValueError("entry index out of range for dimension")
            if np.any(np.diff(indices) == 0):
                raise ValueError("duplicate entry index")
            if np.any(values < 0):
                raise ValueError("term frequencies must be positive")
        indices.setflags(write=False)
        values.setflags(write=False)
        self._indices = indices
        self._values = values
        self._dimension = int(dimension)

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def indices(self) -> np.ndarray:
        """Stored indices, strictly increasing (read-only view)."""
        return self._indices

    @property
    def values(self) -> np.ndarray:
        """Counts aligned with :attr:`indices` (read-only view)."""
        return self._values

    @property
    def nnz(self) -> int:
        return int(self._indices.size)

    def get(self, index: int) -> int:
        pos = int(np.searchsorted(self._indices, index))
        if pos < self._indices.size and self._indices[pos] == index:
            return int(self._values[pos])
        return 0

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self._dimension:
            raise IndexError(index)
        return self.get(index)

    def items(self) -> Iterator[tuple[int, int]]:
        return zip(self._indices.tolist(), self._values.tolist())

    def total(self) -> int:
        """Sum of all term frequencies (the vector's mass)."""
        return int(self._values.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self._dimension == other._dimension
            and np.array_equal(self._indices, other._indices)
            and np.array_equal(self._values, other._values)
        )

    def __hash__(self) -> int:
        return hash((self._dimension, self._indices.tobytes(), self._values.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"{i}: {c}" for i, c in self.items())
        return f"SparseVector({{{body}}}, dimension={self._dimension})"


def vectorize(tokens: Sequence[str], vocab: Vocabulary) -> SparseVector:
    """Count in-vocabulary tokens; out-of-vocabulary tokens contribute nothing."""
    counts: Counter[int] = Counter()
    for token in tokens:
        idx = vocab.get_index(token)
        if idx is not None:
            counts[idx] += 1
    return SparseVector(counts, len(vocab))


def add(a: SparseVector, b: SparseVector) -> SparseVector:
    """Entrywise sum of two vectors of equal dimension."""
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} != {b.dimension}")
    merged = dict(a.items())
    for idx, count in b.items():
        merged[idx] = merged.get(idx, 0) + count
    return SparseVector(merged, a.dimension)


def nonzero_count(v: SparseVector) -> int:
    """Number of stored (nonzero) entries."""
    return v.nnz
