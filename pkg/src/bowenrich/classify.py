"""Multinomial naive Bayes and one-vs-one linear SVM over sparse term vectors."""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .bow import SparseVector

__all__ = [
    "Prediction",
    "MNBModel",
    "SVMModel",
    "train_mnb",
    "predict_mnb",
    "train_svm_ovo",
    "train_binary_svm",
    "predict_svm",
    "top_k",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1

SVM_TOLERANCE = 1e-3


@dataclass(frozen=True)
class Prediction:
    """Full class ranking, best first: (label, score) with non-increasing scores."""

    ranking: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        labels = [label for label, _ in self.ranking]
        if len(set(labels)) != len(labels):
            raise ValueError("ranking labels must be distinct")
        scores = [score for _, score in self.ranking]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("ranking scores must be non-increasing")

    @property
    def label(self) -> str:
        return self.ranking[0][0]


def top_k(prediction: Prediction, k: int) -> list[str]:
    """First ``min(k, #classes)`` labels of the ranking."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return [label for label, _ in prediction.ranking[:k]]


def _ranked(classes: Sequence[str], scores: np.ndarray) -> Prediction:
    order = sorted(range(len(classes)), key=lambda i: (-scores[i], classes[i]))
    return Prediction(tuple((classes[i], float(scores[i])) for i in order))


# ---------------------------------------------------------------------------
# Multinomial naive Bayes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MNBModel:
    """Log-space priors and Laplace-smoothed per-class token conditionals."""

    classes: tuple[str, ...]
    log_prior: np.ndarray
    log_cond: np.ndarray
    dimension: int


def train_mnb(training: Iterable[tuple[SparseVector, str]]) -> MNBModel:
    """Fit priors P(c) = |c|/N and conditionals P(t|c) = (count+1)/(total+|V|)."""
    rows = list(training)
    if not rows:
        raise ValueError("training set is empty")
    dimension = rows[0][0].dimension
    if dimension < 1:
        raise ValueError("vocabulary dimension must be positive")
    if any(vec.dimension != dimension for vec, _ in rows):
        raise ValueError("training vectors have mixed dimensions")

    classes = tuple(sorted({label for _, label in rows}))
    class_index = {c: i for i, c in enumerate(classes)}
    token_counts = np.zeros((len(classes), dimension), dtype=np.float64)
    doc_counts = np.zeros(len(classes), dtype=np.float64)
    for vec, label in rows:
        ci = class_index[label]
        doc_counts[ci] += 1.0
        if vec.nnz:
            token_counts[ci, vec.indices] += vec.values
    log_prior = np.log(doc_counts / len(rows))
    totals = token_counts.sum(axis=1, keepdims=True)
    log_cond = np.log((token_counts + 1.0) / (totals + dimension))
    log_prior.setflags(write=False)
    log_cond.setflags(write=False)
    return MNBModel(classes=classes, log_prior=log_prior, log_cond=log_cond, dimension=dimension)


def predict_mnb(model: MNBModel, v: SparseVector) -> Prediction:
    """Rank classes by log P(c) + sum_t tf(t) log P(t|c); ties break alphabetically."""
    if v.dimension != model.dimension:
        raise ValueError(f"vector dimension {v.dimension} != model dimension {model.dimension}")
    scores = model.log_prior.copy()
    if v.nnz:
        scores = scores + model.log_cond[:, v.indices] @ v.values.astype(np.float64)
    return _ranked(model.classes, scores)


# ---------------------------------------------------------------------------
# One-vs-one linear SVM
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SVMModel:
    """One soft-margin hyperplane per unordered class pair, plus vote metadata.

    ``pair_left``/``pair_right`` hold class indices with left < right; the
    decision value w.v + b votes for the left class when non-negative.
    """

    classes: tuple[str, ...]
    pair_left: np.ndarray
    pair_right: np.ndarray
    weights: np.ndarray
    bias: np.ndarray
    C: float
    dimension: int

    def __post_init__(self) -> None:
        m = len(self.classes)
        expected = m * (m - 1) // 2
        if self.weights.shape != (expected, self.dimension) or self.bias.shape != (expected,):
            raise ValueError(f"expected {expected} pairwise models for {m} classes")

    @property
    def n_pairs(self) -> int:
        return int(self.bias.shape[0])

    def pair_id(self, left: int, right: int) -> int:
        """Index of the pairwise model for class indices ``left < right``."""
        m = len(self.classes)
        return left * m - left * (left + 1) // 2 + (right - left - 1)


# Seed salt for the per-pair coordinate permutation; any fixed odd constant works.
_DCD_SEED_SALT = 0x9E3779B97F4A7C15


@njit(cache=True)
def _dcd_solve(indptr, indices, data, y, qii, dim, C, tol, max_epochs, state):
    """Dual coordinate descent for the L1-loss SVM with an implicit bias feature.

    Solves min 0.5*a'Qa - e'a over 0 <= a_i <= C where Q_ij = y_i y_j
    (x_i.x_j + 1); the +1 folds the bias into the weight vector (returned as
    w[dim]). Stops once a full no-update verification pass keeps every
    projected gradient within tol.
    """
    n = y.shape[0]
    w = np.zeros(dim + 1)
    alpha = np.zeros(n)
    order = np.arange(n)
    mult = np.uint64(6364136223846793005)
    inc = np.uint64(1442695040888963407)
    inv = 1.0 / 9007199254740992.0
    converged = False
    epochs_used = 0
    for epoch in range(max_epochs):
        for t in range(n - 1, 0, -1):
            state = state * mult + inc
            u = (state >> np.uint64(11)) * inv
            j = int(u * (t + 1))
            if j > t:
                j = t
            tmp = order[t]
            order[t] = order[j]
            order[j] = tmp
        max_pg = 0.0
        for t in range(n):
            i = order[t]
            g = w[dim]
            for p in range(indptr[i], indptr[i + 1]):
                g += w[indices[p]] * data[p]
            g = g * y[i] - 1.0
            a_i = alpha[i]
            if a_i <= 0.0:
                pg = g if g < 0.0 else 0.0
            elif a_i >= C:
                pg = g if g > 0.0 else 0.0
            else:
                pg = g
            if pg != 0.0:
                apg = -pg if pg < 0.0 else pg
                if apg > max_pg:
                    max_pg = apg
                new = a_i - g / qii[i]
                if new < 0.0:
                    new = 0.0
                elif new > C:
                    new = C
                delta = (new - a_i) * y[i]
                if delta != 0.0:
                    alpha[i] = new
                    for p in range(indptr[i], indptr[i + 1]):
                        w[indices[p]] += delta * data[p]
                    w[dim] += delta
        epochs_used = epoch + 1
        if max_pg <= tol:
            vmax = 0.0
            for i in range(n):
                g = w[dim]
                for p in range(indptr[i], indptr[i + 1]):
                    g += w[indices[p]] * data[p]
                g = g * y[i] - 1.0
                if alpha[i] <= 0.0:
                    pg = g if g < 0.0 else 0.0
                elif alpha[i] >= C:
                    pg = g if g > 0.0 else 0.0
                else:
                    pg = g
                apg = -pg if pg < 0.0 else pg
                if apg > vmax:
                    vmax = apg
            if vmax <= tol:
                converged = True
                break
    return w, alpha, epochs_used, converged


def _to_csr(rows: Sequence[SparseVector]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, vec in enumerate(rows):
        indptr[i + 1] = indptr[i] + vec.nnz
    indices = np.empty(indptr[-1], dtype=np.int64)
    data = np.empty(indptr[-1], dtype=np.float64)
    qii = np.empty(len(rows), dtype=np.float64)
    for i, vec in enumerate(rows):
        lo, hi = indptr[i], indptr[i + 1]
        indices[lo:hi] = vec.indices
        data[lo:hi] = vec.values
        qii[i] = float(vec.values @ vec.values) + 1.0  # +1 for the bias feature
    return indptr, indices, data, qii


def train_binary_svm(
    rows: Sequence[SparseVector],
    y: Sequence[int],
    C: float = 1.0,
    tol: float = SVM_TOLERANCE,
    max_epochs: int = 4000,
    seed: int = 1,
) -> tuple[np.ndarray, float, np.ndarray]:
    """Train one soft-margin linear SVM; returns (weights, bias, dual coefficients).

    Labels must be +1/-1. The solution satisfies the box-constrained dual's
    projected-gradient (KKT) conditions within ``tol`` on the training data.
    """
    if not rows:
        raise ValueError("empty binary training set")
    yv = np.asarray(y, dtype=np.float64)
    if yv.shape[0] != len(rows) or not np.all(np.abs(yv) == 1.0):
        raise ValueError("labels must be +1/-1, one per row")
    indptr, indices, data, qii = _to_csr(rows)
    state = np.uint64((seed * _DCD_SEED_SALT + 1) & 0xFFFFFFFFFFFFFFFF)
    w, alpha, _, converged = _dcd_solve(
        indptr, indices, data, yv, qii, rows[0].dimension, C, tol, max_epochs, state
    )
    if not converged:
        raise RuntimeError(f"SVM did not reach tolerance {tol} within {max_epochs} epochs")
    return w[:-1], float(w[-1]), alpha


def train_svm_ovo(
    training: Iterable[tuple[SparseVector, str]],
    C: float = 1.0,
    tol: float = SVM_TOLERANCE,
    max_epochs: int = 4000,
) -> SVMModel:
    """Train one binary SVM per unordered class pair (majority-vote multiclass)."""
    rows = list(training)
    if not rows:
        raise ValueError("training set is empty")
    dimension = rows[0][0].dimension
    if any(vec.dimension != dimension for vec, _ in rows):
        raise ValueError("training vectors have mixed dimensions")
    classes = tuple(sorted({label for _, label in rows}))
    if len(classes) < 2:
        raise ValueError("one-vs-one SVM needs at least 2 classes")
    by_class: dict[str, list[SparseVector]] = {c: [] for c in classes}
    for vec, label in rows:
        by_class[label].append(vec)

    n_pairs = len(classes) * (len(classes) - 1) // 2
    weights = np.zeros((n_pairs, dimension), dtype=np.float64)
    bias = np.zeros(n_pairs, dtype=np.float64)
    pair_left = np.empty(n_pairs, dtype=np.int64)
    pair_right = np.empty(n_pairs, dtype=np.int64)
    for pid, (a, b) in enumerate(combinations(range(len(classes)), 2)):
        pair_left[pid] = a
        pair_right[pid] = b
        pair_rows = by_class[classes[a]] + by_class[classes[b]]
        y = [1] * len(by_class[classes[a]]) + [-1] * len(by_class[classes[b]])
        try:
            w, b0, _ = train_binary_svm(pair_rows, y, C=C, tol=tol, max_epochs=max_epochs, seed=pid + 1)
        except RuntimeError as exc:
            raise RuntimeError(f"pair ({classes[a]!r}, {classes[b]!r}): {exc}") from exc
        weights[pid] = w
        bias[pid] = b0
    for arr in (weights, bias, pair_left, pair_right):
        arr.setflags(write=False)
    return SVMModel(
        classes=classes,
        pair_left=pair_left,
        pair_right=pair_right,
        weights=weights,
        bias=bias,
        C=float(C),
        dimension=dimension,
    )


def predict_svm(model: SVMModel, v: SparseVector) -> Prediction:
    """Majority vote over pairwise hyperplanes.

    Primary score is the vote count; classes on equal votes are ordered by
    the sum of their signed margins against the other tied classes, then
    alphabetically.
    """
    if v.dimension != model.dimension:
        raise ValueError(f"vector dimension {v.dimension} != model dimension {model.dimension}")
    decisions = model.bias.copy()
    if v.nnz:
        decisions = decisions + model.weights[:, v.indices] @ v.values.astype(np.float64)
    winners = np.where(decisions >= 0.0, model.pair_left, model.pair_right)
    votes = np.bincount(winners, minlength=len(model.classes)).astype(np.float64)

    tie_margin = np.zeros(len(model.classes))
    groups: dict[float, list[int]] = {}
    for ci, count in enumerate(votes):
        groups.setdefault(float(count), []).append(ci)
    for group in groups.values():
        if len(group) < 2:
            continue
        for c in group:
            total = 0.0
            for d in group:
                if d == c:
                    continue
                left, right = (c, d) if c < d else (d, c)
                value = float(decisions[model.pair_id(left, right)])
                total += value if c == left else -value
            tie_margin[c] = total

    order = sorted(
        range(len(model.classes)),
        key=lambda ci: (-votes[ci], -tie_margin[ci], model.classes[ci]),
    )
    return Prediction(tuple((model.classes[ci], float(votes[ci])) for ci in order))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_model(model: MNBModel | SVMModel, path: str | Path) -> Path:
    """Write a model as versioned JSON; floats round-trip bit-exactly."""
    path = Path(path)
    if isinstance(model, MNBModel):
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "model_type": "mnb",
            "classes": list(model.classes),
            "dimension": model.dimension,
            "log_prior": model.log_prior.tolist(),
            "log_cond": model.log_cond.tolist(),
        }
    elif isinstance(model, SVMModel):
        pairs = []
        for pid in range(model.n_pairs):
            nz = np.flatnonzero(model.weights[pid])
            pairs.append(
                {
                    "left": int(model.pair_left[pid]),
                    "right": int(model.pair_right[pid]),
                    "bias": float(model.bias[pid]),
                    "indices": nz.tolist(),
                    "values": model.weights[pid, nz].tolist(),
                }
            )
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "model_type": "svm",
            "classes": list(model.classes),
            "dimension": model.dimension,
            "C": model.C,
            "pairs": pairs,
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")
    return path


def load_model(path: str | Path) -> MNBModel | SVMModel:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format version {version!r}")
    kind = payload.get("model_type")
    if kind == "mnb":
        log_prior = np.asarray(payload["log_prior"], dtype=np.float64)
        log_cond = np.asarray(payload["log_cond"], dtype=np.float64)
        log_prior.setflags(write=False)
        log_cond.setflags(write=False)
        return MNBModel(
            classes=tuple(payload["classes"]),
            log_prior=log_prior,
            log_cond=log_cond,
            dimension=int(payload["dimension"]),
        )
    if kind == "svm":
        classes = tuple(payload["classes"])
        dimension = int(payload["dimension"])
        pairs = payload["pairs"]
        weights = np.zeros((len(pairs), dimension), dtype=np.float64)
        bias = np.empty(len(pairs), dtype=np.float64)
        pair_left = np.empty(len(pairs), dtype=np.int64)
        pair_right = np.empty(len(pairs), dtype=np.int64)
        for pid, pair in enumerate(pairs):
            pair_left[pid] = pair["left"]
            pair_right[pid] = pair["right"]
            bias[pid] = pair["bias"]
            weights[pid, pair["indices"]] = pair["values"]
        for arr in (weights, bias, pair_left, pair_right):
            arr.setflags(write=False)
        return SVMModel(
            classes=classes,
            pair_left=pair_left,
            pair_right=pair_right,
            weights=weights,
            bias=bias,
            C=float(payload["C"]),
            dimension=dimension,
        )
    raise ValueError(f"{path}: unknown model type {kind!r}")
