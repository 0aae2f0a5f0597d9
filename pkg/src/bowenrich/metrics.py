"""Recall metrics, error reduction, and the Wilcoxon signed-rank test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ConfusionTally",
    "PairedSample",
    "tally",
    "micro_recall",
    "macro_recall",
    "error_reduction",
    "wilcoxon_signed_rank",
    "EXACT_ENUMERATION_LIMIT",
]

EXACT_ENUMERATION_LIMIT = 20


@dataclass(frozen=True)
class ConfusionTally:
    """Per-class instance and true-positive counts for one evaluation run."""

    class_sizes: Mapping[str, int]
    true_positives: Mapping[str, int]
    total: int

    def __post_init__(self) -> None:
        if set(self.class_sizes) != set(self.true_positives):
            raise ValueError("class_sizes and true_positives must cover the same classes")
        for cls, size in self.class_sizes.items():
            tp = self.true_positives[cls]
            if not 0 <= tp <= size:
                raise ValueError(f"class {cls!r}: true positives {tp} outside [0, {size}]")
        if sum(self.class_sizes.values()) != self.total:
            raise ValueError("class sizes must sum to the total instance count")


def tally(
    gold: Sequence[Iterable[str]],
    predicted: Sequence[str],
    eval_class: Sequence[str],
) -> ConfusionTally:
    """Count instances and correct predictions per class.

    Each instance counts toward the class of its primary gold label
    (``eval_class``); a prediction is correct when it is any member of the
    instance's gold label set, so multi-label gold with a single prediction
    follows the one-of-the-correct-labels rule, and single-label gold reduces
    to plain equality.
    """
    if not (len(gold) == len(predicted) == len(eval_class)):
        raise ValueError(
            f"length mismatch: gold={len(gold)}, predicted={len(predicted)}, eval_class={len(eval_class)}"
        )
    sizes: dict[str, int] = {}
    tps: dict[str, int] = {}
    for gold_set, pred, cls in zip(gold, predicted, eval_class):
        sizes[cls] = sizes.get(cls, 0) + 1
        if pred in gold_set:
            tps[cls] = tps.get(cls, 0) + 1
    return ConfusionTally(
        class_sizes=sizes,
        true_positives={c: tps.get(c, 0) for c in sizes},
        total=len(gold),
    )


def micro_recall(t: ConfusionTally) -> float:
    """Aggregate recall: total true positives over total instances (equals accuracy)."""
    if t.total == 0:
        raise ValueError("empty tally")
    return sum(t.true_positives.values()) / t.total


def macro_recall(t: ConfusionTally) -> float:
    """Unweighted mean of per-class recalls over classes with at least one instance."""
    populated = [c for c, size in t.class_sizes.items() if size > 0]
    if not populated:
        raise ValueError("no populated class in tally")
    return sum(t.true_positives[c] / t.class_sizes[c] for c in populated) / len(populated)


def error_reduction(baseline: float, treatment: float) -> float:
    """Relative shrinkage of (1 - recall) from baseline to treatment, as a percentage."""
    if baseline >= 1.0:
        raise ValueError("error reduction is undefined for a perfect baseline")
    return 100.0 * (treatment - baseline) / (1.0 - baseline)


@dataclass(frozen=True)
class PairedSample:
    """Two aligned per-fold score lists (baseline, treatment)."""

    baseline: tuple[float, ...]
    treatment: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.baseline) != len(self.treatment):
            raise ValueError("paired samples must have equal length")
        if not self.baseline:
            raise ValueError("paired samples must be non-empty")

    def differences(self) -> np.ndarray:
        return np.asarray(self.treatment, dtype=np.float64) - np.asarray(
            self.baseline, dtype=np.float64
        )


def _doubled_average_ranks(magnitudes: np.ndarray) -> np.ndarray:
    """Average ranks of ``magnitudes``, doubled so ties stay exact integers.

    The average rank of a tie group spanning 1-based positions lo..hi is
    (lo+hi)/2, so its doubled value lo+hi is an exact integer.
    """
    order = np.argsort(magnitudes, kind="stable")
    doubled = np.empty(magnitudes.size, dtype=np.int64)
    start = 0
    while start < magnitudes.size:
        stop = start
        while stop + 1 < magnitudes.size and magnitudes[order[stop + 1]] == magnitudes[order[start]]:
            stop += 1
        doubled_rank = (start + 1) + (stop + 1)  # lo + hi, 1-based
        for pos in range(start, stop + 1):
            doubled[order[pos]] = doubled_rank
        start = stop + 1
    return doubled


def _exact_two_sided_p(doubled_ranks: np.ndarray, w_plus_doubled: int) -> float:
    """Exact p over all 2^n sign assignments, via a subset-sum count of rank sums."""
    max_sum = int(doubled_ranks.sum())
    counts = np.zeros(max_sum + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: max_sum + 1 - r]
        counts = counts + shifted
    total = 1 << doubled_ranks.size
    p_le = int(counts[: w_plus_doubled + 1].sum()) / total
    p_ge = int(counts[w_plus_doubled:].sum()) / total
    return min(1.0, 2.0 * min(p_le, p_ge))


def _normal_two_sided_p(doubled_ranks: np.ndarray, w_plus_doubled: int) -> float:
    """Normal approximation with tie correction and continuity correction."""
    n = doubled_ranks.size
    w_plus = w_plus_doubled / 2.0
    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(doubled_ranks, return_counts=True)
    tie_term = float(((tie_sizes**3) - tie_sizes).sum()) / 48.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    delta = w_plus - mean
    if delta != 0.0:
        delta -= 0.5 * math.copysign(1.0, delta)
    z = delta / math.sqrt(variance)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def wilcoxon_signed_rank(sample: PairedSample) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test on treatment-minus-baseline differences.

    Zero differences are discarded; absolute differences get average ranks on
    ties. Returns (W, p) where W is the positive-difference rank sum. The p is
    exact (full sign enumeration) up to ``EXACT_ENUMERATION_LIMIT`` remaining
    pairs, and a tie- and continuity-corrected normal approximation beyond.
    Raises when every difference is zero (the test carries no evidence).
    """
    diffs = sample.differences()
    nonzero = diffs[diffs != 0.0]
    if nonzero.size == 0:
        raise ValueError("all paired differences are zero; no evidence either way")
    doubled_ranks = _doubled_average_ranks(np.abs(nonzero))
    w_plus_doubled = int(doubled_ranks[nonzero > 0.0].sum())
    w_plus = w_plus_doubled / 2.0
    if nonzero.size <= EXACT_ENUMERATION_LIMIT:
        p = _exact_two_sided_p(doubled_ranks, w_plus_doubled)
    else:
        p = _normal_two_sided_p(doubled_ranks, w_plus_doubled)
    return w_plus, p
