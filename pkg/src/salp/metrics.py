"""Evaluation arithmetic: Cohen's kappa, propagation accuracy, confusion matrices.

Kappa is computed in the integer-cancelled form

    kappa = (n * agree - sum_c row_c * col_c) / (n^2 - sum_c row_c * col_c)

with exact Python integer arithmetic and a single final float division, so the
list-based and matrix-based paths agree bitwise and small hand cases come out
exact. This is algebraically identical to (p_o - p_e) / (1 - p_e) with
p_o = trace/n and p_e = sum_c row_c * col_c / n^2.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .validation import check_matching_lengths


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts of (true, predicted) label pairs; rows = truth, columns = prediction."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if not issubclass(counts.dtype.type, np.integer):
            raise ValueError("confusion matrix must hold integers")
        if (counts < 0).any():
            raise ValueError("confusion matrix entries must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def n_labels(self) -> int:
        return self.counts.shape[0]


def confusion(truth, pred, n_labels: int | None = None) -> ConfusionMatrix:
    """Tally a confusion matrix; labels must lie in [0, n_labels)."""
    check_matching_lengths(truth, pred)
    truth = np.asarray(truth, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if truth.size == 0:
        raise ValueError("cannot build a confusion matrix from empty inputs")
    if n_labels is None:
        n_labels = int(max(truth.max(), pred.max())) + 1
    if truth.min() < 0 or pred.min() < 0 or truth.max() >= n_labels or pred.max() >= n_labels:
        raise ValueError(f"labels out of declared range [0, {n_labels})")
    counts = np.zeros((n_labels, n_labels), dtype=np.int64)
    np.add.at(counts, (truth, pred), 1)
    return ConfusionMatrix(counts)


def _kappa_from_tallies(n: int, agree: int, marginal_product_sum: int) -> float:
    numerator = n * agree - marginal_product_sum
    denominator = n * n - marginal_product_sum
    if denominator == 0:
        # both annotators constant and equal: agreement is total by construction
        return 1.0
    return numerator / denominator


def cohens_kappa(truth, pred) -> float:
    """Chance-corrected agreement between two equal-length label sequences."""
    check_matching_lengths(truth, pred)
    n = len(truth)
    if n == 0:
        raise ValueError("cannot compute kappa on empty inputs")
    agree = sum(1 for t, p in zip(truth, pred) if t == p)
    row_counts = Counter(int(t) for t in truth)
    col_counts = Counter(int(p) for p in pred)
    marginal_product_sum = sum(row_counts[lab] * col_counts.get(lab, 0) for lab in row_counts)
    return _kappa_from_tallies(n, agree, marginal_product_sum)


def kappa_from_confusion(cm: ConfusionMatrix) -> float:
    """Same statistic computed from a prebuilt confusion matrix."""
    counts = cm.counts
    n = int(counts.sum())
    if n == 0:
        raise ValueError("cannot compute kappa on an empty confusion matrix")
    agree = int(np.trace(counts))
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    marginal_product_sum = int(np.dot(rows, cols))
    return _kappa_from_tallies(n, agree, marginal_product_sum)


def propagation_accuracy(truth: dict[int, int], propagated: dict[int, int]) -> float:
    """Correctly propagated labels over ALL ids in ``truth`` (the unsupervised set).

    Ids missing from ``propagated`` (abstained) count against the score; ids
    outside ``truth`` are rejected.
    """
    if not truth:
        raise ValueError("truth map is empty")
    stray = set(propagated) - set(truth)
    if stray:
        raise ValueError(f"propagated id {min(stray)} is outside the unsupervised set")
    correct = sum(1 for i, lab in propagated.items() if truth[i] == lab)
    return correct / len(truth)
