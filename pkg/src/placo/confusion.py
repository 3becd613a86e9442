"""Per-human confusion matrices from labelled training pairs.

Each column of the matrix gets its own Dirichlet prior with ``gamma`` on
the diagonal and ``beta`` elsewhere; the estimate is the posterior mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import ConfusionMatrix, HumanProfile, ValidationError, check_label


class EmptyTrainingData(ValueError):
    pass


@dataclass(frozen=True)
class DirichletPrior:
    beta: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if not (self.beta > 0 and self.gamma > 0):
            raise ValidationError(
                f"Dirichlet prior needs beta, gamma > 0 (got {self.beta}, {self.gamma})", "prior"
            )

    def alpha(self, k: int) -> np.ndarray:
        """K x K pseudo-count matrix; column t is the prior of column t."""
        a = np.full((k, k), float(self.beta))
        np.fill_diagonal(a, self.gamma)
        return a

    def mean(self, k: int) -> np.ndarray:
        a = self.alpha(k)
        return a / a.sum(axis=0, keepdims=True)


def zero_counts(k: int) -> np.ndarray:
    return np.zeros((k, k), dtype=np.int64)


def accumulate(counts: np.ndarray, human_label: int, truth: int) -> np.ndarray:
    """Return a copy of ``counts`` with cell (human_label, truth) incremented."""
    k = counts.shape[0]
    s = check_label(human_label, k, "human_label")
    t = check_label(truth, k, "truth")
    out = np.array(counts, copy=True)
    out[s, t] += 1
    return out


def count_pairs(human_labels, truths, k: int) -> np.ndarray:
    """Vectorised accumulate over many pairs."""
    h = np.asarray(human_labels, dtype=np.int64)
    t = np.asarray(truths, dtype=np.int64)
    if h.shape != t.shape:
        raise ValidationError("human_labels and truths differ in length", "pairs")
    if h.size and (h.min() < 0 or t.min() < 0 or h.max() >= k or t.max() >= k):
        raise ValidationError(f"labels outside [0, {k})", "pairs")
    return np.bincount(h * k + t, minlength=k * k).reshape(k, k)


def estimate_confusion(counts: np.ndarray, prior: DirichletPrior = DirichletPrior()) -> ConfusionMatrix:
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise ValidationError("counts must be non-negative", "counts")
    post = counts + prior.alpha(counts.shape[0])
    return ConfusionMatrix(post / post.sum(axis=0, keepdims=True))


def estimate_accuracy(pairs: Iterable[tuple[int, int]]) -> float:
    pairs = list(pairs)
    if not pairs:
        raise EmptyTrainingData("cannot estimate accuracy from an empty training split")
    return sum(1 for s, t in pairs if s == t) / len(pairs)


def fit_profile(
    human_id: int,
    human_labels: Sequence[int],
    truths: Sequence[int],
    k: int,
    cost: float,
    prior: DirichletPrior = DirichletPrior(),
) -> HumanProfile:
    """Confusion matrix plus accuracy for one human.

    With no training pairs the accuracy falls back to the mean diagonal of
    the (prior-only) estimate.
    """
    counts = count_pairs(human_labels, truths, k)
    phi = estimate_confusion(counts, prior)
    n = int(counts.sum())
    if n:
        accuracy = float(np.trace(counts)) / n
    else:
        accuracy = float(np.mean(np.diag(phi.entries)))
    return HumanProfile(id=human_id, phi=phi, accuracy=accuracy, cost=cost)
