"""Predicting the label each human would give, without asking them.

The posterior method marginalises the human's confusion matrix over the
model's class probabilities. Max-Max, Random and Top-K are the naive
baselines. Every argmax resolves ties to the smallest index.

Scalar functions take a ``numpy.random.Generator``; the ``*_batch``
variants take pre-drawn uniforms so the harness can key randomness per
(instance, human).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import DimensionMismatch, ValidationError, as_array


class InvalidTopK(ValidationError):
    pass


@dataclass(frozen=True)
class EstimatedLabels:
    labels: np.ndarray
    posteriors: Optional[np.ndarray] = None


def posterior_estimate(phi, m) -> tuple[int, np.ndarray]:
    """Most probable given label and the full distribution ``P(t = l | m)``."""
    phi = as_array(phi)
    m = as_array(m)
    if phi.shape != (m.size, m.size):
        raise DimensionMismatch(f"phi {phi.shape} does not match m of length {m.size}", "phi")
    post = phi @ m
    return int(np.argmax(post)), post


def posterior_estimate_batch(phi, m: np.ndarray) -> np.ndarray:
    """Posterior labels of one human on every row of ``m`` (N x K)."""
    return np.argmax(m @ as_array(phi).T, axis=1)


def max_max_estimate(phi) -> int:
    phi = as_array(phi)
    return int(np.argmax(phi.max(axis=1)))


def _uniform_index(u, n: int):
    return np.minimum((np.asarray(u) * n).astype(np.int64), n - 1)


def random_estimate(k: int, rng: np.random.Generator) -> int:
    if k < 1:
        raise ValidationError(f"class count must be >= 1, got {k}", "k")
    return int(_uniform_index(rng.random(), k))


def random_estimate_batch(k: int, u: np.ndarray) -> np.ndarray:
    return _uniform_index(u, k)


def top_k_indices(m: np.ndarray, k_top: int) -> np.ndarray:
    """Indices of the ``k_top`` largest entries of each row, ties by index."""
    m = np.atleast_2d(m)
    if not 1 <= k_top <= m.shape[-1]:
        raise InvalidTopK(f"k_top={k_top} outside [1, {m.shape[-1]}]", "k_top")
    return np.argsort(-m, axis=-1, kind="stable")[..., :k_top]


def top_k_estimate(phi, m, k_top: int, rng: np.random.Generator) -> int:
    phi = as_array(phi)
    m = as_array(m)
    cand = top_k_indices(m, k_top)[0]
    y1 = cand[_uniform_index(rng.random(), k_top)]
    return int(np.argmax(phi[:, y1]))


def top_k_estimate_batch(phi, m: np.ndarray, k_top: int, u: np.ndarray) -> np.ndarray:
    phi = as_array(phi)
    cand = top_k_indices(m, k_top)
    y1 = cand[np.arange(cand.shape[0]), _uniform_index(u, k_top)]
    return np.argmax(phi, axis=0)[y1]


def estimation_match(estimated, truth: Sequence[int]) -> float:
    """Fraction of positions where the estimated label equals the true one."""
    est = np.asarray(estimated.labels if isinstance(estimated, EstimatedLabels) else estimated)
    truth = np.asarray(truth)
    if est.shape != truth.shape:
        raise DimensionMismatch(f"length mismatch: {est.shape} vs {truth.shape}", "truth")
    if est.size == 0:
        raise ValidationError("estimation match of an empty set is undefined", "truth")
    return float(np.mean(est == truth))
