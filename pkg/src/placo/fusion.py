"""Bayesian combination of elicited human labels with the model.

Humans are conditionally independent given the truth, so

    P(y = j | labels, m) ∝ m_j * prod_i phi_i[t_i, j]

accumulated in log space. Confusion entries are clamped away from 0 and 1
so one human cannot annihilate a class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import HumanProfile, as_array, check_label, check_simplex, clamp_phi


class DegeneratePosterior(ValueError):
    pass


@dataclass(frozen=True)
class CombinedPrediction:
    posterior: np.ndarray
    label: int


def _normalise_log(logp: np.ndarray) -> np.ndarray:
    top = logp.max(axis=-1, keepdims=True)
    if np.any(~np.isfinite(top)):
        raise DegeneratePosterior("every class has zero mass after combination")
    p = np.exp(logp - top)
    return p / p.sum(axis=-1, keepdims=True)


def combine(m, elicited: Sequence[tuple[HumanProfile, int]]) -> CombinedPrediction:
    m = check_simplex(as_array(m), "m")
    if not elicited:
        post = m.copy()
        return CombinedPrediction(post, int(np.argmax(post)))
    with np.errstate(divide="ignore"):
        logp = np.log(m)
    for profile, label in elicited:
        label = check_label(label, m.size, "label")
        logp = logp + np.log(clamp_phi(profile.phi.entries[label]))
    post = _normalise_log(logp)
    return CombinedPrediction(post, int(np.argmax(post)))


def combine_single(m, phi, label: int) -> np.ndarray:
    """Single-human rule written out directly (no log space, no clamping)."""
    m = as_array(m)
    row = as_array(phi)[label]
    return m * row / np.sum(m * row)


def combine_batch(m: np.ndarray, profiles: Sequence[HumanProfile], labels: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Posteriors for N instances from the humans flagged in ``mask`` (N, n).

    ``labels`` may hold placeholders where ``mask`` is False; they are
    never looked at. Rows with no selected human return ``m`` unchanged.
    """
    m = np.asarray(m, dtype=float)
    with np.errstate(divide="ignore"):
        logp = np.log(m)
    for i, p in enumerate(profiles):
        rows = np.flatnonzero(mask[:, i])
        if rows.size:
            logp[rows] += np.log(clamp_phi(p.phi.entries[labels[rows, i]]))
    post = m.copy()
    used = mask.any(axis=1)
    if used.any():
        post[used] = _normalise_log(logp[used])
    return post
