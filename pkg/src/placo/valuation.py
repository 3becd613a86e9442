"""Per-human values from estimated labels.

A human's value for candidate label ``j`` is a lower bound on their odds
ratio ``phi[t, j] / (1 - phi[t, j])`` obtained from the estimated label
``h`` instead of the unknown true label. With ``s = phi[h, j] + 2 * a``
(``a`` the smallest diagonal entry):

* accuracy < 0.5            -> epsilon
* s <= 1                    -> epsilon
* s >= 2                    -> v_max
* 1 < s < 2                 -> (s - 1) / (2 - s)

Products of values are taken as sums of logs throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import EmptyPoolError, HumanProfile, ValidationError, as_array, check_label


@dataclass(frozen=True)
class ValueParams:
    v_max: float = 1e9
    epsilon: float = 1e-9

    def __post_init__(self):
        if not 0 < self.epsilon < 1 < self.v_max:
            raise ValidationError(
                f"need 0 < epsilon < 1 < v_max, got epsilon={self.epsilon}, v_max={self.v_max}",
                "value_params",
            )


def lemma1_bounds(phi) -> tuple[float, float]:
    """Range of ``phi[t, y] - phi[h, y]`` claimed for an ideal human: (2a - 1, A)."""
    d = np.diag(as_array(phi))
    return 2 * float(d.min()) - 1, float(d.max())


def _piecewise(s, gated, params: ValueParams):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        mid = (s - 1) / (2 - s)
    v = np.where(s >= 2, params.v_max, np.where(s <= 1, params.epsilon, mid))
    return np.where(gated, v, params.epsilon)


def human_value(profile: HumanProfile, h_label: int, j: int, params: ValueParams = ValueParams()) -> float:
    k = profile.k
    h_label = check_label(h_label, k, "h_label")
    j = check_label(j, k, "j")
    s = profile.phi.entries[h_label, j] + 2 * profile.diag_min
    return float(_piecewise(s, profile.accuracy >= 0.5, params))


def value_table(profiles: Sequence[HumanProfile], h_labels, params: ValueParams = ValueParams()) -> np.ndarray:
    """Values of every human for every candidate label, shape (n, K)."""
    h = np.asarray(h_labels, dtype=np.int64)
    if len(profiles) != h.size:
        raise ValidationError("h_labels must have one entry per human", "h_labels")
    rows = []
    for p, hl in zip(profiles, h):
        check_label(hl, p.k, "h_labels")
        rows.append(_piecewise(p.phi.entries[hl] + 2 * p.diag_min, p.accuracy >= 0.5, params))
    return np.array(rows)


def value_table_batch(profiles: Sequence[HumanProfile], h_labels: np.ndarray, params: ValueParams = ValueParams()) -> np.ndarray:
    """As ``value_table`` for N instances; ``h_labels`` is (N, n), result (N, n, K)."""
    h = np.asarray(h_labels, dtype=np.int64)
    out = np.empty(h.shape + (profiles[0].k,))
    for i, p in enumerate(profiles):
        out[:, i, :] = _piecewise(p.phi.entries[h[:, i]] + 2 * p.diag_min, p.accuracy >= 0.5, params)
    return out


def y_star_from_values(values: np.ndarray) -> np.ndarray:
    """argmax_j of sum_i log V[..., i, j]; works for (n, K) or (N, n, K)."""
    return np.argmax(np.log(values).sum(axis=-2), axis=-1)


def select_y_star(profiles: Sequence[HumanProfile], h_labels, params: ValueParams = ValueParams()) -> int:
    if len(profiles) == 0:
        raise EmptyPoolError("y* needs at least one human")
    return int(y_star_from_values(value_table(profiles, h_labels, params)))
