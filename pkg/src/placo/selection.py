"""Choosing which humans to ask on an instance.

Three selectors:

``placo_greedy``
    y* over the full pool, then every human whose value at y* exceeds 1;
    the single best human if nobody does. Only the selected humans are paid.
``pseudo_lb_select``
    Same threshold rule on true-label odds ratios, maximised jointly over
    the candidate label. Needs every human's true label, so the whole pool
    is paid.
``placo_lp_select``
    Budgeted 0/1 knapsack over log-values at y*.

``exhaustive_oracle`` enumerates subsets and exists to check the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import (
    EmptyPoolError,
    HumanProfile,
    SelectionOutcome,
    ValidationError,
    check_label,
    clamp_phi,
)
from .knapsack import solve_knapsack
from .valuation import ValueParams, value_table, y_star_from_values


class MissingTrueLabels(ValidationError):
    pass


class PoolTooLarge(ValueError):
    pass


ORACLE_MAX_POOL = 20


def _cost(profiles: Sequence[HumanProfile], selected) -> float:
    return math.fsum(profiles[i].cost for i in selected)


def threshold_subset(values: np.ndarray) -> tuple[tuple[int, ...], bool]:
    """Maximiser of the product of ``values`` over non-empty subsets.

    Returns (subset, used_fallback).
    """
    chosen = tuple(int(i) for i in np.flatnonzero(values > 1))
    if chosen:
        return chosen, False
    return (int(np.argmax(values)),), True


def placo_greedy(profiles: Sequence[HumanProfile], h_labels, params: ValueParams = ValueParams()) -> SelectionOutcome:
    if len(profiles) == 0:
        raise EmptyPoolError("cannot select from an empty pool")
    table = value_table(profiles, h_labels, params)
    y_star = int(y_star_from_values(table))
    values = table[:, y_star]
    selected, fb = threshold_subset(values)
    return SelectionOutcome(selected, y_star, values, _cost(profiles, selected), fb)


def odds_ratio_table(profiles: Sequence[HumanProfile], t_labels) -> np.ndarray:
    """Clamped ``phi[t_i, j] / (1 - phi[t_i, j])`` for every human and label, (n, K)."""
    if t_labels is None or len(t_labels) != len(profiles) or any(t is None for t in t_labels):
        raise MissingTrueLabels("pseudo LB needs the true label of every human", "t_labels")
    rows = []
    for p, t in zip(profiles, t_labels):
        if t < 0:
            raise MissingTrueLabels("pseudo LB needs the true label of every human", "t_labels")
        phi = clamp_phi(p.phi.entries[check_label(t, p.k, "t_labels")])
        rows.append(phi / (1 - phi))
    return np.array(rows)


def _best_label_subset(log_r: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    """For log ratios (..., n, K): best label, its objective, and the chosen mask."""
    pos = log_r > 0
    any_pos = pos.any(axis=-2)
    obj = np.where(any_pos, np.where(pos, log_r, 0.0).sum(axis=-2), log_r.max(axis=-2))
    j = np.argmax(obj, axis=-1)
    return j, obj, pos


def pseudo_lb_select(profiles: Sequence[HumanProfile], t_labels) -> SelectionOutcome:
    if len(profiles) == 0:
        raise EmptyPoolError("cannot select from an empty pool")
    ratios = odds_ratio_table(profiles, t_labels)
    j = int(_best_label_subset(np.log(ratios))[0])
    selected, fb = threshold_subset(ratios[:, j])
    total = _cost(profiles, range(len(profiles)))
    return SelectionOutcome(selected, j, ratios[:, j], total, fb)


def placo_lp_select(
    profiles: Sequence[HumanProfile],
    h_labels,
    params: ValueParams = ValueParams(),
    budget: float = math.inf,
) -> SelectionOutcome:
    """Budgeted selection; ``budget`` may be a float or a ``BudgetSpec``."""
    if len(profiles) == 0:
        raise EmptyPoolError("cannot select from an empty pool")
    budget = float(getattr(budget, "budget", budget))
    table = value_table(profiles, h_labels, params)
    y_star = int(y_star_from_values(table))
    values = table[:, y_star]
    costs = [p.cost for p in profiles]
    selected, _ = solve_knapsack(np.log(values).tolist(), costs, budget)
    fb = False
    if not selected:
        fb = True
        affordable = [i for i, c in enumerate(costs) if c <= budget]
        if affordable:
            selected = (max(affordable, key=lambda i: (values[i], -i)),)
    return SelectionOutcome(selected, y_star, values, _cost(profiles, selected), fb)


@dataclass(frozen=True)
class BudgetSpec:
    budget: float

    def __post_init__(self):
        if not self.budget > 0:
            raise ValidationError(f"budget must be positive, got {self.budget}", "budget")


def exhaustive_oracle(values, costs=None, budget: Optional[float] = None) -> tuple[int, ...]:
    """Log-product maximiser by enumeration; ties go to the lexicographically smallest subset.

    Without a budget only non-empty subsets are considered; with one the
    empty subset is allowed and subsets over budget are excluded.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    if n > ORACLE_MAX_POOL:
        raise PoolTooLarge(f"oracle enumerates at most {ORACLE_MAX_POOL} humans, got {n}")
    masks = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(bool)
    obj = masks.astype(float) @ np.log(v)
    ok = np.ones(2**n, dtype=bool)
    if budget is None:
        ok[0] = False
    else:
        c = np.asarray(costs, dtype=float)
        spend = masks.astype(float) @ c
        ok = spend <= budget
        # settle rounding at the boundary with correctly rounded sums
        edge = np.flatnonzero(np.abs(spend - budget) <= 1e-9 * max(1.0, abs(budget)))
        for e in edge:
            ok[e] = math.fsum(c[masks[e]]) <= budget
    obj = np.where(ok, obj, -np.inf)
    best = obj.max()
    ties = [tuple(int(i) for i in np.flatnonzero(masks[b])) for b in np.flatnonzero(obj == best)]
    return min(ties)


# Batched forms used by the harness. ``values`` arrays are (N, n, K).

def greedy_batch(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(y_star (N,), selected mask (N, n), values at y_star (N, n))."""
    y_star = y_star_from_values(values)
    v = np.take_along_axis(values, y_star[:, None, None], axis=2)[:, :, 0]
    mask = v > 1
    empty = ~mask.any(axis=1)
    mask[empty, np.argmax(v[empty], axis=1)] = True
    return y_star, mask, v


def pseudo_lb_batch(profiles: Sequence[HumanProfile], t_labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(best label (N,), selected mask (N, n), ratios at best label (N, n))."""
    t = np.asarray(t_labels, dtype=np.int64)
    if np.any(t < 0):
        raise MissingTrueLabels("pseudo LB needs the true label of every human", "t_labels")
    log_r = np.empty(t.shape + (profiles[0].k,))
    for i, p in enumerate(profiles):
        phi = clamp_phi(p.phi.entries[t[:, i]])
        log_r[:, i, :] = np.log(phi / (1 - phi))
    j, _, pos = _best_label_subset(log_r)
    lr = np.take_along_axis(log_r, j[:, None, None], axis=2)[:, :, 0]
    mask = np.take_along_axis(pos, j[:, None, None], axis=2)[:, :, 0].copy()
    empty = ~mask.any(axis=1)
    mask[empty, np.argmax(lr[empty], axis=1)] = True
    return j, mask, np.exp(lr)


def lp_batch(values: np.ndarray, costs: Sequence[float], budget: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    y_star = y_star_from_values(values)
    v = np.take_along_axis(values, y_star[:, None, None], axis=2)[:, :, 0]
    logv = np.log(v)
    costs = [float(c) for c in costs]
    affordable = np.array([c <= budget for c in costs])
    mask = np.zeros(v.shape, dtype=bool)
    for r in range(v.shape[0]):
        sel, _ = solve_knapsack(logv[r].tolist(), costs, budget)
        if sel:
            mask[r, list(sel)] = True
        elif affordable.any():
            mask[r, int(np.argmax(np.where(affordable, v[r], -np.inf)))] = True
    return y_star, mask, v
