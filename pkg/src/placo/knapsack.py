"""Exact 0/1 knapsack by depth-first branch and bound.

Items are visited in decreasing profit density; a node is pruned when the
fractional (LP-relaxation) bound of its remaining capacity cannot beat the
incumbent. Items with non-positive profit or weight above capacity can
never appear in an optimum and are dropped up front.
"""

from __future__ import annotations

import math
from typing import Sequence

_PRUNE_TOL = 1e-12


def solve_knapsack(profits: Sequence[float], weights: Sequence[float], capacity: float) -> tuple[tuple[int, ...], float]:
    """Return (chosen indices in ascending order, total profit).

    Weights must be positive. Feasibility is judged on the correctly rounded
    sum of the chosen weights, so ``math.fsum`` of the result never exceeds
    ``capacity``.
    """
    if len(profits) != len(weights):
        raise ValueError("profits and weights differ in length")
    items = [
        i for i in range(len(profits))
        if profits[i] > 0 and weights[i] <= capacity
    ]
    for i in items:
        if not weights[i] > 0:
            raise ValueError(f"weight of item {i} must be positive, got {weights[i]}")
    items.sort(key=lambda i: (-profits[i] / weights[i], i))
    p = [float(profits[i]) for i in items]
    w = [float(weights[i]) for i in items]
    n = len(items)

    best_value = 0.0
    best: list[int] = []
    chosen: list[int] = []
    chosen_w: list[float] = []

    def bound(level: int, value: float, room: float) -> float:
        for lv in range(level, n):
            if w[lv] <= room:
                room -= w[lv]
                value += p[lv]
            else:
                return value + p[lv] * room / w[lv]
        return value

    def visit(level: int, value: float) -> None:
        nonlocal best_value, best
        if value > best_value:
            best_value, best = value, list(chosen)
        if level == n:
            return
        used = math.fsum(chosen_w)
        if bound(level, value, capacity - used) <= best_value + _PRUNE_TOL:
            return
        if math.fsum(chosen_w + [w[level]]) <= capacity:
            chosen.append(level)
            chosen_w.append(w[level])
            visit(level + 1, value + p[level])
            chosen.pop()
            chosen_w.pop()
        visit(level + 1, value)

    visit(0, 0.0)
    picked = tuple(sorted(items[lv] for lv in best))
    return picked, math.fsum(profits[i] for i in picked)
