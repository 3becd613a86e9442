"""Synthetic human populations, costs and budgets.

A simulated human with accuracy ``a`` answers the ground truth with
probability ``a``; otherwise it draws a wrong label in proportion to how
often the crowd chose it (``annotation_freqs``), or uniformly over the
wrong labels when the crowd was unanimous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import streams
from .domain import InstanceRecord, ValidationError, check_simplex

PRESET_SIZES = {"h5": 5, "h7": 7, "h10": 10, "h15": 15}
PRESET_RANGE = (0.3, 0.9)


def preset_accuracies(name: str) -> np.ndarray:
    """Evenly spaced accuracies over 0.3..0.9 for a named pool size."""
    try:
        n = PRESET_SIZES[name]
    except KeyError:
        raise ValidationError(
            f"unknown preset {name!r}; choose from {sorted(PRESET_SIZES)}", "preset"
        ) from None
    return np.linspace(*PRESET_RANGE, n)


@dataclass(frozen=True)
class PopulationConfig:
    accuracies: tuple[float, ...]
    k: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "accuracies", tuple(float(a) for a in self.accuracies))
        if self.k < 2:
            raise ValidationError(f"need at least 2 classes, got {self.k}", "k")
        if not self.accuracies or any(not 0 <= a <= 1 for a in self.accuracies):
            raise ValidationError("accuracies must be non-empty and lie in [0, 1]", "accuracies")

    @property
    def size(self) -> int:
        return len(self.accuracies)


def error_distribution(g, y: int) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    k = g.size
    p = np.where(np.arange(k) == y, 0.0, g)
    rest = p.sum()
    if g[y] == 1 or rest <= 0:
        p = np.full(k, 1.0 / (k - 1))
        p[y] = 0.0
        return p
    return p / rest


def error_distributions(g: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise ``error_distribution`` for (N, K) frequencies and (N,) truths."""
    g = np.asarray(g, dtype=float)
    n, k = g.shape
    rows = np.arange(n)
    p = g.copy()
    p[rows, y] = 0.0
    rest = p.sum(axis=1)
    uniform = (g[rows, y] == 1) | (rest <= 0)
    p[~uniform] /= rest[~uniform, None]
    p[uniform] = 1.0 / (k - 1)
    p[rows[uniform], y[uniform]] = 0.0
    return p


def _inverse_cdf(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(p, axis=-1)
    cdf = cdf / cdf[..., -1:]
    return (u[..., None] >= cdf).sum(axis=-1)


def synth_label_from_uniforms(g, y, a: float, u_correct, u_error) -> np.ndarray:
    """Hard labels from two uniforms per instance; vectorised over rows of ``g``."""
    g = np.atleast_2d(np.asarray(g, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    wrong = _inverse_cdf(error_distributions(g, y), np.atleast_1d(u_error))
    return np.where(np.atleast_1d(u_correct) < a, y, wrong)


def synth_label(g, y: int, a: float, rng: np.random.Generator) -> int:
    if not 0 <= a <= 1:
        raise ValidationError(f"accuracy {a} outside [0, 1]", "a")
    return int(synth_label_from_uniforms(g, y, a, rng.random(), rng.random())[0])


def synth_population_labels(
    ids: Sequence[str], g: np.ndarray, y: np.ndarray, accuracies: Sequence[float], seed: int
) -> np.ndarray:
    """(N, n) hard labels; entry (x, i) depends only on (seed, id of x, i)."""
    keys = streams.instance_keys(ids)
    out = np.empty((len(ids), len(accuracies)), dtype=np.int64)
    for i, a in enumerate(accuracies):
        u1 = streams.keyed_uniform(seed, streams.HUMAN_CORRECT, keys, i)
        u2 = streams.keyed_uniform(seed, streams.HUMAN_ERROR, keys, i)
        out[:, i] = synth_label_from_uniforms(g, y, a, u1, u2)
    return out


def sample_costs(n: int, k: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform costs on the open interval (0, k)."""
    if n < 1:
        raise ValidationError(f"pool size must be >= 1, got {n}", "n")
    c = rng.uniform(0, k, n)
    while np.any(bad := (c <= 0) | (c >= k)):
        c[bad] = rng.uniform(0, k, int(bad.sum()))
    return c


def compute_budget(n: int, k: int, fraction: float = 0.05) -> float:
    if n < 1 or k < 2:
        raise ValidationError(f"need n >= 1 and k >= 2, got n={n}, k={k}", "budget")
    return fraction * n * k


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for ``synthetic_dataset``.

    ``crowd_size`` raw annotators per instance produce ``annotation_freqs``;
    each is right with an instance-level probability drawn from
    Beta(``crowd_a``, ``crowd_b``), and wrong answers follow a fixed
    per-class confusion profile so errors have structure.
    """

    n: int = 3000
    k: int = 10
    model_accuracy: float = 0.56
    crowd_size: int = 50
    crowd_a: float = 6.0
    crowd_b: float = 1.5
    logit_scale: float = 1.0
    true_class_bonus: float = 1.0
    margin_scale: float = 1.0
    seed: int = 0
    confusion_concentration: float = field(default=0.5)


def synthetic_dataset(spec: SyntheticSpec = SyntheticSpec()) -> list[InstanceRecord]:
    """Instances with ground truth, model probabilities and crowd frequencies.

    The model's top-1 class is the truth with probability
    ``model_accuracy`` and a uniformly chosen wrong class otherwise; the
    truth keeps a logit bonus so wrong predictions still carry signal.
    """
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n, spec.k
    y = rng.integers(0, k, n)

    top = y.copy()
    miss = rng.random(n) >= spec.model_accuracy
    shift = rng.integers(1, k, n)
    top[miss] = (y[miss] + shift[miss]) % k
    z = rng.normal(0.0, spec.logit_scale, (n, k))
    z[np.arange(n), y] += spec.true_class_bonus
    z[np.arange(n), top] = z.max(axis=1) + rng.exponential(spec.margin_scale, n)
    m = np.exp(z - z.max(axis=1, keepdims=True))
    m /= m.sum(axis=1, keepdims=True)

    confusable = rng.dirichlet(np.full(k - 1, spec.confusion_concentration), size=k)
    q = rng.beta(spec.crowd_a, spec.crowd_b, n)
    g = np.empty((n, k))
    for x in range(n):
        wrong = np.insert(confusable[y[x]], y[x], 0.0)
        p = (1 - q[x]) * wrong
        p[y[x]] = q[x]
        g[x] = rng.multinomial(spec.crowd_size, p / p.sum()) / spec.crowd_size

    width = len(str(n - 1))
    return [
        InstanceRecord(
            id=f"syn{x:0{width}d}",
            ground_truth=int(y[x]),
            model_probs=check_simplex(m[x]),
            annotation_freqs=g[x],
        )
        for x in range(n)
    ]
