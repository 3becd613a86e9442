"""End-to-end experiment: synthesise humans, fit, select, elicit, fuse, score.

For every seed the records are shuffled once, the test set is everything
after the largest training prefix, and each training size uses the
corresponding prefix, so learning curves share one test set per seed.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import streams
from ..confusion import DirichletPrior, fit_profile
from ..domain import HumanProfile, InstanceRecord, ValidationError
from ..estimation import (
    max_max_estimate,
    posterior_estimate_batch,
    random_estimate_batch,
    top_k_estimate_batch,
)
from ..fusion import combine_batch
from ..selection import greedy_batch, lp_batch, pseudo_lb_batch
from ..synthpop import compute_budget, preset_accuracies, sample_costs, synth_population_labels
from ..valuation import ValueParams, value_table_batch
from .io import atomic_write, csv_text, load_dataset

STRATEGIES = ("pseudo-lb", "placo-greedy", "placo-lp")
ESTIMATORS = ("posterior", "max-max", "top-k", "random")
DEFAULT_TRAIN_SIZES = (100, 250, 500, 1000, 2500, 5000)
MODEL_ONLY = "model"
DEFAULT_TOP_K = 3
_COST_STREAM = 11


class InvalidTrainSize(ValidationError):
    pass


def split(records: Sequence, train_size: int, seed: int) -> tuple[list, list]:
    """Seeded shuffle, then the first ``train_size`` records train and the rest test."""
    n = len(records)
    if not 0 < train_size < n:
        raise InvalidTrainSize(f"train_size must be in (0, {n}), got {train_size}", "train_size")
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [records[i] for i in order]
    return shuffled[:train_size], shuffled[train_size:]


def pool_costs(n: int, k: int, seed: int) -> np.ndarray:
    """Per-run human costs; fixed across instances within a seed."""
    return sample_costs(n, k, np.random.default_rng([seed, _COST_STREAM]))


@dataclass
class ExperimentConfig:
    dataset: Optional[str] = None
    k: int = 10
    preset: Optional[str] = "h10"
    accuracies: Optional[tuple[float, ...]] = None
    beta: float = 1.0
    gamma: float = 2.0
    v_max: float = 1e9
    epsilon: float = 1e-9
    top_k: Optional[int] = None
    train_sizes: tuple[int, ...] = DEFAULT_TRAIN_SIZES
    budget_fraction: float = 0.05
    seeds: tuple[int, ...] = tuple(range(10))
    strategies: tuple[str, ...] = STRATEGIES
    output_dir: Optional[str] = None
    audit: bool = True

    def __post_init__(self):
        if self.accuracies is not None:
            self.accuracies = tuple(float(a) for a in self.accuracies)
        self.train_sizes = tuple(int(t) for t in self.train_sizes)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.strategies = tuple(self.strategies)
        if not self.seeds:
            raise ValidationError("at least one seed is required", "seeds")
        if not self.train_sizes or min(self.train_sizes) <= 0:
            raise ValidationError("training sizes must be positive", "train_sizes")
        bad = set(self.strategies) - set(STRATEGIES)
        if bad:
            raise ValidationError(f"unknown strategies {sorted(bad)}; choose from {STRATEGIES}", "strategies")
        if self.top_k is None:
            self.top_k = min(DEFAULT_TOP_K, self.k)
        if not 1 <= self.top_k <= self.k:
            raise ValidationError(f"top_k={self.top_k} outside [1, {self.k}]", "top_k")
        if not self.budget_fraction > 0:
            raise ValidationError("budget fraction must be positive", "budget_fraction")
        self.prior
        self.value_params

    @property
    def prior(self) -> DirichletPrior:
        return DirichletPrior(self.beta, self.gamma)

    @property
    def value_params(self) -> ValueParams:
        return ValueParams(self.v_max, self.epsilon)

    def human_accuracies(self) -> tuple[float, ...]:
        if self.accuracies is not None:
            return self.accuracies
        if self.preset is None:
            raise ValidationError("give either a preset or explicit accuracies", "preset")
        return tuple(float(a) for a in preset_accuracies(self.preset))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}", "config")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


class LabelOracle:
    """Holds the test humans' true labels and counts every read.

    ``reveal(mask)`` returns labels where ``mask`` is set and -1 elsewhere.
    """

    def __init__(self, labels: np.ndarray):
        self._labels = np.asarray(labels)
        self.reads = np.zeros(self._labels.shape, dtype=np.int64)

    def reveal(self, mask: np.ndarray) -> np.ndarray:
        mask = np.asarray(mask, dtype=bool)
        self.reads += mask
        return np.where(mask, self._labels, -1)

    def reveal_all(self) -> np.ndarray:
        return self.reveal(np.ones(self._labels.shape, dtype=bool))

    def unselected_reads(self, selected: np.ndarray) -> int:
        return int(self.reads[~np.asarray(selected, dtype=bool)].sum())


@dataclass
class RunMetrics:
    estimation_rows: list = field(default_factory=list)
    learning_rows: list = field(default_factory=list)
    tradeoff_rows: list = field(default_factory=list)
    audit_rows: list = field(default_factory=list)
    costs: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    unselected_reads: dict = field(default_factory=dict)
    train_sizes: list = field(default_factory=list)

    def per_seed(self, rows: str, name: str, metric: str, train_size: int) -> dict[int, float]:
        return {
            seed: value
            for (n, ts, seed, met, value) in getattr(self, rows)
            if n == name and ts == train_size and met == metric and isinstance(seed, int)
        }

    def mean(self, rows: str, name: str, metric: str, train_size: int) -> float:
        vals = list(self.per_seed(rows, name, metric, train_size).values())
        return math.fsum(vals) / len(vals)


def _exact_mean(values) -> float:
    values = list(values)
    return float(sum(map(Fraction, values), Fraction(0)) / len(values))


def _summarise(rows: list) -> list:
    """Append mean and std rows across seeds for each (name, train_size, metric)."""
    groups: dict = {}
    for name, ts, seed, metric, value in rows:
        groups.setdefault((name, ts, metric), []).append(value)
    out = []
    for (name, ts, metric), vals in groups.items():
        out.append((name, ts, "mean", metric, math.fsum(vals) / len(vals)))
        out.append((name, ts, "std", metric, statistics.stdev(vals) if len(vals) > 1 else 0.0))
    return out


def _arrays(records: Sequence[InstanceRecord]):
    ids = [r.id for r in records]
    m = np.array([r.model_probs for r in records])
    y = np.array([r.ground_truth for r in records], dtype=np.int64)
    g = np.array([r.annotation_freqs for r in records])
    return ids, m, y, g


def estimate_all(profiles: Sequence[HumanProfile], m: np.ndarray, ids, seed: int, top_k: int) -> dict[str, np.ndarray]:
    """(N, n) estimated labels under each estimator."""
    keys = streams.instance_keys(ids)
    n, k = len(profiles), profiles[0].k
    out = {e: np.empty((m.shape[0], n), dtype=np.int64) for e in ESTIMATORS}
    for i, p in enumerate(profiles):
        out["posterior"][:, i] = posterior_estimate_batch(p.phi, m)
        out["max-max"][:, i] = max_max_estimate(p.phi)
        u = streams.keyed_uniform(seed, streams.TOP_K_ESTIMATE, keys, i)
        out["top-k"][:, i] = top_k_estimate_batch(p.phi, m, top_k, u)
        u = streams.keyed_uniform(seed, streams.RANDOM_ESTIMATE, keys, i)
        out["random"][:, i] = random_estimate_batch(k, u)
    return out


def fit_profiles(train_labels: np.ndarray, train_truth: np.ndarray, costs, k: int, prior: DirichletPrior) -> list[HumanProfile]:
    return [
        fit_profile(i, train_labels[:, i], train_truth, k, float(costs[i]), prior)
        for i in range(train_labels.shape[1])
    ]


def _selection_for(strategy: str, profiles, values, oracle: LabelOracle, costs, budget):
    """(y_star, mask, revealed labels, per-instance cost) for one strategy."""
    if strategy == "pseudo-lb":
        labels = oracle.reveal_all()
        y_star, mask, _ = pseudo_lb_batch(profiles, labels)
        full = math.fsum(costs)
        spent = [full] * mask.shape[0]
        return y_star, mask, labels, spent
    if strategy == "placo-greedy":
        y_star, mask, _ = greedy_batch(values)
    else:
        y_star, mask, _ = lp_batch(values, costs, budget)
    labels = oracle.reveal(mask)
    spent = [math.fsum(costs[row]) for row in mask]
    return y_star, mask, labels, spent


def run_experiment(config: ExperimentConfig, records: Optional[Sequence[InstanceRecord]] = None) -> RunMetrics:
    """Run every (seed, training size) cell; write CSVs if ``output_dir`` is set.

    Files are only written after every cell succeeded.
    """
    if records is None:
        if config.dataset is None:
            raise ValidationError("no dataset given", "dataset")
        records = load_dataset(config.dataset, config.k, require_freqs=True)
    records = list(records)
    for r in records:
        if r.annotation_freqs is None:
            raise ValidationError(f"record {r.id}: annotation_freqs required to synthesise humans", "annotation_freqs")
        if r.ground_truth is None:
            raise ValidationError(f"record {r.id}: ground truth required", "ground_truth")
    train_sizes = sorted(set(config.train_sizes))
    if config.train_sizes == DEFAULT_TRAIN_SIZES:
        train_sizes = [t for t in train_sizes if t < len(records)] or [len(records) // 2]
    if max(train_sizes) >= len(records):
        raise InvalidTrainSize(
            f"largest training size {max(train_sizes)} leaves no test instances out of {len(records)}",
            "train_sizes",
        )
    accs = config.human_accuracies()
    n, k = len(accs), config.k
    params = config.value_params
    metrics = RunMetrics(train_sizes=train_sizes)
    ids_all, _, y_all, g_all = _arrays(records)
    index = {rid: x for x, rid in enumerate(ids_all)}

    for seed in config.seeds:
        labels_all = synth_population_labels(ids_all, g_all, y_all, accs, seed)
        costs = pool_costs(n, k, seed)
        budget = compute_budget(n, k, config.budget_fraction)
        metrics.costs[seed] = costs.tolist()
        metrics.budgets[seed] = budget
        train_full, test = split(records, max(train_sizes), seed)
        ids, m, y, _ = _arrays(test)
        test_labels = labels_all[[index[r] for r in ids]]
        train_rows = np.array([index[r.id] for r in train_full])

        for ts in train_sizes:
            rows = train_rows[:ts]
            profiles = fit_profiles(labels_all[rows], y_all[rows], costs, k, config.prior)
            est = estimate_all(profiles, m, ids, seed, config.top_k)
            for e in ESTIMATORS:
                metrics.estimation_rows.append((e, ts, seed, "estimation_match", float(np.mean(est[e] == test_labels))))
            values = value_table_batch(profiles, est["posterior"], params)

            model_acc = float(np.mean(np.argmax(m, axis=1) == y))
            metrics.learning_rows.append((MODEL_ONLY, ts, seed, "accuracy", model_acc))
            metrics.tradeoff_rows.append((MODEL_ONLY, ts, seed, "accuracy", model_acc))
            metrics.tradeoff_rows.append((MODEL_ONLY, ts, seed, "mean_cost", 0.0))
            for strategy in config.strategies:
                oracle = LabelOracle(test_labels)
                y_star, mask, revealed, spent = _selection_for(strategy, profiles, values, oracle, costs, budget)
                fused = np.argmax(combine_batch(m, profiles, revealed, mask), axis=1)
                correct = fused == y
                acc = float(np.mean(correct))
                mean_cost = _exact_mean(spent)
                metrics.learning_rows.append((strategy, ts, seed, "accuracy", acc))
                metrics.tradeoff_rows.append((strategy, ts, seed, "accuracy", acc))
                metrics.tradeoff_rows.append((strategy, ts, seed, "mean_cost", mean_cost))
                if strategy != "pseudo-lb":
                    key = (strategy, ts, seed)
                    metrics.unselected_reads[key] = oracle.unselected_reads(mask)
                if config.audit:
                    for x in range(len(ids)):
                        metrics.audit_rows.append((
                            ids[x], strategy, ts, seed, int(y_star[x]),
                            " ".join(str(i) for i in np.flatnonzero(mask[x])),
                            spent[x], int(fused[x]), int(bool(correct[x])),
                        ))

    if config.output_dir is not None:
        write_outputs(metrics, config.output_dir)
    return metrics


METRIC_HEADER = ["{kind}", "train_size", "seed", "metric", "value"]
AUDIT_HEADER = ["instance_id", "strategy", "train_size", "seed", "y_star", "selected", "cost", "fused_label", "correct"]


def _metric_csv(kind: str, rows: list) -> str:
    header = [kind] + METRIC_HEADER[1:]
    per_seed = sorted(rows, key=lambda r: (r[0], r[1], r[3], r[2]))
    return csv_text(header, per_seed + _summarise(per_seed))


def write_outputs(metrics: RunMetrics, output_dir) -> None:
    out = Path(output_dir)
    texts = {
        "estimation_match.csv": _metric_csv("estimator", metrics.estimation_rows),
        "learning_curve.csv": _metric_csv("strategy", metrics.learning_rows),
        "tradeoff.csv": _metric_csv("strategy", metrics.tradeoff_rows),
    }
    if metrics.audit_rows:
        texts["audit.csv"] = csv_text(AUDIT_HEADER, metrics.audit_rows)
    for name, text in texts.items():
        atomic_write(out / name, text)


def config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    return {key: list(v) if isinstance(v, tuple) else v for key, v in d.items()}
