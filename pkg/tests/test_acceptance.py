"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import profile, random_column_stochastic
from placo.confusion import DirichletPrior, count_pairs, estimate_confusion, zero_counts
from placo.domain import clamp_phi
from placo.fusion import combine, combine_single
from placo.harness import experiment
from placo.harness.cli import main
from placo.harness.experiment import ExperimentConfig, LabelOracle, run_experiment
from placo.harness.io import write_dataset
from placo.knapsack import solve_knapsack
from placo.selection import exhaustive_oracle, placo_greedy, placo_lp_select
from placo.synthpop import SyntheticSpec, compute_budget, synthetic_dataset
from placo.valuation import lemma1_bounds

RESULTS: dict[int, str] = {}
SEEDS = tuple(range(10))
TRAIN = 1000
N_INSTANCES = 3000  # 2000 test instances per seed
SLACK = 1e-12


def report(n: int, ok: bool, detail: str) -> bool:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def _pool(rng, n, k):
    out = []
    for i in range(n):
        phi = random_column_stochastic(rng, k, rng.choice([0.0, 2.0, 8.0, 30.0]))
        out.append(profile(phi, accuracy=float(rng.uniform(0.2, 1.0)), cost=float(rng.uniform(0.01, k)), id=i))
    return out


@pytest.fixture(scope="module")
def synthetic():
    return synthetic_dataset(SyntheticSpec(n=N_INSTANCES, k=10, model_accuracy=0.55, seed=2024))


@pytest.fixture(scope="module")
def preset_runs(synthetic):
    runs = {}
    for preset in ("h5", "h7", "h10", "h15"):
        cfg = ExperimentConfig(k=10, preset=preset, train_sizes=(TRAIN,), seeds=SEEDS)
        runs[preset] = run_experiment(cfg, synthetic)
    return runs


def test_criterion_1_greedy_matches_oracle():
    rng = np.random.default_rng(1)
    cases = []
    for _ in range(1000):
        n, k = int(rng.integers(1, 13)), int(rng.integers(2, 11))
        cases.append((_pool(rng, n, k), rng.integers(0, k, n)))
    start = time.perf_counter()
    mismatches = 0
    for pool, h in cases:
        out = placo_greedy(pool, h)
        mismatches += out.selected != exhaustive_oracle(out.values)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 10
    assert report(1, ok, f"{mismatches} mismatches / 1000, {elapsed:.2f}s")


def test_criterion_2_knapsack_exact():
    rng = np.random.default_rng(2)
    worst, over = 0.0, 0
    for trial in range(1000):
        n, k = int(rng.integers(1, 16)), int(rng.integers(2, 11))
        pool = _pool(rng, n, k)
        h = rng.integers(0, k, n)
        costs = [p.cost for p in pool]
        # half the trials use the standard budget rule, half a random one
        budget = compute_budget(n, k) if trial % 2 else float(rng.uniform(0.05, 0.6) * sum(costs))
        out = placo_lp_select(pool, h, budget=budget)
        logv = np.log(out.values)
        pre, _ = solve_knapsack(logv.tolist(), costs, budget)
        pre_obj = math.fsum(logv[list(pre)])
        best = exhaustive_oracle(out.values, costs, budget)
        best_obj = math.fsum(logv[list(best)])
        worst = max(worst, abs(pre_obj - best_obj))
        if pre:
            assert out.selected == pre
        over += math.fsum(costs[i] for i in out.selected) > budget
    ok = worst < 1e-9 and over == 0
    assert report(2, ok, f"max |dobj| = {worst:.3g}, {over} budget violations / 1000")


def _ideal_trials(rng, trials):
    per_k = trials // 9 + 1
    rows = []
    for k in range(2, 11):
        phi = rng.dirichlet(np.ones(k), size=(per_k, k)).transpose(0, 2, 1)  # [trial, given, true]
        m = rng.dirichlet(np.ones(k), size=per_k)
        y = rng.integers(0, k, per_k)
        h = np.argmax(np.einsum("tij,tj->ti", phi, m), axis=1)
        r = np.arange(per_k)
        diag = np.diagonal(phi, axis1=1, axis2=2)
        rows.append((phi[r, y, y], phi[r, h, y], diag.min(axis=1), diag.max(axis=1), h == y))
    cols = [np.concatenate(c)[:trials] for c in zip(*rows)]
    return cols


def test_criterion_3_ideal_human_bounds():
    rng = np.random.default_rng(3)
    phi_t, phi_h, a, A, same = _ideal_trials(rng, 100_000)
    d = phi_t - phi_h
    # K=2 with h != y meets the lower bound with equality; allow rounding only
    low_bad = d < 2 * a - 1 - SLACK
    up_bad = d > A + SLACK
    s = phi_h + 2 * a
    mid = (s > 1) & (s < 2)
    p = clamp_phi(phi_t)
    l2_bad = mid & (p / (1 - p) < (s - 1) / (2 - s) * (1 - SLACK) - SLACK)
    # non-ideal: any given/true labels
    t2 = rng.integers(0, 10, 100_000)
    h2 = rng.integers(0, 10, 100_000)
    y2 = rng.integers(0, 10, 100_000)
    phi2 = rng.dirichlet(np.ones(10), size=(100_000 // 100, 10)).transpose(0, 2, 1)
    idx = np.arange(100_000) % phi2.shape[0]
    d2 = phi2[idx, t2, y2] - phi2[idx, h2, y2]
    trivial_ok = bool(np.all((d2 >= -1) & (d2 <= 1)))
    ok = not low_bad.any() and not up_bad.any() and not l2_bad.any() and trivial_ok
    detail = (
        f"L1 lower violated {int(low_bad.sum())}, L1 upper violated {int(up_bad.sum())}, "
        f"L2 violated {int(l2_bad.sum())} of {int(mid.sum())}, non-ideal range ok={trivial_ok}; "
        f"violations with h != y: {int((low_bad & ~same).sum() + (l2_bad & ~same).sum())}"
    )
    assert lemma1_bounds(np.eye(2)) == (1.0, 1.0)
    assert report(3, ok, detail)


def test_criterion_4_fusion_identities():
    rng = np.random.default_rng(4)
    worst_uniform = worst_seq = worst_eq = 0.0
    empty_exact = True
    for _ in range(2000):
        k = int(rng.integers(2, 11))
        m = rng.dirichlet(np.ones(k))
        empty_exact &= np.array_equal(combine(m, []).posterior, m)
        u = combine(m, [(profile(np.full((k, k), 1 / k)), int(rng.integers(k)))]).posterior
        worst_uniform = max(worst_uniform, float(np.abs(u - m).max()))
        team = [(profile(random_column_stochastic(rng, k, 3.0), id=i), int(rng.integers(k)))
                for i in range(int(rng.integers(1, 8)))]
        running = m
        for pair in team:
            running = combine(running, [pair]).posterior
        worst_seq = max(worst_seq, float(np.abs(running - combine(m, team).posterior).max()))
        p, t = team[0]
        single = combine(m, [team[0]]).posterior
        worst_eq = max(worst_eq, float(np.abs(single - combine_single(m, p.phi, t)).max()))
    ok = empty_exact and max(worst_uniform, worst_seq, worst_eq) < 1e-12
    assert report(4, ok, f"empty exact={empty_exact}, uniform {worst_uniform:.2g}, "
                         f"sequential {worst_seq:.2g}, single-human {worst_eq:.2g}")


def test_criterion_5_estimation_ordering(preset_runs):
    run = preset_runs["h10"]
    means = {e: run.mean("estimation_rows", e, "estimation_match", TRAIN) for e in experiment.ESTIMATORS}
    ok = all(means["posterior"] > means[e] for e in ("max-max", "top-k", "random"))
    ok &= abs(means["random"] - 0.1) <= 0.02
    detail = ", ".join(f"{e}={v:.4f}" for e, v in means.items())
    assert report(5, ok, detail)


def test_criterion_6_cost_accuracy_ordering(preset_runs):
    parts, ok = [], True
    for preset, run in preset_runs.items():
        g_cost = run.per_seed("tradeoff_rows", "placo-greedy", "mean_cost", TRAIN)
        p_cost = run.per_seed("tradeoff_rows", "pseudo-lb", "mean_cost", TRAIN)
        l_cost = run.per_seed("tradeoff_rows", "placo-lp", "mean_cost", TRAIN)
        strict = all(g_cost[s] < p_cost[s] for s in SEEDS)
        g_acc = run.mean("tradeoff_rows", "placo-greedy", "accuracy", TRAIN)
        p_acc = run.mean("tradeoff_rows", "pseudo-lb", "accuracy", TRAIN)
        lp_rows = all(l_cost[s] <= run.budgets[s] for s in SEEDS)
        lp_inst = all(
            row[6] <= run.budgets[row[3]] for row in run.audit_rows if row[1] == "placo-lp"
        )
        good = strict and g_acc >= p_acc - 0.03 and lp_rows and lp_inst
        ok &= good
        parts.append(
            f"{preset}: cost {np.mean(list(g_cost.values())):.2f}<{np.mean(list(p_cost.values())):.2f} "
            f"acc {g_acc:.4f} vs {p_acc:.4f} lp<=B {lp_rows and lp_inst}"
        )
    assert report(6, ok, "; ".join(parts))


def test_criterion_7_team_benefit(preset_runs):
    run = preset_runs["h10"]
    model = run.mean("tradeoff_rows", experiment.MODEL_ONLY, "accuracy", TRAIN)
    greedy = run.mean("tradeoff_rows", "placo-greedy", "accuracy", TRAIN)
    ok = abs(model - 0.55) < 0.02 and greedy - model >= 0.05
    assert report(7, ok, f"model {model:.4f}, placo-greedy {greedy:.4f}, gain {greedy - model:+.4f}")


def test_criterion_8_confusion_consistency():
    rng = np.random.default_rng(8)
    k = 5
    true = random_column_stochastic(rng, k, 3.0)
    per_col = 100_000 // k
    truths = np.repeat(np.arange(k), per_col)
    labels = np.concatenate([rng.choice(k, per_col, p=true[:, t]) for t in range(k)])
    err = float(np.abs(estimate_confusion(count_pairs(labels, truths, k)).entries - true).max())
    prior = DirichletPrior(1.0, 2.0)
    zero = estimate_confusion(zero_counts(k), prior).entries
    alpha = prior.alpha(k)
    exact = np.array_equal(zero, alpha / alpha.sum(axis=0, keepdims=True))
    ok = err < 0.02 and exact
    assert report(8, ok, f"max abs error {err:.4f} at 1e5 samples, prior mean exact={exact}")


def test_criterion_9_determinism_and_hygiene(tmp_path, monkeypatch):
    data = tmp_path / "data.csv"
    write_dataset(data, synthetic_dataset(SyntheticSpec(n=600, k=10, seed=9)), 10)
    outs = [tmp_path / "a", tmp_path / "b"]
    base = ["bench", "--dataset", str(data), "--k", "10", "--preset", "h10",
            "--train-sizes", "100", "300", "--seeds", "0", "1", "2", "--output-dir"]
    codes = [main(base + [str(o)]) for o in outs]
    names = ("estimation_match.csv", "learning_curve.csv", "tradeoff.csv", "audit.csv")
    same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)

    class Spy(LabelOracle):
        leaks = 0

        def reveal(self, mask):
            out = super().reveal(mask)
            Spy.leaks += int(np.sum(out[~np.asarray(mask, dtype=bool)] != -1))
            return out

    monkeypatch.setattr(experiment, "LabelOracle", Spy)
    cfg = ExperimentConfig(k=10, preset="h10", train_sizes=(100, 300), seeds=(0, 1, 2),
                           strategies=("placo-greedy", "placo-lp"))
    metrics = run_experiment(cfg, synthetic_dataset(SyntheticSpec(n=600, k=10, seed=9)))
    reads = sum(metrics.unselected_reads.values())
    ok = codes == [0, 0] and same and reads == 0 and Spy.leaks == 0
    assert report(9, ok, f"exit codes {codes}, byte-identical={same}, unselected reads={reads}, "
                         f"leaked labels={Spy.leaks}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
