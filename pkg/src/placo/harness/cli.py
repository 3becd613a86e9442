"""Command line entry point.

    placo estimate  fit confusion matrices, write a profile file
    placo select    choose a subset per instance, write a selection log
    placo combine   elicit the selected labels and fuse with the model
    placo bench     full experiment, write the metric CSVs

Exit status: 0 on success, 1 on invalid input, 2 on any other failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from ..domain import ValidationError
from ..fusion import combine_batch
from ..estimation import posterior_estimate_batch
from ..selection import greedy_batch, lp_batch, pseudo_lb_batch
from ..synthpop import compute_budget, synth_population_labels
from ..valuation import ValueParams, value_table_batch
from .experiment import (
    STRATEGIES,
    ExperimentConfig,
    LabelOracle,
    config_dict,
    fit_profiles,
    pool_costs,
    run_experiment,
    split,
)
from .io import atomic_write, csv_text, fmt, load_dataset, read_csv, read_profiles, write_profiles

log = logging.getLogger("placo")


def _add_population_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file supplying any of the flags below")
    p.add_argument("--dataset", help="dataset file (see README for the format)")
    p.add_argument("--k", type=int, help="number of classes")
    p.add_argument("--preset", choices=["h5", "h7", "h10", "h15"])
    p.add_argument("--accuracies", type=float, nargs="+", help="explicit per-human accuracies")
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--v-max", type=float, dest="v_max")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--budget-fraction", type=float, dest="budget_fraction")


def _config(args, **overrides) -> ExperimentConfig:
    d = {}
    if args.config:
        d.update(json.loads(Path(args.config).read_text()))
    for key in ("dataset", "k", "preset", "accuracies", "beta", "gamma", "v_max", "epsilon",
                "top_k", "train_sizes", "budget_fraction", "seeds", "strategies", "output_dir"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    if d.get("accuracies") is not None:
        d["preset"] = None
    d.update(overrides)
    return ExperimentConfig.from_dict(d)


def cmd_estimate(args) -> None:
    cfg = _config(args, train_sizes=[args.train_size], seeds=[args.seed])
    records = load_dataset(cfg.dataset, cfg.k, require_freqs=True)
    accs = cfg.human_accuracies()
    ids = [r.id for r in records]
    y = np.array([r.ground_truth for r in records])
    g = np.array([r.annotation_freqs for r in records])
    labels = synth_population_labels(ids, g, y, accs, args.seed)
    train, _ = split(records, args.train_size, args.seed)
    index = {rid: x for x, rid in enumerate(ids)}
    rows = [index[r.id] for r in train]
    costs = pool_costs(len(accs), cfg.k, args.seed)
    profiles = fit_profiles(labels[rows], y[rows], costs, cfg.k, cfg.prior)
    write_profiles(
        args.out, profiles,
        seed=args.seed, train_size=args.train_size, accuracies=list(accs),
        prior={"beta": cfg.beta, "gamma": cfg.gamma}, dataset=str(cfg.dataset),
    )
    log.info("wrote %d profiles to %s", len(profiles), args.out)


def _test_split(records, meta):
    _, test = split(records, int(meta["train_size"]), int(meta["seed"]))
    return test


def _test_context(args):
    profiles, meta = read_profiles(args.profiles)
    k = int(meta["k"])
    dataset = args.dataset or meta.get("dataset")
    records = load_dataset(dataset, k, require_freqs=True)
    test = records if args.all else _test_split(records, meta)
    ids = [r.id for r in test]
    m = np.array([r.model_probs for r in test])
    y = np.array([r.ground_truth for r in test])
    g = np.array([r.annotation_freqs for r in test])
    true_labels = synth_population_labels(ids, g, y, meta["accuracies"], int(meta["seed"]))
    return profiles, meta, ids, m, y, LabelOracle(true_labels)


def cmd_select(args) -> None:
    profiles, meta, ids, m, y, oracle = _test_context(args)
    k = int(meta["k"])
    params = ValueParams(args.v_max, args.epsilon)
    costs = np.array([p.cost for p in profiles])
    budget = compute_budget(len(profiles), k, args.budget_fraction)
    if args.strategy == "pseudo-lb":
        y_star, mask, _ = pseudo_lb_batch(profiles, oracle.reveal_all())
        spent = [math.fsum(costs)] * len(ids)
    else:
        h = np.stack([posterior_estimate_batch(p.phi, m) for p in profiles], axis=1)
        values = value_table_batch(profiles, h, params)
        if args.strategy == "placo-greedy":
            y_star, mask, _ = greedy_batch(values)
        else:
            y_star, mask, _ = lp_batch(values, costs, budget)
        spent = [math.fsum(costs[row]) for row in mask]
    rows = [
        (ids[x], args.strategy, int(y_star[x]), " ".join(map(str, np.flatnonzero(mask[x]))), spent[x])
        for x in range(len(ids))
    ]
    atomic_write(args.out, csv_text(["instance_id", "strategy", "y_star", "selected", "cost"], rows))
    log.info("wrote %d selections to %s", len(rows), args.out)


def cmd_combine(args) -> None:
    profiles, meta, ids, m, y, oracle = _test_context(args)
    sel = {r["instance_id"]: r for r in read_csv(args.selection)}
    missing = [i for i in ids if i not in sel]
    if missing:
        raise ValidationError(f"selection log lacks {len(missing)} instances, e.g. {missing[0]!r}", "selection")
    mask = np.zeros((len(ids), len(profiles)), dtype=bool)
    for x, rid in enumerate(ids):
        chosen = [int(i) for i in sel[rid]["selected"].split()]
        mask[x, chosen] = True
    post = combine_batch(m, profiles, oracle.reveal(mask), mask)
    fused = np.argmax(post, axis=1)
    k = post.shape[1]
    rows = [
        (ids[x], sel[ids[x]]["strategy"], int(fused[x]), int(fused[x] == y[x]), *[fmt(v) for v in post[x]])
        for x in range(len(ids))
    ]
    header = ["instance_id", "strategy", "fused_label", "correct"] + [f"p_{j}" for j in range(k)]
    atomic_write(args.out, csv_text(header, rows))
    log.info("accuracy %.4f over %d instances", float(np.mean(fused == y)), len(ids))


def cmd_bench(args) -> None:
    cfg = _config(args)
    if cfg.output_dir is None:
        raise ValidationError("bench needs --output-dir (or output_dir in the config)", "output_dir")
    metrics = run_experiment(cfg)
    atomic_write(Path(cfg.output_dir) / "config.json", json.dumps(config_dict(cfg), indent=1) + "\n")
    ts = max(metrics.train_sizes)
    for s in ("model",) + cfg.strategies:
        acc = metrics.mean("tradeoff_rows", s, "accuracy", ts)
        cost = metrics.mean("tradeoff_rows", s, "mean_cost", ts)
        print(f"{s:13s} train={ts:<6d} accuracy={acc:.4f} mean_cost={cost:.4f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="placo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="fit confusion matrices from a training split")
    _add_population_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-size", type=int, required=True, dest="train_size")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    for name, func, helptext in (
        ("select", cmd_select, "choose humans per instance"),
        ("combine", cmd_combine, "fuse elicited labels with the model"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--profiles", required=True, help="file written by 'placo estimate'")
        p.add_argument("--dataset", help="defaults to the dataset recorded in the profile file")
        p.add_argument("--all", action="store_true", help="use every record, not only the test split")
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)
        if name == "select":
            p.add_argument("--strategy", choices=STRATEGIES, default="placo-greedy")
            p.add_argument("--budget-fraction", type=float, default=0.05, dest="budget_fraction")
            p.add_argument("--v-max", type=float, default=1e9, dest="v_max")
            p.add_argument("--epsilon", type=float, default=1e-9)
        else:
            p.add_argument("--selection", required=True, help="file written by 'placo select'")

    p = sub.add_parser("bench", help="run the full experiment and write CSVs")
    _add_population_args(p)
    p.add_argument("--train-sizes", type=int, nargs="+", dest="train_sizes")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--strategies", nargs="+", choices=STRATEGIES)
    p.add_argument("--output-dir", dest="output_dir")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
