"""Multi-seed experiment orchestration and machine-readable reports.

A run executes one or more methods over a seed list on a single bundle.
Each seed optionally resamples the per-class train/val split (the standard
protocol for citation graphs), trains, predicts on the test nodes, and
records node and subgraph accuracy. Reports are deterministic: same bundle,
config and seeds produce byte-identical JSON/CSV.

All transductive methods see the same observed label set, controlled by the
config's ``condition_on``: the diffusion model clamps those labels during
prediction, the label-input classifier feeds them at inference, and label
spreading seeds its iteration with them.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from redisc import rng as rngmod
from redisc.baselines import (
    GNNTrainConfig,
    LPConfig,
    label_spread,
    predict_independent,
    train_label_trick,
    train_vanilla_gnn,
)
from redisc.graph import UNKNOWN, GraphBundle, make_per_class_split, normalize_adjacency
from redisc.metrics import node_accuracy, subgraph_accuracy
from redisc.training import TrainConfig, em_train, predict

METHODS = ("redisc", "vanilla", "label_trick", "label_spread")

LABEL_TRICK_INPUT_RATE = 0.5  # per-epoch probability a training label is fed


def _observed_labels(bundle: GraphBundle, condition_on: str) -> np.ndarray:
    idx = bundle.splits.train
    if condition_on == "train+val":
        idx = np.concatenate([idx, bundle.splits.val])
    y = np.full(bundle.num_nodes, UNKNOWN, dtype=np.int64)
    y[idx] = bundle.labels[idx]
    return y


def run_method(bundle: GraphBundle, method: str, seed: int, cfg: TrainConfig) -> np.ndarray:
    """Train one method under one seed and return test-time predictions."""
    adj = normalize_adjacency(bundle.adjacency)
    x = bundle.features.astype(np.float64)
    if method == "redisc":
        res = em_train(bundle, adj, replace(cfg, seed=seed))
        return predict(res.best_params, res.gcfg, res.sched, bundle, adj,
                       rngmod.stream(seed, rngmod.PREDICT),
                       cfg.eval_samples, cfg.condition_on)
    if method == "vanilla":
        gcfg = GNNTrainConfig(cfg.hidden_dim, cfg.layers, cfg.warmup_epochs,
                              cfg.lr, cfg.weight_decay)
        model = train_vanilla_gnn(bundle, adj, gcfg, rngmod.stream(seed, rngmod.BASELINE))
        return predict_independent(model.best_params, model.cfg, adj, x)
    if method == "label_trick":
        gcfg = GNNTrainConfig(cfg.hidden_dim, cfg.layers, cfg.warmup_epochs,
                              cfg.lr, cfg.weight_decay, LABEL_TRICK_INPUT_RATE)
        model = train_label_trick(bundle, adj, gcfg, rngmod.stream(seed, rngmod.BASELINE))
        return predict_independent(model.best_params, model.cfg, adj, x,
                                   _observed_labels(bundle, cfg.condition_on))
    if method == "label_spread":
        scores = label_spread(bundle.adjacency,
                              _observed_labels(bundle, cfg.condition_on),
                              bundle.num_classes, LPConfig())
        return np.argmax(scores, axis=1)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _seed_rows(args) -> list[dict]:
    bundle, methods, seed, cfg, train_per_class, val_per_class = args
    if train_per_class > 0:
        split = make_per_class_split(bundle.labels, bundle.num_classes,
                                 train_per_class, val_per_class,
                                 rngmod.stream(seed, rngmod.SPLIT))
        bundle = replace(bundle, splits=split)
    test = bundle.splits.test
    rows = []
    for method in methods:
        try:
            pred = run_method(bundle, method, seed, cfg)
        except Exception as exc:
            raise RuntimeError(f"stage {method!r} failed for seed {seed}: {exc}") from exc
        rows.append({
            "seed": seed,
            "method": method,
            "node_acc": node_accuracy(pred, bundle.labels, test),
            "subgraph_acc": subgraph_accuracy(pred, bundle.labels, bundle.adjacency, test),
        })
    return rows


def run_experiment(
    bundle: GraphBundle,
    methods: list[str],
    seeds: list[int],
    cfg: TrainConfig,
    train_per_class: int = 0,
    val_per_class: int = 0,
    threads: int = 1,
) -> dict:
    """Execute every (seed, method) cell and assemble the report dict.

    ``train_per_class`` > 0 resamples the split per seed; 0 keeps the
    bundle's stored splits for every seed.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
    if not seeds:
        raise ValueError("need at least one seed")
    cfg.validate()

    tasks = [(bundle, list(methods), s, cfg, train_per_class, val_per_class) for s in seeds]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_seed = list(pool.map(_seed_rows, tasks))
    else:
        per_seed = [_seed_rows(t) for t in tasks]
    rows = [r for chunk in per_seed for r in chunk]

    summary = {}
    for method in methods:
        vals = {k: np.array([r[k] for r in rows if r["method"] == method])
                for k in ("node_acc", "subgraph_acc")}
        summary[method] = {
            k: {"mean": float(v.mean()), "std": float(v.std())} for k, v in vals.items()
        }
    return {
        "config": cfg.to_dict(),
        "methods": list(methods),
        "seeds": list(seeds),
        "split": {"train_per_class": train_per_class, "val_per_class": val_per_class},
        "per_seed": rows,
        "summary": summary,
    }


def write_report(report: dict, out_dir) -> tuple[Path, Path]:
    """report.json plus a plot-ready metrics.csv; bytes are deterministic."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    json_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    csv_path = out / "metrics.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "method", "node_acc", "subgraph_acc"])
        for r in report["per_seed"]:
            writer.writerow([r["seed"], r["method"], repr(r["node_acc"]), repr(r["subgraph_acc"])])
    return json_path, csv_path
