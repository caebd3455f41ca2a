"""Command-line surface.

    redisc synth     --out DIR --seed N [sbm options]
    redisc train     --data DIR --out DIR [--config cfg.json] [--seed N]
    redisc sample    --data DIR --model DIR --out DIR [--seed N] [--condition-on ...]
    redisc eval      --data DIR --model DIR --out DIR [--seed N]
    redisc baseline  --data DIR --out DIR --method NAME [--config cfg.json] [--seed N]
    redisc report    --data DIR --out DIR [--config cfg.json] [--seeds 0,1,2]
                     [--methods a,b] [--threads K] [--train-per-class N --val-per-class N]

Exit status: 0 on success, 2 for configuration problems (bad flags, bad
config file, unknown method), 3 for runtime failures (unreadable or invalid
bundles, training errors). All outputs are UTF-8 JSON/CSV plus the binary
parameter checkpoint.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from redisc import autodiff as ad
from redisc import denoiser as dn
from redisc import rng as rngmod
from redisc.experiment import METHODS, run_experiment, run_method, write_report
from redisc.graph import (
    generate_sbm,
    load_bundle,
    make_per_class_split,
    normalize_adjacency,
    save_bundle,
)
from redisc.metrics import node_accuracy, subgraph_accuracy
from redisc.sampler import SampleTrace, sample_conditional, sample_unconditional
from redisc.schedule import cosine_schedule
from redisc.training import TrainConfig, em_train, predict


class ConfigurationError(Exception):
    """User-facing configuration problem; maps to exit code 2."""


def _load_train_config(args) -> TrainConfig:
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
            cfg = TrainConfig.from_dict(raw)
        except FileNotFoundError as exc:
            raise ConfigurationError(f"config file not found: {args.config}") from exc
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            raise ConfigurationError(f"bad config {args.config}: {exc}") from exc
    else:
        cfg = TrainConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise ConfigurationError(f"--{name} is required for this command")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_labels_csv(path: Path, labels: np.ndarray) -> None:
    lines = ["node_id,class"] + [f"{i},{int(c)}" for i, c in enumerate(labels)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- model directory format: checkpoint.bin + model.json ------------------

def _save_model(out: Path, result, cfg: TrainConfig) -> None:
    ad.save_checkpoint(result.best_params, out / "checkpoint.bin")
    _write_json(out / "model.json", {
        "gnn": dataclasses.asdict(result.gcfg),
        "T": cfg.T,
        "cosine_offset": cfg.cosine_offset,
        "eval_samples": cfg.eval_samples,
        "condition_on": cfg.condition_on,
    })


def _load_model(model_dir: str):
    base = Path(model_dir)
    try:
        meta = json.loads((base / "model.json").read_text(encoding="utf-8"))
        gcfg = dn.GNNConfig(**meta["gnn"])
        params = ad.load_checkpoint(base / "checkpoint.bin")
    except FileNotFoundError as exc:
        raise ConfigurationError(f"not a model directory: {model_dir}") from exc
    sched = cosine_schedule(meta["T"], meta["cosine_offset"])
    return params, gcfg, sched, meta


# --- subcommands -----------------------------------------------------------

def cmd_synth(args) -> int:
    _require(args, "out")
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else 0
    bundle = generate_sbm(args.nodes_per_class, args.classes, args.p_in, args.p_out,
                          args.feat_dim, args.feat_noise, rngmod.stream(seed, rngmod.SBM))
    bundle.splits = make_per_class_split(bundle.labels, bundle.num_classes,
                                     args.train_per_class, args.val_per_class,
                                     rngmod.stream(seed, rngmod.SPLIT))
    save_bundle(bundle, out)
    print(f"wrote bundle: {bundle.num_nodes} nodes, {bundle.num_edges} edges, "
          f"{bundle.num_classes} classes -> {out}")
    return 0


def cmd_train(args) -> int:
    _require(args, "data", "out")
    cfg = _load_train_config(args)
    bundle = load_bundle(args.data)
    adj = normalize_adjacency(bundle.adjacency)
    result = em_train(bundle, adj, cfg)
    out = _out_dir(args)
    _save_model(out, result, cfg)
    _write_json(out / "train_log.json", {
        "best_val_acc": result.best_val_acc,
        "best_round": result.best_round,
        "warmup_best_val_acc": result.warmup.best_val_acc,
        "e_step_val_accs": result.e_accs,
        "m_step_losses": result.m_losses,
    })
    print(f"trained {cfg.em_rounds} rounds; best val acc {result.best_val_acc:.4f} "
          f"at round {result.best_round} -> {out}")
    return 0


def cmd_sample(args) -> int:
    _require(args, "data", "model", "out")
    bundle = load_bundle(args.data)
    params, gcfg, sched, meta = _load_model(args.model)
    adj = normalize_adjacency(bundle.adjacency)
    x = bundle.features.astype(np.float64)
    cache = dn.feature_cache(params, gcfg, x)
    predict_fn = lambda state: dn.denoise_predict(params, gcfg, adj, x, state, feat_cache=cache)
    seed = args.seed if args.seed is not None else 0
    rng = rngmod.stream(seed, rngmod.PREDICT)
    condition = args.condition_on or meta["condition_on"]

    trace = SampleTrace()
    if condition == "none":
        y = sample_unconditional(predict_fn, sched, bundle.num_nodes, rng, trace)
    else:
        y_obs = np.full(bundle.num_nodes, -1, dtype=np.int64)
        idx = bundle.splits.train
        if condition == "train+val":
            idx = np.concatenate([idx, bundle.splits.val])
        elif condition != "train":
            raise ConfigurationError(f"unknown --condition-on {condition!r}")
        y_obs[idx] = bundle.labels[idx]
        y = sample_conditional(predict_fn, sched, y_obs, rng, trace)

    out = _out_dir(args)
    _write_labels_csv(out / "sample.csv", y)
    _write_json(out / "trace.json", {
        "seed": seed,
        "condition_on": condition,
        "num_steps": sched.num_steps,
        "steps": [{"t": s.t, "budget": s.budget, "masked_before": s.masked_before,
                   "revealed_observed": s.revealed_observed,
                   "revealed_free": s.revealed_free} for s in trace.steps],
        "denoise_counts_min": int(trace.denoise_counts.min()),
        "denoise_counts_max": int(trace.denoise_counts.max()),
    })
    print(f"sampled {bundle.num_nodes} labels over {sched.num_steps} steps -> {out}")
    return 0


def cmd_eval(args) -> int:
    _require(args, "data", "model", "out")
    bundle = load_bundle(args.data)
    params, gcfg, sched, meta = _load_model(args.model)
    adj = normalize_adjacency(bundle.adjacency)
    seed = args.seed if args.seed is not None else 0
    pred = predict(params, gcfg, sched, bundle, adj,
                   rngmod.stream(seed, rngmod.PREDICT),
                   meta["eval_samples"], meta["condition_on"])
    test = bundle.splits.test
    metrics = {
        "seed": seed,
        "eval_samples": meta["eval_samples"],
        "condition_on": meta["condition_on"],
        "node_acc": node_accuracy(pred, bundle.labels, test),
        "subgraph_acc": subgraph_accuracy(pred, bundle.labels, bundle.adjacency, test),
    }
    out = _out_dir(args)
    _write_json(out / "eval.json", metrics)
    _write_labels_csv(out / "predictions.csv", pred)
    print(f"node acc {metrics['node_acc']:.4f}, subgraph acc {metrics['subgraph_acc']:.4f}")
    return 0


def cmd_baseline(args) -> int:
    _require(args, "data", "out", "method")
    if args.method not in METHODS or args.method == "redisc":
        raise ConfigurationError(
            f"--method must be one of {[m for m in METHODS if m != 'redisc']}")
    cfg = _load_train_config(args)
    bundle = load_bundle(args.data)
    seed = args.seed if args.seed is not None else cfg.seed
    pred = run_method(bundle, args.method, seed, cfg)
    test = bundle.splits.test
    metrics = {
        "method": args.method,
        "seed": seed,
        "node_acc": node_accuracy(pred, bundle.labels, test),
        "subgraph_acc": subgraph_accuracy(pred, bundle.labels, bundle.adjacency, test),
    }
    out = _out_dir(args)
    _write_json(out / "baseline.json", metrics)
    _write_labels_csv(out / "predictions.csv", pred)
    print(f"{args.method}: node acc {metrics['node_acc']:.4f}, "
          f"subgraph acc {metrics['subgraph_acc']:.4f}")
    return 0


def cmd_report(args) -> int:
    _require(args, "data", "out")
    cfg = _load_train_config(args)
    try:
        seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [cfg.seed]
        methods = args.methods.split(",") if args.methods else ["redisc", "vanilla"]
    except ValueError as exc:
        raise ConfigurationError(f"bad --seeds list: {exc}") from exc
    for m in methods:
        if m not in METHODS:
            raise ConfigurationError(f"unknown method {m!r}; expected one of {METHODS}")
    bundle = load_bundle(args.data)
    report = run_experiment(bundle, methods, seeds, cfg,
                            args.train_per_class, args.val_per_class,
                            threads=args.threads)
    json_path, csv_path = write_report(report, args.out)
    for method, stats in report["summary"].items():
        print(f"{method}: node acc {stats['node_acc']['mean']:.4f} "
              f"± {stats['node_acc']['std']:.4f}, subgraph acc "
              f"{stats['subgraph_acc']['mean']:.4f} ± {stats['subgraph_acc']['std']:.4f}")
    print(f"wrote {json_path} and {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", help="bundle directory")
    common.add_argument("--config", help="training config JSON")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--seeds", help="comma-separated seed list")
    common.add_argument("--threads", type=int, default=1, help="parallel seed workers")

    parser = argparse.ArgumentParser(prog="redisc",
                                     description="diffusion-based node classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic bundle")
    p.add_argument("--nodes-per-class", type=int, default=20)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--p-in", type=float, default=0.6)
    p.add_argument("--p-out", type=float, default=0.05)
    p.add_argument("--feat-dim", type=int, default=16)
    p.add_argument("--feat-noise", type=float, default=0.2)
    p.add_argument("--train-per-class", type=int, default=5)
    p.add_argument("--val-per-class", type=int, default=5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", parents=[common], help="train the diffusion classifier")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", parents=[common], help="draw one labeling from a model")
    p.add_argument("--model", help="directory written by `redisc train`")
    p.add_argument("--condition-on", choices=["train", "train+val", "none"],
                   help="labels to clamp (default: the model's setting)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", parents=[common], help="majority-vote evaluation")
    p.add_argument("--model", help="directory written by `redisc train`")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", parents=[common], help="run a classical baseline")
    p.add_argument("--method", help="vanilla | label_trick | label_spread")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("report", parents=[common], help="multi-seed comparison report")
    p.add_argument("--methods", help="comma-separated method list")
    p.add_argument("--train-per-class", type=int, default=0,
                   help="resample splits per seed with this many train nodes per class")
    p.add_argument("--val-per-class", type=int, default=0)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: bad bundle, training error, I/O
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
