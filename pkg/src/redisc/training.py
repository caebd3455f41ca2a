"""EM training loop for the label-diffusion classifier.

The latent clean labeling is approximated by a bounded queue of pseudo-label
vectors. Warmup fills the queue with draws from an independent classifier;
each EM round then (E) samples a fresh labeling from the current denoiser
conditioned on the training labels, scoring it by validation accuracy, and
(M) takes gradient steps on the masked-denoising objective against a
queue entry chosen with priority proportional to its score. Conditioning the
E-step on training labels only keeps the validation score an honest ranking
signal; inference may additionally clamp validation labels.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from redisc import autodiff as ad
from redisc import denoiser as dn
from redisc import rng as rngmod
from redisc.baselines import GNNTrainConfig, TrainedModel, forward_proba, train_vanilla_gnn
from redisc.graph import UNKNOWN, GraphBundle, NormalizedAdjacency
from redisc.sampler import _draw_rows, sample_conditional
from redisc.schedule import NoiseSchedule, cosine_schedule, forward_mask, loss_weight_and_mask


@dataclass
class TrainConfig:
    """Serializable knobs for one training run."""

    T: int = 80                 # diffusion steps
    S: int = 100                # pseudo-label queue capacity
    tau: float = 0.1            # priority temperature
    lr: float = 0.01
    weight_decay: float = 0.005
    em_rounds: int = 500
    m_steps_per_round: int = 1
    warmup_epochs: int = 500
    eval_samples: int = 10      # majority-vote sample count at prediction
    seed: int = 0
    hidden_dim: int = 64
    layers: int = 2
    time_dim: int = 128
    priority_mode: str = "softmax"   # or "power"
    cosine_offset: float = 0.008
    condition_on: str = "train+val"  # labels clamped when predicting

    def validate(self) -> None:
        if self.T < 1 or self.S < 1 or self.eval_samples < 1:
            raise ValueError("T, S and eval_samples must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.priority_mode not in ("softmax", "power"):
            raise ValueError(f"unknown priority_mode {self.priority_mode!r}")
        if self.condition_on not in ("train", "train+val"):
            raise ValueError(f"unknown condition_on {self.condition_on!r}")

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        known = {f.name for f in fields(TrainConfig)}
        for key in d:
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
        cfg = TrainConfig(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return TrainConfig.from_dict(json.load(fh))


@dataclass
class QueueEntry:
    y: np.ndarray        # full pseudo-labeling, training rows clamped
    priority: float      # validation accuracy when drawn
    round_drawn: int     # 0 = warmup


class PseudoLabelQueue:
    """FIFO-bounded pool of scored pseudo-labelings."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.entries: list[QueueEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def push(self, entry: QueueEntry) -> None:
        self.entries.append(entry)
        if len(self.entries) > self.capacity:
            self.entries.pop(0)  # oldest out

    def priorities(self) -> np.ndarray:
        return np.array([e.priority for e in self.entries], dtype=np.float64)

    def select(self, rng: np.random.Generator, tau: float, mode: str = "softmax") -> QueueEntry:
        if not self.entries:
            raise ValueError("cannot select from an empty queue")
        pr = self.priorities()
        if mode == "softmax":
            z = pr / tau
            w = np.exp(z - z.max())
        elif mode == "power":
            w = pr ** (1.0 / tau)
            if w.sum() == 0.0:
                w = np.ones_like(w)
        else:
            raise ValueError(f"unknown priority mode {mode!r}")
        p = w / w.sum()
        return self.entries[int(rng.choice(len(self.entries), p=p))]


def _val_accuracy(y: np.ndarray, bundle: GraphBundle) -> float:
    val = bundle.splits.val
    if val.size == 0:
        return 0.0
    return float(np.mean(y[val] == bundle.labels[val]))


def warmup_queue(
    bundle: GraphBundle,
    adj: NormalizedAdjacency,
    warm: TrainedModel,
    capacity: int,
    rng: np.random.Generator,
) -> PseudoLabelQueue:
    """Seed the queue with independent per-node draws from the warmup
    classifier's distribution, training rows clamped to the truth."""
    x = bundle.features.astype(np.float64)
    probs = forward_proba(warm.best_params, warm.cfg, adj, x, warm.eval_label_input)
    train = bundle.splits.train
    queue = PseudoLabelQueue(capacity)
    rows = np.arange(bundle.num_nodes)
    for _ in range(capacity):
        y = _draw_rows(probs, rows, rng)
        y[train] = bundle.labels[train]
        queue.push(QueueEntry(y, _val_accuracy(y, bundle), 0))
    return queue


def m_step(
    params: ad.ParamStore,
    gcfg: dn.GNNConfig,
    adj: NormalizedAdjacency,
    x: np.ndarray,
    sched: NoiseSchedule,
    y_pseudo: np.ndarray,
    rng: np.random.Generator,
    lr: float,
    weight_decay: float,
    t: int | None = None,
) -> float | None:
    """One masked-denoising gradient step at a uniformly drawn timestep.

    Returns the loss, or None when the mask draw left nothing to denoise
    (the parameters are not touched in that case).
    """
    if t is None:
        t = int(rng.integers(1, sched.num_steps + 1))
    yt = forward_mask(y_pseudo, t, sched, rng)
    weights, active = loss_weight_and_mask(y_pseudo, yt, sched)
    if not active.any():
        return None
    tape = ad.Tape()
    leaves = params.leaves(tape)
    label_mat = dn.label_matrix(yt.y, gcfg.num_classes)
    logits = dn.forward_logits(leaves, gcfg, adj, x, label_mat, t=t)
    loss = ad.weighted_softmax_ce(logits, y_pseudo, weights, active)
    tape.backward(loss)
    ad.optimizer_step(params, ad.collect_grads(leaves), lr, weight_decay)
    return float(loss.data[0, 0])


@dataclass
class EMResult:
    gcfg: dn.GNNConfig
    sched: NoiseSchedule
    params: ad.ParamStore        # final denoiser state
    best_params: ad.ParamStore   # highest E-step validation accuracy
    best_val_acc: float
    best_round: int
    queue: PseudoLabelQueue
    warmup: TrainedModel
    e_accs: list = field(default_factory=list)
    m_losses: list = field(default_factory=list)


def em_train(bundle: GraphBundle, adj: NormalizedAdjacency, cfg: TrainConfig) -> EMResult:
    cfg.validate()
    x = bundle.features.astype(np.float64)
    sched = cosine_schedule(cfg.T, cfg.cosine_offset)

    warm_cfg = GNNTrainConfig(cfg.hidden_dim, cfg.layers, cfg.warmup_epochs, cfg.lr, cfg.weight_decay)
    warm = train_vanilla_gnn(bundle, adj, warm_cfg, rngmod.stream(cfg.seed, rngmod.WARMUP_INIT))
    queue = warmup_queue(bundle, adj, warm, cfg.S, rngmod.stream(cfg.seed, rngmod.WARMUP_DRAW))

    gcfg = dn.GNNConfig(
        in_dim=bundle.num_features,
        num_classes=bundle.num_classes,
        hidden_dim=cfg.hidden_dim,
        layers=cfg.layers,
        time_dim=cfg.time_dim,
        gated=True,
    )
    params = dn.init_params(gcfg, rngmod.stream(cfg.seed, rngmod.DENOISER_INIT))
    result = EMResult(gcfg, sched, params, params.copy(), -1.0, -1, queue, warm)

    y_train_obs = np.full(bundle.num_nodes, UNKNOWN, dtype=np.int64)
    train = bundle.splits.train
    y_train_obs[train] = bundle.labels[train]

    em_rng = rngmod.stream(cfg.seed, rngmod.EM_LOOP)
    for rnd in range(1, cfg.em_rounds + 1):
        # E: one trajectory from the current denoiser, observed = train labels
        cache = dn.feature_cache(params, gcfg, x)
        predict_fn = lambda state: dn.denoise_predict(params, gcfg, adj, x, state, feat_cache=cache)
        y_sample = sample_conditional(predict_fn, sched, y_train_obs, em_rng)
        acc = _val_accuracy(y_sample, bundle)
        queue.push(QueueEntry(y_sample, acc, rnd))
        result.e_accs.append(acc)
        # ties keep the most recent denoiser, matching the warmup trainer
        if acc >= result.best_val_acc:
            result.best_val_acc = acc
            result.best_round = rnd
            result.best_params = params.copy()

        # M: gradient steps on prioritized queue draws
        for _ in range(cfg.m_steps_per_round):
            entry = queue.select(em_rng, cfg.tau, cfg.priority_mode)
            loss = m_step(params, gcfg, adj, x, sched, entry.y, em_rng, cfg.lr, cfg.weight_decay)
            if loss is not None:
                result.m_losses.append(loss)
    return result


def majority_vote(samples: np.ndarray, num_classes: int) -> np.ndarray:
    """Per-node plurality over K sampled labelings; ties go to the lowest id."""
    samples = np.asarray(samples)
    votes = np.zeros((samples.shape[1], num_classes), dtype=np.int64)
    for row in samples:
        votes[np.arange(row.shape[0]), row] += 1
    return np.argmax(votes, axis=1)


def predict(
    params: ad.ParamStore,
    gcfg: dn.GNNConfig,
    sched: NoiseSchedule,
    bundle: GraphBundle,
    adj: NormalizedAdjacency,
    rng: np.random.Generator,
    eval_samples: int = 10,
    condition_on: str = "train+val",
) -> np.ndarray:
    """Majority vote over conditional trajectories from a frozen denoiser."""
    x = bundle.features.astype(np.float64)
    y_obs = np.full(bundle.num_nodes, UNKNOWN, dtype=np.int64)
    idx = bundle.splits.train
    if condition_on == "train+val":
        idx = np.concatenate([idx, bundle.splits.val])
    elif condition_on != "train":
        raise ValueError(f"unknown condition_on {condition_on!r}")
    y_obs[idx] = bundle.labels[idx]

    cache = dn.feature_cache(params, gcfg, x)
    predict_fn = lambda state: dn.denoise_predict(params, gcfg, adj, x, state, feat_cache=cache)
    samples = np.stack([
        sample_conditional(predict_fn, sched, y_obs, rng) for _ in range(eval_samples)
    ])
    return majority_vote(samples, gcfg.num_classes)
