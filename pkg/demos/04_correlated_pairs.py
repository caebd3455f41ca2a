"""
Why sample jointly? Correlated pairs
====================================

A classifier that predicts each node independently can be individually
calibrated yet jointly wrong. Build a graph of disconnected two-node pairs
where both endpoints always share a label, but the two classes are equally
likely and the features carry no signal: per-node marginals are uniform, so
independent draws agree only half the time. Sampling labels jointly — each
reveal conditions on the labels already revealed — recovers the within-pair
correlation that the marginals cannot express.
"""

import numpy as np
import scipy.sparse as sp

from redisc import (
    BASELINE,
    PREDICT,
    SPLIT,
    GNNTrainConfig,
    GraphBundle,
    SplitSpec,
    TrainConfig,
    UNKNOWN,
    denoise_predict,
    em_train,
    feature_cache,
    forward_proba,
    normalize_adjacency,
    sample_conditional,
    stream,
    train_vanilla_gnn,
)

# 60 pairs, one edge each; identical all-ones features everywhere.
num_pairs = 60
n = 2 * num_pairs
left = np.arange(0, n, 2)
rows, cols = np.concatenate([left, left + 1]), np.concatenate([left + 1, left])
adj_raw = sp.csr_matrix((np.ones(rows.size, dtype=np.float32), (rows, cols)), shape=(n, n))
pair_labels = np.repeat(np.array([0, 1]), num_pairs // 2)
labels = np.repeat(pair_labels, 2).astype(np.int64)
bundle = GraphBundle(adj_raw, np.ones((n, 4), dtype=np.float32), labels, 2,
                     SplitSpec.empty())

# Label 10 pairs per class for training, 3 per class for validation.
rng = stream(0, SPLIT)
train_pairs, val_pairs = [], []
for c in (0, 1):
    pool = rng.permutation(np.flatnonzero(pair_labels == c))
    train_pairs.append(pool[:10])
    val_pairs.append(pool[10:13])
train_pairs = np.sort(np.concatenate(train_pairs))
val_pairs = np.sort(np.concatenate(val_pairs))
test_pairs = np.setdiff1d(np.arange(num_pairs), np.concatenate([train_pairs, val_pairs]))
nodes = lambda pairs: np.sort(np.concatenate([2 * pairs, 2 * pairs + 1]))
bundle.splits = SplitSpec(nodes(train_pairs), nodes(val_pairs), nodes(test_pairs))
adj = normalize_adjacency(bundle.adjacency)
x = bundle.features.astype(np.float64)

# Train the diffusion model and draw 30 joint samples conditioned on the
# labeled pairs.
cfg = TrainConfig(T=8, S=8, em_rounds=60, m_steps_per_round=2, warmup_epochs=200,
                  eval_samples=30, hidden_dim=16, time_dim=16, weight_decay=1e-4)
result = em_train(bundle, adj, cfg)
cache = feature_cache(result.best_params, result.gcfg, x)
predict_fn = lambda state: denoise_predict(result.best_params, result.gcfg, adj, x,
                                           state, feat_cache=cache)
y_obs = np.full(n, UNKNOWN, dtype=np.int64)
held = np.concatenate([bundle.splits.train, bundle.splits.val])
y_obs[held] = labels[held]
prng = stream(0, PREDICT)
joint = np.stack([sample_conditional(predict_fn, result.sched, y_obs, prng)
                  for _ in range(30)])

# Independent baseline: train the plain classifier, then draw per-node
# categorical samples from its (deliberately uniform) output distribution.
model = train_vanilla_gnn(bundle, adj,
                          GNNTrainConfig(hidden_dim=16, layers=2, epochs=200,
                                         lr=0.01, weight_decay=1e-4),
                          stream(0, BASELINE))
probs = forward_proba(model.best_params, model.cfg, adj, x)
print("independent per-node distribution (any node):", probs[0].round(3))
u = stream(0, PREDICT, 1).random((30, n))
independent = np.minimum((u[:, :, None] >= np.cumsum(probs, axis=1)[None]).sum(axis=2), 1)


def agreement(samples):
    return float(np.mean(samples[:, 2 * test_pairs] == samples[:, 2 * test_pairs + 1]))


print(f"within-pair agreement on {test_pairs.size} unlabeled pairs:")
print(f"  joint sampling        {agreement(joint):.3f}")
print(f"  independent sampling  {agreement(independent):.3f}  (≈ 0.5 by symmetry)")
