"""Time-aware GNN that predicts clean labels from a partially masked state.

One architecture serves every network in the package. Each layer transforms
the incoming node embedding, fuses in a transformed label embedding under a
learned per-node gate, and aggregates over the normalized adjacency:

    x_k = affine(x_{k-1})                     per-layer feature transform
    y_k = (labels @ embed) @ label_w_k        bias-free: masked rows stay zero
    gate = sigmoid(affine([time_mlp(enc(t)) ; y_k]))
    x_k = relu(A_hat @ (x_k + gate * y_k))    no relu on the last layer

With ``gated=False`` the gate is fixed to all-ones and the time pathway
disappears; that variant, fed observed labels (or all zeros), is exactly the
label-input GNN and the plain GNN used as baselines. Masked labels enter as
zero rows of the one-hot matrix, so they contribute nothing anywhere.

The output head always produces one logit per class, never one for the
masked state; revealed nodes get their known label forced back in after the
softmax (a plain overwrite outside the tape, so no gradient flows there).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from redisc import autodiff as ad
from redisc.schedule import LabelState


@dataclass(frozen=True)
class GNNConfig:
    in_dim: int
    num_classes: int
    hidden_dim: int = 64
    layers: int = 2
    time_dim: int = 128
    gated: bool = True

    def validate(self) -> None:
        if min(self.in_dim, self.num_classes, self.hidden_dim, self.layers) < 1:
            raise ValueError("in_dim, num_classes, hidden_dim, layers must be positive")
        if self.gated and (self.time_dim < 2 or self.time_dim % 2):
            raise ValueError("time_dim must be even and >= 2")


def init_params(cfg: GNNConfig, rng: np.random.Generator) -> ad.ParamStore:
    """He-scaled weights, zero biases. Draw order is fixed; never reorder."""
    cfg.validate()
    h = cfg.hidden_dim

    def he(rows, cols):
        return rng.standard_normal((rows, cols)) * np.sqrt(2.0 / rows)

    values: dict[str, np.ndarray] = {"embed": he(cfg.num_classes, h)}
    dim = cfg.in_dim
    for k in range(cfg.layers):
        values[f"layer{k}.feat_w"] = he(dim, h)
        values[f"layer{k}.feat_b"] = np.zeros((1, h))
        values[f"layer{k}.label_w"] = he(h, h)
        if cfg.gated:
            values[f"layer{k}.gate_w"] = he(2 * h, h)
            values[f"layer{k}.gate_b"] = np.zeros((1, h))
        dim = h
    if cfg.gated:
        values["time.w1"] = he(cfg.time_dim, h)
        values["time.b1"] = np.zeros((1, h))
        values["time.w2"] = he(h, h)
        values["time.b2"] = np.zeros((1, h))
    values["head_w"] = he(h, cfg.num_classes)
    values["head_b"] = np.zeros((1, cfg.num_classes))
    return ad.ParamStore(values)


def label_matrix(y: np.ndarray, num_classes: int) -> np.ndarray:
    """One-hot rows for known labels, all-zero rows for masked/unknown (< 0)."""
    y = np.asarray(y)
    out = np.zeros((y.shape[0], num_classes), dtype=np.float64)
    known = y >= 0
    if np.any(y[known] >= num_classes):
        raise ValueError(f"label outside [0, {num_classes})")
    out[known, y[known]] = 1.0
    return out


def feature_cache(params: ad.ParamStore, cfg: GNNConfig, x: np.ndarray) -> np.ndarray:
    """Precomputed first-layer feature transform for frozen-parameter sweeps
    (sampling loops re-run the network many times per parameter state)."""
    return x @ params.values["layer0.feat_w"] + params.values["layer0.feat_b"]


def forward_logits(
    params,
    cfg: GNNConfig,
    adj,
    x: np.ndarray,
    label_mat: np.ndarray,
    t: int | None = None,
    feat_cache: np.ndarray | None = None,
    collect: dict | None = None,
) -> ad.Tensor2:
    """Class logits for every node.

    ``params`` is a ParamStore (inference) or a dict of leaf tensors from
    ``ParamStore.leaves(tape)`` (training). ``t`` is required when gated and
    ignored otherwise. ``collect``, when a dict, receives per-layer gate
    activations under "gate0", "gate1", ...
    """
    if isinstance(params, ad.ParamStore):
        params = params.leaves(None)
    n = x.shape[0]
    if label_mat.shape != (n, cfg.num_classes):
        raise ValueError(f"label matrix must be {n} x {cfg.num_classes}, got {label_mat.shape}")
    if x.shape[1] != cfg.in_dim:
        raise ValueError(f"features must have {cfg.in_dim} columns, got {x.shape[1]}")
    if not np.isfinite(x).all():
        raise FloatingPointError("non-finite activation entering layer 0")

    embedded = ad.matmul(label_mat, params["embed"])
    if cfg.gated:
        if t is None:
            raise ValueError("gated forward needs a timestep")
        enc = ad.time_encoding(float(t), cfg.time_dim)
        tvec = ad.affine(ad.relu(ad.affine(enc, params["time.w1"], params["time.b1"])),
                         params["time.w2"], params["time.b2"])
        tvec_rows = ad.tile_rows(tvec, n)

    if feat_cache is not None and params["layer0.feat_w"].tape is not None:
        raise ValueError("feature cache is only valid for frozen (untracked) parameters")

    h = ad.Tensor2(x.astype(np.float64, copy=False)) if not isinstance(x, ad.Tensor2) else x
    for k in range(cfg.layers):
        if k == 0 and feat_cache is not None:
            xt = ad.Tensor2(feat_cache)
        else:
            xt = ad.affine(h, params[f"layer{k}.feat_w"], params[f"layer{k}.feat_b"])
        ylab = ad.matmul(embedded, params[f"layer{k}.label_w"])
        if cfg.gated:
            gate = ad.sigmoid(ad.affine(ad.concat_cols(tvec_rows, ylab),
                                        params[f"layer{k}.gate_w"], params[f"layer{k}.gate_b"]))
            if collect is not None:
                collect[f"gate{k}"] = gate.data.copy()
            fused = ad.add(xt, ad.mul(gate, ylab))
        else:
            fused = ad.add(xt, ylab)
        z = ad.sparse_propagate(adj, fused)
        h = ad.relu(z) if k < cfg.layers - 1 else z
        if not np.isfinite(h.data).all():
            raise FloatingPointError(f"non-finite activation leaving layer {k}")
    return ad.affine(h, params["head_w"], params["head_b"])


def denoise_predict(
    params: ad.ParamStore,
    cfg: GNNConfig,
    adj,
    x: np.ndarray,
    yt: LabelState,
    feat_cache: np.ndarray | None = None,
    forced_copy: bool = True,
) -> np.ndarray:
    """Per-node class distributions for a masked state.

    Revealed nodes are forced back to an exact one-hot of their current
    label after the softmax; only masked rows carry model uncertainty.
    """
    label_mat = label_matrix(yt.y, cfg.num_classes)
    logits = forward_logits(params, cfg, adj, x, label_mat,
                            t=yt.t if cfg.gated else None, feat_cache=feat_cache)
    probs = ad.softmax_rows(logits.data)
    if forced_copy:
        revealed = np.flatnonzero(yt.y >= 0)
        probs[revealed] = 0.0
        probs[revealed, yt.y[revealed]] = 1.0
    return probs
