"""Graph bundles: on-disk format, GCN normalization, splits, synthetic graphs.

A bundle is a directory with a fixed little-endian layout:

    meta.json      {"num_nodes", "num_features", "num_classes", "edges_stored"}
    edges.bin      u64 pair count, then (u32 src, u32 dst) per directed pair
    features.bin   float32 row-major, num_nodes x num_features, no header
    labels.bin     u16 per node, 0xFFFF meaning unknown
    splits/train.idx, splits/val.idx, splits/test.idx
                   u64 count, then u32 node indices each

``edges_stored`` is "both" (canonical: each undirected edge appears in both
directions) or "once" (symmetrized on load). ``save_bundle`` always writes
the canonical form with lexicographically sorted edges, so a bundle written
by it survives a load/save cycle byte-identically.

In memory the adjacency is a scipy CSR matrix of undirected edges with no
self-loops; unknown labels use the ``UNKNOWN`` sentinel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

UNKNOWN = -1            # in-memory unknown-label sentinel
_UNKNOWN_U16 = 0xFFFF   # on-disk sentinel


class BundleError(ValueError):
    """Malformed bundle; names the offending file and byte offset."""

    def __init__(self, filename: str, offset: int, message: str):
        self.filename = filename
        self.offset = offset
        super().__init__(f"{filename} @ byte {offset}: {message}")


@dataclass
class SplitSpec:
    """Disjoint node index sets; test indices may be labeled (metrics only)."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    @staticmethod
    def empty() -> "SplitSpec":
        z = np.zeros(0, dtype=np.int64)
        return SplitSpec(z.copy(), z.copy(), z.copy())

    def validate(self, num_nodes: int, labels: np.ndarray | None = None) -> None:
        names = ("train", "val", "test")
        sets = []
        for name, idx in zip(names, (self.train, self.val, self.test)):
            idx = np.asarray(idx)
            if idx.size and (idx.min() < 0 or idx.max() >= num_nodes):
                raise ValueError(f"{name} split index out of range [0, {num_nodes})")
            if np.unique(idx).size != idx.size:
                raise ValueError(f"{name} split contains duplicate indices")
            sets.append(set(idx.tolist()))
        if (sets[0] & sets[1]) or (sets[0] & sets[2]) or (sets[1] & sets[2]):
            raise ValueError("train/val/test splits overlap")
        if labels is not None:
            for name, idx in zip(names[:2], (self.train, self.val)):
                if idx.size and np.any(labels[idx] == UNKNOWN):
                    raise ValueError(f"{name} split contains a node with unknown label")


@dataclass
class GraphBundle:
    """Undirected graph with node features, partial labels, and splits."""

    adjacency: sp.csr_matrix     # N x N, binary, symmetric, zero diagonal
    features: np.ndarray         # N x d float32
    labels: np.ndarray           # length N int64, UNKNOWN where unlabeled
    num_classes: int
    splits: SplitSpec

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        """Undirected edge count."""
        return self.adjacency.nnz // 2

    def validate(self) -> None:
        n = self.adjacency.shape[0]
        if self.adjacency.shape != (n, n):
            raise ValueError("adjacency must be square")
        if self.adjacency.diagonal().any():
            raise ValueError("adjacency stores self-loops")
        if (self.adjacency != self.adjacency.T).nnz != 0:
            raise ValueError("adjacency is not symmetric")
        if self.features.shape[0] != n or self.labels.shape[0] != n:
            raise ValueError("features/labels row count does not match adjacency")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain a non-finite value")
        known = self.labels != UNKNOWN
        if known.any():
            vals = self.labels[known]
            if vals.min() < 0 or vals.max() >= self.num_classes:
                raise ValueError("label outside [0, num_classes)")
        self.splits.validate(n, self.labels)


# ---------------------------------------------------------------------------
# binary IO

def _read_index_file(path: Path, num_nodes: int) -> np.ndarray:
    raw = path.read_bytes()
    name = f"splits/{path.name}"
    if len(raw) < 8:
        raise BundleError(name, 0, "truncated header")
    count = int.from_bytes(raw[:8], "little")
    if len(raw) != 8 + 4 * count:
        raise BundleError(name, len(raw), f"expected {8 + 4 * count} bytes for {count} indices")
    idx = np.frombuffer(raw, dtype="<u4", offset=8).astype(np.int64)
    bad = np.flatnonzero(idx >= num_nodes)
    if bad.size:
        raise BundleError(name, 8 + 4 * int(bad[0]), f"node index {idx[bad[0]]} out of range")
    return np.sort(idx)


def load_bundle(path: str | Path) -> GraphBundle:
    """Read a bundle directory, validating layout and value ranges."""
    root = Path(path)
    try:
        meta = json.loads((root / "meta.json").read_text("utf-8"))
    except FileNotFoundError:
        raise BundleError("meta.json", 0, "missing")
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise BundleError("meta.json", 0, f"unparseable: {e}")
    for key in ("num_nodes", "num_features", "num_classes", "edges_stored"):
        if key not in meta:
            raise BundleError("meta.json", 0, f"missing key {key!r}")
    n, d, c = int(meta["num_nodes"]), int(meta["num_features"]), int(meta["num_classes"])
    stored = meta["edges_stored"]
    if stored not in ("both", "once"):
        raise BundleError("meta.json", 0, f'edges_stored must be "both" or "once", got {stored!r}')
    if n <= 0 or d <= 0 or c <= 0:
        raise BundleError("meta.json", 0, "num_nodes/num_features/num_classes must be positive")

    raw = (root / "edges.bin").read_bytes()
    if len(raw) < 8:
        raise BundleError("edges.bin", 0, "truncated header")
    count = int.from_bytes(raw[:8], "little")
    if len(raw) != 8 + 8 * count:
        raise BundleError("edges.bin", len(raw), f"expected {8 + 8 * count} bytes for {count} pairs")
    pairs = np.frombuffer(raw, dtype="<u4", offset=8).reshape(-1, 2).astype(np.int64)
    bad = np.flatnonzero((pairs[:, 0] >= n) | (pairs[:, 1] >= n))
    if bad.size:
        i = int(bad[0])
        raise BundleError("edges.bin", 8 + 8 * i, f"edge pair {tuple(pairs[i])} references a node >= {n}")
    loops = np.flatnonzero(pairs[:, 0] == pairs[:, 1])
    if loops.size:
        i = int(loops[0])
        raise BundleError("edges.bin", 8 + 8 * i, f"self-loop on node {pairs[i, 0]}")

    raw = (root / "features.bin").read_bytes()
    if len(raw) != 4 * n * d:
        raise BundleError("features.bin", len(raw), f"expected {4 * n * d} bytes")
    features = np.frombuffer(raw, dtype="<f4").reshape(n, d)
    finite = np.isfinite(features.ravel())
    if not finite.all():
        i = int(np.flatnonzero(~finite)[0])
        raise BundleError("features.bin", 4 * i, f"non-finite value at node {i // d}, column {i % d}")

    raw = (root / "labels.bin").read_bytes()
    if len(raw) != 2 * n:
        raise BundleError("labels.bin", len(raw), f"expected {2 * n} bytes")
    u16 = np.frombuffer(raw, dtype="<u2")
    labels = u16.astype(np.int64)
    labels[u16 == _UNKNOWN_U16] = UNKNOWN
    bad = np.flatnonzero((labels != UNKNOWN) & (labels >= c))
    if bad.size:
        i = int(bad[0])
        raise BundleError("labels.bin", 2 * i, f"label {labels[i]} >= num_classes {c}")

    splits = SplitSpec(
        train=_read_index_file(root / "splits" / "train.idx", n),
        val=_read_index_file(root / "splits" / "val.idx", n),
        test=_read_index_file(root / "splits" / "test.idx", n),
    )

    # Dedupe directed pairs, then symmetrize. "both" must already be symmetric.
    enc = pairs[:, 0] * n + pairs[:, 1]
    pairs = pairs[np.unique(enc, return_index=True)[1]]
    adj = sp.csr_matrix(
        (np.ones(len(pairs), dtype=np.float32), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
    )
    if stored == "once":
        adj = ((adj + adj.T) > 0).astype(np.float32).tocsr()
    elif (adj != adj.T).nnz != 0:
        raise BundleError("edges.bin", 0, 'edges_stored is "both" but the pair set is not symmetric')
    adj.sort_indices()

    bundle = GraphBundle(adj, features.copy(), labels, c, splits)
    bundle.validate()
    return bundle


def _write_index_file(path: Path, idx: np.ndarray) -> None:
    idx = np.sort(np.asarray(idx)).astype("<u4")
    path.write_bytes(len(idx).to_bytes(8, "little") + idx.tobytes())


def save_bundle(bundle: GraphBundle, path: str | Path) -> None:
    """Write the canonical form: edges_stored "both", edges sorted by (src, dst)."""
    bundle.validate()
    root = Path(path)
    (root / "splits").mkdir(parents=True, exist_ok=True)

    meta = {
        "num_nodes": bundle.num_nodes,
        "num_features": bundle.num_features,
        "num_classes": bundle.num_classes,
        "edges_stored": "both",
    }
    (root / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", "utf-8")

    coo = bundle.adjacency.tocoo()
    order = np.lexsort((coo.col, coo.row))
    pairs = np.stack([coo.row[order], coo.col[order]], axis=1).astype("<u4")
    (root / "edges.bin").write_bytes(len(pairs).to_bytes(8, "little") + pairs.tobytes())

    (root / "features.bin").write_bytes(np.ascontiguousarray(bundle.features, dtype="<f4").tobytes())

    u16 = bundle.labels.astype(np.int64).copy()
    u16[u16 == UNKNOWN] = _UNKNOWN_U16
    (root / "labels.bin").write_bytes(u16.astype("<u2").tobytes())

    _write_index_file(root / "splits" / "train.idx", bundle.splits.train)
    _write_index_file(root / "splits" / "val.idx", bundle.splits.val)
    _write_index_file(root / "splits" / "test.idx", bundle.splits.test)


# ---------------------------------------------------------------------------
# normalization

class NormalizedAdjacency:
    """Symmetric propagation matrix with self-loops, weights 1/sqrt(deg_i deg_j).

    ``mat`` keeps the contractual float32 weights; ``mat64`` is the same matrix
    upcast once so training math stays in 64-bit.
    """

    def __init__(self, mat: sp.csr_matrix):
        self.mat = mat
        self.mat64 = mat.astype(np.float64)
        self.mat64.sort_indices()

    @property
    def shape(self) -> tuple[int, int]:
        return self.mat.shape


def normalize_adjacency(adj: sp.csr_matrix) -> NormalizedAdjacency:
    """GCN normalization of a binary adjacency: D^-1/2 (A + I) D^-1/2."""
    n = adj.shape[0]
    a = (adj.astype(np.float64) + sp.eye(n, format="csr", dtype=np.float64)).tocoo()
    deg = np.zeros(n, dtype=np.float64)
    np.add.at(deg, a.row, 1.0)
    w = (1.0 / np.sqrt(deg[a.row] * deg[a.col])).astype(np.float32)
    mat = sp.csr_matrix((w, (a.row, a.col)), shape=(n, n))
    mat.sort_indices()
    return NormalizedAdjacency(mat)


# ---------------------------------------------------------------------------
# splits and synthetic graphs

def make_per_class_split(
    labels: np.ndarray,
    num_classes: int,
    per_class_train: int,
    per_class_val: int,
    rng: np.random.Generator,
) -> SplitSpec:
    """Class-balanced transductive split: fixed train/val counts per class,
    every remaining labeled node becomes test."""
    train, val, test = [], [], []
    need = per_class_train + per_class_val
    for c in range(num_classes):
        idx = np.flatnonzero(labels == c)
        if idx.size < need:
            raise ValueError(f"class {c} has {idx.size} labeled nodes, needs >= {need}")
        perm = rng.permutation(idx)
        train.append(perm[:per_class_train])
        val.append(perm[per_class_train:need])
        test.append(perm[need:])
    return SplitSpec(
        train=np.sort(np.concatenate(train)),
        val=np.sort(np.concatenate(val)),
        test=np.sort(np.concatenate(test)),
    )


def generate_sbm(
    n_per_class: int,
    num_classes: int,
    p_in: float,
    p_out: float,
    feat_dim: int,
    feat_noise: float,
    rng: np.random.Generator,
) -> GraphBundle:
    """Stochastic block model with one community per class.

    Features are the class centroid (a one-hot axis, wrapping when feat_dim <
    num_classes) plus isotropic Gaussian noise. Labels are the block ids and
    all nodes are labeled; splits start empty. Edges are drawn before
    features, so the edge set is reproducible independently of feat_dim.
    """
    n = n_per_class * num_classes
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), n_per_class)

    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    src, dst = np.nonzero(upper | upper.T)
    adj = sp.csr_matrix((np.ones(src.size, dtype=np.float32), (src, dst)), shape=(n, n))
    adj.sort_indices()

    centroids = np.eye(feat_dim, dtype=np.float64)[labels % feat_dim]
    feats = centroids + feat_noise * rng.standard_normal((n, feat_dim))

    bundle = GraphBundle(adj, feats.astype(np.float32), labels, num_classes, SplitSpec.empty())
    bundle.validate()
    return bundle
