"""Bundle directory writer and recount.

The bundle layout is the interchange format between this tool and the
classifier package — the only coupling between the two:

    meta.json      num_nodes, num_features, num_classes, edges_stored,
                   plus a provenance block recording the conversion
    edges.bin      u64 LE pair count, then (u32, u32) LE node pairs;
                   canonical form stores every undirected edge once per
                   direction ("both"), sorted by (src, dst), no self-loops
    features.bin   num_nodes x num_features float32 LE, row major
    labels.bin     num_nodes u16 LE, 0xFFFF for unknown
    splits/*.idx   u64 LE count, then sorted u32 LE node indices
                   (train.idx, val.idx, test.idx)

Everything is validated before the first byte is written, so a failed
conversion never leaves a partial bundle behind.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

UNKNOWN = -1
UNKNOWN_U16 = 0xFFFF


class ConvertError(Exception):
    """Input data problem; conversion is aborted with nothing written."""


@dataclass
class ConvertedGraph:
    """In-memory result of parsing a source dataset, pre-serialization."""

    edges: np.ndarray               # undirected unique pairs, (m, 2) int64, src < dst
    features: np.ndarray            # (n, d) float32
    labels: np.ndarray              # (n,) int64, UNKNOWN where unlabeled
    num_classes: int
    splits: dict = field(default_factory=dict)   # name -> sorted int64 index array
    provenance: dict = field(default_factory=dict)

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    def validate(self) -> None:
        n = self.num_nodes
        if n == 0 or self.features.shape[1] == 0:
            raise ConvertError("feature matrix is empty")
        if not np.isfinite(self.features).all():
            raise ConvertError("features contain a non-finite value")
        if self.labels.shape != (n,):
            raise ConvertError(f"expected {n} labels, got {self.labels.shape[0]}")
        known = self.labels[self.labels != UNKNOWN]
        if known.size and (known.min() < 0 or known.max() >= self.num_classes):
            raise ConvertError(f"label outside [0, {self.num_classes})")
        if self.num_classes < 1 or self.num_classes >= UNKNOWN_U16:
            raise ConvertError(f"num_classes {self.num_classes} out of storable range")
        if self.edges.size:
            if self.edges.min() < 0 or self.edges.max() >= n:
                bad = self.edges[(self.edges < 0) | (self.edges >= n)][0]
                raise ConvertError(f"edge references node {bad}, valid ids are [0, {n})")
            if (self.edges[:, 0] == self.edges[:, 1]).any():
                raise ConvertError("edge list contains a self-loop")
        for name, idx in self.splits.items():
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ConvertError(f"{name} split index out of range [0, {n})")
            if np.unique(idx).size != idx.size:
                raise ConvertError(f"{name} split contains duplicate indices")


def dedupe_edges(pairs: np.ndarray, num_nodes: int) -> np.ndarray:
    """Undirected unique edges from any directed pair soup: orient each pair
    src < dst, drop duplicates, keep self-loops out of the caller's way by
    rejecting them upstream."""
    if pairs.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = np.asarray(pairs, dtype=np.int64)
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    enc = np.unique(lo * np.int64(num_nodes) + hi)
    return np.stack([enc // num_nodes, enc % num_nodes], axis=1)


def write_bundle(graph: ConvertedGraph, out_dir) -> Path:
    """Serialize to the canonical bundle layout; validates first, writes after."""
    graph.validate()
    root = Path(out_dir)
    (root / "splits").mkdir(parents=True, exist_ok=True)

    meta = {
        "num_nodes": graph.num_nodes,
        "num_features": int(graph.features.shape[1]),
        "num_classes": graph.num_classes,
        "edges_stored": "both",
        "provenance": graph.provenance,
    }
    (root / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n",
                                    encoding="utf-8")

    both = np.concatenate([graph.edges, graph.edges[:, ::-1]], axis=0)
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order].astype("<u4")
    (root / "edges.bin").write_bytes(len(both).to_bytes(8, "little") + both.tobytes())

    feats = np.ascontiguousarray(graph.features, dtype="<f4")
    (root / "features.bin").write_bytes(feats.tobytes())

    u16 = graph.labels.astype(np.int64).copy()
    u16[u16 == UNKNOWN] = UNKNOWN_U16
    (root / "labels.bin").write_bytes(u16.astype("<u2").tobytes())

    for name in ("train", "val", "test"):
        idx = np.sort(graph.splits.get(name, np.zeros(0, dtype=np.int64))).astype("<u4")
        (root / "splits" / f"{name}.idx").write_bytes(
            len(idx).to_bytes(8, "little") + idx.tobytes())
    return root


def recount(bundle_dir) -> dict:
    """Re-derive the statistics of a bundle from its binary files alone.

    The feature dimension is the only number taken from meta.json (the byte
    stream does not encode the row split); everything else is counted from
    the raw bytes so a stale meta.json cannot mask a bad conversion.
    """
    root = Path(bundle_dir)
    meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))

    raw = (root / "labels.bin").read_bytes()
    num_nodes = len(raw) // 2
    u16 = np.frombuffer(raw, dtype="<u2")
    known = u16[u16 != UNKNOWN_U16]
    num_classes = int(known.max()) + 1 if known.size else 0

    raw = (root / "edges.bin").read_bytes()
    pairs = np.frombuffer(raw, dtype="<u4", offset=8).reshape(-1, 2).astype(np.int64)
    num_edges = dedupe_edges(pairs, max(num_nodes, 1)).shape[0]

    feat_bytes = (root / "features.bin").stat().st_size
    num_features = feat_bytes // (4 * num_nodes) if num_nodes else 0

    counted = {
        "num_nodes": num_nodes,
        "num_edges": num_edges,
        "num_features": num_features,
        "num_classes": num_classes,
    }
    # meta must agree with the bytes it describes
    for key in ("num_nodes", "num_features"):
        if int(meta[key]) != counted[key]:
            raise ConvertError(f"meta.json {key}={meta[key]} disagrees with "
                               f"recounted {counted[key]}")
    if int(meta["num_classes"]) < counted["num_classes"]:
        raise ConvertError(f"meta.json num_classes={meta['num_classes']} is smaller "
                           f"than a stored label implies ({counted['num_classes']})")
    counted["num_classes"] = int(meta["num_classes"])
    return counted
