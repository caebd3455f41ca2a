"""Reader for plain-text graph directories.

Expected files inside the input directory:

    features.csv   header ``node_id,<any>,<any>,...``; one row per node,
                   ids 0..N-1 in any order, remaining columns are floats
    edges.csv      header ``src,dst``; one undirected edge per row —
                   duplicates (in either direction) collapse to a single
                   edge, self-loops are dropped and counted
    labels.csv     header ``node_id,class``; an empty class field or -1
                   means unlabeled; nodes absent from the file are unlabeled
    splits.csv     optional; header ``node_id,split`` with split one of
                   train / val / test
"""

import csv
from pathlib import Path

import numpy as np

from bundleconv.bundle import UNKNOWN, ConvertedGraph, ConvertError, dedupe_edges

SPLIT_NAMES = ("train", "val", "test")


def _read_rows(path: Path, expected_head: str) -> list[list[str]]:
    if not path.exists():
        raise ConvertError(f"missing {path.name}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows or ",".join(rows[0][:len(expected_head.split(","))]) != expected_head:
        raise ConvertError(f"{path.name} must start with a '{expected_head}' header")
    return rows[1:]


def _features(in_dir: Path) -> np.ndarray:
    rows = _read_rows(in_dir / "features.csv", "node_id")
    if not rows:
        raise ConvertError("features.csv has a header but no rows")
    n, d = len(rows), len(rows[0]) - 1
    if d < 1:
        raise ConvertError("features.csv rows need at least one feature column")
    feats = np.zeros((n, d), dtype=np.float32)
    seen = np.zeros(n, dtype=bool)
    for row in rows:
        if len(row) != d + 1:
            raise ConvertError(f"features.csv row for node {row[0]} has {len(row) - 1} "
                               f"columns, expected {d}")
        i = int(row[0])
        if not 0 <= i < n:
            raise ConvertError(f"features.csv node_id {i} outside [0, {n})")
        if seen[i]:
            raise ConvertError(f"features.csv lists node {i} twice")
        seen[i] = True
        feats[i] = [float(v) for v in row[1:]]
    return feats


def _labels(in_dir: Path, n: int) -> tuple[np.ndarray, int]:
    labels = np.full(n, UNKNOWN, dtype=np.int64)
    for row in _read_rows(in_dir / "labels.csv", "node_id,class"):
        i = int(row[0])
        if not 0 <= i < n:
            raise ConvertError(f"labels.csv node_id {i} outside [0, {n})")
        value = row[1].strip()
        if value and value != "-1":
            labels[i] = int(value)
    known = labels[labels != UNKNOWN]
    if known.size == 0:
        raise ConvertError("labels.csv labels no node at all")
    if known.min() < 0:
        raise ConvertError(f"labels.csv contains negative class {known.min()}")
    return labels, int(known.max()) + 1


def _edges(in_dir: Path, n: int) -> tuple[np.ndarray, int, int]:
    raw, self_loops = [], 0
    for row in _read_rows(in_dir / "edges.csv", "src,dst"):
        u, v = int(row[0]), int(row[1])
        if not (0 <= u < n and 0 <= v < n):
            raise ConvertError(f"edges.csv edge ({u}, {v}) references a node "
                               f"outside [0, {n})")
        if u == v:
            self_loops += 1
        else:
            raw.append((u, v))
    pairs = np.array(raw, dtype=np.int64).reshape(-1, 2)
    return dedupe_edges(pairs, n), len(raw), self_loops


def _splits(in_dir: Path, n: int) -> dict:
    splits = {name: [] for name in SPLIT_NAMES}
    path = in_dir / "splits.csv"
    if not path.exists():
        return {name: np.zeros(0, dtype=np.int64) for name in SPLIT_NAMES}
    for row in _read_rows(path, "node_id,split"):
        i, name = int(row[0]), row[1].strip()
        if name not in splits:
            raise ConvertError(f"splits.csv split {name!r} is not one of {SPLIT_NAMES}")
        if not 0 <= i < n:
            raise ConvertError(f"splits.csv node_id {i} outside [0, {n})")
        splits[name].append(i)
    return {name: np.array(sorted(idx), dtype=np.int64) for name, idx in splits.items()}


def load_csv(in_dir) -> ConvertedGraph:
    in_dir = Path(in_dir)
    features = _features(in_dir)
    n = features.shape[0]
    labels, num_classes = _labels(in_dir, n)
    edges, pairs_read, self_loops = _edges(in_dir, n)
    return ConvertedGraph(
        edges=edges,
        features=features,
        labels=labels,
        num_classes=num_classes,
        splits=_splits(in_dir, n),
        provenance={
            "format": "csv",
            "source": in_dir.name,
            "self_loops_dropped": self_loops,
            "edge_rows_read": pairs_read,
            "undirected_edges": int(edges.shape[0]),
        },
    )
