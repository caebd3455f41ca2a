"""Reader for the classic pickled citation-dataset release format.

A dataset directory holds eight files, ``ind.<name>.<suffix>``:

    x, tx, allx    scipy sparse feature matrices (python-2 pickles):
                   labeled training nodes, test nodes, and all non-test nodes
    y, ty, ally    matching one-hot label arrays
    graph          dict node -> neighbor list, covering every node
    test.index     node ids of the tx/ty rows, one per line, in row order

Node ids 0..len(allx)-1 are the non-test nodes; test rows live at the ids
listed in test.index. Some releases skip ids inside the test range — those
nodes exist in the graph but have no features or labels, so they get zero
feature rows and the unknown label. Neighbor lists may contain duplicates
and self-loops; both are collapsed and counted in the provenance block.
"""

import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from bundleconv.bundle import UNKNOWN, ConvertedGraph, ConvertError, dedupe_edges

SUFFIXES = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")
VAL_SIZE = 500  # nodes right after the training block, by convention


def _dataset_name(in_dir: Path) -> str:
    hits = sorted(in_dir.glob("ind.*.graph"))
    if not hits:
        raise ConvertError(f"no ind.<name>.graph file in {in_dir}")
    if len(hits) > 1:
        names = ", ".join(h.name for h in hits)
        raise ConvertError(f"multiple datasets in {in_dir}: {names}")
    return hits[0].name[len("ind."):-len(".graph")]


def _unpickle(path: Path):
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")  # python-2 era pickles


def _one_hot_to_labels(one_hot: np.ndarray) -> np.ndarray:
    labels = np.argmax(one_hot, axis=1).astype(np.int64)
    labels[np.asarray(one_hot).sum(axis=1) == 0] = UNKNOWN
    return labels


def load_planetoid(in_dir) -> ConvertedGraph:
    in_dir = Path(in_dir)
    name = _dataset_name(in_dir)
    paths = {s: in_dir / f"ind.{name}.{s}" for s in SUFFIXES}
    missing = [p.name for p in paths.values() if not p.exists()]
    if missing:
        raise ConvertError(f"missing files: {', '.join(missing)}")

    x = sp.csr_matrix(_unpickle(paths["x"]))
    tx = sp.csr_matrix(_unpickle(paths["tx"]))
    allx = sp.csr_matrix(_unpickle(paths["allx"]))
    y = np.asarray(_unpickle(paths["y"]))
    ty = np.asarray(_unpickle(paths["ty"]))
    ally = np.asarray(_unpickle(paths["ally"]))
    graph = _unpickle(paths["graph"])
    test_idx = np.array([int(line) for line in
                         paths["test.index"].read_text().split()], dtype=np.int64)

    if test_idx.size != tx.shape[0] or test_idx.size != ty.shape[0]:
        raise ConvertError(f"test.index lists {test_idx.size} nodes but tx/ty have "
                           f"{tx.shape[0]}/{ty.shape[0]} rows")
    if np.unique(test_idx).size != test_idx.size:
        raise ConvertError("test.index contains duplicate node ids")
    if allx.shape[0] != ally.shape[0] or tx.shape[1] != allx.shape[1]:
        raise ConvertError("feature/label matrix shapes disagree")
    if test_idx.min() < allx.shape[0]:
        raise ConvertError("test.index overlaps the non-test node range")

    n = max(int(test_idx.max()) + 1,
            allx.shape[0] + test_idx.size,
            max(graph.keys(), default=-1) + 1)
    d = allx.shape[1]
    num_classes = ally.shape[1]

    features = np.zeros((n, d), dtype=np.float32)
    features[:allx.shape[0]] = allx.toarray()
    features[test_idx] = tx.toarray()

    labels = np.full(n, UNKNOWN, dtype=np.int64)
    labels[:ally.shape[0]] = _one_hot_to_labels(ally)
    labels[test_idx] = _one_hot_to_labels(ty)

    pairs, self_loops = [], 0
    for u, neighbors in graph.items():
        for v in neighbors:
            if u == v:
                self_loops += 1
            else:
                pairs.append((u, v))
    pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size and pairs.max() >= n:
        raise ConvertError(f"edge references node {pairs.max()}, valid ids are [0, {n})")
    edges = dedupe_edges(pairs, n)

    train = np.arange(y.shape[0], dtype=np.int64)
    val = np.arange(y.shape[0], min(y.shape[0] + VAL_SIZE, ally.shape[0]), dtype=np.int64)
    known = labels != UNKNOWN
    splits = {
        "train": train[known[train]],
        "val": val[known[val]],
        "test": np.sort(test_idx),
    }
    return ConvertedGraph(
        edges=edges,
        features=features,
        labels=labels,
        num_classes=num_classes,
        splits=splits,
        provenance={
            "format": "planetoid",
            "dataset": name,
            "self_loops_dropped": self_loops,
            "directed_pairs_read": int(pairs.shape[0]),
            "undirected_edges": int(edges.shape[0]),
            "nodes_without_features": int(n - allx.shape[0] - test_idx.size),
        },
    )
