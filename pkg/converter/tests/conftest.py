import csv
import pickle
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

DATA = Path(__file__).parent / "data"


def write_planetoid_dir(
    root: Path,
    name: str = "toy",
    test_ids=(7, 9, 6),      # shuffled on purpose; 8 missing -> a gap node
    graph=None,
):
    """Synthetic eight-file raw dataset: 6 non-test nodes (4 train), 3 test
    nodes, feature column 0 holds 10*node_id so reordering is detectable."""
    root.mkdir(parents=True, exist_ok=True)
    d, c = 5, 3
    test_ids = np.array(test_ids, dtype=np.int64)
    n_allx = 6

    def feat_rows(ids):
        rows = np.zeros((len(ids), d), dtype=np.float32)
        rows[:, 0] = 10.0 * np.asarray(ids)
        return rows

    def one_hot(labels):
        return np.eye(c, dtype=np.int32)[np.asarray(labels)]

    allx_labels = [0, 1, 2, 0, 1, 2]
    test_labels = [ (i % c) for i in test_ids ]
    blobs = {
        "x": sp.csr_matrix(feat_rows(range(4))),
        "y": one_hot(allx_labels[:4]),
        "allx": sp.csr_matrix(feat_rows(range(n_allx))),
        "ally": one_hot(allx_labels),
        "tx": sp.csr_matrix(feat_rows(test_ids)),
        "ty": one_hot(test_labels),
        "graph": graph if graph is not None else {
            0: [1, 1, 2],      # duplicate neighbor entry
            1: [0, 3],
            2: [0, 2, 4],      # self-loop
            3: [1],
            4: [2, 7],
            5: [6],
            6: [5],
            7: [4],
            8: [9],
            9: [8],
        },
    }
    for suffix, blob in blobs.items():
        with open(root / f"ind.{name}.{suffix}", "wb") as fh:
            pickle.dump(blob, fh, protocol=2)
    (root / f"ind.{name}.test.index").write_text(
        "\n".join(str(i) for i in test_ids) + "\n")
    return root


def write_csv_dir(
    root: Path,
    num_nodes: int = 6,
    edges=((0, 1), (1, 2), (2, 3), (3, 4), (4, 5)),
    labels=((0, 0), (1, 0), (2, 1), (3, 1), (4, ""), (5, -1)),
    splits=((0, "train"), (2, "train"), (1, "val"), (3, "test")),
    feat_dim: int = 3,
):
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "features.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id"] + [f"f{j}" for j in range(feat_dim)])
        for i in range(num_nodes):
            w.writerow([i] + [round(0.5 * i + 0.1 * j, 3) for j in range(feat_dim)])
    with open(root / "edges.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst"])
        w.writerows(edges)
    with open(root / "labels.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "class"])
        w.writerows(labels)
    if splits is not None:
        with open(root / "splits.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node_id", "split"])
            w.writerows(splits)
    return root


@pytest.fixture
def planetoid_dir(tmp_path):
    return write_planetoid_dir(tmp_path / "raw")


@pytest.fixture
def csv_dir(tmp_path):
    return write_csv_dir(tmp_path / "raw")
