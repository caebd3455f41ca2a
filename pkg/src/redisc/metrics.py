"""Node- and neighborhood-level accuracy.

Subgraph accuracy credits a node only when it and every one of its raw-graph
neighbors are predicted correctly — the structured-prediction analogue of
exact-match accuracy on each closed neighborhood. Degree-0 nodes have an
empty neighbor constraint, so they count by their own correctness alone.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def _check_idx(idx: np.ndarray, n: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("metric needs a non-empty node set")
    if idx.min() < 0 or idx.max() >= n:
        raise ValueError("node set out of range")
    return idx


def node_accuracy(pred: np.ndarray, truth: np.ndarray, idx: np.ndarray) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    idx = _check_idx(idx, pred.shape[0])
    return float(np.mean(pred[idx] == truth[idx]))


def subgraph_accuracy(
    pred: np.ndarray,
    truth: np.ndarray,
    adj: sp.csr_matrix,
    idx: np.ndarray,
) -> float:
    """Fraction of idx whose closed neighborhood is entirely correct.

    Neighbors come from the raw (unnormalized, no self-loop) adjacency;
    nodes outside idx still constrain their neighbors inside it.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    idx = _check_idx(idx, pred.shape[0])
    wrong = (pred != truth).astype(np.float64)
    wrong_neighbors = np.asarray(adj @ wrong).ravel()
    ok = (wrong == 0.0) & (wrong_neighbors == 0.0)
    return float(np.mean(ok[idx]))
