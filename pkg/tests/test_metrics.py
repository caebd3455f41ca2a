"""Hand-enumerated accuracy oracles and structural invariants."""

import numpy as np
import pytest
import scipy.sparse as sp

from redisc import rng as rngmod
from redisc.graph import generate_sbm
from redisc.metrics import node_accuracy, subgraph_accuracy


def from_edges(n, pairs):
    rows = [a for a, b in pairs] + [b for a, b in pairs]
    cols = [b for a, b in pairs] + [a for a, b in pairs]
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


ALL3 = np.arange(3)


class TestNodeAccuracy:
    def test_exact_fractions(self):
        truth = np.array([0, 1, 2])
        assert node_accuracy(truth, truth, ALL3) == 1.0
        assert node_accuracy(np.array([1, 2, 0]), truth, ALL3) == 0.0
        assert node_accuracy(np.array([0, 1, 0]), truth, ALL3) == pytest.approx(2 / 3)

    def test_index_restriction(self):
        truth = np.array([0, 1, 2, 0])
        pred = np.array([0, 1, 1, 1])
        assert node_accuracy(pred, truth, np.array([0, 1])) == 1.0
        assert node_accuracy(pred, truth, np.array([2, 3])) == 0.0

    def test_empty_idx_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            node_accuracy(ALL3, ALL3, np.array([], dtype=np.int64))
        with pytest.raises(ValueError, match="out of range"):
            node_accuracy(ALL3, ALL3, np.array([3]))


class TestSubgraphAccuracy:
    def test_triangle_one_wrong_zeroes_everything(self):
        # every node neighbors the wrong one, so no closed neighborhood is clean
        adj = from_edges(3, [(0, 1), (1, 2), (0, 2)])
        truth = np.array([0, 1, 2])
        pred = np.array([0, 1, 0])
        assert node_accuracy(pred, truth, ALL3) == pytest.approx(2 / 3)
        assert subgraph_accuracy(pred, truth, adj, ALL3) == 0.0
        assert subgraph_accuracy(truth, truth, adj, ALL3) == 1.0

    def test_star_center_wrong(self):
        adj = from_edges(5, [(0, i) for i in range(1, 5)])
        truth = np.zeros(5, dtype=np.int64)
        pred = np.array([1, 0, 0, 0, 0])
        assert subgraph_accuracy(pred, truth, adj, np.arange(5)) == 0.0

    def test_isolated_node_counts_by_itself(self):
        adj = from_edges(3, [(0, 1)])  # node 2 isolated
        truth = np.array([0, 0, 1])
        pred = np.array([0, 1, 1])
        # node 2 correct and unconstrained; nodes 0/1 spoiled by node 1
        assert subgraph_accuracy(pred, truth, adj, ALL3) == pytest.approx(1 / 3)
        pred2 = np.array([0, 0, 0])
        assert subgraph_accuracy(pred2, truth, adj, ALL3) == pytest.approx(2 / 3)

    def test_outside_nodes_still_constrain(self):
        # evaluating only node 0: its neighbor 1 is outside idx but wrong
        adj = from_edges(2, [(0, 1)])
        truth = np.array([0, 0])
        pred = np.array([0, 1])
        assert subgraph_accuracy(pred, truth, adj, np.array([0])) == 0.0

    @pytest.mark.parametrize("seed", range(4))
    def test_never_exceeds_node_accuracy(self, seed):
        g = generate_sbm(8, 3, 0.4, 0.2, 4, 0.3, rngmod.stream(seed, rngmod.SBM))
        rng = rngmod.stream(seed, rngmod.PREDICT)
        idx = np.arange(g.num_nodes)
        for _ in range(10):
            pred = rng.integers(0, 3, g.num_nodes)
            assert (subgraph_accuracy(pred, g.labels, g.adjacency, idx)
                    <= node_accuracy(pred, g.labels, idx))

    @pytest.mark.parametrize("seed", range(3))
    def test_permutation_invariance(self, seed):
        g = generate_sbm(7, 3, 0.5, 0.15, 4, 0.3, rngmod.stream(seed, rngmod.SBM))
        rng = rngmod.stream(seed, rngmod.PREDICT)
        n = g.num_nodes
        pred = rng.integers(0, 3, n)
        idx = rng.choice(n, 10, replace=False)
        perm = rng.permutation(n)
        # relabel node i as perm[i] everywhere
        p = sp.csr_matrix((np.ones(n), (perm, np.arange(n))), shape=(n, n))
        adj_p = (p @ g.adjacency @ p.T).tocsr()
        pred_p = np.empty(n, dtype=pred.dtype)
        truth_p = np.empty(n, dtype=g.labels.dtype)
        pred_p[perm] = pred
        truth_p[perm] = g.labels
        assert subgraph_accuracy(pred, g.labels, g.adjacency, idx) == pytest.approx(
            subgraph_accuracy(pred_p, truth_p, adj_p, perm[idx]))
        assert node_accuracy(pred, g.labels, idx) == pytest.approx(
            node_accuracy(pred_p, truth_p, perm[idx]))
