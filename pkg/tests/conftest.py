import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def sym(n, weights, diag=1.0):
    S = np.zeros((n, n))
    for (i, j), w in weights.items():
        S[i, j] = S[j, i] = w
    np.fill_diagonal(S, diag)
    return S


@pytest.fixture
def four_vertex():
    """Two tight pairs {0,1} and {2,3} with weak cross links."""
    return sym(4, {(0, 1): 0.9, (2, 3): 0.85, (0, 2): 0.2, (1, 2): 0.25, (0, 3): 0.1, (1, 3): 0.15})


@pytest.fixture
def triangle_plus_outlier():
    """Triangle {0,1,2} at 0.9 and vertex 3 at 0.05 to each."""
    return sym(4, {(0, 1): 0.9, (0, 2): 0.9, (1, 2): 0.9, (0, 3): 0.05, (1, 3): 0.05, (2, 3): 0.05})


def block_similarity(rng, sizes, in_range=(0.7, 1.0), out_range=(0.0, 0.3)):
    n = sum(sizes)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    same = labels[:, None] == labels[None, :]
    vals = np.where(same, rng.uniform(*in_range, (n, n)), rng.uniform(*out_range, (n, n)))
    S = np.triu(vals, 1)
    S = S + S.T
    np.fill_diagonal(S, 1.0)
    return S, labels


def random_similarity(rng, n):
    S = np.triu(rng.random((n, n)), 1)
    S = S + S.T
    np.fill_diagonal(S, 1.0)
    return S


def random_cut_tree(rng, n_edges):
    """Random rooted tree with ``n_edges`` weighted edges, node 0 as root."""
    from aqcm.cut import WeightedCutTree
    from aqcm.graph import TreeNode

    weights = {}
    for c in range(1, n_edges + 1):
        p = int(rng.integers(0, c))
        weights[(p, c)] = float(rng.exponential(1.0))
    nodes = {i: TreeNode(i, 1, frozenset([i]), 0.5) for i in range(n_edges + 1)}
    return WeightedCutTree(root=0, nodes=nodes, weights=weights)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
