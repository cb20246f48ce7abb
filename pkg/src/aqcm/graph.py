"""Core types: similarity matrices, clusters and the generalized hierarchy tree."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

Cluster = frozenset
ClusterFamily = list


class SimilarityMatrix:
    """Symmetric, non-negative n x n similarity matrix.

    The diagonal is carried along but never read by the clustering code.
    The backing array is copied and frozen on construction.
    """

    def __init__(self, values, atol: float = 1e-9):
        arr = np.array(values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"similarity matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("similarity matrix contains non-finite values")
        if not np.allclose(arr, arr.T, atol=atol, rtol=0.0):
            i, j = np.unravel_index(np.argmax(np.abs(arr - arr.T)), arr.shape)
            raise ValueError(f"similarity matrix is not symmetric at ({i}, {j})")
        if np.any(arr < -atol):
            raise ValueError("similarity matrix has negative entries")
        arr = np.clip((arr + arr.T) / 2.0, 0.0, None)
        arr.setflags(write=False)
        self.values = arr

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, key):
        return self.values[key]

    def __repr__(self) -> str:
        return f"SimilarityMatrix(n={self.n})"


def as_array(S) -> np.ndarray:
    """Return the raw ndarray behind ``S`` (a SimilarityMatrix or array-like)."""
    if isinstance(S, SimilarityMatrix):
        return S.values
    return np.asarray(S, dtype=float)


def _indices(C, n: int) -> np.ndarray:
    idx = np.fromiter(sorted(C), dtype=np.intp, count=len(C))
    if len(idx) and (idx[0] < 0 or idx[-1] >= n):
        raise IndexError(f"cluster index out of range for n={n}: {sorted(C)}")
    return idx


def density(C: Iterable[int], S) -> float:
    """Mean pairwise similarity inside ``C``; 1.0 for a singleton."""
    S = as_array(S)
    C = frozenset(C)
    if not C:
        raise ValueError("density of an empty cluster is undefined")
    idx = _indices(C, S.shape[0])
    k = len(idx)
    if k == 1:
        return 1.0
    block = S[np.ix_(idx, idx)]
    total = (block.sum() - np.trace(block)) / 2.0
    return float(2.0 * total / (k * (k - 1)))


def contribution(v: int, C: Iterable[int], S) -> float:
    """Mean similarity between the outside vertex ``v`` and members of ``C``."""
    S = as_array(S)
    C = frozenset(C)
    if v in C:
        raise ValueError(f"vertex {v} is already a member of the cluster")
    if not C:
        raise ValueError("contribution to an empty cluster is undefined")
    n = S.shape[0]
    if not 0 <= v < n:
        raise IndexError(f"vertex {v} out of range for n={n}")
    idx = _indices(C, n)
    return float(S[v, idx].mean())


@dataclass(frozen=True)
class TreeNode:
    id: int
    level: int
    members: frozenset
    density: float
    unclustered: bool = False

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class HierarchyTree:
    """Leveled hierarchy in which a node may have several parents.

    ``edges`` holds (parent_id, child_id) pairs. Leaves are the level-0
    singletons, one per base data point, with ids equal to the point index.
    """

    nodes: list[TreeNode]
    edges: list[tuple[int, int]]
    root: int
    _by_id: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._by_id = {node.id: node for node in self.nodes}

    def node(self, node_id: int) -> TreeNode:
        return self._by_id[node_id]

    def __contains__(self, node_id) -> bool:
        return node_id in self._by_id

    def children(self, node_id: int) -> list[int]:
        return [c for p, c in self.edges if p == node_id]

    def parents(self, node_id: int) -> list[int]:
        return [p for p, c in self.edges if c == node_id]

    def child_map(self) -> dict[int, list[int]]:
        out = {node.id: [] for node in self.nodes}
        for p, c in self.edges:
            out[p].append(c)
        return out

    def parent_map(self) -> dict[int, list[int]]:
        out = {node.id: [] for node in self.nodes}
        for p, c in self.edges:
            out[c].append(p)
        return out

    @property
    def leaves(self) -> list[TreeNode]:
        return [node for node in self.nodes if node.level == 0]

    @property
    def height(self) -> int:
        return self.node(self.root).level

    def levels(self) -> dict[int, list[TreeNode]]:
        out: dict[int, list[TreeNode]] = {}
        for node in self.nodes:
            out.setdefault(node.level, []).append(node)
        return out

    def leaf_order(self) -> list[int]:
        """Depth-first leaf permutation, children visited in id order.

        Useful for laying out a reordered heat map of the similarity matrix.
        """
        cmap = self.child_map()
        order, seen = [], set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            node = self.node(nid)
            if node.level == 0:
                if nid not in seen:
                    seen.add(nid)
                    order.append(nid)
                continue
            stack.extend(sorted(cmap[nid], reverse=True))
        return order

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "nodes": [
                {
                    "id": n.id,
                    "level": n.level,
                    "members": sorted(n.members),
                    "density": n.density,
                    "unclustered": n.unclustered,
                }
                for n in sorted(self.nodes, key=lambda n: n.id)
            ],
            "edges": [list(e) for e in sorted(self.edges)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HierarchyTree":
        nodes = [
            TreeNode(
                id=int(d["id"]),
                level=int(d["level"]),
                members=frozenset(int(m) for m in d["members"]),
                density=float(d["density"]),
                unclustered=bool(d.get("unclustered", False)),
            )
            for d in data["nodes"]
        ]
        edges = [(int(p), int(c)) for p, c in data["edges"]]
        return cls(nodes=nodes, edges=edges, root=int(data["root"]))

    def validate(self, S=None, *, check_union: bool = True, atol: float = 1e-9) -> None:
        """Raise ``AssertionError`` if any structural invariant is violated."""
        ids = [n.id for n in self.nodes]
        assert len(ids) == len(set(ids)), "duplicate node ids"
        assert self.root in self._by_id, "root not among nodes"
        pmap, cmap = self.parent_map(), self.child_map()
        assert not pmap[self.root], "root has a parent"
        for p, c in self.edges:
            assert p in self._by_id and c in self._by_id, f"dangling edge {(p, c)}"
            lp, lc = self.node(p).level, self.node(c).level
            assert lp == lc + 1, f"edge {(p, c)} spans levels {lp}->{lc}"
        for node in self.nodes:
            assert node.members, f"node {node.id} is empty"
            if node.id != self.root:
                assert pmap[node.id], f"node {node.id} has no parent"
            if node.level == 0:
                assert len(node.members) == 1, f"leaf {node.id} is not a singleton"
                assert not cmap[node.id], f"leaf {node.id} has children"
            elif check_union:
                union = frozenset().union(*(self.node(c).members for c in cmap[node.id]))
                assert union == node.members, f"node {node.id} members != union of children"
            if S is not None:
                expected = density(node.members, S)
                assert abs(node.density - expected) <= atol, f"node {node.id} density mismatch"
        if S is not None:
            n = as_array(S).shape[0]
            assert self.node(self.root).members == frozenset(range(n)), "root does not cover data"
        # levels strictly decrease along edges, so reachability from the root implies acyclicity
        seen, stack = {self.root}, [self.root]
        while stack:
            for c in cmap[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        assert len(seen) == len(self.nodes), "unreachable nodes"
