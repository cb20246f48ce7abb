"""Automatic cluster selection by a minimum-average-weight edge cut.

Tree edges are weighted by how sharply density rises from parent to child,
scaled by child size; the clustering returned is the root/frontier cut whose
mean edge weight is smallest.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .graph import HierarchyTree

EPS = 1e-12


class NoClusterableStructure(ValueError):
    """The hierarchy has no cluster node between the root and the data."""


@dataclass
class WeightedCutTree:
    root: int
    nodes: dict  # id -> TreeNode
    weights: dict[tuple[int, int], float]  # (parent, child) -> weight

    def children(self) -> dict[int, list[int]]:
        out = {nid: [] for nid in self.nodes}
        for p, c in sorted(self.weights):
            out[p].append(c)
        return out

    def parents(self) -> dict[int, list[int]]:
        out = {nid: [] for nid in self.nodes}
        for p, c in sorted(self.weights):
            out[c].append(p)
        return out

    @property
    def frontier(self) -> list[int]:
        kids = self.children()
        return sorted(nid for nid, cs in kids.items() if not cs and nid != self.root)

    def is_tree(self) -> bool:
        return all(len(ps) <= 1 for ps in self.parents().values())


@dataclass
class EdgeCut:
    edges: list[tuple[int, int]]
    value: float


@dataclass
class Selection:
    clusters: list[frozenset]
    cut: EdgeCut | None
    node_ids: list[int]
    unclustered: frozenset = field(default_factory=frozenset)


def prune_unclustered(T: HierarchyTree) -> tuple[HierarchyTree, frozenset]:
    """Remove singleton pass-through chains; return the tree and their members.

    Carried nodes that stand for a real cluster (two or more members) stay,
    their zero density drop keeps the cut from landing between them and the
    cluster they carry.
    """
    drop = {n.id for n in T.nodes if n.unclustered and n.size == 1}
    cmap = T.child_map()
    pmap = T.parent_map()
    # leaves that hang only from dropped chains go too
    for leaf in T.leaves:
        if pmap[leaf.id] and all(p in drop for p in pmap[leaf.id]):
            drop.add(leaf.id)
    pruned = frozenset(m for nid in drop for m in T.node(nid).members if T.node(nid).level == 0)

    nodes = [n for n in T.nodes if n.id not in drop]
    edges = [(p, c) for p, c in T.edges if p not in drop and c not in drop]
    out = HierarchyTree(nodes=nodes, edges=edges, root=T.root)

    has_cluster_child = any(out.node(c).level > 0 for c in cmap[T.root] if c in out)
    if not has_cluster_child:
        raise NoClusterableStructure("no clusterable structure below the root")
    return out, pruned


def weight_edges(T: HierarchyTree, eps: float = EPS) -> WeightedCutTree:
    """Weight every edge between two non-leaf nodes by size over density drop."""
    weights = {}
    internal = {n.id: n for n in T.nodes if n.level > 0}
    for p, c in T.edges:
        if p in internal and c in internal:
            x, y = internal[p], internal[c]
            weights[(p, c)] = y.size / max(y.density**2 - x.density**2, eps)
    return WeightedCutTree(root=T.root, nodes=internal, weights=weights)


def max_arborescence(T: WeightedCutTree) -> WeightedCutTree:
    """Keep each node's heaviest in-edge (smallest parent id on ties).

    Levels strictly increase towards the root, so any choice of one parent
    per node is already a spanning arborescence and the greedy pick is exact.
    """
    best: dict[int, tuple[int, float]] = {}
    for (p, c), w in sorted(T.weights.items()):
        if c not in best or w > best[c][1]:
            best[c] = (p, w)
    weights = {(p, c): w for c, (p, w) in best.items()}
    return WeightedCutTree(root=T.root, nodes=dict(T.nodes), weights=weights)


def _contractibility(w_in: float, out_weights: list[float]) -> float:
    k = len(out_weights)
    if k == 1:
        return -math.inf if out_weights[0] < w_in else math.inf
    return (sum(out_weights) - w_in) / (k - 1)


def min_average_cut(Tmax: WeightedCutTree) -> EdgeCut:
    """Root/frontier edge cut of minimum mean weight on a rooted tree.

    Greedily contracts the edge of smallest contractibility while it is below
    the mean weight of the root's current out-edges.
    """
    if not Tmax.is_tree():
        raise ValueError("min_average_cut needs an arborescence; run max_arborescence first")
    kids = Tmax.children()
    root = Tmax.root
    if not kids[root] or not Tmax.frontier:
        raise ValueError("edge cut needs a non-empty frontier")

    # every non-root node is the head of exactly one edge; name edges by head
    w = {c: wt for (p, c), wt in Tmax.weights.items()}
    tail = {c: p for (p, c) in Tmax.weights}
    orig_tail = dict(tail)
    out = {nid: list(cs) for nid, cs in kids.items()}

    lam: dict[int, float] = {}
    heap: list[tuple[float, int]] = []

    def refresh(c):
        lam[c] = _contractibility(w[c], [w[g] for g in out[c]])
        heapq.heappush(heap, (lam[c], c))

    for c in w:
        if out[c]:
            refresh(c)
    alpha = sum(w[c] for c in out[root]) / len(out[root])

    while heap:
        val, c = heapq.heappop(heap)
        if lam.get(c) != val:
            continue
        if not val < alpha:
            break
        p = tail[c]
        del lam[c]
        moved = out.pop(c)
        out[p] = [g for g in out[p] if g != c] + moved
        for g in moved:
            tail[g] = p
        if p == root:
            alpha = sum(w[g] for g in out[root]) / len(out[root])
        else:
            refresh(p)

    edges = sorted((orig_tail[c], c) for c in out[root])
    value = sum(w[c] for c in out[root]) / len(out[root])
    return EdgeCut(edges=edges, value=value)


def clustering_from_cut(T: HierarchyTree, cut: EdgeCut) -> list[frozenset]:
    return [T.node(c).members for _, c in cut.edges]


def select_clusters(T: HierarchyTree) -> Selection:
    """Prune, weight, take the maximum arborescence and cut it."""
    pruned, _ = prune_unclustered(T)
    tmax = max_arborescence(weight_edges(pruned))
    cut = min_average_cut(tmax)
    clusters = clustering_from_cut(pruned, cut)
    covered = frozenset().union(*clusters)
    return Selection(
        clusters=clusters,
        cut=cut,
        node_ids=[c for _, c in cut.edges],
        unclustered=T.node(T.root).members - covered,
    )
