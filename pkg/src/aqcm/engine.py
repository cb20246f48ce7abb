"""Agglomerative quasi-clique merging: seeds, growth, adjustment, contraction.

Each level runs the four subroutines in order on the current (possibly
contracted) similarity graph. Clusters at every level are tracked as sets of
base-data indices so overlap checks, densities and contraction weights are
always taken against the original similarity matrix.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass

import numpy as np

from .graph import HierarchyTree, SimilarityMatrix, TreeNode, as_array, density

logger = logging.getLogger(__name__)

DEFAULT_TAU = 0.008


@dataclass(frozen=True)
class GrowthConfig:
    tau: float = DEFAULT_TAU
    max_levels: int = 64

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.max_levels < 1:
            raise ValueError("max_levels must be at least 1")


@dataclass
class LevelState:
    """Current vertices of one level and the base data each one stands for."""

    level: int
    S: SimilarityMatrix
    vertex_to_base: list[frozenset]
    node_ids: list[int]
    carried: frozenset = frozenset()


def _sort_key(members: frozenset, dens: float):
    return (-dens, tuple(sorted(members)))


def select_seeds(S) -> list[tuple[int, int]]:
    """Mutually nominated edges, sorted by decreasing weight.

    Every vertex ranks the others by similarity and keeps the prefix ending
    at its first drop that is at least the median drop. An edge is a seed
    when each endpoint keeps the other. Ties are broken by vertex index.
    """
    S = as_array(S)
    n = S.shape[0]
    if n < 2:
        raise ValueError("seed selection needs at least two vertices")
    if n == 2:
        return [(0, 1)]

    W = S.astype(float, copy=True)
    np.fill_diagonal(W, -np.inf)
    order = np.argsort(-W, axis=1, kind="stable")[:, : n - 1]
    vals = np.take_along_axis(W, order, axis=1)
    drops = vals[:, :-1] - vals[:, 1:]
    med = np.median(drops, axis=1)
    t = np.argmax(drops >= med[:, None], axis=1) + 1

    close = np.zeros((n, n), dtype=bool)
    for v in range(n):
        close[v, order[v, : t[v]]] = True
    mutual = np.triu(close & close.T, k=1)
    us, vs = np.nonzero(mutual)
    seeds = sorted(zip(us.tolist(), vs.tolist()), key=lambda e: (-S[e[0], e[1]], e))
    return seeds


def grow_clusters(S, seeds, cfg: GrowthConfig = GrowthConfig()) -> list[frozenset]:
    """Grow one quasi-clique from each surviving seed, best seed first."""
    S = as_array(S)
    n = S.shape[0]
    tau = cfg.tau
    remaining = list(seeds)
    family: list[frozenset] = []

    while remaining:
        u, v = remaining[0]
        inside = np.zeros(n, dtype=bool)
        inside[[u, v]] = True
        sums = S[u] + S[v]
        internal = float(S[u, v])
        size = 2
        while size < n:
            alpha = 1.0 - 1.0 / (2.0 * (size + 1))
            den = 2.0 * internal / (size * (size - 1))
            cont = np.where(inside, -np.inf, sums / size)
            q = cont.max()
            if q < alpha * den:
                break
            # the maximiser always joins so tau = 0 still makes progress
            joiners = np.flatnonzero((cont > q - tau) | (cont == q))
            block = S[np.ix_(joiners, joiners)]
            internal += float(sums[joiners].sum() + (block.sum() - np.trace(block)) / 2.0)
            inside[joiners] = True
            sums = sums + S[joiners].sum(axis=0)
            size += len(joiners)

        C = frozenset(np.flatnonzero(inside).tolist())
        family.append(C)
        remaining = [e for e in remaining if not (inside[e[0]] and inside[e[1]])]

    return family


def _too_close(a: frozenset, b: frozenset) -> bool:
    return len(a & b) > 0.5 * min(len(a), len(b))


def adjust_first(family, S) -> list[frozenset]:
    """Drop every cluster that overlaps a denser one by more than half."""
    ranked = sorted(
        ((_sort_key(C, density(C, S)), C) for C in {frozenset(C) for C in family}),
        key=lambda kc: kc[0],
    )
    kept: list[frozenset] = []
    for _, C in ranked:
        if all(not _too_close(C, K) for K in kept):
            kept.append(C)
    return kept


def merge_partner(current, candidates, base_S) -> tuple[int, float]:
    """Index of the candidate whose union with ``current`` is densest, and that density."""
    best, best_den = None, -np.inf
    for z, C in enumerate(candidates):
        d = density(current | C, base_S)
        if d > best_den:
            best, best_den = z, d
    return best, best_den


def adjust_merge(family, base_S) -> list[frozenset]:
    """Merge degenerate overlaps, always taking the densest available union.

    Clusters are base-data member sets. After a merge the new cluster is
    placed at its density rank and the scan resumes no later than that rank,
    so every surviving pair ends up satisfying the overlap bound.
    """
    base_S = as_array(base_S)
    items = sorted(
        ((_sort_key(C, density(C, base_S)), C) for C in {frozenset(C) for C in family}),
        key=lambda kc: kc[0],
    )
    keys = [k for k, _ in items]
    clusters = [C for _, C in items]

    t = 0
    while t < len(clusters):
        cur = clusters[t]
        overlap = [z for z in range(t + 1, len(clusters)) if _too_close(clusters[z], cur)]
        if not overlap:
            t += 1
            continue
        pick, best_den = merge_partner(cur, [clusters[z] for z in overlap], base_S)
        best = overlap[pick]
        merged = cur | clusters[best]
        for z in sorted((t, best), reverse=True):
            del clusters[z], keys[z]
        if merged in clusters:
            pos = clusters.index(merged)
        else:
            key = _sort_key(merged, best_den)
            pos = bisect.bisect_left(keys, key)
            keys.insert(pos, key)
            clusters.insert(pos, merged)
        earlier = [i for i in range(pos) if _too_close(clusters[i], merged)]
        t = min(earlier[0] if earlier else pos, t)
    return clusters


def contract(clusters, singletons, base_S):
    """Similarity between clusters as the mean weight over their edge sets.

    ``singletons`` are carried vertices (base indices or base-index sets)
    appended after ``clusters``. Returns the contracted SimilarityMatrix and
    the base member set of each new vertex.
    """
    S0 = np.array(as_array(base_S), dtype=float)
    np.fill_diagonal(S0, 0.0)
    n = S0.shape[0]
    sets = [frozenset(C) for C in clusters]
    for s in singletons:
        sets.append(frozenset(s) if isinstance(s, (set, frozenset, list, tuple)) else frozenset([s]))
    if len(set(sets)) != len(sets):
        raise ValueError("contract received duplicate clusters")

    k = len(sets)
    M = np.zeros((n, k))
    for j, C in enumerate(sets):
        idx = list(C)
        if min(idx) < 0 or max(idx) >= n:
            raise IndexError("cluster index out of range")
        M[idx, j] = 1.0
    raw = M.T @ S0 @ M
    sizes = M.sum(axis=0)
    inter = M.T @ M
    # an edge inside the intersection is counted twice by the raw block sum
    counts = np.outer(sizes, sizes) - inter * (inter + 1) / 2.0
    totals = raw.copy()
    ii, jj = np.nonzero(np.triu(inter, k=1) > 0)
    for i, j in zip(ii.tolist(), jj.tolist()):
        common = np.fromiter(sets[i] & sets[j], dtype=np.intp)
        pairs = S0[np.ix_(common, common)].sum() / 2.0
        totals[i, j] -= pairs
        totals[j, i] -= pairs
    off = ~np.eye(k, dtype=bool)
    if np.any(counts[off] <= 0):
        raise ValueError("contract: a vertex pair has no connecting edges")
    Snew = np.zeros((k, k))
    Snew[off] = totals[off] / counts[off]
    np.fill_diagonal(Snew, [density(C, S0) for C in sets])
    return SimilarityMatrix(Snew), sets


def _parents_by_containment(child_sets, parent_sets):
    """Map each child index to the parent indices whose member set contains it."""
    where: dict[int, list[int]] = {}
    for p, P in enumerate(parent_sets):
        for m in P:
            where.setdefault(m, []).append(p)
    out = []
    for C in child_sets:
        anchor = next(iter(C))
        out.append([p for p in where.get(anchor, ()) if C <= parent_sets[p]])
    return out


def build_hierarchy(S, cfg: GrowthConfig = GrowthConfig()) -> HierarchyTree:
    """Run levels of seed/grow/adjust/contract until one cluster remains."""
    base = S if isinstance(S, SimilarityMatrix) else SimilarityMatrix(S)
    n = base.n
    if n < 2:
        raise ValueError("build_hierarchy needs at least two data points")

    nodes = [TreeNode(i, 0, frozenset([i]), 1.0) for i in range(n)]
    edges: list[tuple[int, int]] = []
    state = LevelState(1, base, [frozenset([i]) for i in range(n)], list(range(n)))
    root = None

    def add_level(level, sets, flags, dens, child_sets, child_ids):
        ids = []
        for members, flag, d in zip(sets, flags, dens):
            nid = len(nodes)
            nodes.append(TreeNode(nid, level, members, d, flag))
            ids.append(nid)
        for c, parents in enumerate(_parents_by_containment(child_sets, sets)):
            for p in parents:
                edges.append((ids[p], child_ids[c]))
        return ids

    while root is None:
        level = state.level
        cur_sets = state.vertex_to_base
        if level > cfg.max_levels:
            logger.warning("max_levels=%d reached, forcing a root", cfg.max_levels)
            root = _force_root(level, cur_sets, state.node_ids, base, add_level)
            break

        seeds = select_seeds(state.S)
        grown = grow_clusters(state.S, seeds, cfg)
        if level == 1:
            adjusted = adjust_first(grown, base)
        else:
            lifted = [frozenset().union(*(cur_sets[v] for v in C)) for C in grown]
            adjusted = adjust_merge(lifted, base)

        covered = _parents_by_containment(cur_sets, adjusted)
        carried = [v for v, ps in enumerate(covered) if not ps]
        next_sets = adjusted + [cur_sets[v] for v in carried]
        logger.debug("level %d: %d seeds, %d clusters, %d carried", level, len(seeds), len(adjusted), len(carried))

        if not adjusted or set(next_sets) == set(cur_sets):
            logger.warning("level %d made no progress, forcing a root", level)
            root = _force_root(level, cur_sets, state.node_ids, base, add_level)
            break

        flags = [False] * len(adjusted) + [True] * len(carried)
        dens = [density(C, base) for C in adjusted]
        dens += [nodes[state.node_ids[v]].density for v in carried]
        ids = add_level(level, next_sets, flags, dens, cur_sets, state.node_ids)

        if len(next_sets) == 1:
            root = ids[0]
            break
        newS, sets = contract(adjusted, [cur_sets[v] for v in carried], base)
        state = LevelState(level + 1, newS, sets, ids, frozenset(range(len(adjusted), len(sets))))

    return HierarchyTree(nodes=nodes, edges=edges, root=root)


def _force_root(level, cur_sets, cur_ids, base, add_level):
    everything = frozenset(range(base.n))
    ids = add_level(level, [everything], [False], [density(everything, base)], cur_sets, cur_ids)
    return ids[0]
