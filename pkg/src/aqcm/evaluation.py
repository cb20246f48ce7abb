"""Clustering quality measures: block edge probabilities, modularity, ARI."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import adjusted_rand_score

from .diffusion import AdjacencyGraph


@dataclass
class BlockProbabilityMatrix:
    P: np.ndarray
    sizes: list[int]
    # clusters whose diagonal is not defined (singletons) and was set to 0
    undefined_diagonal: list[int] = field(default_factory=list)


def _binary(g) -> np.ndarray:
    if isinstance(g, AdjacencyGraph):
        return g.binary
    B = (np.asarray(g) > 0).astype(float)
    np.fill_diagonal(B, 0.0)
    return B


def _check_partition(family) -> None:
    seen = set()
    for C in family:
        if seen & set(C):
            raise ValueError("family must be a partition (no shared members)")
        seen |= set(C)


def edge_probabilities(g, family) -> BlockProbabilityMatrix:
    """Fraction of possible edges present within and between clusters."""
    family = [sorted(C) for C in family]
    _check_partition(family)
    B = _binary(g)
    B = np.maximum(B, B.T)
    s = len(family)
    M = np.zeros((B.shape[0], s))
    for j, C in enumerate(family):
        M[C, j] = 1.0
    counts = M.T @ B @ M
    sizes = M.sum(axis=0)
    P = counts / np.outer(sizes, sizes)
    undefined = []
    for j in range(s):
        possible = sizes[j] * (sizes[j] - 1) / 2.0
        if possible == 0:
            P[j, j] = 0.0
            undefined.append(j)
        else:
            P[j, j] = counts[j, j] / 2.0 / possible
    return BlockProbabilityMatrix(P=P, sizes=[int(x) for x in sizes], undefined_diagonal=undefined)


def separation_ratios(bp) -> tuple[np.ndarray, np.ndarray]:
    """Relative drop from within-cluster to between-cluster edge probability.

    Rows with a zero (or undefined) diagonal are NaN in both outputs.
    """
    P = bp.P if isinstance(bp, BlockProbabilityMatrix) else np.asarray(bp, dtype=float)
    s = P.shape[0]
    diag = np.diag(P).copy()
    bad = diag <= 0
    if isinstance(bp, BlockProbabilityMatrix):
        bad[bp.undefined_diagonal] = True
    with np.errstate(divide="ignore", invalid="ignore"):
        delta_full = (diag[:, None] - P) / diag[:, None]
    np.fill_diagonal(delta_full, np.nan)
    delta_full[bad, :] = np.nan
    if s < 2:
        return delta_full, np.full(s, np.nan)
    with np.errstate(all="ignore"):
        mins = np.where(bad, np.nan, np.nanmin(np.where(np.eye(s, dtype=bool), np.inf, delta_full), axis=1))
    return delta_full, mins


def modularity(g, family) -> float:
    """Newman modularity of a partition, edges taken as present/absent."""
    family = [sorted(C) for C in family]
    _check_partition(family)
    B = _binary(g)
    B = np.maximum(B, B.T)
    m = B.sum() / 2.0
    if m == 0:
        raise ValueError("modularity is undefined on an edgeless graph")
    deg = B.sum(axis=1)
    q = 0.0
    for C in family:
        inside = B[np.ix_(C, C)].sum() / 2.0
        q += inside / m - (deg[C].sum() / (2.0 * m)) ** 2
    return float(q)


def label_agreement(pred, truth) -> float:
    """Adjusted Rand index between two labelings of the same points."""
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise ValueError(f"label vectors differ in length: {len(pred)} vs {len(truth)}")
    return float(adjusted_rand_score(truth, pred))


def cluster_size_stats(family) -> dict:
    sizes = np.array([len(C) for C in family], dtype=float)
    if sizes.size == 0:
        raise ValueError("cannot summarise an empty family")
    return {
        "count": int(sizes.size),
        "mean": float(sizes.mean()),
        "std": float(sizes.std()),
        "median": float(np.median(sizes)),
        "min": int(sizes.min()),
        "max": int(sizes.max()),
    }


def labels_from_family(family, n: int, unclustered: int = -1) -> np.ndarray:
    """One label per point; a point in several clusters takes the first."""
    labels = np.full(n, unclustered, dtype=int)
    for j, C in enumerate(family):
        for x in C:
            if labels[x] == unclustered:
                labels[x] = j
    return labels
