"""Seeded synthetic data: Gaussian point clouds and planted-partition graphs.

All draws use numpy's PCG64 bit generator, whose stream is stable for a
given seed across numpy releases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .diffusion import AdjacencyGraph
from .graph import SimilarityMatrix

RNG_NAME = f"numpy.random.PCG64 (numpy {np.__version__})"


@dataclass(frozen=True)
class MixtureSpec:
    centers: tuple
    cov_scales: tuple  # isotropic variance per component
    sizes: tuple
    seed: int = 0

    def __post_init__(self):
        if not (len(self.centers) == len(self.cov_scales) == len(self.sizes)):
            raise ValueError("centers, cov_scales and sizes must have equal length")
        if any(s <= 0 for s in self.cov_scales):
            raise ValueError("cov_scales must be positive")
        if any(int(s) <= 0 for s in self.sizes):
            raise ValueError("sizes must be positive")

    @property
    def dim(self) -> int:
        return len(self.centers[0])

    @property
    def total(self) -> int:
        return int(sum(self.sizes))


def default_mixture(seed: int = 7, k: int = 9, dim: int = 3, total: int = 595,
                    box: float = 10.0, min_gap: float = 4.0, spread: float = 0.25) -> MixtureSpec:
    """Random well-separated centers with random component sizes.

    Centers are drawn uniformly in a cube and rejected until every pair is
    at least ``min_gap`` apart; sizes are a random composition of ``total``.
    """
    rng = np.random.default_rng(seed)
    centers: list[np.ndarray] = []
    while len(centers) < k:
        c = rng.uniform(0.0, box, size=dim)
        if all(np.linalg.norm(c - o) >= min_gap for o in centers):
            centers.append(c)
    weights = rng.uniform(0.5, 1.5, size=k)
    sizes = np.maximum(20, np.floor(weights / weights.sum() * total)).astype(int)
    sizes[np.argmax(sizes)] += total - sizes.sum()
    scales = rng.uniform(0.5, 1.0, size=k) * spread
    return MixtureSpec(
        centers=tuple(tuple(map(float, c)) for c in centers),
        cov_scales=tuple(map(float, scales)),
        sizes=tuple(int(s) for s in sizes),
        seed=seed,
    )


def gaussian_mixture(spec: MixtureSpec) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(spec.seed)
    points, labels = [], []
    for i, (c, scale, size) in enumerate(zip(spec.centers, spec.cov_scales, spec.sizes)):
        c = np.asarray(c, dtype=float)
        points.append(c + np.sqrt(scale) * rng.standard_normal((int(size), len(c))))
        labels.append(np.full(int(size), i))
    return np.vstack(points), np.concatenate(labels)


def euclidean_similarity(points) -> SimilarityMatrix:
    """1 - d/d_max, so the farthest pair scores 0 and coincident points 1."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise ValueError("need at least two points")
    D = squareform(pdist(X))
    dmax = D.max()
    if dmax == 0:
        raise ValueError("all points are identical")
    return SimilarityMatrix(1.0 - D / dmax)


def planted_partition(block_sizes, p_in: float, p_out: float, seed: int = 0) -> tuple[AdjacencyGraph, np.ndarray]:
    if not (0 <= p_in <= 1 and 0 <= p_out <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    labels = np.repeat(np.arange(len(block_sizes)), block_sizes)
    n = labels.size
    rng = np.random.default_rng(seed)
    probs = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    draws = rng.random((n, n)) < probs
    A = np.triu(draws, k=1)
    A = (A | A.T).astype(float)
    return AdjacencyGraph(A, directed=False), labels
