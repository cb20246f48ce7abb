"""Heat-kernel diffusion similarity for (directed, weighted) graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .graph import SimilarityMatrix

DEFAULT_C = 1.63
DEFAULT_TOL = 1e-12
AUGMENT_FRACTION = 0.10


@dataclass(frozen=True)
class AdjacencyGraph:
    """Dense weighted adjacency; ``A[i, j]`` is the weight of edge i -> j."""

    A: np.ndarray
    directed: bool = False
    augmented: bool = False

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {A.shape}")
        if np.any(A < 0) or not np.all(np.isfinite(A)):
            raise ValueError("adjacency weights must be finite and non-negative")
        if not self.directed and not np.allclose(A, A.T):
            raise ValueError("undirected adjacency must be symmetric")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def binary(self) -> np.ndarray:
        B = (self.A > 0).astype(float)
        np.fill_diagonal(B, 0.0)
        return B

    @classmethod
    def from_edges(cls, n, edges, directed=False):
        """Build from ``(src, dst)`` or ``(src, dst, weight)`` tuples."""
        A = np.zeros((n, n))
        for e in edges:
            i, j = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            A[i, j] += w
            if not directed and i != j:
                A[j, i] += w
        return cls(A, directed=directed)


def is_strongly_connected(A) -> bool:
    n_comp, _ = connected_components(np.asarray(A) > 0, directed=True, connection="strong")
    return n_comp == 1


def augment_connectivity(g: AdjacencyGraph, force: bool = False) -> AdjacencyGraph:
    """Attach a hub vertex linked both ways to every vertex, unless not needed.

    The hub edges weigh a tenth of the smallest positive weight in ``g``.
    With ``force`` the hub is added without testing strong connectivity.
    """
    positive = g.A[g.A > 0]
    if positive.size == 0:
        raise ValueError("graph has no positive edge; augmentation weight is undefined")
    if not force and is_strongly_connected(g.A):
        return g
    n = g.n
    hub = AUGMENT_FRACTION * positive.min()
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = g.A
    A[n, :n] = hub
    A[:n, n] = hub
    return AdjacencyGraph(A, directed=g.directed, augmented=True)


def row_normalize(g) -> np.ndarray:
    A = g.A if isinstance(g, AdjacencyGraph) else np.asarray(g, dtype=float)
    sums = A.sum(axis=1)
    if np.any(sums <= 0):
        raise ValueError(f"row {int(np.argmin(sums))} has no outgoing weight")
    return A / sums[:, None]


def heat_kernel(W, c: float = DEFAULT_C, tol: float = DEFAULT_TOL, extra_terms: int = 0) -> np.ndarray:
    """Truncated series sum_{k>=1} c^k/k! W^k.

    Terms are added until the coefficient falls below ``tol`` past its peak;
    since W is row-stochastic every entry of W^k is at most 1, so the
    coefficient bounds each dropped term. ``extra_terms`` adds that many more.
    """
    if c <= 0 or tol <= 0:
        raise ValueError("c and tol must be positive")
    W = np.asarray(W, dtype=float)
    K = np.zeros_like(W)
    power = np.eye(W.shape[0])
    coef = 1.0
    k = 0
    remaining = None
    while True:
        k += 1
        coef *= c / k
        if remaining is None and coef < tol and k > c:
            remaining = extra_terms
        if remaining is not None:
            if remaining == 0:
                break
            remaining -= 1
        power = power @ W
        K += coef * power
    return K


def _cosine_matrix(V: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms == 0):
        raise FloatingPointError("zero vector in diffusion kernel; cosine undefined")
    U = V / norms[:, None]
    return U @ U.T


def diffusion_similarity(g: AdjacencyGraph, c: float = DEFAULT_C, tol: float = DEFAULT_TOL) -> SimilarityMatrix:
    """Average of row- and column-cosines of the heat kernel of ``g``."""
    n = g.n
    if n < 2:
        raise ValueError("diffusion similarity needs at least two vertices")
    aug = augment_connectivity(g, force=g.directed)
    K = heat_kernel(row_normalize(aug), c=c, tol=tol)
    if aug.augmented:
        K = K[:n, :n]
    S = (_cosine_matrix(K.T) + _cosine_matrix(K)) / 2.0
    S = np.clip((S + S.T) / 2.0, 0.0, 1.0)
    np.fill_diagonal(S, 1.0)
    return SimilarityMatrix(S)
