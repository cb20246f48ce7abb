"""Automatic quasi-clique merger hierarchical clustering."""

__version__ = "0.1.0"

from .graph import HierarchyTree, SimilarityMatrix, TreeNode, contribution, density  # noqa: E402
from .engine import GrowthConfig, build_hierarchy  # noqa: E402
from .cut import select_clusters  # noqa: E402
from .diffusion import AdjacencyGraph, diffusion_similarity  # noqa: E402

__all__ = [
    "AdjacencyGraph",
    "GrowthConfig",
    "HierarchyTree",
    "SimilarityMatrix",
    "TreeNode",
    "build_hierarchy",
    "contribution",
    "density",
    "diffusion_similarity",
    "select_clusters",
]
