"""End-to-end runs: ingest, build similarity, cluster, post-process, export."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cut import NoClusterableStructure, select_clusters
from .diffusion import DEFAULT_C, DEFAULT_TOL, AdjacencyGraph, diffusion_similarity
from .engine import DEFAULT_TAU, GrowthConfig, build_hierarchy, contract, _parents_by_containment
from .evaluation import (
    cluster_size_stats,
    edge_probabilities,
    label_agreement,
    labels_from_family,
    modularity,
    separation_ratios,
)
from .graph import HierarchyTree, SimilarityMatrix, TreeNode, density
from .postprocess import DEFAULT_RHO, eliminate_multimembership, expand, multi_members
from .synth import RNG_NAME, euclidean_similarity

logger = logging.getLogger(__name__)

FORMATS = ("points", "similarity", "edgelist")
METHODS = ("euclidean", "diffusion", "precomputed")


class InputError(ValueError):
    """Malformed or inconsistent input data."""


class DegenerateStructure(RuntimeError):
    """The data yields no usable clustering."""


@dataclass
class PipelineConfig:
    input: Path
    format: str = "points"
    similarity: str | None = None
    tau: float = DEFAULT_TAU
    rho: float = DEFAULT_RHO
    diffusion_c: float = DEFAULT_C
    diffusion_tol: float = DEFAULT_TOL
    iterate: bool = False
    max_refine: int = 10
    seed: int = 0
    out: Path = Path("aqcm-out")
    truth: Path | None = None
    directed: bool = False

    def __post_init__(self):
        self.input = Path(self.input)
        self.out = Path(self.out)
        if self.truth is not None:
            self.truth = Path(self.truth)
        if self.format not in FORMATS:
            raise InputError(f"unknown input format {self.format!r}; expected one of {FORMATS}")
        if self.similarity is None:
            self.similarity = {"points": "euclidean", "similarity": "precomputed", "edgelist": "diffusion"}[self.format]
        allowed = {"points": ("euclidean",), "similarity": ("precomputed",), "edgelist": ("diffusion",)}
        if self.similarity not in allowed[self.format]:
            raise InputError(f"similarity {self.similarity!r} does not apply to {self.format} input")
        if self.tau < 0:
            raise InputError("--tau must be non-negative")
        if not 0 <= self.rho <= 1:
            raise InputError("--rho must lie in [0, 1]")
        if self.diffusion_c <= 0 or self.diffusion_tol <= 0:
            raise InputError("--diffusion-c and --diffusion-tol must be positive")
        if self.max_refine < 1:
            raise InputError("--max-refine must be at least 1")


# ---------------------------------------------------------------- ingestion


def _rows(path: Path, delimiter=","):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), start=1):
            if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
                continue
            yield lineno, [c.strip() for c in row]


def _numeric(rows, what):
    out, width = [], None
    for k, (lineno, row) in enumerate(rows):
        try:
            vals = [float(c) for c in row]
        except ValueError:
            if k == 0 and not out:
                continue  # header
            raise InputError(f"{what}: line {lineno}: non-numeric field in {row!r}") from None
        if not all(np.isfinite(vals)):
            raise InputError(f"{what}: line {lineno}: non-finite value")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise InputError(f"{what}: line {lineno}: expected {width} fields, got {len(vals)}")
        out.append(vals)
    if not out:
        raise InputError(f"{what}: no data rows")
    return np.array(out)


def read_points(path) -> np.ndarray:
    return _numeric(_rows(Path(path)), f"points file {path}")


def read_similarity(path) -> SimilarityMatrix:
    M = _numeric(_rows(Path(path)), f"similarity file {path}")
    if M.shape[0] != M.shape[1]:
        raise InputError(f"similarity file {path}: matrix is {M.shape[0]}x{M.shape[1]}, not square")
    try:
        return SimilarityMatrix(M)
    except ValueError as exc:
        raise InputError(f"similarity file {path}: {exc}") from None


def read_edgelist(path, directed=False) -> tuple[AdjacencyGraph, list[str]]:
    """Whitespace-separated ``src dst [weight]`` lines; labels in first-seen order."""
    index: dict[str, int] = {}
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise InputError(f"edge list {path}: line {lineno}: expected 'src dst [weight]'")
            try:
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise InputError(f"edge list {path}: line {lineno}: bad weight {parts[2]!r}") from None
            if not np.isfinite(w) or w < 0:
                raise InputError(f"edge list {path}: line {lineno}: weight must be finite and >= 0")
            u, v = (index.setdefault(p, len(index)) for p in parts[:2])
            edges.append((u, v, w))
    if not index:
        raise InputError(f"edge list {path}: no edges")
    labels = sorted(index, key=index.get)
    return AdjacencyGraph.from_edges(len(labels), edges, directed=directed), labels


def read_truth(path, n: int) -> np.ndarray:
    rows = list(_rows(Path(path)))
    if rows and len(rows[0][1]) >= 2:
        body = [(ln, r) for ln, r in rows if r[0].lstrip("-").isdigit()]
        labels = {}
        for lineno, r in body:
            labels[int(r[0])] = r[1]
        if sorted(labels) != list(range(n)):
            raise InputError(f"truth file {path}: point ids must cover 0..{n - 1}")
        values = [labels[i] for i in range(n)]
    else:
        values = [r[0] for _, r in rows]
        if values and not _is_number(values[0]) and len(values) == n + 1:
            values = values[1:]
    if len(values) != n:
        raise InputError(f"truth file {path}: {len(values)} labels for {n} points")
    _, codes = np.unique(np.array(values, dtype=str), return_inverse=True)
    return codes


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# ------------------------------------------------------------ clustering


def single_pass(S, tau=DEFAULT_TAU, rho=DEFAULT_RHO):
    """AQCM tree, automatic cut, then expansion and multimembership clean-up."""
    tree = build_hierarchy(S, GrowthConfig(tau=tau))
    try:
        sel = select_clusters(tree)
    except NoClusterableStructure as exc:
        raise DegenerateStructure(str(exc)) from exc
    refined = eliminate_multimembership(expand(sel.clusters, S, rho), S)
    return tree, sel, refined


@dataclass
class RefineResult:
    tree: HierarchyTree
    levels: list[list[frozenset]] = field(default_factory=list)


def iterate_refine(S, tau=DEFAULT_TAU, rho=DEFAULT_RHO, max_refine=10) -> RefineResult:
    """Repeat AQCM + cut + post-processing on successively contracted data.

    Each round's post-processed clustering (over base data) becomes one
    level of a simplified hierarchy; a root over all data closes it.
    """
    base = S if isinstance(S, SimilarityMatrix) else SimilarityMatrix(S)
    n = base.n
    nodes = [TreeNode(i, 0, frozenset([i]), 1.0) for i in range(n)]
    edges: list[tuple[int, int]] = []
    levels: list[list[frozenset]] = []
    cur_S, cur_sets, cur_ids = base, [frozenset([i]) for i in range(n)], list(range(n))
    root = None

    for level in range(1, max_refine + 1):
        if len(cur_sets) < 2:
            break
        try:
            tree = build_hierarchy(cur_S, GrowthConfig(tau=tau))
            chosen = select_clusters(tree).clusters
        except NoClusterableStructure:
            chosen = [frozenset(range(len(cur_sets)))]
        refined = eliminate_multimembership(expand(chosen, cur_S, rho), cur_S)
        if not refined:
            raise DegenerateStructure(f"refinement round {level} produced no clusters")
        lifted = []
        for C in refined:
            B = frozenset().union(*(cur_sets[v] for v in C))
            if B not in lifted:
                lifted.append(B)
        covered = _parents_by_containment(cur_sets, lifted)
        carried = [v for v, ps in enumerate(covered) if not ps]
        next_sets = lifted + [cur_sets[v] for v in carried]
        if set(next_sets) == set(cur_sets):
            logger.info("refinement round %d changed nothing; stopping", level)
            break
        levels.append(lifted)

        ids = []
        for i, B in enumerate(next_sets):
            flag = i >= len(lifted)
            d = nodes[cur_ids[carried[i - len(lifted)]]].density if flag else density(B, base)
            ids.append(len(nodes))
            nodes.append(TreeNode(len(nodes), level, B, d, flag))
        for c, parents in enumerate(_parents_by_containment(cur_sets, next_sets)):
            for p in parents:
                edges.append((ids[p], cur_ids[c]))
        logger.info("refinement round %d: %d clusters, %d carried", level, len(lifted), len(carried))

        if len(next_sets) == 1:
            root = ids[0]
            break
        cur_S, cur_sets = contract(lifted, [cur_sets[v] for v in carried], base)
        cur_ids = ids

    if root is None:
        top = max(node.level for node in nodes) + 1
        everything = frozenset(range(n))
        root = len(nodes)
        nodes.append(TreeNode(root, top, everything, density(everything, base)))
        edges.extend((root, c) for c in cur_ids)
    return RefineResult(tree=HierarchyTree(nodes=nodes, edges=edges, root=root), levels=levels)


def level_partition(tree: HierarchyTree, level: int) -> list[frozenset]:
    """All nodes of one level, carried nodes included, as a family of sets."""
    return [node.members for node in sorted(tree.nodes, key=lambda x: x.id) if node.level == level]


# ------------------------------------------------------------- artifacts


def tree_to_dot(tree: HierarchyTree) -> str:
    lines = ["digraph aqcm {", "  rankdir=TB;", "  node [shape=circle];"]
    for node in sorted(tree.nodes, key=lambda x: x.id):
        style = ', style=dashed' if node.unclustered else ""
        label = f"{node.id}\\nL{node.level} n={node.size}\\nden={node.density:.4f}"
        lines.append(f'  n{node.id} [label="{label}"{style}];')
    for p, c in sorted(tree.edges):
        lines.append(f"  n{p} -> n{c};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _clusters_csv(family, n, point_labels=None) -> str:
    member_of: list[list[int]] = [[] for _ in range(n)]
    for j, C in enumerate(family):
        for x in C:
            member_of[x].append(j)
    rows = ["point_id,label,cluster_ids,singleton"]
    for x in range(n):
        name = point_labels[x] if point_labels else str(x)
        ids = ";".join(str(j) for j in member_of[x])
        rows.append(f"{x},{name},{ids},{int(not member_of[x])}")
    return "\n".join(rows) + "\n"


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if not np.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def compute_metrics(family, n, graph=None, truth=None) -> dict:
    family = [sorted(C) for C in family]
    metrics: dict = {"n_points": n, "n_clusters": len(family)}
    covered = set().union(*map(set, family)) if family else set()
    metrics["unclustered"] = n - len(covered)
    metrics["multi_members"] = len(multi_members(family))
    if family:
        metrics["size_stats"] = cluster_size_stats(family)
    if graph is not None and family and not metrics["multi_members"]:
        bp = edge_probabilities(graph, family)
        Delta, delta = separation_ratios(bp)
        metrics["edge_probabilities"] = bp.P
        metrics["undefined_diagonal"] = bp.undefined_diagonal
        metrics["separation_ratios"] = Delta
        metrics["min_separation"] = delta
        singles = [[x] for x in range(n) if x not in covered]
        try:
            metrics["modularity"] = modularity(graph, family + singles)
        except ValueError:
            metrics["modularity"] = None
    if truth is not None:
        labels = labels_from_family(family, n)
        mask = labels >= 0
        metrics["ari_clustered"] = label_agreement(labels[mask], truth[mask]) if mask.any() else None
        # each unclustered point as its own group
        full = np.where(mask, labels, len(family) + np.arange(n))
        metrics["ari_all"] = label_agreement(full, truth)
    return metrics


def _write(out: Path, name: str, text: str, written: list[str]) -> None:
    (out / name).write_text(text)
    written.append(name)


def _write_manifest(out: Path, written: list[str], error: str) -> None:
    body = {"status": "error", "error": error, "flushed": written}
    (out / "MANIFEST.json").write_text(json.dumps(body, indent=2) + "\n")


def load_similarity(cfg: PipelineConfig):
    """Return (SimilarityMatrix, graph or None, point labels or None)."""
    if not cfg.input.exists():
        raise InputError(f"input file {cfg.input} does not exist")
    if cfg.format == "points":
        X = read_points(cfg.input)
        if X.shape[0] < 2:
            raise InputError("points file needs at least two rows")
        try:
            return euclidean_similarity(X), None, None
        except ValueError as exc:
            raise DegenerateStructure(str(exc)) from exc
    if cfg.format == "similarity":
        return read_similarity(cfg.input), None, None
    graph, labels = read_edgelist(cfg.input, directed=cfg.directed)
    if graph.n < 2:
        raise InputError("edge list must mention at least two vertices")
    S = diffusion_similarity(graph, c=cfg.diffusion_c, tol=cfg.diffusion_tol)
    return S, graph, labels


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run one configured job and write every artifact into ``cfg.out``."""
    started = time.perf_counter()
    S, graph, point_labels = load_similarity(cfg)
    n = S.n
    truth = read_truth(cfg.truth, n) if cfg.truth is not None else None
    cfg.out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    meta = {
        "generator": f"aqcm {__version__}",
        "rng": RNG_NAME,
        "seed": cfg.seed,
        "config": _json_ready({k: v for k, v in asdict(cfg).items() if k not in ("out",)}),
    }
    try:
        if cfg.iterate:
            result = iterate_refine(S, tau=cfg.tau, rho=cfg.rho, max_refine=cfg.max_refine)
            tree = result.tree
            final = result.levels[0] if result.levels else [frozenset(range(n))]
            meta["mode"] = "iterate"
            meta["levels_record"] = "post-processed clusters per refinement round"
            meta["refine_levels"] = len(result.levels)
        else:
            tree, sel, final = single_pass(S, tau=cfg.tau, rho=cfg.rho)
            meta["mode"] = "single"
            meta["cut"] = {"edges": sel.cut.edges, "value": sel.cut.value}
    except DegenerateStructure as exc:
        _write_manifest(cfg.out, written, str(exc))
        raise

    tree.validate(S)
    doc = {"meta": meta, **tree.to_dict(), "clusters": [sorted(C) for C in final]}
    _write(cfg.out, "tree.json", json.dumps(_json_ready(doc), indent=1, sort_keys=True) + "\n", written)
    _write(cfg.out, "clusters.csv", _clusters_csv(final, n, point_labels), written)
    _write(cfg.out, "tree.dot", tree_to_dot(tree), written)
    _write(cfg.out, "order.txt", "\n".join(map(str, tree.leaf_order())) + "\n", written)
    metrics = compute_metrics(final, n, graph=graph, truth=truth)
    if cfg.iterate:
        metrics["levels"] = [
            {"level": k, **compute_metrics(level_partition(tree, k), n, graph=graph, truth=truth)}
            for k in range(1, tree.height)
        ]
    _write(cfg.out, "metrics.json", json.dumps(_json_ready(metrics), indent=1, sort_keys=True) + "\n", written)
    logger.info("pipeline finished in %.2fs: %d clusters", time.perf_counter() - started, len(final))
    return metrics
