"""Command-line front end: ``aqcm --input data.csv --format points --out results/``."""

from __future__ import annotations

import argparse
import logging
import sys

from .cut import NoClusterableStructure
from .diffusion import DEFAULT_C, DEFAULT_TOL
from .engine import DEFAULT_TAU
from .pipeline import FORMATS, METHODS, DegenerateStructure, InputError, PipelineConfig, run_pipeline
from .postprocess import DEFAULT_RHO

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2

logger = logging.getLogger("aqcm")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="aqcm",
        description="Hierarchical clustering by automatic quasi-clique merging with density-drop cluster selection.",
    )
    p.add_argument("--input", required=True, help="input file")
    p.add_argument("--format", choices=FORMATS, default="points",
                   help="points: CSV rows of coordinates; similarity: dense n x n CSV; edgelist: 'src dst [weight]' lines")
    p.add_argument("--similarity", choices=METHODS, default=None,
                   help="similarity construction (default follows --format)")
    p.add_argument("--directed", action="store_true", help="treat an edge list as directed")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="join tolerance during growth (default %(default)s)")
    p.add_argument("--rho", type=float, default=DEFAULT_RHO, help="clustering-factor threshold for expansion (default %(default)s)")
    p.add_argument("--diffusion-c", type=float, default=DEFAULT_C, help="heat-kernel rate (default %(default)s)")
    p.add_argument("--diffusion-tol", type=float, default=DEFAULT_TOL, help="series truncation tolerance (default %(default)s)")
    p.add_argument("--iterate", action="store_true", help="run iterative refinement into a simplified tree")
    p.add_argument("--max-refine", type=int, default=10, help="maximum refinement rounds (default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="recorded in metadata; the algorithm itself is deterministic")
    p.add_argument("--out", default="aqcm-out", help="output directory (default %(default)s)")
    p.add_argument("--truth", default=None, help="optional ground-truth labels CSV for ARI")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = PipelineConfig(
            input=args.input,
            format=args.format,
            similarity=args.similarity,
            tau=args.tau,
            rho=args.rho,
            diffusion_c=args.diffusion_c,
            diffusion_tol=args.diffusion_tol,
            iterate=args.iterate,
            max_refine=args.max_refine,
            seed=args.seed,
            out=args.out,
            truth=args.truth,
            directed=args.directed,
        )
        metrics = run_pipeline(cfg)
    except (InputError, OSError) as exc:
        print(f"aqcm: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateStructure, NoClusterableStructure, FloatingPointError, ValueError) as exc:
        print(f"aqcm: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{metrics['n_clusters']} clusters, {metrics['unclustered']} unclustered points -> {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
