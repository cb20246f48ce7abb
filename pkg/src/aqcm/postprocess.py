"""Clean-up passes over a selected clustering.

``expand`` lets unclustered points attach to the cluster (or fellow outlier)
they fit best; ``eliminate_multimembership`` makes shared points pick one
cluster. Both are single passes whose decisions are computed against the
input family and then committed together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import as_array, density

DEFAULT_RHO = 0.5
TIE_RTOL = 1e-12


@dataclass
class PreferenceScores:
    """Per-cluster scores of one point; NaN marks clusters that are skipped."""

    phi_p: np.ndarray
    phi_a: np.ndarray
    phi_m: np.ndarray
    phi_c: float


def _mean_to(S: np.ndarray, x: int, members) -> float:
    idx = np.fromiter(members, dtype=np.intp)
    return float(S[x, idx].mean())


def _unique_argmax(values: np.ndarray) -> int | None:
    finite = np.where(np.isnan(values), -np.inf, values)
    top = finite.max()
    if not np.isfinite(top):
        return None
    hits = np.flatnonzero(np.isclose(finite, top, rtol=TIE_RTOL, atol=0.0))
    return int(hits[0]) if len(hits) == 1 else None


def clustering_factor(x: int, family, S) -> tuple[PreferenceScores, int | None]:
    """Mutual-preference scores of ``x`` against every cluster of ``family``.

    Returns the scores and the index of the unique best cluster, or None.
    The cluster ``{x}`` itself is never a candidate; if ``x`` already sits in
    a cluster it is left out of that cluster's contribution.
    """
    S = as_array(S)
    k = len(family)
    cont = np.full(k, np.nan)
    dens = np.full(k, np.nan)
    for i, C in enumerate(family):
        rest = frozenset(C) - {x}
        if not rest:
            continue
        cont[i] = _mean_to(S, x, rest)
        dens[i] = density(C, S)
    nan = np.full(k, np.nan)
    if np.all(np.isnan(cont)) or np.nanmax(cont) <= 0:
        return PreferenceScores(nan, nan, nan, 0.0), None
    phi_p = cont / np.nanmax(cont)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_a = np.where(dens > 0, cont / dens, np.where(cont > 0, np.inf, 0.0))
    phi_a[np.isnan(cont)] = np.nan
    phi_m = phi_p * phi_a
    phi_c = float(np.nanmax(phi_m))
    return PreferenceScores(phi_p, phi_a, phi_m, phi_c), _unique_argmax(phi_m)


def _dedupe(family) -> list[frozenset]:
    seen, out = set(), []
    for C in family:
        C = frozenset(C)
        if len(C) > 1 and C not in seen:
            seen.add(C)
            out.append(C)
    return out


def expand(family, S, rho: float = DEFAULT_RHO) -> list[frozenset]:
    S = as_array(S)
    family = [frozenset(C) for C in family]
    covered = frozenset().union(*family) if family else frozenset()
    outliers = [x for x in range(S.shape[0]) if x not in covered]
    if not outliers:
        return _dedupe(family)

    work = family + [frozenset([x]) for x in outliers]
    joins: dict[int, set] = {}
    for x in outliers:
        scores, best = clustering_factor(x, work, S)
        if best is not None and scores.phi_c >= rho:
            joins.setdefault(best, set()).add(x)
    work = [C | joins[i] if i in joins else C for i, C in enumerate(work)]
    return _dedupe(work)


def multi_members(family) -> set[int]:
    seen, multi = set(), set()
    for C in family:
        for x in C:
            (multi if x in seen else seen).add(x)
    return multi


def eliminate_multimembership(family, S) -> list[frozenset]:
    """Keep each shared point only in the cluster whose core it fits best.

    A cluster's core is its set of non-shared members. Points with a tied
    best core, or whose clusters all have empty cores, are left as they are.
    """
    S = as_array(S)
    # duplicates would tie against their own copy
    family = _dedupe(family)
    shared = multi_members(family)
    if not shared:
        return _dedupe(family)

    keep: dict[int, int] = {}
    for x in sorted(shared):
        holders = [i for i, C in enumerate(family) if x in C]
        phi = np.full(len(holders), np.nan)
        for j, i in enumerate(holders):
            core = family[i] - shared
            if core:
                phi[j] = _mean_to(S, x, core)
        best = _unique_argmax(phi)
        if best is not None:
            keep[x] = holders[best]

    out = []
    for i, C in enumerate(family):
        drop = {x for x in C if x in keep and keep[x] != i}
        out.append(C - drop)
    return _dedupe(out)
