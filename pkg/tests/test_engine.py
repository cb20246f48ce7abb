import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqcm.engine import (
    GrowthConfig,
    adjust_first,
    adjust_merge,
    build_hierarchy,
    contract,
    grow_clusters,
    merge_partner,
    select_seeds,
)
from aqcm.graph import density
from conftest import block_similarity, random_similarity, sym
from oracles import contracted_weight_bruteforce, classify_edges, seeds_bruteforce


# ---- seed selection


def test_seeds_four_vertex(four_vertex):
    assert select_seeds(four_vertex) == [(0, 1), (2, 3)]


def test_seeds_equal_triangle_tiebreak():
    S = sym(3, {(0, 1): 0.5, (0, 2): 0.5, (1, 2): 0.5})
    assert select_seeds(S) == [(0, 1)]


def test_seeds_two_vertices():
    assert select_seeds(sym(2, {(0, 1): 0.3})) == [(0, 1)]


def test_seeds_need_two_vertices():
    with pytest.raises(ValueError):
        select_seeds(np.ones((1, 1)))


@pytest.mark.parametrize("seed", range(25))
def test_seeds_match_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 14))
    S = random_similarity(rng, n)
    if seed % 3 == 0:
        S = np.round(S, 1)  # plenty of ties
    assert select_seeds(S) == seeds_bruteforce(S.tolist())


@pytest.mark.parametrize("seed", range(20))
def test_seeds_are_sorted_and_unique(seed):
    rng = np.random.default_rng(100 + seed)
    S = random_similarity(rng, 15)
    seeds = select_seeds(S)
    assert len(set(seeds)) == len(seeds)
    ws = [S[u, v] for u, v in seeds]
    assert all(a >= b for a, b in zip(ws, ws[1:]))
    assert all(u < v for u, v in seeds)


# ---- growth


def test_growth_four_vertex(four_vertex):
    fam = grow_clusters(four_vertex, select_seeds(four_vertex), GrowthConfig(tau=0.008))
    assert fam == [frozenset({0, 1}), frozenset({2, 3})]


def test_growth_triangle_absorbs_third_not_outlier(triangle_plus_outlier):
    fam = grow_clusters(triangle_plus_outlier, [(0, 1)])
    assert fam == [frozenset({0, 1, 2})]


def test_growth_tau_joins_near_ties_together():
    # x=2 and y=3 contribute 0.900 and 0.895 to {0,1}; both within tau
    S = sym(5, {(0, 1): 0.95, (0, 2): 0.9, (1, 2): 0.9, (0, 3): 0.895, (1, 3): 0.895,
                (2, 3): 0.0, (0, 4): 0.0, (1, 4): 0.0, (2, 4): 0.0, (3, 4): 0.0})
    # one growth round from {0,1}: threshold (5/6)*0.95 < 0.9
    fam = grow_clusters(S, [(0, 1)], GrowthConfig(tau=0.008, max_levels=1))
    assert frozenset({0, 1, 2, 3}) <= fam[0]
    fam_strict = grow_clusters(S, [(0, 1)], GrowthConfig(tau=0.001))
    # with a tighter tau only the best vertex joins first, then 3 must pass a stricter test
    assert 2 in fam_strict[0]


def test_growth_covering_everything_terminates():
    S = sym(3, {(0, 1): 0.5, (0, 2): 0.5, (1, 2): 0.5})
    assert grow_clusters(S, [(0, 1)]) == [frozenset({0, 1, 2})]


def test_growth_empty_seeds():
    assert grow_clusters(np.eye(3), []) == []


def test_growth_tau_zero_still_progresses(triangle_plus_outlier):
    assert grow_clusters(triangle_plus_outlier, [(0, 1)], GrowthConfig(tau=0.0)) == [frozenset({0, 1, 2})]


def test_growth_removes_absorbed_seeds():
    S = sym(4, {(0, 1): 0.9, (0, 2): 0.9, (1, 2): 0.9, (0, 3): 0.05, (1, 3): 0.05, (2, 3): 0.05})
    fam = grow_clusters(S, [(0, 1), (0, 2), (1, 2)])
    assert fam == [frozenset({0, 1, 2})]


# ---- adjustment


def _dens4():
    # C1={0,1,2,3} density 0.9, C2={1,2,3,4} density 0.8
    S = np.zeros((5, 5))
    for i in range(4):
        for j in range(4):
            S[i, j] = 0.9
    for j in (1, 2, 3):
        S[4, j] = S[j, 4] = 0.7
    return S


def test_adjust_first_removes_heavy_overlap():
    S = _dens4()
    C1, C2 = frozenset({0, 1, 2, 3}), frozenset({1, 2, 3, 4})
    assert density(C1, S) == pytest.approx(0.9)
    assert density(C2, S) == pytest.approx(0.8)
    assert adjust_first([C2, C1], S) == [C1]


def test_adjust_first_keeps_disjoint():
    S = sym(4, {(0, 1): 0.9, (2, 3): 0.8})
    assert adjust_first([{2, 3}, {0, 1}], S) == [frozenset({0, 1}), frozenset({2, 3})]


def test_adjust_first_boundary_overlap_survives():
    S = np.full((8, 8), 0.0)
    for i in range(6):
        for j in range(6):
            S[i, j] = 0.9
    C2 = [4, 5, 6, 7]
    for a in C2:
        for b in C2:
            if {a, b} != {4, 5} and a != b:
                S[a, b] = 0.78
    C1, C2 = frozenset(range(6)), frozenset(C2)
    assert density(C2, S) == pytest.approx(0.8)
    assert set(adjust_first([C1, C2], S)) == {C1, C2}


def test_adjust_merge_merges_overlap():
    rng = np.random.default_rng(0)
    S = random_similarity(rng, 4)
    out = adjust_merge([{0, 1, 2}, {1, 2, 3}], S)
    assert out == [frozenset({0, 1, 2, 3})]


def test_merge_partner_prefers_densest_union():
    S = np.full((6, 6), 0.1)
    for i in range(4):
        for j in range(4):
            S[i, j] = 0.9
    for j in range(4):
        S[4, j] = S[j, 4] = 0.6
        S[5, j] = S[j, 5] = 0.2
    cur = frozenset({0, 1, 2, 3})
    pick, d = merge_partner(cur, [frozenset({0, 1, 5}), frozenset({2, 3, 4})], S)
    assert pick == 1
    assert d == pytest.approx(density(cur | {4}, S))


def test_adjust_merge_disjoint_unchanged():
    S = sym(4, {(0, 1): 0.9, (2, 3): 0.8})
    assert adjust_merge([{0, 1}, {2, 3}], S) == [frozenset({0, 1}), frozenset({2, 3})]


def _overlap_ok(family):
    for i, A in enumerate(family):
        for B in family[i + 1:]:
            assert len(A & B) <= 0.5 * min(len(A), len(B))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(6, 14))
def test_adjust_postconditions(seed, n):
    rng = np.random.default_rng(seed)
    S = random_similarity(rng, n)
    family = [frozenset(rng.choice(n, size=int(rng.integers(2, n)), replace=False).tolist()) for _ in range(6)]
    _overlap_ok(adjust_first(family, S))
    merged = adjust_merge(family, S)
    _overlap_ok(merged)
    # merging never loses data
    assert frozenset().union(*merged) == frozenset().union(*family)


# ---- contraction


def test_contract_disjoint_mean():
    S = sym(3, {(0, 2): 0.4, (1, 2): 0.6, (0, 1): 0.9})
    Sc, sets = contract([{0, 1}], [2], S)
    assert sets == [frozenset({0, 1}), frozenset({2})]
    assert Sc[0, 1] == pytest.approx(0.5)


def test_contract_overlap_edge_sets():
    S = sym(3, {(0, 1): 0.9, (1, 2): 0.8, (0, 2): 0.3})
    groups = classify_edges({0, 1}, {1, 2}, 3)
    assert groups == {"beta": [(0, 2)], "gamma": [(0, 1)], "delta": [(1, 2)], "sigma": []}
    Sc, _ = contract([{0, 1}, {1, 2}], [], S)
    assert Sc[0, 1] == pytest.approx((0.3 + 0.9 + 0.8) / 3)


def test_contract_sigma_counted_once():
    rng = np.random.default_rng(3)
    S = random_similarity(rng, 6)
    Ci, Cj = {0, 1, 2, 3}, {2, 3, 4, 5}
    groups = classify_edges(Ci, Cj, 6)
    assert groups["sigma"] == [(2, 3)]
    Sc, _ = contract([Ci, Cj], [], S)
    assert Sc[0, 1] == pytest.approx(contracted_weight_bruteforce(Ci, Cj, S.tolist()))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_contract_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 10))
    S = random_similarity(rng, n)
    fam = []
    while len(fam) < 3:
        C = frozenset(rng.choice(n, size=int(rng.integers(2, n)), replace=False).tolist())
        if C not in fam:
            fam.append(C)
    Sc, _ = contract(fam, [], S)
    for i in range(3):
        for j in range(i + 1, 3):
            expected = contracted_weight_bruteforce(fam[i], fam[j], S.tolist())
            assert Sc[i, j] == pytest.approx(expected, abs=1e-12)
            edges = [e for g in classify_edges(fam[i], fam[j], n).values() for e in g]
            ws = [S[a, b] for a, b in edges]
            assert min(ws) - 1e-12 <= Sc[i, j] <= max(ws) + 1e-12


def test_contract_rejects_duplicates():
    with pytest.raises(ValueError):
        contract([{0, 1}, {0, 1}], [], np.eye(3))


# ---- full hierarchy


def test_build_four_vertex(four_vertex):
    T = build_hierarchy(four_vertex)
    T.validate(four_vertex)
    levels = {k: sorted(sorted(n.members) for n in v) for k, v in T.levels().items()}
    assert levels == {0: [[0], [1], [2], [3]], 1: [[0, 1], [2, 3]], 2: [[0, 1, 2, 3]]}
    assert T.node(T.root).level == 2


def test_build_two_points():
    T = build_hierarchy(sym(2, {(0, 1): 0.3}))
    T.validate()
    assert T.height == 1
    assert sorted(T.children(T.root)) == [0, 1]


def test_build_rejects_single_point():
    with pytest.raises(ValueError):
        build_hierarchy(np.ones((1, 1)))


def test_build_all_equal_similarity_terminates():
    S = np.full((6, 6), 0.5)
    T = build_hierarchy(S)
    T.validate(S)
    assert T.node(T.root).members == frozenset(range(6))


def test_build_respects_max_levels():
    rng = np.random.default_rng(5)
    S = random_similarity(rng, 40)
    T = build_hierarchy(S, GrowthConfig(max_levels=1))
    T.validate(S)
    assert T.height == 2


@pytest.mark.parametrize("seed", range(12))
def test_build_invariants_random(seed):
    rng = np.random.default_rng(seed)
    S = random_similarity(rng, int(rng.integers(5, 40)))
    T = build_hierarchy(S)
    T.validate(S)
    counts = [len(v) for _, v in sorted(T.levels().items())]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert build_hierarchy(S).to_dict() == T.to_dict()


def test_build_records_unclustered_passthrough():
    # 0-1 and 2-3 tight pairs; 4 far from everything
    S = sym(5, {(0, 1): 0.95, (2, 3): 0.9, (0, 2): 0.5, (0, 3): 0.5, (1, 2): 0.5, (1, 3): 0.5})
    T = build_hierarchy(S)
    T.validate(S)
    lvl1 = T.levels()[1]
    flagged = [n for n in lvl1 if n.unclustered]
    assert [sorted(n.members) for n in flagged] == [[4]]


def test_seed_containment_on_blocks():
    rng = np.random.default_rng(11)
    S, labels = block_similarity(rng, [3, 5, 4, 6])
    seeds = select_seeds(S)
    assert all(labels[u] == labels[v] for u, v in seeds)
    assert {labels[u] for u, _ in seeds} == set(range(4))
