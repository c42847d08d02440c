import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixcert import (
    build_graph,
    certify_exact,
    density_surplus,
    make_pair,
    min_conductance_exact,
    minimize_witness,
    planted_expander,
    random_regular,
    search_witness,
)
from mixcert.density import size_cap
from mixcert.errors import NotAWitness, SizeCap
from oracles import brute_max_surplus, brute_min_conductance, naive_surplus


def test_size_cap():
    assert size_cap(12, 1.0) == 12
    assert size_cap(48, 1 / 6) == 8
    assert size_cap(10, 0.3) == 3
    assert size_cap(10, 0.05) == 0


def test_k4_holds_at_half(k4):
    for alpha in (0.5, 0.7, 3.0):
        cert = certify_exact(k4, alpha)
        assert cert.verdict == "holds"
        assert cert.max_surplus_found == pytest.approx(0.5, abs=1e-15)
        assert cert.witness is None


def test_k4_violated_below_half(k4):
    cert = certify_exact(k4, 0.4)
    assert cert.verdict == "violated"
    assert cert.witness.surplus_alpha == pytest.approx(0.5)
    assert density_surplus(k4, cert.witness.S, cert.witness.T) == pytest.approx(0.5)
    d = cert.to_dict()
    assert d["verdict"] == "violated" and d["grade"] == "exact"


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_alpha_equal_degree_always_holds(d):
    g = random_regular(10, d, d)
    assert certify_exact(g, g.d).verdict == "holds"


def test_exact_refuses_large_graphs():
    with pytest.raises(SizeCap):
        certify_exact(random_regular(20, 3, 0), 1.0)


def test_degenerate_size_cap(k4):
    cert = certify_exact(k4, 0.1, delta=0.2)
    assert cert.verdict == "holds" and cert.degenerate


@pytest.mark.parametrize("name", ["k4", "c6", "petersen"])
def test_exact_matches_brute_force_named(name, request):
    g = request.getfixturevalue(name)
    ref, _, _ = brute_max_surplus(g.n, g.d, g.edges())
    assert certify_exact(g, 0.0).max_surplus_found == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("delta", [0.25, 0.5])
def test_exact_matches_brute_force_small_sets(seed, delta):
    g = random_regular(12, 3, 500 + seed)
    k = size_cap(12, delta)
    ref, _, _ = brute_max_surplus(12, 3, g.edges(), k)
    cert = certify_exact(g, 0.0, delta)
    assert cert.max_surplus_found == pytest.approx(ref, abs=1e-12)
    assert cert.best_pair.S.size <= k and cert.best_pair.T.size <= k


def test_exact_thread_count_does_not_matter():
    g = random_regular(12, 4, 7)
    a = certify_exact(g, 1.0, threads=1, block=300)
    b = certify_exact(g, 1.0, threads=4, block=300)
    assert a.to_dict() == b.to_dict()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_verdict_monotone_in_alpha(seed, a1, a2):
    g = random_regular(10, 3, seed)
    lo, hi = sorted((a1, a2))
    if certify_exact(g, hi).verdict == "violated":
        assert certify_exact(g, lo).verdict == "violated"


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 1.0), st.floats(0.1, 1.0))
def test_max_surplus_monotone_in_delta(seed, d1, d2):
    g = random_regular(10, 3, seed)
    lo, hi = sorted((d1, d2))
    small = certify_exact(g, 1.0, lo).max_surplus_found
    large = certify_exact(g, 1.0, hi).max_surplus_found
    if small is not None:
        assert small <= large + 1e-12


def test_heuristic_never_exceeds_exact_and_usually_matches():
    hits = 0
    for seed in range(30):
        g = random_regular(12, 3, seed)
        ex = certify_exact(g, 1.0).max_surplus_found
        he = search_witness(g, 1.0, restarts=32, seed=seed).max_surplus_found
        assert he <= ex + 1e-12
        hits += math.isclose(he, ex, abs_tol=1e-12)
    assert hits >= 27


def test_heuristic_finds_k4_witness(k4):
    cert = search_witness(k4, 0.4, seed=0)
    assert cert.verdict == "violated"
    assert cert.witness.surplus_alpha == pytest.approx(0.5)


def test_heuristic_finds_planted_pair():
    for n, d in ((48, 4), (96, 6), (240, 8)):
        inst = planted_expander(n, d, seed=1)
        cert = search_witness(inst.graph, d / 4 - 1e-6, 1 / (d + 2), seed=1)
        assert cert.verdict == "violated"
        assert cert.witness.surplus_alpha >= d / 4 - 1e-9
        assert cert.witness.S.size <= n // (d + 2)


def test_empty_budget_uses_seeds_only():
    g = random_regular(40, 4, 2)
    cert = search_witness(g, 100.0, restarts=0, seed=0)
    assert cert.verdict == "holds-up-to-search"
    assert cert.max_surplus_found is not None and cert.max_surplus_found > 0


def test_heuristic_deterministic_across_threads():
    g = random_regular(60, 4, 11)
    a = search_witness(g, 1.0, restarts=16, seed=3, threads=1)
    b = search_witness(g, 1.0, restarts=16, seed=3, threads=4)
    assert a.to_dict() == b.to_dict()


# minimal witnesses


def _reachable_minimal(g, S, T, alpha):
    """All pairs reachable by admissible single removals that admit no further removal."""
    out, stack, seen = set(), [(frozenset(S), frozenset(T))], set()
    while stack:
        S, T = stack.pop()
        if (S, T) in seen:
            continue
        seen.add((S, T))
        moves = []
        for v in S:
            if len(S) > 1 and density_surplus(g, sorted(S - {v}), sorted(T)) >= alpha - 1e-9:
                moves.append((S - {v}, T))
        for v in T:
            if len(T) > 1 and density_surplus(g, sorted(S), sorted(T - {v})) >= alpha - 1e-9:
                moves.append((S, T - {v}))
        if moves:
            stack.extend(moves)
        else:
            out.add((S, T))
    return out


def test_k4_minimal_witness_against_all_orders(k4):
    pair = make_pair(k4, [0, 1], [2, 3])
    mw = minimize_witness(k4, pair, 0.5)
    got = (frozenset(mw.pair.S.ids.tolist()), frozenset(mw.pair.T.ids.tolist()))
    assert got in _reachable_minimal(k4, [0, 1], [2, 3], 0.5)
    assert mw.degree_floor_S >= 0.25 * math.sqrt(mw.pair.T.size / mw.pair.S.size)
    assert mw.degree_floor_T >= 0.25 * math.sqrt(mw.pair.S.size / mw.pair.T.size)


def test_minimal_pair_is_fixed_point(k4):
    pair = make_pair(k4, [0, 1], [2, 3])
    mw = minimize_witness(k4, pair, 0.5)
    assert mw.pair.S == pair.S and mw.pair.T == pair.T


def test_not_a_witness(k4):
    with pytest.raises(NotAWitness):
        minimize_witness(k4, make_pair(k4, range(4), range(4)), 0.5)


@pytest.mark.parametrize("seed", range(8))
def test_minimize_against_removal_oracle(seed):
    g = random_regular(10, 3, seed)
    cert = certify_exact(g, 0.5)
    if cert.witness is None:
        pytest.skip("no witness at this alpha")
    big = make_pair(g, cert.witness.S | cert.witness.T, cert.witness.T)
    if big.surplus_alpha < 0.5:
        big = cert.witness
    mw = minimize_witness(g, big, 0.5)
    got = (frozenset(mw.pair.S.ids.tolist()), frozenset(mw.pair.T.ids.tolist()))
    assert got in _reachable_minimal(g, big.S.ids.tolist(), big.T.ids.tolist(), 0.5)
    assert mw.floors_hold(g.d)


def test_planted_pair_floors():
    inst = planted_expander(48, 4, seed=0)
    pair = make_pair(inst.graph, inst.S, inst.T)
    mw = minimize_witness(inst.graph, pair, 1.0)
    assert mw.floors_hold(4)
    assert mw.degree_floor_S >= 4 / 8 * math.sqrt(mw.pair.T.size / mw.pair.S.size)
    # before peeling each side sees exactly d/2 neighbours on the other side
    A = inst.graph.adjacency
    assert all(np.isin(A[v], inst.T.ids).sum() == 2 for v in inst.S.ids)


# exact conductance


def test_conductance_examples(c6, k4, two_k4):
    phi, cut = min_conductance_exact(c6)
    assert phi == pytest.approx(1 / 3) and cut.ids.tolist() == [0, 1, 2]
    assert min_conductance_exact(k4)[0] == pytest.approx(2 / 3)
    assert min_conductance_exact(two_k4)[0] == 0.0


@pytest.mark.parametrize("n,d,seed", [(8, 3, 0), (10, 3, 1), (12, 4, 2), (14, 3, 3)])
def test_conductance_matches_oracle(n, d, seed):
    g = random_regular(n, d, seed)
    assert min_conductance_exact(g)[0] == pytest.approx(brute_min_conductance(n, d, g.edges()), abs=1e-15)


def test_conductance_cap():
    with pytest.raises(SizeCap):
        min_conductance_exact(random_regular(26, 3, 0))


@pytest.mark.slow
def test_heuristic_conservativeness_regression():
    hits = 0
    for seed in range(100):
        g = random_regular(12, 3, 1000 + seed)
        ex = certify_exact(g, 1.0).max_surplus_found
        cert = search_witness(g, 1.0, restarts=128, seed=seed)
        assert cert.max_surplus_found <= ex + 1e-12
        hits += math.isclose(cert.max_surplus_found, ex, abs_tol=1e-12)
    assert hits >= 90


@pytest.mark.parametrize("seed", range(6))
def test_heuristic_witness_recounts(seed):
    g = random_regular(80, 4, seed)
    cert = search_witness(g, 1.5, 0.2, seed=seed)
    if cert.witness is None:
        pytest.skip("no violation found")
    w = cert.witness
    S, T = w.S.ids.tolist(), w.T.ids.tolist()
    assert naive_surplus(g.n, g.d, g.edges(), S, T) > 1.5
    assert max(len(S), len(T)) <= size_cap(80, 0.2)


@pytest.mark.parametrize("seed", range(6))
def test_minimal_witness_is_minimal(seed):
    inst = planted_expander(96, 6, seed)
    g = inst.graph
    alpha = 1.2
    mw = minimize_witness(g, make_pair(g, inst.S, inst.T), alpha)
    S, T = mw.pair.S.ids.tolist(), mw.pair.T.ids.tolist()
    assert naive_surplus(g.n, g.d, g.edges(), S, T) >= alpha - 1e-9
    for v in S:
        if len(S) > 1:
            assert naive_surplus(g.n, g.d, g.edges(), [u for u in S if u != v], T) < alpha
    for v in T:
        if len(T) > 1:
            assert naive_surplus(g.n, g.d, g.edges(), S, [u for u in T if u != v]) < alpha
