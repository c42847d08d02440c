import itertools
import json
import os

import numpy as np
import pytest

from mixcert import (
    bipartite_regular,
    build_graph,
    make_pair,
    minimize_witness,
    ordered_edge_count,
    planted_expander,
    planted_ssve,
    random_regular,
    read_edge_list,
    verify_claims,
)
from mixcert.construct import load_sidecar
from mixcert.errors import Divisibility, OddDegree
from mixcert.graph import format_edge_list
from conftest import GOLDEN


def test_random_regular_k4(k4):
    for seed in range(5):
        assert random_regular(4, 3, seed) == k4


def test_random_regular_golden():
    g = random_regular(12, 3, seed=2024)
    ref = read_edge_list(os.path.join(GOLDEN, "random_regular_n12_d3_seed2024.el"))
    assert g == ref
    assert format_edge_list(g) == open(os.path.join(GOLDEN, "random_regular_n12_d3_seed2024.el")).read()


def test_random_regular_parity():
    with pytest.raises(ValueError):
        random_regular(5, 3, 0)
    with pytest.raises(ValueError):
        random_regular(4, 4, 0)


@pytest.mark.parametrize("n,d", [(10, 3), (50, 4), (200, 7), (480, 10), (1000, 3)])
def test_random_regular_valid_and_deterministic(n, d):
    g = random_regular(n, d, 17)
    assert (g.n, g.d) == (n, d)
    assert build_graph(n, g.edges()) == g
    assert random_regular(n, d, 17) == g
    assert random_regular(n, d, 18) != g


def _degrees(edges, size):
    left = np.bincount([i for i, _ in edges], minlength=size)
    right = np.bincount([j for _, j in edges], minlength=size)
    return left, right


def test_bipartite_complete():
    edges = bipartite_regular(3, 3, 3, seed=0)
    assert sorted(edges) == list(itertools.product(range(3), range(3)))


def test_bipartite_golden():
    edges = sorted(bipartite_regular(8, 8, 4, seed=2024))
    with open(os.path.join(GOLDEN, "bipartite_regular_8_8_4_seed2024.txt")) as fh:
        ref = [tuple(map(int, line.split())) for line in fh if line.strip()]
    assert edges == ref
    left, right = _degrees(edges, 8)
    assert (left == 4).all() and (right == 4).all()
    assert len(set(edges)) == len(edges)


def test_bipartite_degree_zero():
    assert list(bipartite_regular(5, 5, 0, seed=1)) == []


def test_bipartite_preconditions():
    with pytest.raises(ValueError):
        bipartite_regular(4, 5, 2, seed=0)
    with pytest.raises(ValueError):
        bipartite_regular(4, 4, 5, seed=0)


def test_planted_48_4():
    inst = planted_expander(48, 4, seed=1)
    assert inst.S.size == inst.T.size == 8 and inst.R.size == 32
    # S and T are disjoint, so each of the 16 cross edges is counted once
    assert ordered_edge_count(inst.graph, inst.S, inst.T) == 16
    assert ordered_edge_count(inst.graph, inst.S | inst.T, inst.S | inst.T) == 32
    assert inst.structure_errors() == []
    g = inst.graph
    R = inst.R.ids
    inner = [(u, v) for u, v in g.edges() if u in set(R) and v in set(R)]
    assert len(inner) == 32 * 3 // 2


def test_planted_preconditions():
    with pytest.raises(Divisibility):
        planted_expander(50, 4, 0)
    with pytest.raises(OddDegree):
        planted_expander(45, 3, 0)
    with pytest.raises(ValueError):
        planted_ssve(48, 6, 0)
    with pytest.raises(ValueError):
        planted_expander(6, 4, 0)


@pytest.mark.parametrize(
    "maker,n,d",
    [
        (planted_expander, 24, 4),
        (planted_expander, 96, 6),
        (planted_expander, 240, 8),
        (planted_ssve, 60, 8),
        (planted_ssve, 120, 10),
    ],
)
def test_planted_invariants_and_density(maker, n, d):
    inst = maker(n, d, seed=3)
    assert inst.structure_errors() == []
    s = n // (d + 2)
    est = ordered_edge_count(inst.graph, inst.S, inst.T)
    assert est == d * s // 2
    # exact integer form of |E(S,T)| >= d s t / n + (d/4) sqrt(s t) with s = t
    assert 4 * (est * n - d * s * s) >= d * s * n
    mw = minimize_witness(inst.graph, make_pair(inst.graph, inst.S, inst.T), d / 4)
    assert mw.floors_hold(d)


def test_planted_determinism():
    a = planted_expander(96, 6, seed=42)
    b = planted_expander(96, 6, seed=42)
    assert a.graph == b.graph and a.S == b.S
    assert planted_expander(96, 6, seed=43).graph != a.graph


def test_planted_ssve_records_spectral_certificate():
    inst = planted_ssve(60, 8, seed=0)
    info = inst.claims["inner_graph"]
    assert info["grade"] == "spectral"
    assert "certified_spectrally" in info and "tanner_bound" in info


def test_verify_claims_small_exact():
    inst = planted_expander(24, 4, seed=0)
    rep = verify_claims(inst, seed=0)
    assert rep["density"]["passed"]
    assert rep["conductance"]["grade"] == "exact"
    assert rep["conductance"]["min_conductance"] >= 1 / 8
    assert rep["passed"]


def test_verify_claims_sampled():
    inst = planted_expander(480, 6, seed=0)
    rep = verify_claims(inst, cuts=10_000, seed=0)
    cond = rep["conductance"]
    assert cond["samples"] >= 10_000
    assert cond["min_conductance"] >= 1 / 8
    assert cond["argmin_recount"] == pytest.approx(cond["min_conductance"])


def test_verify_claims_ssve():
    inst = planted_ssve(60, 8, seed=0)
    rep = verify_claims(inst, sets=2_000, seed=0)
    exp = rep["vertex_expansion"]
    assert exp["max_size"] == 60 // 8
    assert exp["min_expansion"] >= 1.0
    assert rep["density"]["passed"]


def test_sidecar_round_trip(tmp_path):
    inst = planted_ssve(60, 8, seed=4)
    inst.write_sidecar(tmp_path / "p.json")
    data = json.loads((tmp_path / "p.json").read_text())
    assert data["S"] == list(range(6)) and data["T"] == list(range(6, 12))
    back = load_sidecar(tmp_path / "p.json", inst.graph)
    assert back.S == inst.S and back.T == inst.T
    assert back.params["kind"] == "planted-ssve"
