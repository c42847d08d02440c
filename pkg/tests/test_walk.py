import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixcert import (
    l2_decrease_audit,
    lower_bound_audit,
    make_pair,
    mixing_time,
    planted_expander,
    random_regular,
    spectrum,
    step,
    submultiplicativity_audit,
    trace_walk,
    variation_distance,
)
from mixcert.errors import BudgetZero, IndexOutOfTrace, NotAWitness, NotReached, SizeCap
from mixcert.walk import (
    c_delta,
    default_t_max,
    point_mass,
    spectral_envelope_check,
    submultiplicativity_all,
    uniform,
)
from oracles import dense_walk_matrix, exact_dtv_series


def test_step_examples(k4, c6):
    assert step(k4, point_mass(4, 0)) == pytest.approx([0, 1 / 3, 1 / 3, 1 / 3])
    two = step(c6, step(c6, point_mass(6, 0)))
    assert two == pytest.approx([0.5, 0, 0.25, 0, 0.25, 0])


@pytest.mark.parametrize("n,d,seed", [(10, 3, 0), (40, 4, 1), (102, 6, 2)])
def test_stationarity(n, d, seed):
    g = random_regular(n, d, seed)
    assert np.abs(step(g, uniform(n)) - 1 / n).max() <= 1e-12


def test_variation_distance_examples(k4):
    p = point_mass(4, 0)
    assert variation_distance(p, p) == 0.0
    assert variation_distance(p, uniform(4)) == pytest.approx(0.75)
    assert variation_distance(step(k4, p), uniform(4)) == pytest.approx(0.25)


def test_invalid_distribution_rejected(k4):
    with pytest.raises(ValueError):
        step(k4, np.array([0.5, 0.5, 0.5, 0.0]))
    with pytest.raises(ValueError):
        step(k4, np.array([1.5, -0.5, 0.0, 0.0]))


def test_trace_k4(k4):
    tr = trace_walk(k4, "all", 3)
    assert tr.exact
    assert tr.d_tv[:3] == pytest.approx([0.75, 0.25, 1 / 12])


def test_trace_c6_never_below_half(c6):
    tr = trace_walk(c6, "all", 40)
    assert (tr.d_tv >= 0.5 - 1e-12).all()


def test_trace_from_stationary(petersen):
    tr = trace_walk(petersen, [uniform(10)], 10)
    assert tr.starts == "explicit"
    assert np.abs(tr.d_tv).max() <= 1e-15
    assert tr.l2sq == pytest.approx(np.full(11, 0.1))


@pytest.mark.parametrize("n,d,seed", [(12, 3, 0), (30, 4, 1), (64, 6, 2)])
def test_trace_matches_dense_power_oracle(n, d, seed):
    g = random_regular(n, d, seed)
    tr = trace_walk(g, "all", 25)
    assert tr.d_tv == pytest.approx(exact_dtv_series(n, d, g.edges(), 25), abs=1e-12)


def test_trace_errors(k4):
    with pytest.raises(BudgetZero):
        trace_walk(k4, "all", -1)
    with pytest.raises(ValueError):
        trace_walk(k4, 2, 5)
    with pytest.raises(SizeCap):
        trace_walk(random_regular(40, 3, 0), "all", 2, exact_cap=20)


def test_sampled_trace_is_lower_bound():
    g = random_regular(200, 4, 1)
    full = trace_walk(g, "all", 15)
    part = trace_walk(g, 20, 15, seed=4)
    assert not part.exact and part.starts == "sampled"
    assert (part.d_tv <= full.d_tv + 1e-15).all()


def test_zero_budget_trace(k4):
    tr = trace_walk(k4, "all", 0)
    assert tr.t_max == 0 and tr.d_tv.tolist() == [0.75]


def test_csv_format(k4, tmp_path):
    tr = trace_walk(k4, "all", 2)
    lines = tr.to_csv().strip().splitlines()
    assert lines[0] == "t,d_tv,l2sq"
    assert len(lines) == 4
    t, dtv, l2 = lines[2].split(",")
    assert int(t) == 1 and float(dtv) == pytest.approx(0.25) and float(l2) == pytest.approx(1 / 3)
    path = tmp_path / "t.csv"
    tr.write_csv(path)
    assert path.read_text() == tr.to_csv()


def test_default_budget():
    assert default_t_max(256) == 80
    assert default_t_max(480) == math.ceil(10 * math.log2(480))


def test_mixing_time_examples(k4, c6, petersen):
    est = mixing_time(k4, 1 / 3)
    assert est.tau == 1 and est.exactness == "exact"
    with pytest.raises(NotReached) as exc:
        mixing_time(c6, 1 / 3, t_max=200)
    assert exc.value.last_d_tv >= 0.5 - 1e-12
    assert mixing_time(c6, 1 / 3, t_max=50, strict=False).tau is None
    assert mixing_time(petersen, 1.0).tau == 0
    assert mixing_time(petersen, 2.5).tau == 0
    with pytest.raises(ValueError):
        mixing_time(petersen, 0.0)


def test_mixing_time_agrees_with_oracle():
    g = random_regular(50, 4, 8)
    series = exact_dtv_series(50, 4, g.edges(), 60)
    for eps in (0.5, 1 / 3, 0.1, 1 / 50):
        ref = next(t for t, v in enumerate(series) if v <= eps)
        assert mixing_time(g, eps, t_max=60).tau == ref


def test_c_delta():
    assert c_delta(1.0) == 1.0
    assert c_delta(0.0) == 1.25
    assert c_delta(0.5) == pytest.approx(1.125)


def test_l2_audit_examples(petersen):
    rep = l2_decrease_audit(petersen, uniform(10), 0.3, 1.0)
    assert rep.excess_ratio <= 0
    assert rep.normalized == 0.0
    rep = l2_decrease_audit(petersen, point_mass(10, 0), 1.0, 1.0)
    assert rep.floor == pytest.approx(0.1)
    assert rep.lhs == pytest.approx(1 / 3)
    assert rep.excess_ratio == pytest.approx(1 / 3 - 0.1)


def test_l2_audit_regime_warnings_do_not_raise():
    g = random_regular(64, 4, 0)
    rep = l2_decrease_audit(g, point_mass(64, 0), 0.0, 4.0)
    assert rep.warnings
    with pytest.warns(UserWarning):
        l2_decrease_audit(g, point_mass(64, 0), 0.0, 4.0, emit_warnings=True)


def test_l2_audit_random_8_regular():
    g = random_regular(256, 8, 1)
    lam = spectrum(g).lam
    rep = l2_decrease_audit(g, point_mass(256, 0), 1.0, lam * 8)
    assert math.isfinite(rep.normalized) and rep.normalized > 0


def test_submultiplicativity_examples(k4, c6):
    tr = trace_walk(k4, "all", 4)
    rep = submultiplicativity_audit(tr, 2, 1)
    assert rep.lhs == pytest.approx(1 / 12) and rep.rhs == pytest.approx(0.25)
    assert submultiplicativity_audit(tr, 1, 3).passed
    assert all(r.passed for r in submultiplicativity_all(trace_walk(c6, "all", 12)))
    with pytest.raises(IndexOutOfTrace):
        submultiplicativity_audit(tr, 3, 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 25), st.integers(3, 6), st.integers(0, 1000))
def test_walk_invariants(half, d, seed):
    n = 2 * half
    if d >= n:
        return
    g = random_regular(n, d, seed)
    tr = trace_walk(g, "all", 30)
    assert tr.max_l2_increase <= 1e-12
    assert tr.max_tv_increase <= 1e-12
    assert tr.min_l2sq >= 1 / n - 1e-12
    assert all(r.passed for r in submultiplicativity_all(tr, tol=1e-12))
    summ = spectrum(g)
    if summ.lam < 1 - 1e-9:
        assert spectral_envelope_check(tr, summ.lam, n).passed


def test_lower_bound_audit_planted():
    inst = planted_expander(48, 4, seed=2)
    pair = make_pair(inst.graph, inst.S, inst.T)
    rep = lower_bound_audit(inst.graph, pair, 1.0, t_max=50, delta=1 / 6)
    assert rep.passed
    assert rep.d_tv[0] >= 0.5 - 8 / 96 - 1e-12
    assert rep.floor == pytest.approx(math.log(6) / math.log(4))
    assert rep.tau is not None and rep.floor_ratio >= 1


def test_lower_bound_audit_matches_dense_oracle():
    inst = planted_expander(48, 4, seed=5)
    pair = make_pair(inst.graph, inst.S, inst.T)
    rep = lower_bound_audit(inst.graph, pair, 1.0, t_max=20, measure_tau=False)
    P = dense_walk_matrix(48, 4, inst.graph.edges())
    p = np.zeros(48)
    p[inst.S.ids] = 1 / 8
    for t in range(21):
        assert rep.d_tv[t] == pytest.approx(0.5 * np.abs(p - 1 / 48).sum(), abs=1e-12)
        p = P @ p


def test_lower_bound_audit_rejects_weak_pair(k4):
    with pytest.raises(NotAWitness):
        lower_bound_audit(k4, make_pair(k4, [0, 1], [2, 3]), 0.6)
