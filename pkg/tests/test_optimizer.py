import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from d2dcache import (
    AlreadyCachedError,
    BudgetError,
    CachePlacement,
    CapacityError,
    ConfigError,
    PropertyViolation,
    RateModel,
    SystemParams,
    brute_force_optimal,
    build_popularity,
    check_matroid,
    check_supermodularity,
    cpf_placement,
    greedy_caching,
    is_feasible,
    marginal_value,
    network_delay,
)
from d2dcache.optimizer import candidate_delays, default_greedy_rates

FIXED = RateModel.fixed(50e6, 5e6)


def test_candidate_delays_match_full_evaluation(refcell, ref_pop):
    rng = np.random.default_rng(0)
    for rm in (FIXED, RateModel()):
        for coop in (True, False):
            C = (rng.random((5, 108)) < 0.1).astype(np.int8)
            p = CachePlacement(C, 108)
            cand = candidate_delays(p, ref_pop, refcell, rm, coop)
            assert np.all(np.isnan(cand[C == 1]))
            for k, f in rng.integers([0, 0], [5, 108], size=(25, 2)):
                if C[k, f]:
                    continue
                ref = network_delay(p.with_added(k + 1, f + 1, check=False),
                                    ref_pop, refcell, rm, coop).network_delay
                assert cand[k, f] == pytest.approx(ref, rel=1e-12)


def test_marginal_value_errors(refcell, ref_pop):
    p = cpf_placement(refcell)
    with pytest.raises(AlreadyCachedError):
        marginal_value(p, 1, 1, ref_pop, refcell)
    with pytest.raises(CapacityError):
        marginal_value(p, 1, 50, ref_pop, refcell)


def test_marginal_local_copy_of_remote_file():
    # light traffic: the delay change is the change in mean download time
    params = SystemParams(K=2, F=4, m0=0, N=2, lam=1e-9, beta=1.0)
    pop = build_popularity(params)
    p = CachePlacement.from_elements(2, 4, 2, [(2, 3)])
    m = marginal_value(p, 1, 3, pop, params, FIXED)
    S = params.mean_size
    expected = 0.5 * pop.prob(1, 3) * (S / 50e6 - S / 120e6)
    assert m == pytest.approx(expected, rel=1e-6)
    assert m > 0


def test_addition_leaves_unaffected_clusters_alone():
    # file 1 is in clusters 1 and 2; caching it in cluster 3 only moves
    # cluster 3's requests (remote to local)
    params = SystemParams(K=3, F=3, m0=0, N=2, lam=0.5, beta=1.0)
    pop = build_popularity(params)
    q = CachePlacement.from_elements(3, 3, 2, [(1, 1), (2, 1)])
    before = network_delay(q, pop, params, FIXED)
    after = network_delay(q.with_added(3, 1), pop, params, FIXED)
    np.testing.assert_array_equal(before.cluster_delays[:2], after.cluster_delays[:2])
    assert after.cluster_delays[2] < before.cluster_delays[2]
    m = marginal_value(q, 3, 1, pop, params, FIXED)
    assert m == pytest.approx(before.network_delay - after.network_delay, rel=1e-12)


def test_marginal_two_cluster_example():
    params = SystemParams(K=2, F=2, m0=0, N=1, lam=1.0, beta=0)
    pop = build_popularity(params)
    trace = greedy_caching(params, pop, FIXED)
    first = trace.steps[0]
    empty = CachePlacement.empty(2, 2, 1)
    d0 = network_delay(empty, pop, params, FIXED).network_delay
    d1 = network_delay(empty.with_added(first.k, first.f), pop, params, FIXED).network_delay
    assert first.marginal == pytest.approx(d0 - d1, rel=1e-12)
    assert (first.k, first.f) == (1, 1)
    assert trace.final.elements() == {(1, 1), (2, 2)}


def test_greedy_single_cluster_picks_popularity_order():
    params = SystemParams(K=1, F=7, m0=0, N=3, beta=0.9)
    pop = build_popularity(params)
    trace = greedy_caching(params, pop)
    assert [(s.k, s.f) for s in trace.steps] == [(1, 1), (1, 2), (1, 3)]
    best = brute_force_optimal(params, pop)
    assert best.placement == trace.final


def test_greedy_fills_everything():
    params = SystemParams(K=2, F=4, m0=2, N=4, beta=1.0)
    trace = greedy_caching(params)
    assert len(trace.steps) == 8
    assert np.all(trace.final.matrix == 1)


def test_greedy_trace_properties(slow_params, slow_rates):
    pop = build_popularity(slow_params)
    t1 = greedy_caching(slow_params, pop, slow_rates)
    t2 = greedy_caching(slow_params, pop, slow_rates)
    assert t1 == t2
    assert len(t1.steps) == slow_params.N * slow_params.K
    assert all(s.marginal >= 0 for s in t1.steps)
    assert np.all(np.diff(np.concatenate(([t1.initial_delay], t1.delays))) <= 1e-15)
    for p in t1.placements():
        assert is_feasible(p)
    assert np.all(t1.final.row_counts() == slow_params.N)
    final = network_delay(t1.final, pop, slow_params, slow_rates).network_delay
    assert t1.delays[-1] == pytest.approx(final, rel=1e-12)


def test_greedy_matches_cpf_at_high_beta(slow_params, slow_rates):
    params = slow_params.replace(beta=2.0)
    pop = build_popularity(params)
    g = greedy_caching(params, pop, slow_rates).delays[-1]
    c = network_delay(cpf_placement(params), pop, params, slow_rates).network_delay
    assert abs(g - c) / c <= 0.01


def test_trace_csv(small):
    text = greedy_caching(small).to_csv()
    lines = text.splitlines()
    assert lines[0] == "step,k,f,marginal,delay"
    assert len(lines) == 1 + small.N * small.K


def test_brute_force_examples():
    params = SystemParams(K=1, F=3, m0=0, N=1, beta=1.0)
    assert brute_force_optimal(params).placement.elements() == {(1, 1)}

    params = SystemParams(K=2, F=2, m0=0, N=1, lam=1.0, beta=0)
    res = brute_force_optimal(params, rm=FIXED)
    assert res.candidates == 4
    assert res.placement.elements() == {(1, 1), (2, 2)}
    pop = build_popularity(params)
    other = CachePlacement.from_elements(2, 2, 1, [(1, 2), (2, 1)])
    assert network_delay(other, pop, params, FIXED).network_delay == pytest.approx(res.delay, rel=1e-14)
    same = CachePlacement.from_elements(2, 2, 1, [(1, 1), (2, 1)])
    assert network_delay(same, pop, params, FIXED).network_delay > res.delay


def test_brute_force_budget():
    params = SystemParams(K=3, F=6, m0=6, N=2, beta=0.7)
    res = brute_force_optimal(params)
    assert res.candidates == 3375
    with pytest.raises(BudgetError):
        brute_force_optimal(params, budget=3000)


def test_brute_force_is_exhaustive(small):
    # compare against an independent loop over every full placement
    import itertools

    params = small.replace(F=5, m0=0, N=2)
    pop = build_popularity(params)
    rm = default_greedy_rates(params)
    best = math.inf
    rows = list(itertools.combinations(range(1, 6), 2))
    for choice in itertools.product(rows, repeat=3):
        elems = [(k + 1, f) for k, files in enumerate(choice) for f in files]
        d = network_delay(CachePlacement.from_elements(3, 5, 2, elems), pop, params, rm).network_delay
        best = min(best, d)
    assert brute_force_optimal(params, pop, rm).delay == pytest.approx(best, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(2, 5), st.integers(1, 2), st.floats(0, 2), st.booleans())
def test_factor_two(K, F, N, beta, coop):
    N = min(N, F)
    params = SystemParams(K=K, F=F, m0=0, N=N, lam=0.5, beta=beta)
    pop = build_popularity(params)
    rm = default_greedy_rates(params)
    empty = network_delay(CachePlacement.empty(K, F, N), pop, params, rm, coop).network_delay
    g = greedy_caching(params, pop, rm, coop).delays[-1]
    opt = brute_force_optimal(params, pop, rm, coop).delay
    assert opt <= g + 1e-12
    assert empty - g >= 0.5 * (empty - opt) - 1e-12


def test_supermodularity_passes(small):
    rep = check_supermodularity(small, trials=500, seed=1)
    assert rep.passed and rep.worst <= 1e-9


def test_supermodularity_identical_sets(small):
    # with A == A' the two marginals coincide exactly
    from d2dcache.queueing import batch_network_delay

    pop = build_popularity(small)
    rm = default_greedy_rates(small)
    A = np.zeros((3, 8), dtype=np.int8)
    A[0, :3] = 1
    Ax = A.copy()
    Ax[1, 5] = 1
    d = batch_network_delay(np.stack([A, Ax, A, Ax]), pop, small, rm)
    assert (d[1] - d[0]) - (d[3] - d[2]) == 0.0


def test_supermodularity_covered_element(small):
    # x = s_3^1 while file 1 sits in cluster 2 for both sets: cluster 1 gains
    # nothing from either addition, only cluster 3 moves from remote to local
    from d2dcache.queueing import batch_network_delay

    pop = build_popularity(small)
    rm = default_greedy_rates(small)
    A = np.zeros((3, 8), dtype=np.int8)
    A[1, 0] = 1
    B = A.copy()
    B[0, 4] = 1
    mats = [A, A.copy(), B, B.copy()]
    mats[1][2, 0] = 1
    mats[3][2, 0] = 1
    d = batch_network_delay(np.stack(mats), pop, small, rm)
    assert (d[1] - d[0]) - (d[3] - d[2]) <= 1e-15


def test_supermodularity_needs_fixed_rates(small):
    with pytest.raises(ConfigError):
        check_supermodularity(small, rm=RateModel(), trials=5)


def test_supermodularity_reports_violations(small, monkeypatch):
    # feed a concave-in-coverage objective to exercise the failure path
    import d2dcache.optimizer as opt

    def bogus(mats, *args, **kwargs):
        return -(mats.reshape(len(mats), -1).sum(axis=1) ** 2).astype(float)

    monkeypatch.setattr(opt, "batch_network_delay", bogus)
    with pytest.raises(PropertyViolation) as err:
        check_supermodularity(small, trials=20, seed=0)
    assert {"A", "A_prime", "x"} <= set(err.value.witness)
    rep = check_supermodularity(small, trials=20, seed=0, raise_on_violation=False)
    assert not rep.passed and "witness" in str(rep)


def test_matroid_checks(small):
    rep = check_matroid(small, trials=300, seed=3)
    assert rep.passed
    assert rep.details["exchange_pairs"] > 100


def test_matroid_detects_broken_feasibility(small, monkeypatch):
    import d2dcache.optimizer as opt

    monkeypatch.setattr(opt, "is_feasible", lambda p: len(p) % 2 == 0)
    with pytest.raises(PropertyViolation):
        check_matroid(small, trials=50, seed=0)
