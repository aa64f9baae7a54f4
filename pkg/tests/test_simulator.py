import numpy as np
import pytest

from d2dcache import (
    CachePlacement,
    ConfigError,
    Mode,
    SimConfig,
    SystemParams,
    cpf_placement,
    mode_arrival_rates,
    mode_route,
    network_delay,
    random_placement,
    simulate,
)
from d2dcache.simulator import route_table, simulate_eventloop


def test_mode_route_examples():
    p = CachePlacement.from_elements(3, 4, 2, [(1, 1), (2, 2), (3, 2)])
    assert mode_route(1, 1, p) is Mode.LOCAL
    assert mode_route(1, 2, p) is Mode.REMOTE
    assert mode_route(1, 3, p) is Mode.BACKHAUL
    assert mode_route(1, 2, p, cooperation=False) is Mode.BACKHAUL
    table = route_table(p)
    for k in range(1, 4):
        for f in range(1, 5):
            assert table[k - 1, f - 1] == mode_route(k, f, p)


def test_eventloop_agrees_with_recursion(small):
    cfg = SimConfig(small, cpf_placement(small), horizon=3000, seed=11, record_events=True)
    fast, slow = simulate(cfg), simulate_eventloop(cfg)
    np.testing.assert_allclose(fast.events["departure"], slow.events["departure"], rtol=1e-12)
    assert fast.network_mean_delay == pytest.approx(slow.network_mean_delay, rel=1e-10)
    np.testing.assert_array_equal(fast.mode_counts, slow.mode_counts)


def test_fcfs_order_and_work_conservation(small):
    cfg = SimConfig(small, cpf_placement(small), horizon=5000, seed=2, record_events=True)
    ev = simulate(cfg).events
    for k in range(small.K):
        sel = ev["cluster"] == k
        start, dep, arr = ev["start"][sel], ev["departure"][sel], ev["arrival"][sel]
        assert np.all(start >= arr - 1e-12)
        assert np.all(np.diff(dep) > 0)
        assert np.all(start[1:] >= dep[:-1] - 1e-9)


def test_deterministic(small):
    cfg = SimConfig(small, cpf_placement(small), horizon=20000, seed=5)
    assert simulate(cfg) == simulate(cfg)
    other = simulate(SimConfig(small, cpf_placement(small), horizon=20000, seed=6))
    assert other.network_mean_delay != simulate(cfg).network_mean_delay


def test_single_queue_oracle():
    params = SystemParams(K=1, F=5, m0=0, N=5, lam=0.5, beta=1.0)
    res = simulate(SimConfig(params, cpf_placement(params), horizon=10**6, seed=1))
    assert abs(res.network_mean_delay - 1 / 29.5) / (1 / 29.5) <= 0.02
    assert res.mode_counts[0, 1:].sum() == 0


def test_light_traffic_is_mean_service_time(refcell, ref_pop):
    params = refcell.replace(lam=0.001)
    c = cpf_placement(params)
    res = simulate(SimConfig(params, c, horizon=200_000, seed=3), ref_pop)
    rep = network_delay(c, ref_pop, params)
    shares = rep.mode_shares()
    mu = rep.loads[0].service
    expected = float(np.mean(shares @ (1 / mu)))
    assert res.network_mean_delay == pytest.approx(expected, rel=0.03)
    assert rep.network_delay == pytest.approx(expected, rel=1e-3)


def test_mode_shares_converge(refcell, ref_pop):
    c = random_placement(refcell, 4)
    res = simulate(SimConfig(refcell, c, horizon=200_000, seed=8), ref_pop)
    loads = mode_arrival_rates(c, ref_pop, refcell)
    for k, ld in enumerate(loads):
        n = res.mode_counts[k].sum()
        p = ld.arrivals / ld.lam
        sigma = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(res.mode_counts[k] - n * p) <= 3 * sigma + 1)
    assert res.mode_counts.sum() == res.completed


def test_littles_law(refcell, ref_pop):
    res = simulate(SimConfig(refcell, cpf_placement(refcell), horizon=10**6, seed=9), ref_pop)
    L = res.mean_in_system
    W = res.mean_delay_per_cluster
    np.testing.assert_allclose(L, res.arrival_rate * W, rtol=0.03)
    assert np.all(W >= 1 / res.mu.max())


def test_config_validation(small):
    c = cpf_placement(small)
    with pytest.raises(ConfigError):
        SimConfig(small, c, horizon=0)
    with pytest.raises(ConfigError):
        SimConfig(small, c, warmup_fraction=0.6)
    with pytest.raises(ConfigError):
        SimConfig(small, CachePlacement(np.ones((3, 8), dtype=np.int8), 2))
    with pytest.raises(ConfigError):
        SimConfig(small, CachePlacement.empty(2, 8, 2))


def test_unstable_run_warns(refcell):
    params = refcell.replace(lam=30.0)
    with pytest.warns(RuntimeWarning, match="unstable"):
        simulate(SimConfig(params, cpf_placement(params), horizon=2000, seed=0))


def test_fixed_rate_model_uses_fixed_mu(slow_params, slow_rates):
    res = simulate(SimConfig(slow_params, cpf_placement(slow_params), slow_rates,
                             horizon=1000, seed=0))
    np.testing.assert_allclose(res.mu, [12.5, 3.75, 2.5])


def test_csv_outputs(small, tmp_path):
    res = simulate(SimConfig(small, cpf_placement(small), horizon=500, seed=0, record_events=True))
    lines = res.to_csv().splitlines()
    assert lines[0].startswith("k,mean_delay")
    assert lines[-1].startswith("all,")
    path = tmp_path / "events.csv"
    res.events_to_csv(path)
    ev = path.read_text().splitlines()
    assert ev[0] == "arrival,cluster,file,mode,start,departure"
    assert len(ev) == 501
    assert ev[1].split(",")[3] in ("local", "remote", "backhaul")
