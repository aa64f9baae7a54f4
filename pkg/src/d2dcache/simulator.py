"""Discrete-event simulation of the cluster queues.

Requests arrive in one merged Poisson stream and are split among the
clusters in proportion to their rates.  Each request picks a file from its
cluster's popularity pmf, is routed to the local, remote or backhaul mode
according to the placement, and is served by its cluster's single FCFS
server with an exponential service time of mean ``1/mu_mode``.  The
shared-rate divisors of the mean-field model are frozen for a run.

For a FCFS single server the departure times follow from the arrival and
service sequences alone::

    d_n = max(d_{n-1}, a_n) + s_n

which is evaluated in closed form as a running maximum, so a run with
10**6 requests takes well under a second.  :func:`simulate_eventloop`
processes the same sample path one event at a time and exists as a
cross-check.

Three independent PCG64 substreams are spawned from the seed: arrivals
(inter-arrival times and cluster labels), file choices, and service
times.
"""
from __future__ import annotations

import enum
import heapq
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from ._csvutil import write_rows
from .errors import ConfigError
from .params import SystemParams
from .placement import CachePlacement, is_feasible
from .popularity import PopularityModel, build_popularity
from .queueing import RateModel, mode_arrival_rates, service_rates

__all__ = [
    "Mode",
    "SimConfig",
    "SimResult",
    "mode_route",
    "route_table",
    "simulate",
    "simulate_eventloop",
]


class Mode(enum.IntEnum):
    LOCAL = 0
    REMOTE = 1
    BACKHAUL = 2

    def __str__(self):
        return self.name.lower()


def mode_route(k: int, f: int, p: CachePlacement, cooperation: bool = True) -> Mode:
    """Serving mode of a request for file ``f`` from cluster ``k`` (1-based)."""
    m = p.matrix
    if m[k - 1, f - 1]:
        return Mode.LOCAL
    if cooperation and m[:, f - 1].sum() - m[k - 1, f - 1] >= 1:
        return Mode.REMOTE
    return Mode.BACKHAUL


def route_table(p: CachePlacement, cooperation: bool = True) -> np.ndarray:
    """:func:`mode_route` for every (cluster, file), shape (K, F), 0-based."""
    m = p.matrix.astype(int)
    remote = (m.sum(axis=0) - m) >= 1
    if not cooperation:
        remote = np.zeros_like(remote)
    return np.where(m == 1, Mode.LOCAL, np.where(remote, Mode.REMOTE, Mode.BACKHAUL)).astype(np.int8)


@dataclass(frozen=True)
class SimConfig:
    """Settings of one simulation run.

    ``horizon`` counts requests over all clusters.  The first
    ``warmup_fraction`` of requests by completion time are discarded.
    """

    params: SystemParams
    placement: CachePlacement
    rate_model: RateModel = RateModel()
    horizon: int = 10**6
    warmup_fraction: float = 0.1
    seed: int = 0
    batches: int = 20
    cooperation: bool = True
    record_events: bool = False

    def __post_init__(self):
        p, c = self.params, self.placement
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, (int, np.integer)):
            raise ConfigError("must be an integer", field="horizon")
        if self.horizon < 1:
            raise ConfigError("must be >= 1", field="horizon")
        if not 0 <= self.warmup_fraction <= 0.5:
            raise ConfigError("must lie in [0, 0.5]", field="warmup_fraction")
        if self.batches < 2:
            raise ConfigError("must be >= 2", field="batches")
        if c.matrix.shape != (p.K, p.F):
            raise ConfigError(
                f"placement shape {c.matrix.shape} does not match K={p.K}, F={p.F}",
                field="placement",
            )
        if not is_feasible(c) or c.capacity != p.N:
            raise ConfigError("placement is infeasible for capacity N", field="placement")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("must be a 64-bit unsigned integer", field="seed")


@dataclass(frozen=True, eq=False)
class SimResult:
    """Measured delays of one run.

    Attributes
    ----------
    mean_delay_per_cluster : ndarray, shape (K,)
    network_mean_delay : float
        Mean sojourn over all retained requests, which weights clusters by
        their arrival counts.
    mode_counts : ndarray of int, shape (K, 3)
        Retained requests per cluster and mode.
    confidence_halfwidth : float
        95% batch-means half-width of ``network_mean_delay``.
    mean_in_system : ndarray, shape (K,)
        Time-average number of requests in each cluster over the
        observation window.
    arrival_rate : ndarray, shape (K,)
        Measured arrival rate of each cluster over the same window.
    mu : ndarray, shape (3,)
        Service rates used for the run.
    events : dict of ndarray or None
        Per-request log when ``record_events`` was set.
    """

    mean_delay_per_cluster: np.ndarray
    network_mean_delay: float
    mode_counts: np.ndarray
    confidence_halfwidth: float
    completed: int
    mean_in_system: np.ndarray
    arrival_rate: np.ndarray
    mu: np.ndarray
    events: Optional[dict] = None

    def __eq__(self, other):
        if not isinstance(other, SimResult):
            return NotImplemented
        return (
            np.array_equal(self.mean_delay_per_cluster, other.mean_delay_per_cluster)
            and self.network_mean_delay == other.network_mean_delay
            and np.array_equal(self.mode_counts, other.mode_counts)
            and self.confidence_halfwidth == other.confidence_halfwidth
            and np.array_equal(self.mean_in_system, other.mean_in_system)
        )

    @property
    def mode_shares(self) -> np.ndarray:
        return self.mode_counts / self.mode_counts.sum(axis=1, keepdims=True)

    CSV_HEADER = (
        "k", "mean_delay", "count_lc", "count_rc", "count_bh",
        "mean_in_system", "arrival_rate", "halfwidth",
    )

    def to_csv(self, path=None):
        """One row per cluster and a ``k = all`` row for the network."""
        rows = []
        for k in range(self.mode_counts.shape[0]):
            rows.append(dict(
                k=k + 1, mean_delay=self.mean_delay_per_cluster[k],
                count_lc=self.mode_counts[k, 0], count_rc=self.mode_counts[k, 1],
                count_bh=self.mode_counts[k, 2], mean_in_system=self.mean_in_system[k],
                arrival_rate=self.arrival_rate[k],
            ))
        totals = self.mode_counts.sum(axis=0)
        rows.append(dict(
            k="all", mean_delay=self.network_mean_delay, count_lc=totals[0],
            count_rc=totals[1], count_bh=totals[2],
            mean_in_system=self.mean_in_system.sum(), arrival_rate=self.arrival_rate.sum(),
            halfwidth=self.confidence_halfwidth,
        ))
        return write_rows(self.CSV_HEADER, rows, path)

    def events_to_csv(self, path=None):
        if self.events is None:
            raise ValueError("run was made without record_events")
        ev = self.events
        header = ("arrival", "cluster", "file", "mode", "start", "departure")
        rows = (
            dict(arrival=a, cluster=k + 1, file=f + 1, mode=str(Mode(m)), start=s, departure=d)
            for a, k, f, m, s, d in zip(
                ev["arrival"], ev["cluster"], ev["file"], ev["mode"], ev["start"], ev["departure"]
            )
        )
        return write_rows(header, rows, path)


def _sample_path(cfg: SimConfig, pop: PopularityModel):
    """Draw arrivals, clusters, files, modes and service times."""
    params = cfg.params
    n = int(cfg.horizon)
    ss_arr, ss_file, ss_svc = np.random.SeedSequence(int(cfg.seed)).spawn(3)
    g_arr = np.random.Generator(np.random.PCG64(ss_arr))
    g_file = np.random.Generator(np.random.PCG64(ss_file))
    g_svc = np.random.Generator(np.random.PCG64(ss_svc))

    lam = params.lam_array
    arrival = np.cumsum(g_arr.exponential(1.0 / lam.sum(), size=n))
    cluster = np.searchsorted(np.cumsum(lam / lam.sum()), g_arr.random(n), side="right")
    cluster = np.minimum(cluster, params.K - 1)

    u = g_file.random(n)
    file = np.empty(n, dtype=np.intp)
    cdf = np.cumsum(pop.pmf, axis=1)
    for k in range(params.K):
        sel = cluster == k
        file[sel] = np.minimum(np.searchsorted(cdf[k], u[sel], side="right"), params.F - 1)

    mode = route_table(cfg.placement, cfg.cooperation)[cluster, file]
    loads = service_rates(
        mode_arrival_rates(cfg.placement, pop, params, cfg.cooperation), params, cfg.rate_model
    )
    mu = loads[0].service
    rho = np.array([ld.rho for ld in loads])
    if np.any(rho >= 1):
        warnings.warn(
            f"unstable configuration (max rho = {rho.max():.4g}); "
            "measured delay grows with the horizon",
            RuntimeWarning,
            stacklevel=3,
        )
    service = g_svc.exponential(1.0, size=n) / mu[mode]
    return arrival, cluster, file, mode, service, mu


def _fcfs_departures(arrival, service):
    # d_n = max_{j<=n}(a_j - S_{j-1}) + S_n with S_n the cumulative service
    csum = np.cumsum(service)
    prev = np.concatenate(([0.0], csum[:-1]))
    return np.maximum.accumulate(arrival - prev) + csum


def _summarize(cfg, arrival, cluster, file, mode, service, departure, mu):
    K = cfg.params.K
    n = arrival.size
    sojourn = departure - arrival
    order = np.argsort(departure, kind="stable")
    n_warm = int(math.floor(cfg.warmup_fraction * n))
    keep = order[n_warm:]
    if keep.size < cfg.batches:
        raise ConfigError(
            f"only {keep.size} requests left after warm-up; need at least {cfg.batches}",
            field="horizon",
        )

    kept_cluster = cluster[keep]
    kept_sojourn = sojourn[keep]
    per_cluster = np.full(K, np.nan)
    counts = np.zeros((K, 3), dtype=np.int64)
    for k in range(K):
        sel = kept_cluster == k
        if sel.any():
            per_cluster[k] = kept_sojourn[sel].mean()
        counts[k] = np.bincount(mode[keep][sel], minlength=3)
    network = float(kept_sojourn.mean())

    batch_means = np.array([b.mean() for b in np.array_split(kept_sojourn, cfg.batches)])
    halfwidth = float(
        stats.t.ppf(0.975, cfg.batches - 1) * batch_means.std(ddof=1) / math.sqrt(cfg.batches)
    )

    # observation window for the time averages
    t0 = departure[order[n_warm - 1]] if n_warm else 0.0
    t1 = arrival[-1]
    span = t1 - t0
    occupancy = np.clip(np.minimum(departure, t1) - np.maximum(arrival, t0), 0.0, None)
    in_window = (arrival >= t0) & (arrival <= t1)
    if span > 0:
        mean_in_system = np.bincount(cluster, weights=occupancy, minlength=K) / span
        arrival_rate = np.bincount(cluster[in_window], minlength=K) / span
    else:
        mean_in_system = np.zeros(K)
        arrival_rate = np.zeros(K)

    events = None
    if cfg.record_events:
        events = dict(
            arrival=arrival, cluster=cluster, file=file, mode=mode,
            start=departure - service, departure=departure,
        )
    return SimResult(
        per_cluster, network, counts, halfwidth, int(keep.size),
        mean_in_system, arrival_rate, np.asarray(mu), events,
    )


def simulate(cfg: SimConfig, pop: Optional[PopularityModel] = None) -> SimResult:
    """Run one simulation; the result depends only on ``cfg``."""
    pop = pop or build_popularity(cfg.params)
    arrival, cluster, file, mode, service, mu = _sample_path(cfg, pop)
    departure = np.empty_like(arrival)
    for k in range(cfg.params.K):
        sel = np.flatnonzero(cluster == k)
        departure[sel] = _fcfs_departures(arrival[sel], service[sel])
    return _summarize(cfg, arrival, cluster, file, mode, service, departure, mu)


def simulate_eventloop(cfg: SimConfig, pop: Optional[PopularityModel] = None) -> SimResult:
    """Same sample path as :func:`simulate`, driven by an explicit event heap.

    Slow; meant for small horizons in tests.
    """
    pop = pop or build_popularity(cfg.params)
    arrival, cluster, file, mode, service, mu = _sample_path(cfg, pop)
    K = cfg.params.K
    departure = np.empty_like(arrival)
    queues = [[] for _ in range(K)]
    heads = [0] * K
    busy = [False] * K
    ARRIVE, DEPART = 1, 0  # departures first at equal times
    events = [(t, ARRIVE, i) for i, t in enumerate(arrival.tolist())]
    heapq.heapify(events)
    while events:
        now, kind, i = heapq.heappop(events)
        k = cluster[i]
        if kind == ARRIVE:
            queues[k].append(i)
            if not busy[k]:
                busy[k] = True
                heapq.heappush(events, (now + service[i], DEPART, i))
        else:
            departure[i] = now
            heads[k] += 1
            if heads[k] < len(queues[k]):
                nxt = queues[k][heads[k]]
                heapq.heappush(events, (now + service[nxt], DEPART, nxt))
            else:
                busy[k] = False
    return _summarize(cfg, arrival, cluster, file, mode, service, departure, mu)
