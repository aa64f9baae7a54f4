"""Analytic per-request delay of the three-mode cluster queue.

Every cluster is a single queue fed by Poisson requests at rate
``lambda_k``.  A request is served locally over D2D, relayed from a remote
cluster over the cellular link, or fetched over the backhaul, depending on
where the file is cached.  Service times are exponential with a
mode-dependent mean, so the mean sojourn time is the Pollaczek-Khinchine
value for a hyperexponential service distribution::

    D_k = rho_k / lambda_k + sum_i (lambda_i / mu_i**2) / (1 - rho_k)

The cellular and backhaul rates are shared between clusters.  Two models
of that sharing are supported (see :class:`RateModel`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ._csvutil import write_rows
from .errors import ConfigError, UnstableError
from .params import SystemParams
from .placement import CachePlacement
from .popularity import PopularityModel

__all__ = [
    "MEAN_FIELD_SHARED",
    "FIXED_EFFECTIVE",
    "RateModel",
    "ClusterLoad",
    "DelayReport",
    "ClosedFormRates",
    "mode_shares",
    "mode_arrival_rates",
    "mean_field_counts",
    "service_rates",
    "cluster_delay",
    "network_delay",
    "batch_network_delay",
    "cpf_closed_form_rates",
    "closed_form_discrepancy",
]

MEAN_FIELD_SHARED = "mean_field_shared"
FIXED_EFFECTIVE = "fixed_effective"


@dataclass(frozen=True)
class RateModel:
    """How the shared cellular and backhaul rates are split.

    ``mean_field_shared``
        The cellular rate is divided by the mean number of clusters using
        the remote mode, ``sum_k lambda_rc_k / lambda_k`` (floored at 1),
        and likewise for the backhaul.  The divisor moves with the
        placement.
    ``fixed_effective``
        The per-request rates are the constants ``effective_cell_rate`` and
        ``effective_backhaul_rate`` (bits/sec), independent of placement.
        Under this model the delay is a non-increasing supermodular set
        function of the placement.
    """

    mode: str = MEAN_FIELD_SHARED
    effective_cell_rate: Optional[float] = None
    effective_backhaul_rate: Optional[float] = None

    def __post_init__(self):
        if self.mode not in (MEAN_FIELD_SHARED, FIXED_EFFECTIVE):
            raise ConfigError(f"unknown rate model {self.mode!r}", field="rate_model")
        if self.mode == FIXED_EFFECTIVE:
            cell, bh = self.effective_cell_rate, self.effective_backhaul_rate
            if cell is None or bh is None:
                raise ConfigError(
                    "fixed_effective needs effective_cell_rate and effective_backhaul_rate",
                    field="rate_model",
                )
            if not (cell > 0 and bh > 0):
                raise ConfigError("effective rates must be > 0", field="effective_cell_rate")

    @classmethod
    def mean_field(cls) -> "RateModel":
        return cls(MEAN_FIELD_SHARED)

    @classmethod
    def fixed(cls, cell_rate: float, backhaul_rate: float) -> "RateModel":
        return cls(FIXED_EFFECTIVE, float(cell_rate), float(backhaul_rate))

    @property
    def is_fixed(self) -> bool:
        return self.mode == FIXED_EFFECTIVE

    def check(self, params: SystemParams):
        if self.is_fixed and not (
            params.rate_d2d > self.effective_cell_rate > self.effective_backhaul_rate
        ):
            raise ConfigError(
                "fixed_effective rates must satisfy rate_d2d > effective_cell_rate "
                "> effective_backhaul_rate",
                field="effective_cell_rate",
            )


@dataclass(frozen=True)
class ClusterLoad:
    """Arrival and service rates of one cluster's three modes.

    Service rates are NaN until :func:`service_rates` fills them in.
    """

    lambda_lc: float
    lambda_rc: float
    lambda_bh: float
    mu_lc: float = math.nan
    mu_rc: float = math.nan
    mu_bh: float = math.nan

    @property
    def lam(self) -> float:
        return self.lambda_lc + self.lambda_rc + self.lambda_bh

    @property
    def arrivals(self) -> np.ndarray:
        return np.array([self.lambda_lc, self.lambda_rc, self.lambda_bh])

    @property
    def service(self) -> np.ndarray:
        return np.array([self.mu_lc, self.mu_rc, self.mu_bh])

    @property
    def rho(self) -> float:
        return self.lambda_lc / self.mu_lc + self.lambda_rc / self.mu_rc + self.lambda_bh / self.mu_bh

    @property
    def complete(self) -> bool:
        return not any(math.isnan(x) for x in (self.mu_lc, self.mu_rc, self.mu_bh))


@dataclass(frozen=True)
class DelayReport:
    """Analytic delays of one placement.

    ``network_delay`` is ``inf`` and ``stable`` is False when any cluster
    has ``rho >= 1``; the offending clusters carry ``inf`` in
    ``cluster_delays``.
    """

    loads: tuple
    cluster_delays: np.ndarray
    network_delay: float
    n_a_mean: float
    n_b_mean: float
    stable: bool

    @property
    def per_cluster(self) -> list:
        return list(zip(self.loads, self.cluster_delays.tolist()))

    @property
    def rho(self) -> np.ndarray:
        return np.array([ld.rho for ld in self.loads])

    @property
    def rho_max(self) -> float:
        return float(self.rho.max())

    @property
    def total_lam(self) -> float:
        return float(sum(ld.lam for ld in self.loads))

    def mode_shares(self) -> np.ndarray:
        """Fraction of each cluster's requests served per mode, shape (K, 3)."""
        a = np.array([ld.arrivals for ld in self.loads])
        return a / a.sum(axis=1, keepdims=True)

    CSV_HEADER = (
        "k", "lambda_lc", "lambda_rc", "lambda_bh", "mu_lc", "mu_rc", "mu_bh",
        "rho", "delay", "lambda", "n_a", "n_b", "stable",
    )

    def to_csv(self, path=None):
        """One row per cluster, then a summary row with ``k = all``."""
        rows = []
        for k, (ld, d) in enumerate(self.per_cluster, start=1):
            rows.append(dict(
                k=k, lambda_lc=ld.lambda_lc, lambda_rc=ld.lambda_rc, lambda_bh=ld.lambda_bh,
                mu_lc=ld.mu_lc, mu_rc=ld.mu_rc, mu_bh=ld.mu_bh, rho=ld.rho, delay=d,
                **{"lambda": ld.lam}, stable=ld.rho < 1,
            ))
        rows.append({
            "k": "all", "delay": self.network_delay, "lambda": self.total_lam,
            "n_a": self.n_a_mean, "n_b": self.n_b_mean, "stable": self.stable,
        })
        return write_rows(self.CSV_HEADER, rows, path)


def mode_shares(matrix: np.ndarray, pmf: np.ndarray, cooperation: bool = True) -> np.ndarray:
    """Probability that a request of each cluster is served in each mode.

    Works on a single placement matrix of shape (K, F) or a stack of them
    with shape (..., K, F).  Returns shape (..., K, 3) with columns
    local, remote, backhaul.  Without cooperation the remote column is
    folded into the backhaul column.
    """
    C = np.asarray(matrix, dtype=float)
    held = C.sum(axis=-2, keepdims=True)
    remote = (held - C) >= 1
    nowhere = held == 0
    lc = (pmf * C).sum(axis=-1)
    rc = (pmf * (1 - C) * remote).sum(axis=-1)
    bh = (pmf * nowhere).sum(axis=-1)
    if not cooperation:
        bh = bh + rc
        rc = np.zeros_like(rc)
    return np.stack([lc, rc, bh], axis=-1)


def mode_arrival_rates(
    p: CachePlacement, pop: PopularityModel, params: SystemParams, cooperation: bool = True
) -> list:
    """Per-mode arrival rates of every cluster (service rates left unset).

    Without cooperation every request missing the local cache goes to the
    backhaul, even if another cluster holds the file.
    """
    shares = mode_shares(p.matrix, pop.pmf, cooperation)
    rates = shares * params.lam_array[:, None]
    return [ClusterLoad(*row) for row in rates.tolist()]


def mean_field_counts(loads: Sequence[ClusterLoad]) -> tuple:
    """Mean number of clusters in the remote and backhaul modes.

    By linearity of expectation this is ``sum_k lambda_rc_k / lambda_k``
    (resp. backhaul); with identical clusters it is ``K`` times one
    cluster's share.
    """
    n_a = sum(ld.lambda_rc / ld.lam for ld in loads)
    n_b = sum(ld.lambda_bh / ld.lam for ld in loads)
    return float(n_a), float(n_b)


def _service_triplet(params, rm, n_a, n_b):
    S = params.mean_size
    mu_lc = params.rate_d2d / S
    if rm.is_fixed:
        return mu_lc, rm.effective_cell_rate / S, rm.effective_backhaul_rate / S
    return (
        mu_lc,
        params.rate_cell / (S * max(n_a, 1.0)),
        params.rate_backhaul / (S * max(n_b, 1.0)),
    )


def service_rates(
    loads: Sequence[ClusterLoad], params: SystemParams, rm: Optional[RateModel] = None
) -> list:
    """Fill in ``mu_lc``, ``mu_rc`` and ``mu_bh`` for every cluster."""
    rm = rm or RateModel()
    rm.check(params)
    n_a, n_b = mean_field_counts(loads)
    mu = _service_triplet(params, rm, n_a, n_b)
    return [replace(ld, mu_lc=mu[0], mu_rc=mu[1], mu_bh=mu[2]) for ld in loads]


def cluster_delay(load: ClusterLoad, lambda_k: Optional[float] = None) -> float:
    """Mean sojourn time of a request in one cluster.

    Raises
    ------
    UnstableError
        If the traffic intensity is 1 or more.
    """
    if not load.complete:
        raise ValueError("service rates are not set; call service_rates first")
    lam = load.lam if lambda_k is None else lambda_k
    rho = load.rho
    if not rho < 1:
        raise UnstableError(rho)
    second = (
        load.lambda_lc / load.mu_lc**2
        + load.lambda_rc / load.mu_rc**2
        + load.lambda_bh / load.mu_bh**2
    )
    return rho / lam + second / (1.0 - rho)


def network_delay(
    p: CachePlacement,
    pop: PopularityModel,
    params: SystemParams,
    rm: Optional[RateModel] = None,
    cooperation: bool = True,
) -> DelayReport:
    """Arrival-weighted mean delay over all clusters, with its breakdown.

    Unstable clusters do not raise: the report is flagged and the network
    delay is ``inf`` so that callers can rank placements.
    """
    loads = service_rates(mode_arrival_rates(p, pop, params, cooperation), params, rm)
    n_a, n_b = mean_field_counts(loads)
    delays = []
    for ld, lam in zip(loads, params.lam):
        try:
            delays.append(cluster_delay(ld, lam))
        except UnstableError:
            delays.append(math.inf)
    delays = np.array(delays)
    stable = bool(np.all(np.isfinite(delays)))
    if stable:
        D = float(np.dot(params.lam_array, delays) / params.total_lam)
    else:
        D = math.inf
    return DelayReport(tuple(loads), delays, D, n_a, n_b, stable)


def _delay_from_shares(shares, params, rm):
    """Network delay for a stack of mode-share arrays of shape (..., K, 3).

    Vectorized twin of :func:`network_delay`; returns ``inf`` where any
    cluster is unstable.
    """
    lam = params.lam_array
    S = params.mean_size
    if rm.is_fixed:
        mu = np.array(_service_triplet(params, rm, 1.0, 1.0))
        mu = np.broadcast_to(mu, shares.shape[:-2] + (3,))
    else:
        n_a = shares[..., 1].sum(axis=-1)
        n_b = shares[..., 2].sum(axis=-1)
        mu = np.stack(
            [
                np.full(n_a.shape, params.rate_d2d / S),
                params.rate_cell / (S * np.maximum(n_a, 1.0)),
                params.rate_backhaul / (S * np.maximum(n_b, 1.0)),
            ],
            axis=-1,
        )
    mu = mu[..., None, :]
    mean_service = (shares / mu).sum(axis=-1)
    second = (shares / mu**2).sum(axis=-1)
    rho = lam * mean_service
    with np.errstate(divide="ignore", invalid="ignore"):
        Dk = mean_service + lam * second / (1.0 - rho)
    Dk = np.where(rho < 1, Dk, np.inf)
    return (Dk * lam).sum(axis=-1) / lam.sum()


def batch_network_delay(
    matrices: np.ndarray,
    pop: PopularityModel,
    params: SystemParams,
    rm: Optional[RateModel] = None,
    cooperation: bool = True,
) -> np.ndarray:
    """Network delay of each placement matrix in a stack of shape (B, K, F).

    No feasibility check is made, so any subset of (cluster, file) pairs
    can be evaluated.
    """
    rm = rm or RateModel()
    rm.check(params)
    shares = mode_shares(matrices, pop.pmf, cooperation)
    return _delay_from_shares(shares, params, rm)


@dataclass(frozen=True)
class ClosedFormRates:
    """Arrival and service rates of the popular-file placement in closed form."""

    loads: tuple
    n_a_mean: float
    n_b_mean: float


def _range_mass(row, first, last):
    """Sum of ``row`` over 1-based indices first..last, wrapping past F."""
    if last < first:
        return 0.0
    F = row.size
    idx = (np.arange(first, last + 1) - 1) % F
    return float(row[idx].sum())


def cpf_closed_form_rates(params: SystemParams, pop: PopularityModel) -> ClosedFormRates:
    """Mode rates when each cluster caches its top ``N`` files, summed by range.

    The remote mass of cluster ``k`` sums, over every other cluster ``j``,
    the files from ``c_j`` to ``s_j + N`` where
    ``c_j = max(s'_j + N + 1, s_j + 1)`` and ``s'_j = (j-2)*m0/(j-1)`` is
    the offset of cluster ``j - 1`` (``c_1 = 1``).  Each range only skips
    files already counted for the previous cluster, so for ``k >= 2`` it
    can include files in cluster ``k``'s own cache; see
    :func:`closed_form_discrepancy`.  The backhaul rate is whatever is
    left of ``lambda_k``.
    """
    N = params.N
    shifts = params.shifts
    starts = [1]
    for j in range(2, params.K + 1):
        starts.append(max(shifts[j - 2] + N + 1, shifts[j - 1] + 1))
    loads = []
    for k in range(1, params.K + 1):
        row = pop.pmf[k - 1]
        lam = params.lam[k - 1]
        s = shifts[k - 1]
        lc = lam * _range_mass(row, s + 1, s + N)
        rc = lam * sum(
            _range_mass(row, starts[j - 1], shifts[j - 1] + N)
            for j in range(1, params.K + 1)
            if j != k
        )
        loads.append(ClusterLoad(lc, rc, lam - lc - rc))
    loads = service_rates(loads, params, RateModel())
    n_a, n_b = mean_field_counts(loads)
    return ClosedFormRates(tuple(loads), n_a, n_b)


def closed_form_discrepancy(params: SystemParams, pop: PopularityModel) -> np.ndarray:
    """Closed-form minus exact arrival rates under the popular-file placement.

    Returns shape (K, 3) with columns local, remote, backhaul.  Cluster 1
    agrees exactly; later clusters can differ because the range sums do
    not exclude files that the requesting cluster caches itself.
    """
    from .placement import cpf_placement

    exact = mode_arrival_rates(cpf_placement(params), pop, params)
    closed = cpf_closed_form_rates(params, pop).loads
    return np.array([c.arrivals - e.arrivals for c, e in zip(closed, exact)])
