"""Cache placement optimization.

Minimizing the network delay over placements with at most ``N`` files per
cluster is a monotone non-increasing supermodular minimization under a
partition matroid (one block per cluster).  The greedy algorithm below
caches, one element at a time, the (cluster, file) pair with the largest
delay reduction until every cache is full; its delay reduction is at
least half the optimal one.  :func:`brute_force_optimal` gives the exact
optimum on small instances, and the two ``check_*`` functions test the
structural claims on random sets.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._csvutil import write_rows
from .errors import BudgetError, ConfigError, PropertyViolation
from .params import SystemParams
from .placement import CachePlacement, is_feasible
from .popularity import PopularityModel, build_popularity
from .queueing import (
    RateModel,
    _delay_from_shares,
    batch_network_delay,
    mode_shares,
    network_delay,
)

__all__ = [
    "GreedyStep",
    "GreedyTrace",
    "BruteForceResult",
    "PropertyReport",
    "default_greedy_rates",
    "marginal_value",
    "candidate_delays",
    "greedy_caching",
    "brute_force_optimal",
    "check_supermodularity",
    "check_matroid",
]

# relative tolerance under which two candidate delays count as tied
TIE_RTOL = 1e-12


def default_greedy_rates(params: SystemParams) -> RateModel:
    """Fixed effective rates equal to the nominal cellular and backhaul rates."""
    return RateModel.fixed(params.rate_cell, params.rate_backhaul)


def _delay_gap(before, after):
    if math.isinf(before) and math.isinf(after):
        return 0.0
    return before - after


def marginal_value(
    p: CachePlacement,
    k: int,
    f: int,
    pop: PopularityModel,
    params: SystemParams,
    rm: Optional[RateModel] = None,
    cooperation: bool = True,
) -> float:
    """Delay reduction from caching file ``f`` in cluster ``k`` (1-based).

    Computed as two full evaluations, ``D(p) - D(p + (k, f))``.

    Raises
    ------
    AlreadyCachedError
        If ``f`` is already cached in ``k``.
    CapacityError
        If cluster ``k`` is full.
    """
    rm = rm or default_greedy_rates(params)
    bigger = p.with_added(k, f)
    before = network_delay(p, pop, params, rm, cooperation).network_delay
    after = network_delay(bigger, pop, params, rm, cooperation).network_delay
    return _delay_gap(before, after)


def candidate_delays(
    p: CachePlacement,
    pop: PopularityModel,
    params: SystemParams,
    rm: RateModel,
    cooperation: bool = True,
) -> np.ndarray:
    """Network delay after adding each single element, shape (K, F).

    Adding file ``f`` to cluster ``i`` moves ``P[i, f]`` of cluster ``i``
    into the local mode and, if nobody held ``f`` before, moves ``P[k, f]``
    of every other cluster from backhaul to remote.  All ``K*F`` updated
    share arrays are scored in one vectorized call.  Entries for elements
    already cached are NaN; capacity is not checked here.
    """
    C = np.asarray(p.matrix, dtype=float)
    P = pop.pmf
    K, F = C.shape
    shares = mode_shares(C, P, cooperation)
    held = C.sum(axis=0)
    mode = np.where(C == 1, 0, np.where((held - C >= 1) & cooperation, 1, 2))

    new = np.broadcast_to(shares, (K, F, K, 3)).copy()
    ii, ff = np.meshgrid(np.arange(K), np.arange(F), indexing="ij")
    new[ii, ff, ii, mode] -= P
    new[ii, ff, ii, 0] += P
    if cooperation:
        moved = (P * (held == 0)).T  # (F, K): mass of file f in cluster k
        offdiag = 1.0 - np.eye(K)
        delta = offdiag[:, None, :] * moved[None, :, :]
        new[..., 2] -= delta
        new[..., 1] += delta
    out = _delay_from_shares(new, params, rm)
    out[C == 1] = np.nan
    return out


@dataclass(frozen=True)
class GreedyStep:
    k: int
    f: int
    marginal: float
    delay: float


@dataclass(frozen=True)
class GreedyTrace:
    """Every choice made by :func:`greedy_caching`, in order."""

    steps: tuple
    final: CachePlacement
    initial_delay: float

    @property
    def delays(self) -> np.ndarray:
        return np.array([s.delay for s in self.steps])

    def placements(self):
        """Yield the placement after each step."""
        p = CachePlacement.empty(self.final.K, self.final.F, self.final.capacity)
        for s in self.steps:
            p = p.with_added(s.k, s.f)
            yield p

    def to_csv(self, path=None):
        rows = [
            dict(step=t, k=s.k, f=s.f, marginal=s.marginal, delay=s.delay)
            for t, s in enumerate(self.steps, start=1)
        ]
        return write_rows(("step", "k", "f", "marginal", "delay"), rows, path)


def _first_best(values, valid):
    """Row-major index of the smallest valid value, ties to the lowest index."""
    flat = np.where(valid, values, np.inf).ravel()
    vmask = valid.ravel()
    best = flat[vmask].min()
    if math.isinf(best):
        return int(np.flatnonzero(vmask)[0])
    tied = vmask & (flat <= best + TIE_RTOL * abs(best))
    return int(np.flatnonzero(tied)[0])


def greedy_caching(
    params: SystemParams,
    pop: Optional[PopularityModel] = None,
    rm: Optional[RateModel] = None,
    cooperation: bool = True,
) -> GreedyTrace:
    """Greedy cache filling, ``N * K`` steps from the empty placement.

    At each step the feasible uncached element with the largest delay
    reduction is added; ties go to the smallest ``(k, f)``.  Caches are
    filled completely even when the remaining reductions are zero.

    ``rm`` defaults to :func:`default_greedy_rates`.  With the mean-field
    model the objective is not guaranteed to be supermodular, so the
    approximation bound does not apply.
    """
    pop = pop or build_popularity(params)
    rm = rm or default_greedy_rates(params)
    rm.check(params)
    K, F, N = params.K, params.F, params.N
    p = CachePlacement.empty(K, F, N)
    current = network_delay(p, pop, params, rm, cooperation).network_delay
    initial = current
    steps = []
    for _ in range(N * K):
        cand = candidate_delays(p, pop, params, rm, cooperation)
        valid = (p.matrix == 0) & (p.row_counts() < N)[:, None]
        idx = _first_best(cand, valid)
        k, f = divmod(idx, F)
        after = float(cand[k, f])
        p = p.with_added(k + 1, f + 1)
        steps.append(GreedyStep(k + 1, f + 1, _delay_gap(current, after), after))
        current = after
    return GreedyTrace(tuple(steps), p, initial)


@dataclass(frozen=True)
class BruteForceResult:
    placement: CachePlacement
    delay: float
    candidates: int


def brute_force_optimal(
    params: SystemParams,
    pop: Optional[PopularityModel] = None,
    rm: Optional[RateModel] = None,
    cooperation: bool = True,
    budget: int = 10**6,
    chunk: int = 8192,
) -> BruteForceResult:
    """Exact minimum delay over all placements with full caches.

    Enumerates every choice of ``N`` files per cluster (``C(F, N)**K``
    candidates) in lexicographic order; the first minimizer wins ties.
    Partially filled caches are skipped since adding files never
    increases the delay.

    Raises
    ------
    BudgetError
        If the candidate count exceeds ``budget``.
    """
    pop = pop or build_popularity(params)
    rm = rm or default_greedy_rates(params)
    K, F, N = params.K, params.F, params.N
    n_rows = math.comb(F, N)
    total = n_rows**K
    if total > budget:
        raise BudgetError(f"{total} candidate placements exceed the budget of {budget}")
    rows = np.zeros((n_rows, F), dtype=np.int8)
    for r, files in enumerate(itertools.combinations(range(F), N)):
        rows[r, list(files)] = 1

    best_delay, best_idx = math.inf, 0
    combos = itertools.product(range(n_rows), repeat=K)
    start = 0
    while start < total:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.intp).reshape(-1, K)
        delays = batch_network_delay(rows[block], pop, params, rm, cooperation)
        i = int(np.argmin(delays))
        if delays[i] < best_delay and (
            math.isinf(best_delay) or best_delay - delays[i] > TIE_RTOL * best_delay
        ):
            best_delay, best_idx = float(delays[i]), start + i
        start += block.shape[0]

    if math.isinf(best_delay):
        best_idx = 0
    choice = np.unravel_index(best_idx, (n_rows,) * K)
    matrix = rows[list(choice)]
    return BruteForceResult(CachePlacement(matrix, N), best_delay, total)


@dataclass
class PropertyReport:
    """Outcome of a randomized property check."""

    name: str
    trials: int
    violations: int = 0
    worst: float = 0.0
    witness: Optional[dict] = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        line = f"{status} {self.name}: {self.trials} trials, {self.violations} violations"
        if self.name == "supermodularity":
            line += f", worst marginal difference {self.worst:.3e} s"
        if self.witness:
            parts = ", ".join(f"{k}={_fmt_witness(v)}" for k, v in self.witness.items())
            line += f"\n  witness: {parts}"
        return line


def _fmt_witness(value):
    if isinstance(value, (set, frozenset)):
        return "{" + ", ".join(f"s_{k}^{f}" for k, f in sorted(value)) + "}"
    if isinstance(value, tuple) and len(value) == 2:
        return f"s_{value[0]}^{value[1]}"
    return repr(value)


def _as_set(mask):
    ks, fs = np.nonzero(mask)
    return frozenset(zip((ks + 1).tolist(), (fs + 1).tolist()))


def check_supermodularity(
    params: SystemParams,
    pop: Optional[PopularityModel] = None,
    rm: Optional[RateModel] = None,
    trials: int = 1000,
    seed=0,
    tol: float = 1e-9,
    cooperation: bool = True,
    raise_on_violation: bool = True,
) -> PropertyReport:
    """Randomized test of diminishing delay reductions.

    Each trial draws nested sets ``A`` within ``B`` of (cluster, file)
    pairs, ignoring capacity, and an element ``x`` outside ``B``, and
    checks ``[D(A+x) - D(A)] - [D(B+x) - D(B)] <= tol``.  Requires the
    fixed effective rate model.

    Raises
    ------
    PropertyViolation
        On the worst violating triple, if ``raise_on_violation``.
    """
    pop = pop or build_popularity(params)
    rm = rm or default_greedy_rates(params)
    if not rm.is_fixed:
        raise ConfigError("supermodularity holds only under fixed_effective rates", field="rate_model")
    K, F = params.K, params.F
    empty = np.zeros((1, K, F), dtype=np.int8)
    if not np.isfinite(batch_network_delay(empty, pop, params, rm, cooperation)[0]):
        raise ConfigError("empty placement is unstable; delays are infinite", field="lambda")

    rng = np.random.Generator(np.random.PCG64(seed))
    mats = np.zeros((trials, 4, K, F), dtype=np.int8)
    xs = []
    for t in range(trials):
        while True:
            B = rng.random((K, F)) < rng.random()
            if not B.all():
                break
        A = B & (rng.random((K, F)) < rng.random())
        free = np.flatnonzero(~B.ravel())
        x = np.unravel_index(int(rng.choice(free)), (K, F))
        Ax, Bx = A.copy(), B.copy()
        Ax[x] = True
        Bx[x] = True
        mats[t] = (A, Ax, B, Bx)
        xs.append((int(x[0]) + 1, int(x[1]) + 1))
    D = batch_network_delay(mats.reshape(-1, K, F), pop, params, rm, cooperation).reshape(trials, 4)
    diff = (D[:, 1] - D[:, 0]) - (D[:, 3] - D[:, 2])
    bad = diff > tol
    report = PropertyReport("supermodularity", trials, int(bad.sum()), float(diff.max()))
    if bad.any():
        t = int(np.argmax(diff))
        report.witness = {"A": _as_set(mats[t, 0]), "A_prime": _as_set(mats[t, 2]), "x": xs[t]}
        if raise_on_violation:
            raise PropertyViolation(str(report), report.witness)
    return report


def _random_independent(rng, K, F, N):
    m = np.zeros((K, F), dtype=np.int8)
    for k in range(K):
        size = int(rng.integers(0, N + 1))
        m[k, rng.choice(F, size=size, replace=False)] = 1
    return m


def check_matroid(
    params: SystemParams,
    trials: int = 1000,
    seed=0,
    raise_on_violation: bool = True,
) -> PropertyReport:
    """Randomized test of the matroid axioms for per-cluster capacity.

    Checks that the empty placement is independent, that removing any
    element from a random independent set keeps it independent, and that
    for independent ``A`` and larger independent ``B`` some element of
    ``B - A`` can be added to ``A``.
    """
    K, F, N = params.K, params.F, params.N
    rng = np.random.Generator(np.random.PCG64(seed))
    report = PropertyReport("matroid", trials)

    def fail(reason, **witness):
        report.violations += 1
        if report.witness is None:
            report.witness = {"axiom": reason, **witness}

    if not is_feasible(CachePlacement.empty(K, F, N)):
        fail("nonempty")
    exchanges = 0
    for _ in range(trials):
        A = CachePlacement(_random_independent(rng, K, F, N), N)
        if len(A):
            k, f = sorted(A.elements())[int(rng.integers(len(A)))]
            if not is_feasible(A.with_removed(k, f)):
                fail("downward_closed", A=A.elements(), removed=(k, f))

        B = CachePlacement(_random_independent(rng, K, F, N), N)
        if len(A) == len(B):
            continue
        if len(A) > len(B):
            A, B = B, A
        exchanges += 1
        for k, f in sorted(B.elements() - A.elements()):
            if is_feasible(A.with_added(k, f, check=False)):
                break
        else:
            fail("exchange", A=A.elements(), B=B.elements())
    report.details["exchange_pairs"] = exchanges
    if report.violations and raise_on_violation:
        raise PropertyViolation(str(report), report.witness)
    return report
