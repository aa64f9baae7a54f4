"""Scalar network parameters shared by every module.

All rates are in SI units: file sizes in bits, link rates in bits/sec and
request rates in requests/sec.  File and cluster indices exposed by the
public API are 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from numbers import Real
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DivisibilityError, DomainError

MBIT = 1e6


@dataclass(frozen=True)
class SystemParams:
    """Parameters of a clustered D2D caching cell.

    Parameters
    ----------
    K : int
        Number of clusters.
    F : int
        Library size (files).
    m0 : int
        Size of the popular set of each cluster; cluster ``k`` has its most
        popular file at index ``(k-1)*m0/k + 1``.
    N : int, optional
        Cache capacity of each cluster (files).  Derived as ``(U/K)*M``
        when omitted and both ``U`` and ``M`` are given.
    lam : float or sequence of float
        Request arrival rate of each cluster.  A scalar is broadcast.
    beta : float
        Zipf exponent, ``beta >= 0``.
    mean_size : float
        Mean file size in bits.
    rate_d2d, rate_cell, rate_backhaul : float
        D2D, inter-cluster cellular and backhaul rates in bits/sec.  Must
        satisfy ``rate_d2d > rate_cell > rate_backhaul``.
    U, M : int, optional
        User count and per-user cache size.
    """

    K: int
    F: int
    m0: int
    N: Optional[int] = None
    lam: Union[float, Sequence[float]] = 0.5
    beta: float = 1.0
    mean_size: float = 4 * MBIT
    rate_d2d: float = 120 * MBIT
    rate_cell: float = 50 * MBIT
    rate_backhaul: float = 5 * MBIT
    U: Optional[int] = None
    M: Optional[int] = None
    _shifts: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("K", "F", "m0"):
            _require_int(name, getattr(self, name))
        if self.K < 1:
            raise DomainError("must be >= 1", field="K")
        if self.F < 1:
            raise DomainError("must be >= 1", field="F")
        if not 0 <= self.m0 <= self.F:
            raise DomainError(f"must satisfy 0 <= m0 <= F (got {self.m0})", field="m0")

        N = self.N
        if self.U is not None or self.M is not None:
            if self.U is None or self.M is None:
                raise ConfigError("U and M must be given together", field="U")
            _require_int("U", self.U)
            _require_int("M", self.M)
            if self.U % self.K:
                raise DomainError("U must be a multiple of K", field="U")
            derived = (self.U // self.K) * self.M
            if N is None:
                N = derived
            elif N != derived:
                raise ConfigError(f"N={N} disagrees with (U/K)*M = {derived}", field="N")
        if N is None:
            raise ConfigError("N is required when U and M are not given", field="N")
        _require_int("N", N)
        if not 1 <= N <= self.F:
            raise DomainError(f"must satisfy 1 <= N <= F (got {N})", field="N")
        object.__setattr__(self, "N", int(N))

        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if lam.size == 1:
            lam = np.full(self.K, float(lam[0]))
        if lam.shape != (self.K,):
            raise ConfigError(f"expected {self.K} arrival rates, got {lam.size}", field="lambda")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise DomainError("arrival rates must be finite and > 0", field="lambda")
        object.__setattr__(self, "lam", tuple(float(x) for x in lam))

        if not np.isfinite(self.beta) or self.beta < 0:
            raise DomainError(f"Zipf exponent must be >= 0 (got {self.beta})", field="beta")
        for name in ("mean_size", "rate_d2d", "rate_cell", "rate_backhaul"):
            value = getattr(self, name)
            if not (isinstance(value, Real) and np.isfinite(value) and value > 0):
                raise DomainError("must be finite and > 0", field=name)
        if not self.rate_d2d > self.rate_cell > self.rate_backhaul:
            raise DomainError(
                "rates must satisfy rate_d2d > rate_cell > rate_backhaul", field="rate_cell"
            )

        shifts = []
        for k in range(1, self.K + 1):
            if ((k - 1) * self.m0) % k:
                raise DivisibilityError(
                    f"(k-1)*m0/k is not an integer for k={k}, m0={self.m0}", field="m0"
                )
            shifts.append((k - 1) * self.m0 // k)
        object.__setattr__(self, "_shifts", tuple(shifts))

    @property
    def lam_array(self) -> np.ndarray:
        return np.array(self.lam)

    @property
    def total_lam(self) -> float:
        return float(sum(self.lam))

    def shift(self, k: int) -> int:
        """Offset ``(k-1)*m0/k`` of cluster ``k`` (1-based)."""
        return self._shifts[k - 1]

    @property
    def shifts(self) -> tuple:
        return self._shifts

    def replace(self, **changes) -> "SystemParams":
        # N is derived from U and M when both are present; drop them if N moves
        if "N" in changes and "U" not in changes and self.U is not None:
            changes.setdefault("U", None)
            changes.setdefault("M", None)
        if "K" in changes and "lam" not in changes:
            lam = set(self.lam)
            if len(lam) == 1:
                changes["lam"] = lam.pop()
        return replace(self, **changes)


def reference_params(**overrides) -> SystemParams:
    """Reference cell: 5 clusters, 108 files, 20-file caches, 0.5 req/s.

    The 20-file caches correspond to 25 users holding 4 files each.
    Rates are 120/50/5 Mbit/s for D2D, cellular and backhaul with 4 Mbit
    files and ``beta = 1``.
    """
    base = dict(
        K=5,
        F=108,
        m0=60,
        N=20,
        lam=0.5,
        beta=1.0,
        mean_size=4 * MBIT,
        rate_d2d=120 * MBIT,
        rate_cell=50 * MBIT,
        rate_backhaul=5 * MBIT,
    )
    if "U" in overrides or "M" in overrides:
        # N = (U/K)*M when users are given and N is not
        base.pop("N")
    base.update(overrides)
    return SystemParams(**base)


def _require_int(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(f"must be an integer (got {value!r})", field=name)
