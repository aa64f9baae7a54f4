"""Per-cluster shifted Zipf request distributions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import SystemParams

__all__ = ["PopularityModel", "build_popularity", "zipf_weights"]


@dataclass(frozen=True)
class PopularityModel:
    """Request probabilities of every file in every cluster.

    Attributes
    ----------
    pmf : ndarray, shape (K, F)
        ``pmf[k-1, f-1]`` is the probability that a request from cluster
        ``k`` asks for file ``f``.  Rows sum to one.  Read-only.
    ranks : ndarray of int, shape (K, F)
        Popularity rank (1 = most popular) of each file in each cluster.
    shift : tuple of int
        Popular-file offset of each cluster.
    """

    pmf: np.ndarray
    ranks: np.ndarray
    shift: tuple

    @property
    def K(self) -> int:
        return self.pmf.shape[0]

    @property
    def F(self) -> int:
        return self.pmf.shape[1]

    def prob(self, k: int, f: int) -> float:
        """Probability of file ``f`` in cluster ``k`` (both 1-based)."""
        return float(self.pmf[k - 1, f - 1])

    def top_files(self, k: int, n: int) -> np.ndarray:
        """The ``n`` most popular files of cluster ``k``, 1-based, best first."""
        order = np.argsort(self.ranks[k - 1], kind="stable")
        return order[:n] + 1


def zipf_weights(F: int, beta: float) -> np.ndarray:
    """Normalized Zipf pmf over ranks ``1..F``."""
    w = np.arange(1, F + 1, dtype=float) ** (-float(beta))
    return w / w.sum()


def build_popularity(params: SystemParams) -> PopularityModel:
    """Build the shifted Zipf pmf of every cluster.

    File ``f`` of cluster ``k`` gets rank ``f - s_k`` when ``f > s_k`` and
    ``f + F - s_k`` otherwise, with ``s_k = (k-1)*m0/k``, so row ``k`` is
    row 1 rotated left by ``s_k`` positions.

    Examples
    --------
    >>> from d2dcache.params import SystemParams
    >>> pop = build_popularity(SystemParams(K=1, F=4, m0=0, N=1, beta=1.0))
    >>> pop.pmf.round(4).tolist()
    [[0.48, 0.24, 0.16, 0.12]]
    """
    F = params.F
    files = np.arange(1, F + 1)
    shifts = np.array(params.shifts)[:, None]
    ranks = np.where(files > shifts, files - shifts, files + F - shifts)
    for k, row in enumerate(ranks, start=1):
        if row.min() < 1 or row.max() > F or np.unique(row).size != F:
            raise DomainError(f"rank vector of cluster {k} is not a permutation of 1..F")
    weights = zipf_weights(F, params.beta)
    pmf = weights[ranks - 1]
    pmf.setflags(write=False)
    ranks.setflags(write=False)
    return PopularityModel(pmf=pmf, ranks=ranks, shift=params.shifts)
