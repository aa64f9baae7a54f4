"""Binary cache placements and the two baseline placement schemes.

A placement is a K x F 0/1 matrix; ``matrix[k-1, f-1] == 1`` means file
``f`` is stored in the virtual cache of cluster ``k``.  Random placements
draw from numpy's PCG64 generator so a seed pins the result bit-for-bit.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import AlreadyCachedError, CapacityError, ConfigError
from .params import SystemParams
from .popularity import build_popularity

__all__ = [
    "CachePlacement",
    "cpf_placement",
    "random_placement",
    "is_feasible",
    "placement_to_csv",
    "placement_from_csv",
]


@dataclass(frozen=True, eq=False)
class CachePlacement:
    """Cache contents of every cluster.

    The constructor only checks the shape; use :func:`is_feasible` for the
    capacity and binary constraints.  Arbitrary (over-capacity) placements
    are allowed so that set functions can be evaluated on any subset of
    the ground set.
    """

    matrix: np.ndarray
    capacity: int

    def __post_init__(self):
        m = np.array(self.matrix)
        if m.ndim != 2:
            raise ConfigError(f"placement matrix must be 2-D, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def empty(cls, K: int, F: int, capacity: int) -> "CachePlacement":
        return cls(np.zeros((K, F), dtype=np.int8), capacity)

    @classmethod
    def from_elements(cls, K, F, capacity, elements: Iterable) -> "CachePlacement":
        """Build from 1-based ``(k, f)`` pairs."""
        m = np.zeros((K, F), dtype=np.int8)
        for k, f in elements:
            m[k - 1, f - 1] = 1
        return cls(m, capacity)

    @property
    def K(self) -> int:
        return self.matrix.shape[0]

    @property
    def F(self) -> int:
        return self.matrix.shape[1]

    def row_counts(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def elements(self) -> frozenset:
        """Cached ``(k, f)`` pairs, 1-based."""
        ks, fs = np.nonzero(self.matrix)
        return frozenset(zip((ks + 1).tolist(), (fs + 1).tolist()))

    def __len__(self):
        return int(np.count_nonzero(self.matrix))

    def __contains__(self, item):
        k, f = item
        return bool(self.matrix[k - 1, f - 1])

    def __eq__(self, other):
        if not isinstance(other, CachePlacement):
            return NotImplemented
        return self.capacity == other.capacity and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.capacity, self.matrix.shape, self.matrix.tobytes()))

    def with_added(self, k: int, f: int, check: bool = True) -> "CachePlacement":
        """Return a copy with file ``f`` cached in cluster ``k``.

        Raises
        ------
        AlreadyCachedError
            If the element is already present.
        CapacityError
            If ``check`` is set and cluster ``k`` is already full.
        """
        if self.matrix[k - 1, f - 1]:
            raise AlreadyCachedError(f"file {f} is already cached in cluster {k}")
        if check and self.matrix[k - 1].sum() >= self.capacity:
            raise CapacityError(f"cluster {k} already holds {self.capacity} files")
        m = self.matrix.copy()
        m[k - 1, f - 1] = 1
        return CachePlacement(m, self.capacity)

    def with_removed(self, k: int, f: int) -> "CachePlacement":
        m = self.matrix.copy()
        m[k - 1, f - 1] = 0
        return CachePlacement(m, self.capacity)


def is_feasible(p: CachePlacement) -> bool:
    """True iff entries are 0/1 and no cluster exceeds its capacity.

    This is membership of the placement's element set in the partition
    matroid whose blocks are the clusters, each with rank ``capacity``.
    """
    m = p.matrix
    if not np.all((m == 0) | (m == 1)):
        return False
    return bool(np.all(m.sum(axis=1) <= p.capacity))


def cpf_placement(params: SystemParams) -> CachePlacement:
    """Each cluster caches its own ``N`` most popular files."""
    pop = build_popularity(params)
    m = (pop.ranks <= params.N).astype(np.int8)
    return CachePlacement(m, params.N)


def random_placement(params: SystemParams, seed) -> CachePlacement:
    """Each cluster caches ``N`` distinct files drawn uniformly at random.

    Clusters are drawn in order from a single PCG64 stream seeded with
    ``seed``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    m = np.zeros((params.K, params.F), dtype=np.int8)
    for k in range(params.K):
        m[k, rng.choice(params.F, size=params.N, replace=False)] = 1
    return CachePlacement(m, params.N)


def placement_to_csv(p: CachePlacement, path=None) -> Optional[str]:
    """K rows of F comma-separated 0/1 values.  Returns the text if no path."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in p.matrix:
        writer.writerow(int(x) for x in row)
    text = buf.getvalue()
    if path is None:
        return text
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return None


def placement_from_csv(source, capacity: int) -> CachePlacement:
    """Parse a placement written by :func:`placement_to_csv`.

    ``source`` is a path or a file-like object.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row:
            continue
        try:
            values = [int(x) for x in row]
        except ValueError as exc:
            raise ConfigError(f"non-integer entry in placement row: {exc}", line=lineno) from None
        if any(v not in (0, 1) for v in values):
            raise ConfigError("placement entries must be 0 or 1", line=lineno)
        rows.append(values)
    if not rows or len({len(r) for r in rows}) != 1:
        raise ConfigError("placement CSV must hold K rows of equal length")
    return CachePlacement(np.array(rows, dtype=np.int8), capacity)
