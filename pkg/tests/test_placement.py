import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from d2dcache import (
    AlreadyCachedError,
    CachePlacement,
    CapacityError,
    ConfigError,
    SystemParams,
    cpf_placement,
    is_feasible,
    reference_params,
    random_placement,
)
from d2dcache.placement import placement_from_csv, placement_to_csv


def files_of(p, k):
    return (np.flatnonzero(p.matrix[k - 1]) + 1).tolist()


def test_cpf_reference_ranges():
    p = cpf_placement(reference_params())
    assert files_of(p, 1) == list(range(1, 21))
    assert files_of(p, 2) == list(range(31, 51))
    assert files_of(p, 3) == list(range(41, 61))
    assert files_of(p, 4) == list(range(46, 66))
    assert files_of(p, 5) == list(range(49, 69))
    assert np.all(p.row_counts() == 20)


def test_cpf_full_and_single():
    assert np.all(cpf_placement(reference_params(N=108)).matrix == 1)
    p = cpf_placement(SystemParams(K=1, F=5, m0=0, N=1, beta=1.2))
    assert p.elements() == {(1, 1)}


def test_random_placement_contract():
    params = SystemParams(K=2, F=10, m0=0, N=3)
    a, b = random_placement(params, 7), random_placement(params, 7)
    assert a == b
    assert np.all(a.row_counts() == 3)
    assert random_placement(params, 8) != a
    assert np.all(random_placement(params.replace(N=10), 5).matrix == 1)


def test_feasibility_examples():
    assert is_feasible(CachePlacement.from_elements(2, 3, 1, [(1, 1), (2, 3)]))
    assert not is_feasible(CachePlacement.from_elements(2, 3, 1, [(1, 1), (1, 2)]))
    assert is_feasible(CachePlacement.empty(2, 3, 1))
    assert not is_feasible(CachePlacement(np.array([[2, 0, 0], [0, 0, 0]]), 1))


def test_with_added_errors():
    p = CachePlacement.from_elements(2, 3, 1, [(1, 1)])
    with pytest.raises(AlreadyCachedError):
        p.with_added(1, 1)
    with pytest.raises(CapacityError):
        p.with_added(1, 2)
    assert p.with_added(2, 2).elements() == {(1, 1), (2, 2)}
    assert p.elements() == {(1, 1)}


def test_csv_roundtrip(tmp_path):
    p = random_placement(reference_params(), 3)
    text = placement_to_csv(p)
    assert text.splitlines()[0].count(",") == 107
    assert placement_from_csv(io.StringIO(text), 20) == p
    path = tmp_path / "c.csv"
    placement_to_csv(p, path)
    assert placement_from_csv(path, 20) == p
    with pytest.raises(ConfigError, match="line 2"):
        placement_from_csv(io.StringIO("0,1\n0,2\n"), 1)


matrices = st.integers(1, 4).flatmap(
    lambda K: st.integers(1, 6).flatmap(
        lambda F: st.tuples(
            st.just(K), st.just(F), st.integers(1, F),
            st.lists(st.lists(st.booleans(), min_size=F, max_size=F), min_size=K, max_size=K),
        )
    )
)


@settings(max_examples=100, deadline=None)
@given(matrices, st.data())
def test_downward_closed(spec, data):
    K, F, N, rows = spec
    p = CachePlacement(np.array(rows, dtype=np.int8), N)
    assert is_feasible(p) == bool(np.all(p.matrix.sum(axis=1) <= N))
    if is_feasible(p) and len(p):
        k, f = data.draw(st.sampled_from(sorted(p.elements())))
        assert is_feasible(p.with_removed(k, f))
