import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_cuckoo import Location
from adaptive_cuckoo.dictionary import ReverseDictionary
from adaptive_cuckoo.errors import ConsistencyError

A = Location(0, 1, 0)
B = Location(1, 2, 1)


@pytest.fixture
def d():
    return ReverseDictionary(capacity=8, k=2, N=4, b=2)


def test_store_round_trip(d):
    d.store(b"x", A)
    assert d.element_at(A) == b"x"
    assert d.location_of(b"x") == A
    assert len(d) == 1


def test_store_leaves_counter_alone(d):
    d.store(b"x", A)
    assert d.access_counter == 0


def test_store_twice_is_an_error(d):
    d.store(b"x", A)
    with pytest.raises(ConsistencyError):
        d.store(b"x", B)


def test_two_elements_one_location(d):
    d.store(b"x", A)
    with pytest.raises(ConsistencyError):
        d.store(b"y", A)


def test_element_at_empty(d):
    with pytest.raises(LookupError):
        d.element_at(A)


def test_element_at_counts_exactly_one_access(d):
    d.store(7, A)
    for i in range(1, 4):
        assert d.element_at(A) == 7
        assert d.access_counter == i


def test_relocate(d):
    d.store(b"x", A)
    d.relocate(A, B)
    assert d.element_at(B) == b"x"
    with pytest.raises(LookupError):
        d.element_at(A)
    d.check_bijection()


def test_relocate_onto_occupied(d):
    d.store(b"x", A)
    d.store(b"y", B)
    with pytest.raises(ConsistencyError):
        d.relocate(A, B)
    with pytest.raises(ConsistencyError):
        d.relocate(Location(0, 0, 0), Location(0, 0, 1))


def test_full_dictionary(d):
    for i in range(8):
        d.register(i)
    with pytest.raises(ConsistencyError):
        d.register(99)


all_locs = [Location(t, bn, s) for t in range(2) for bn in range(4) for s in range(2)]


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 16), hops=st.lists(st.integers(0, 15), max_size=60))
def test_chain_of_relocations_keeps_bijection(n, hops):
    d = ReverseDictionary(capacity=16, k=2, N=4, b=2)
    for i in range(n):
        d.store(i, all_locs[i])
    for h in hops:
        src = all_locs[h % n]
        free = [loc for loc in all_locs if d.owner[loc] < 0]
        if d.owner[src] < 0 or not free:
            continue
        d.relocate(src, free[h % len(free)])
        d.check_bijection()
    assert len(d) == n
    assert int((d.owner >= 0).sum()) == n
    assert sorted(d.element_of(int(e)) for e in d.owner[d.owner >= 0]) == list(range(n))
