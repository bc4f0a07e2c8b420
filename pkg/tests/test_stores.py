from __future__ import annotations

from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incq.stores import CountedMap, RelStore


@pytest.fixture
def r4():
    r = RelStore("R", 4, False, [(0, 2), (0, 1)])
    for t in [(1, 2, 3, 4), (1, 5, 3, 6)]:
        r.insert(t)
    return r


def test_image_with_key_components(r4):
    assert r4.select((3, 0), (0, 2), (1, 3)) == {(4, 1), (6, 1)}


def test_prefix_image(r4):
    assert r4.select((2, 3), (0, 1), (1, 2)) == {(3, 4)}
    assert r4.select((1, 3), (0, 2), (1, 3)) == {(2, 4), (5, 6)}


def test_absent_key_is_empty(r4):
    assert r4.select((3,), (0, 2), (9, 9)) == set()
    assert not r4.layout((0, 2)).in_domain((9, 9))
    assert len(r4.image((0, 2), (9, 9))) == 0


def test_layouts_mirror_deletes(r4):
    r4.delete((1, 2, 3, 4))
    assert set(r4.tuples()) == {(1, 5, 3, 6)}
    assert r4.select((2, 3), (0, 1), (1, 2)) == set()
    assert r4.size() == 2


def test_counted_primary_only():
    r = RelStore("T", 1, True, [(), (0,)])
    assert r.insert(("a",)) is True
    assert r.insert(("a",)) is False
    assert r.count(("a",)) == 2 and r.will_vanish(("a",)) is False
    assert r.delete(("a",)) is False
    assert r.will_vanish(("a",))
    assert r.delete(("a",)) is True
    assert len(r) == 0 and r.size() == 0


def test_uncounted_rejects_duplicates():
    m = CountedMap(1, counted=False)
    m.add((1,), "x")
    with pytest.raises(KeyError):
        m.add((1,), "x")
    m.remove((1,), "x")
    with pytest.raises(KeyError):
        m.remove((1,), "x")


def test_empty_keys_pruned():
    m = CountedMap(2)
    m.cadd((1, 2), "v")
    m.cdel((1, 2), "v")
    assert m.num_keys() == 0 and m.root == {}


pairs = st.tuples(st.tuples(st.integers(0, 3), st.integers(0, 2)), st.sampled_from("abc"))


@settings(max_examples=200, deadline=None)
@given(st.lists(pairs, max_size=40), st.randoms(use_true_random=False))
def test_counted_round_trip(ops, rnd):
    m = CountedMap(2)
    for k, v in ops:
        m.cadd(k, v)
    want = Counter(ops)
    assert len(m) == len(want)
    for (k, v), n in want.items():
        assert m.count(k, v) == n and m.contains(k, v)
    shuffled = list(ops)
    rnd.shuffle(shuffled)
    for k, v in shuffled:
        want[(k, v)] -= 1
        m.cdel(k, v)
        assert m.contains(k, v) == (want[(k, v)] > 0)
    assert len(m) == 0 and m.num_keys() == 0
