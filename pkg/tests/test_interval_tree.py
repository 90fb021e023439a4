import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redblue.interval_tree import IntervalTree, RankInterval, build, tree_height


def _assign_sequentially(refs, lo, hi):
    s, e = 0, len(refs)
    while s < e:
        mid = (s + e) // 2
        r = refs[mid]
        if hi < r:
            e = mid
        elif lo > r:
            s = mid + 1
        else:
            return mid
    raise AssertionError("interval missed every reference")


class TestBuild:
    def test_singleton_at_root(self):
        t = build([RankInterval(3, 5, 0)])
        root = (0 + len(t.refs)) // 2
        assert t.node_of[0] == root
        assert t.stab(4) == t.intervals

    def test_empty(self):
        t = build([])
        assert t.stab(3) == []
        assert t.height == 0

    def test_seven_intervals_structural(self):
        # seven intervals in the style of the interval-tree figure: each is
        # stored at the highest node whose reference it straddles
        ivs = [RankInterval(*ab, owner=i) for i, ab in enumerate(
            [(1, 3), (2, 6), (4, 5), (5, 9), (7, 8), (8, 10), (0, 10)])]
        t = build(ivs)
        for k, iv in enumerate(ivs):
            p = t.node_of[k]
            assert iv.lo <= t.refs[p] <= iv.hi
            assert p == _assign_sequentially(t.refs, iv.lo, iv.hi)

    def test_random_predicates(self, rng):
        ivs = []
        for i in range(1000):
            lo = int(rng.integers(0, 200))
            ivs.append(RankInterval(lo, lo + int(rng.integers(0, 40)), i))
        t = build(ivs)
        assert t.height <= 2 * math.ceil(math.log2(len(ivs) + 1)) + 1
        depths = {}
        for p, r, d in t.nodes():
            depths[p] = d
        for k, iv in enumerate(t.intervals):
            p = t.node_of[k]
            assert iv.lo <= t.refs[p] <= iv.hi
            assert p == _assign_sequentially(t.refs, iv.lo, iv.hi)
        # subtree separation: left subtree < ref < right subtree
        def walk(s, e):
            if s >= e:
                return
            mid = (s + e) // 2
            for k in range(len(t.intervals)):
                p = t.node_of[k]
                if s <= p < mid:
                    assert t.intervals[k].hi < t.refs[mid]
                elif mid < p < e:
                    assert t.intervals[k].lo > t.refs[mid]
            walk(s, mid)
            walk(mid + 1, e)
        walk(0, len(t.refs))


class TestStab:
    def test_examples(self):
        t = build([RankInterval(1, 3, 0), RankInterval(2, 5, 1),
                   RankInterval(6, 8, 2)])
        assert sorted((iv.lo, iv.hi) for iv in t.stab(2)) == [(1, 3), (2, 5)]
        assert t.stab(9) == []

    def test_equals_linear_filter(self, rng):
        ivs = [RankInterval(int(lo), int(lo + rng.integers(0, 30)), i)
               for i, lo in enumerate(rng.integers(0, 120, 400))]
        t = build(ivs)
        for q in range(-1, 155):
            got = sorted((iv.lo, iv.hi, iv.owner) for iv in t.stab(q))
            want = sorted((iv.lo, iv.hi, iv.owner) for iv in ivs
                          if iv.lo <= q <= iv.hi)
            assert got == want


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        RankInterval(5, 3, 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 60), st.integers(0, 25)),
                min_size=1, max_size=80),
       st.integers(-5, 70))
def test_stab_property(pairs, q):
    ivs = [RankInterval(lo, lo + w, i) for i, (lo, w) in enumerate(pairs)]
    t = build(ivs)
    got = sorted((iv.lo, iv.hi, iv.owner) for iv in t.stab(q))
    want = sorted((iv.lo, iv.hi, iv.owner) for iv in ivs if iv.lo <= q <= iv.hi)
    assert got == want
    assert t.height <= 2 * math.ceil(math.log2(len(ivs) + 1)) + 1
