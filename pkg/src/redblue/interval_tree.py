"""Interval tree over rank intervals.

The tree is the implicit median-split BST over the sorted unique endpoint
values of the stored intervals (each array position is the reference value
of exactly one node), built bulk-parallel: endpoint sort, independent
highest-containing-node search per interval, and two lexicographic sorts for
the per-node lists (by low endpoint ascending and by high endpoint
descending).  Stabbing walks the search path and scans each node list past
at most one non-match.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels


@dataclass(frozen=True)
class RankInterval:
    """Contiguous range of ranks in a node's red cover list crossed by one
    blue (sub)segment; empty intervals are discarded before storage."""

    lo: int
    hi: int
    owner: int
    case: str = ""
    piece: Optional[tuple] = None

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError("empty rank interval")


def tree_height(n_refs):
    return int(math.ceil(math.log2(n_refs + 1))) if n_refs else 0


class IntervalTree:
    """Reference-rank tree supporting stabbing queries."""

    def __init__(self, intervals):
        self.intervals = list(intervals)
        k = len(self.intervals)
        if k == 0:
            self.refs = np.zeros(0, dtype=np.int64)
            self.node_of = np.zeros(0, dtype=np.int64)
            self._lo_start = self._lo_len = self._hi_start = self._hi_len = \
                np.zeros(0, dtype=np.int64)
            self._list_lo = self._list_hi = np.zeros(0, dtype=np.int64)
            return
        lo = np.array([iv.lo for iv in self.intervals], dtype=np.int64)
        hi = np.array([iv.hi for iv in self.intervals], dtype=np.int64)
        self.refs = np.unique(np.concatenate([lo, hi]))
        m = len(self.refs)
        pos, _ = kernels.it_assign_batch(
            self.refs, np.zeros(k, dtype=np.int64),
            np.full(k, m, dtype=np.int64), lo, hi)
        if (pos < 0).any():
            raise AssertionError("interval missed every reference value")
        self.node_of = pos
        owners = np.array([iv.owner for iv in self.intervals], dtype=np.int64)
        seq = np.arange(k, dtype=np.int64)
        order_lo = np.lexsort((seq, owners, lo, pos))
        order_hi = np.lexsort((seq, owners, -hi, pos))
        self._list_lo = order_lo.astype(np.int64)
        self._list_hi = order_hi.astype(np.int64)
        self._lo_start, self._lo_len = _node_slices(pos[order_lo], m)
        self._hi_start, self._hi_len = _node_slices(pos[order_hi], m)
        self._lo = lo
        self._hi = hi

    @property
    def height(self):
        return tree_height(len(self.refs))

    def node_ref(self, p):
        return int(self.refs[p])

    def node_intervals(self, p):
        s = self._lo_start[p]
        return [self.intervals[self._list_lo[s + j]]
                for j in range(self._lo_len[p])]

    def nodes(self):
        """(position, ref, depth) of every node, by implicit-range descent."""
        out = []
        stack = [(0, len(self.refs), 0)]
        while stack:
            s, e, d = stack.pop()
            if s >= e:
                continue
            mid = (s + e) // 2
            out.append((mid, int(self.refs[mid]), d))
            stack.append((s, mid, d + 1))
            stack.append((mid + 1, e, d + 1))
        return out

    def stab(self, r):
        """All stored intervals with lo <= r <= hi."""
        out = []
        s, e = 0, len(self.refs)
        while s < e:
            mid = (s + e) // 2
            ref = self.refs[mid]
            if r == ref:
                st = self._lo_start[mid]
                for j in range(self._lo_len[mid]):
                    out.append(self.intervals[self._list_lo[st + j]])
                break
            if r < ref:
                st = self._lo_start[mid]
                for j in range(self._lo_len[mid]):
                    ivx = self._list_lo[st + j]
                    if self._lo[ivx] > r:
                        break
                    out.append(self.intervals[ivx])
                e = mid
            else:
                st = self._hi_start[mid]
                for j in range(self._hi_len[mid]):
                    ivx = self._list_hi[st + j]
                    if self._hi[ivx] < r:
                        break
                    out.append(self.intervals[ivx])
                s = mid + 1
        return out


def _node_slices(pos_sorted, m):
    start = np.zeros(m, dtype=np.int64)
    length = np.zeros(m, dtype=np.int64)
    if len(pos_sorted):
        uniq, first, cnt = np.unique(pos_sorted, return_index=True,
                                     return_counts=True)
        start[uniq] = first
        length[uniq] = cnt
    return start, length


def build(intervals):
    """Interval tree with each interval at the highest node whose reference
    value it contains; node lists sorted both ways; deterministic."""
    return IntervalTree(intervals)
