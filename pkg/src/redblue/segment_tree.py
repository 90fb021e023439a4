"""Segment tree over the union of the red and blue curve sets.

Complete balanced tree in heap layout over the elementary x-intervals of the
deduplicated endpoint abscissas (at most 2n+1 real leaves, padded to a power
of two).  Every node carries per-color cover lists, sorted by y at the slab
midpoint, and per-color end lists.  Construction is a sequence of bulk
phases: endpoint sort, vectorized canonical-cover enumeration, a global
(node, y-key) sort, and list slicing; the result is immutable afterwards.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, parallel
from .geometry import ValidationError, pack_curves

RED = 0
BLUE = 1


@dataclass
class SegTree:
    curves: list
    n_red: int
    P: np.ndarray
    breaks: np.ndarray
    leaf_count: int
    L: int
    depth: int
    node_lo: np.ndarray
    node_hi: np.ndarray
    cover_node: list = field(repr=False, default=None)
    cover_curve: list = field(repr=False, default=None)
    cover_start: list = field(repr=False, default=None)
    cover_len: list = field(repr=False, default=None)
    end_node: list = field(repr=False, default=None)
    end_curve: list = field(repr=False, default=None)
    end_start: list = field(repr=False, default=None)
    end_len: list = field(repr=False, default=None)
    build_ops: int = 0

    @property
    def n_nodes(self):
        return 2 * self.L

    def interval(self, v):
        return self.node_lo[v], self.node_hi[v]

    def slab_mid(self, v):
        return 0.5 * (self.node_lo[v] + self.node_hi[v])

    def cover_slice(self, v, color):
        s = self.cover_start[color][v]
        return self.cover_curve[color][s:s + self.cover_len[color][v]]

    def end_slice(self, v, color):
        s = self.end_start[color][v]
        return self.end_curve[color][s:s + self.end_len[color][v]]

    def cover_ids(self, v, color):
        return [self.curves[i].id for i in self.cover_slice(v, color)]

    def end_ids(self, v, color):
        return [self.curves[i].id for i in self.end_slice(v, color)]

    def rank_of(self, v, curve_internal):
        sl = self.cover_slice(v, RED)
        w = np.nonzero(sl == curve_internal)[0]
        return int(w[0]) if len(w) else -1

    def y_rank(self, v, x, y, color=BLUE):
        """(predecessor, successor) curves of (x, y) in the node's y-sorted
        cover list at abscissa x; None on the open sides."""
        sl = self.cover_slice(v, color)
        ys = [kernels.eval_y_one(self.P, int(c), float(x)) for c in sl]
        lo = 0
        for yv in ys:
            if yv <= y:
                lo += 1
        pred = self.curves[sl[lo - 1]] if lo > 0 else None
        hi = 0
        for yv in ys:
            if yv < y:
                hi += 1
        succ = self.curves[sl[hi]] if hi < len(sl) else None
        return pred, succ

    def dump(self):
        lines = []
        for v in range(1, self.n_nodes):
            if self.node_lo[v] > self.node_hi[v]:
                continue
            sizes = (self.cover_len[RED][v], self.cover_len[BLUE][v],
                     self.end_len[RED][v], self.end_len[BLUE][v])
            if not any(sizes):
                continue
            lines.append(
                f"node {v}  [{self.node_lo[v]:g}, {self.node_hi[v]:g}]  "
                f"|C_A|={sizes[0]} |C_B|={sizes[1]} |E_A|={sizes[2]} |E_B|={sizes[3]}")
        return "\n".join(lines)


def _next_pow2(n):
    p = 1
    while p < n:
        p *= 2
    return p


def _canonical_cover_pairs(i_lo, i_hi, L, n):
    """Vectorized canonical decomposition: (node, curve) cover pairs."""
    l = i_lo.astype(np.int64) + L
    r = i_hi.astype(np.int64) + 1 + L
    idx = np.arange(n, dtype=np.int64)
    nodes = []
    curves = []
    while True:
        active = l < r
        if not active.any():
            break
        la = l[active]
        ra = r[active]
        ida = idx[active]
        ml = (la & 1).astype(bool)
        nodes.append(la[ml])
        curves.append(ida[ml])
        la = la + ml
        mr = (ra & 1).astype(bool)
        ra = ra - mr
        nodes.append(ra[mr])
        curves.append(ida[mr])
        l[active] = la >> 1
        r[active] = ra >> 1
    if not nodes:
        return (np.zeros(0, dtype=np.int64),) * 2
    return np.concatenate(nodes), np.concatenate(curves)


def _slice_by_node(nodes_sorted, n_nodes):
    start = np.zeros(n_nodes, dtype=np.int64)
    length = np.zeros(n_nodes, dtype=np.int64)
    if len(nodes_sorted):
        uniq, first, cnt = np.unique(nodes_sorted, return_index=True,
                                     return_counts=True)
        start[uniq] = first
        length[uniq] = cnt
    return start, length


def build(red, blue, workers=1, check_sorting=True, endpoint_tol=None):
    """Build the segment tree for red ∪ blue with y-sorted cover lists."""
    if endpoint_tol is None:
        endpoint_tol = kernels.EPS
    curves = list(red) + list(blue)
    n = len(curves)
    n_red = len(red)
    P = pack_curves(curves)
    for name, group in (("red", red), ("blue", blue)):
        ids = [c.id for c in group]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate curve ids in the {name} set")

    if n == 0:
        breaks = np.zeros(0)
    else:
        breaks = np.unique(np.concatenate([P[:, 9], P[:, 10]]))
    leaf_count = len(breaks) + 1
    L = _next_pow2(max(leaf_count, 2))
    depth = int(round(math.log2(L)))
    n_nodes = 2 * L
    node_lo = np.full(n_nodes, np.inf)
    node_hi = np.full(n_nodes, -np.inf)
    for j in range(leaf_count):
        node_lo[L + j] = breaks[j - 1] if j > 0 else -np.inf
        node_hi[L + j] = breaks[j] if j < len(breaks) else np.inf
    for v in range(L - 1, 0, -1):
        node_lo[v] = min(node_lo[2 * v], node_lo[2 * v + 1])
        node_hi[v] = max(node_hi[2 * v], node_hi[2 * v + 1])

    t = SegTree(curves=curves, n_red=n_red, P=P, breaks=breaks,
                leaf_count=leaf_count, L=L, depth=depth,
                node_lo=node_lo, node_hi=node_hi)
    t.cover_node = [None, None]
    t.cover_curve = [None, None]
    t.cover_start = [None, None]
    t.cover_len = [None, None]
    t.end_node = [None, None]
    t.end_curve = [None, None]
    t.end_start = [None, None]
    t.end_len = [None, None]

    groups = (np.arange(0, n_red, dtype=np.int64),
              np.arange(n_red, n, dtype=np.int64))
    ops = 0
    for color in (RED, BLUE):
        sel = groups[color]
        if len(sel) == 0:
            empty = np.zeros(0, dtype=np.int64)
            t.cover_node[color] = empty
            t.cover_curve[color] = empty
            t.cover_start[color], t.cover_len[color] = _slice_by_node(empty, n_nodes)
            t.end_node[color] = empty
            t.end_curve[color] = empty
            t.end_start[color], t.end_len[color] = _slice_by_node(empty, n_nodes)
            continue
        i_lo = np.searchsorted(breaks, P[sel, 9]) + 1
        i_hi = np.searchsorted(breaks, P[sel, 10])
        cn, cc = _canonical_cover_pairs(i_lo, i_hi, L, len(sel))
        cc = sel[cc]
        mids = 0.5 * (node_lo[cn] + node_hi[cn])
        if len(cc):
            ykeys = parallel.run_batch(lambda i, x: kernels.eval_y_batch(P, i, x),
                                       (cc, mids), workers=workers)
        else:
            ykeys = np.zeros(0)
        ops += len(cc)
        order = np.lexsort((cc, ykeys, cn))
        cn = cn[order]
        cc = cc[order]
        t.cover_node[color] = cn
        t.cover_curve[color] = cc
        t.cover_start[color], t.cover_len[color] = _slice_by_node(cn, n_nodes)

        if check_sorting and len(cn) > 1:
            adj = np.nonzero(cn[:-1] == cn[1:])[0]
            if len(adj):
                bad = kernels.validate_pairs_batch(P, cc[adj], cc[adj + 1], endpoint_tol)
                ops += len(adj)
                w = np.nonzero(bad)[0]
                if len(w):
                    a = curves[cc[adj[w[0]]]]
                    b = curves[cc[adj[w[0]] + 1]]
                    raise ValidationError(
                        f"same-set curves {a.id} and {b.id} cross", pair=(a.id, b.id))

        # end lists: endpoint -> leaf under the half-open convention, then
        # all ancestors of the (<= 2) endpoint leaves
        j1 = np.searchsorted(breaks, P[sel, 9], side="right") + L
        j2 = np.searchsorted(breaks, P[sel, 10], side="right") + L
        pairs = []
        for leaf in (j1, j2):
            v = leaf.astype(np.int64)
            while v[0] >= 1:
                pairs.append(np.stack([v, sel]))
                if v[0] == 1:
                    break
                v = v >> 1
        allp = np.concatenate(pairs, axis=1)
        key = allp[0] * np.int64(n + 1) + allp[1]
        uniq = np.unique(key)
        en = (uniq // np.int64(n + 1)).astype(np.int64)
        ec = (uniq % np.int64(n + 1)).astype(np.int64)
        t.end_node[color] = en
        t.end_curve[color] = ec
        t.end_start[color], t.end_len[color] = _slice_by_node(en, n_nodes)

    t.build_ops = ops + 2 * n * (depth + 1)
    return t
