"""First-last intersection engine.

For each red curve, the intersection point with the blue set having minimal
x (Steps 1-4: segment tree, neighbor candidates, rank intervals with
splitting and prefix shrinking through per-node interval trees, final
reduction).  Maximal-x points come from a mirrored run.  All phases are
bulk maps over independent items followed by global sorts, so results are
identical for any worker count.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import interval_tree, kernels, parallel, segment_tree
from .geometry import Point, ValidationError
from .interval_tree import RankInterval, tree_height
from .segment_tree import BLUE, RED

SOURCE_COVER = "step2-cover"
SOURCE_END = "step2-end"
SOURCE_STEP3 = "step3"
_SOURCES = (SOURCE_COVER, SOURCE_END, SOURCE_STEP3)

CASE_NAMES = ("once-once", "once-twice", "twice-nested", "twice-disjoint")


@dataclass(frozen=True)
class CandidatePoint:
    red_id: int
    point: Point
    blue_id: int
    source: str


@dataclass(frozen=True)
class BlueSubsegment:
    blue_id: int
    x_lo: float
    x_hi: float
    rank_lo: int
    rank_hi: int
    case: str


@dataclass
class Counters:
    build_ops: int = 0
    evals: int = 0
    intersections: int = 0
    search_steps: int = 0
    stab_visits: int = 0
    candidates: int = 0
    anomalies: int = 0

    def total(self):
        return (self.build_ops + self.evals + self.intersections
                + self.search_steps + self.stab_visits)

    def merge(self, other):
        for k in vars(self):
            setattr(self, k, getattr(self, k) + getattr(other, k))


@dataclass
class FirstLastResult:
    firsts: dict
    lasts: dict
    counters: Counters
    diagnostics: dict = field(default_factory=dict)
    trace: Optional[dict] = None

    def first_of(self, red_id):
        return self.firsts.get(red_id)

    def last_of(self, red_id):
        return self.lasts.get(red_id)


def mirror_x(curves):
    """Reflect all coordinates x -> -x (an involution)."""
    return [c.mirror() for c in curves]


def validate_sets(red, blue, endpoint_tol=kernels.EPS):
    """Full pairwise intersection-freeness check within each set."""
    for name, group in (("red", red), ("blue", blue)):
        n = len(group)
        if n < 2:
            continue
        P = segment_tree.pack_curves(group)
        lo = P[:, 9]
        hi = P[:, 10]
        for s in range(0, n, 1024):
            e = min(n, s + 1024)
            ii, jj = np.nonzero(
                (lo[s:e, None] <= hi[None, :] + 1e-12)
                & (hi[s:e, None] >= lo[None, :] - 1e-12))
            keep = s + ii < jj
            ia = (s + ii[keep]).astype(np.int64)
            ib = jj[keep].astype(np.int64)
            if not len(ia):
                continue
            bad = kernels.validate_pairs_batch(P, ia, ib, endpoint_tol)
            w = np.nonzero(bad)[0]
            if len(w):
                a = group[ia[w[0]]]
                b = group[ib[w[0]]]
                raise ValidationError(
                    f"{name} curves {a.id} and {b.id} have a common point "
                    "that is not a shared endpoint", pair=(a.id, b.id))


# ---------------------------------------------------------------------------
# phase helpers (operating on one SegTree)
# ---------------------------------------------------------------------------

def _step2_items(t):
    """(a_idx, v, source_code) for every cover/end occurrence of a red curve
    at a node with a nonempty blue cover list."""
    groups = []
    for src, nodes, curves in ((0, t.cover_node[RED], t.cover_curve[RED]),
                               (1, t.end_node[RED], t.end_curve[RED])):
        if len(nodes) == 0:
            continue
        mask = t.cover_len[BLUE][nodes] > 0
        groups.append((src, curves[mask], nodes[mask]))
    return groups


def _run_step2(t, workers, counters):
    P = t.P
    cb_flat = t.cover_curve[BLUE]
    outs = []
    for src, a_idx, v in _step2_items(t):
        if len(a_idx) == 0:
            continue
        xq = np.maximum(P[a_idx, 9], t.node_lo[v])
        res = parallel.run_batch(
            lambda a, s, ln, x, slo, shi: kernels.step2_batch(
                P, cb_flat, a, s, ln, x, slo, shi),
            (a_idx, t.cover_start[BLUE][v], t.cover_len[BLUE][v], xq,
             t.node_lo[v], t.node_hi[v]),
            workers=workers, n_out_scalars=1)
        found, cx, cy, cb, ops = res
        counters.search_steps += int(ops)
        w = np.nonzero(found)[0]
        outs.append((a_idx[w], cx[w], cy[w], cb[w],
                     np.full(len(w), src, dtype=np.int64)))
    if not outs:
        z = np.zeros(0)
        zi = np.zeros(0, dtype=np.int64)
        return zi, z, z, zi, zi
    return tuple(np.concatenate([o[k] for o in outs]) for k in range(5))


def _step31_items(t):
    nodes = t.end_node[BLUE]
    curves = t.end_curve[BLUE]
    if len(nodes) == 0:
        return curves, nodes
    mask = t.cover_len[RED][nodes] > 0
    return curves[mask], nodes[mask]


def _run_step31(t, workers, counters, items=None):
    """Rank intervals for all (node, blue end-list) occurrences.

    Returns arrays (iv_v, iv_rlo, iv_rhi, iv_owner, iv_plo, iv_phi, iv_tag).
    """
    P = t.P
    ca_flat = t.cover_curve[RED]
    b_idx, v = _step31_items(t) if items is None else items
    if len(b_idx) == 0:
        zi = np.zeros(0, dtype=np.int64)
        z = np.zeros(0)
        return zi, zi, zi, zi, z, z, zi
    lo = np.maximum(P[b_idx, 9], t.node_lo[v])
    hi = np.minimum(P[b_idx, 10], t.node_hi[v])
    res = parallel.run_batch(
        lambda b, s, ln, l, h: kernels.step31_batch(P, ca_flat, b, s, ln, l, h),
        (b_idx, t.cover_start[RED][v], t.cover_len[RED][v], lo, hi),
        workers=workers, n_out_scalars=1)
    npc, plo, phi, rlo, rhi, ptag, anom, ops = res
    counters.search_steps += int(ops)
    counters.anomalies += int(anom.sum())
    slot = np.arange(3)[None, :]
    mask = slot < npc[:, None]
    it_of = np.broadcast_to(np.arange(len(b_idx))[:, None], mask.shape)[mask]
    return (v[it_of], rlo[mask], rhi[mask], b_idx[it_of],
            plo[mask], phi[mask], ptag[mask].astype(np.int64))


class _TreeSet:
    """Interval trees for many segment-tree nodes, flattened for the stab
    kernel: one implicit median-split BST per node over the rank endpoint
    values of its stored intervals."""

    def __init__(self, t, iv_v, iv_rlo, iv_rhi, iv_owner, iv_plo, iv_phi,
                 counters):
        self.n_iv = len(iv_v)
        self.iv_v = iv_v
        self.iv_lo = iv_rlo.astype(np.int64)
        self.iv_hi = iv_rhi.astype(np.int64)
        self.iv_owner = iv_owner.astype(np.int64)
        self.iv_plo = iv_plo
        self.iv_phi = iv_phi
        self.tree_of_node = np.full(t.n_nodes, -1, dtype=np.int64)
        if self.n_iv == 0:
            self.v_comp = np.zeros(0, dtype=np.int64)
            self.refs_flat = np.zeros(0, dtype=np.int64)
            self.ref_start = np.zeros(0, dtype=np.int64)
            self.ref_len = np.zeros(0, dtype=np.int64)
            self.gnode = np.zeros(0, dtype=np.int64)
            z = np.zeros(0, dtype=np.int64)
            self.node_lo_start = self.node_lo_len = z
            self.node_hi_start = self.node_hi_len = z
            self.list_lo = self.list_hi = z
            return
        v_comp, tr_of_iv = np.unique(iv_v, return_inverse=True)
        self.v_comp = v_comp
        self.tree_of_node[v_comp] = np.arange(len(v_comp))
        enc = np.concatenate([tr_of_iv, tr_of_iv]) * np.int64(1 << 31) \
            + np.concatenate([self.iv_lo, self.iv_hi])
        uniq = np.unique(enc)
        tr_u = (uniq >> 31).astype(np.int64)
        self.refs_flat = (uniq & np.int64((1 << 31) - 1)).astype(np.int64)
        self.ref_len = np.bincount(tr_u, minlength=len(v_comp)).astype(np.int64)
        self.ref_start = np.concatenate(
            [[0], np.cumsum(self.ref_len)[:-1]]).astype(np.int64)
        pos, ops = kernels.it_assign_batch(
            self.refs_flat, self.ref_start[tr_of_iv], self.ref_len[tr_of_iv],
            self.iv_lo, self.iv_hi)
        counters.search_steps += int(ops)
        if (pos < 0).any():
            raise AssertionError("rank interval missed every reference value")
        self.gnode = self.ref_start[tr_of_iv] + pos
        seq = np.arange(self.n_iv, dtype=np.int64)
        nrefs = len(self.refs_flat)
        order_lo = np.lexsort((seq, self.iv_owner, self.iv_lo, self.gnode))
        order_hi = np.lexsort((seq, self.iv_owner, -self.iv_hi, self.gnode))
        self.list_lo = order_lo.astype(np.int64)
        self.list_hi = order_hi.astype(np.int64)
        self.node_lo_start, self.node_lo_len = _slices(self.gnode[order_lo], nrefs)
        self.node_hi_start, self.node_hi_len = _slices(self.gnode[order_hi], nrefs)

    def heights(self):
        return np.array([tree_height(int(m)) for m in self.ref_len],
                        dtype=np.int64)


def _slices(sorted_keys, n):
    start = np.zeros(n, dtype=np.int64)
    length = np.zeros(n, dtype=np.int64)
    if len(sorted_keys):
        uniq, first, cnt = np.unique(sorted_keys, return_index=True,
                                     return_counts=True)
        start[uniq] = first
        length[uniq] = cnt
    return start, length


def _xkeys(t, ts, counters):
    """x of each stored interval's crossing with its node's reference red."""
    if ts.n_iv == 0:
        return np.zeros(0), np.zeros(0, dtype=bool)
    ref_rank = ts.refs_flat[ts.gnode]
    ref_curve = t.cover_curve[RED][t.cover_start[RED][ts.iv_v] + ref_rank]
    cnt, px, _, _, ops = kernels.intersect_batch(
        t.P, ref_curve.astype(np.int64), ts.iv_owner, ts.iv_plo, ts.iv_phi)
    counters.intersections += int(ops)
    ok = cnt >= 1
    counters.anomalies += int((cnt != 1).sum())
    return px[:, 0], ok


def _shrink_rows(gkey, lo, hi):
    """Prefix-min/max shrinking over rows sorted by (group, x-key).

    Returns (new_lo, new_hi, src_row); the first row of each group passes
    through unchanged, later rows are replaced by the pieces outside the
    running [prefix-min, prefix-max] hull of the original intervals.
    """
    out_lo = []
    out_hi = []
    out_src = []
    cur = None
    pmin = 0
    pmax = 0
    for i in range(len(gkey)):
        g = gkey[i]
        li = int(lo[i])
        hi_i = int(hi[i])
        if g != cur:
            cur = g
            pmin = li
            pmax = hi_i
            out_lo.append(li)
            out_hi.append(hi_i)
            out_src.append(i)
            continue
        l1, h1 = li, pmin - 1
        if h1 >= l1:
            out_lo.append(l1)
            out_hi.append(h1)
            out_src.append(i)
        l2, h2 = pmax + 1, hi_i
        if h2 >= l2:
            out_lo.append(l2)
            out_hi.append(h2)
            out_src.append(i)
        if li < pmin:
            pmin = li
        if hi_i > pmax:
            pmax = hi_i
    return (np.array(out_lo, dtype=np.int64), np.array(out_hi, dtype=np.int64),
            np.array(out_src, dtype=np.int64))


def _run_step35(t, ts, workers, counters):
    P = t.P
    a_idx = t.cover_curve[RED]
    if len(a_idx) == 0 or ts.n_iv == 0:
        z = np.zeros(0)
        zi = np.zeros(0, dtype=np.int64)
        return zi, z, z, zi, np.zeros(0, dtype=np.int32), np.zeros(0, dtype=np.int32)
    v = t.cover_node[RED]
    ranks = np.arange(len(a_idx), dtype=np.int64) - t.cover_start[RED][v]
    tr_id = ts.tree_of_node[v]
    res = parallel.run_batch(
        lambda a, r, tr: kernels.step35_batch(
            P, a, r, tr, ts.ref_start, ts.ref_len, ts.refs_flat,
            ts.node_lo_start, ts.node_lo_len, ts.list_lo,
            ts.node_hi_start, ts.node_hi_len, ts.list_hi,
            ts.iv_lo, ts.iv_hi, ts.iv_owner, ts.iv_plo, ts.iv_phi),
        (a_idx, ranks, tr_id), workers=workers, n_out_scalars=1)
    found, cx, cy, cb, hits, maxnode, ops = res
    counters.stab_visits += int(ops)
    w = np.nonzero(found)[0]
    return a_idx[w], cx[w], cy[w], cb[w], hits, maxnode


def _min_candidates(t, workers, counters, trace=None):
    """All min-x candidate intersections (Steps 2 and 3) for one tree."""
    a2, x2, y2, b2, src2 = _run_step2(t, workers, counters)
    iv_v, rlo, rhi, owner, plo, phi, tag = _run_step31(t, workers, counters)
    ts_pre = _TreeSet(t, iv_v, rlo, rhi, owner, plo, phi, counters)
    xkey, ok = _xkeys(t, ts_pre, counters)
    order = np.lexsort((np.arange(ts_pre.n_iv), ts_pre.iv_owner,
                        xkey, ts_pre.gnode))
    order = order[ok[order]]
    new_lo, new_hi, src = _shrink_rows(ts_pre.gnode[order],
                                       ts_pre.iv_lo[order],
                                       ts_pre.iv_hi[order])
    counters.search_steps += len(order)
    rows = order[src]
    ts_post = _TreeSet(t, ts_pre.iv_v[rows], new_lo, new_hi,
                       ts_pre.iv_owner[rows], ts_pre.iv_plo[rows],
                       ts_pre.iv_phi[rows], counters)
    a3, x3, y3, b3, hits, maxnode = _run_step35(t, ts_post, workers, counters)
    if trace is not None:
        trace["tree"] = t
        trace["pre"] = ts_pre
        trace["pre_xkey_order"] = order
        trace["shrunk_group"] = ts_pre.gnode[rows]
        trace["shrunk_lo"] = new_lo
        trace["shrunk_hi"] = new_hi
        trace["post"] = ts_post
        trace["stab_hits"] = hits
        trace["stab_maxnode"] = maxnode
        trace["stab_tree"] = ts_post.tree_of_node[t.cover_node[RED]] if len(
            t.cover_node[RED]) else np.zeros(0, dtype=np.int64)
        trace["iv_tag"] = tag
    a = np.concatenate([a2, a3])
    x = np.concatenate([x2, x3])
    y = np.concatenate([y2, y3])
    b = np.concatenate([b2, b3])
    src_all = np.concatenate([src2, np.full(len(a3), 2, dtype=np.int64)])
    counters.candidates += len(a)
    counters.build_ops += t.build_ops
    return a, x, y, b, src_all


def _reduce_min(t, a, x, y, b, src):
    """Per red curve, the candidate with minimal x (ties by blue id)."""
    if len(a) == 0:
        return {}
    blue_uid = np.array([t.curves[i].id for i in b], dtype=np.int64)
    order = np.lexsort((src, blue_uid, x, a))
    a_s = a[order]
    first = np.ones(len(a_s), dtype=bool)
    first[1:] = a_s[1:] != a_s[:-1]
    picks = order[first]
    out = {}
    for k in picks:
        red = t.curves[a[k]]
        out[red.id] = CandidatePoint(red.id, Point(float(x[k]), float(y[k])),
                                     int(blue_uid[k]), _SOURCES[int(src[k])])
    return out


def first_last(red, blue, workers=None, validate=True, trace=False,
               endpoint_tol=None):
    """First (min-x) and last (max-x) intersection of each red curve with
    the blue set; equals the brute-force oracle on well-behaved inputs."""
    workers = parallel.resolve_workers(workers)
    if validate:
        validate_sets(red, blue, endpoint_tol=endpoint_tol or kernels.EPS)
    counters = Counters()
    tr_min = {} if trace else None
    t = segment_tree.build(red, blue, workers=workers, endpoint_tol=endpoint_tol)
    firsts = _reduce_min(t, *_min_candidates(t, workers, counters, tr_min))

    tr_max = {} if trace else None
    tm = segment_tree.build(mirror_x(red), mirror_x(blue), workers=workers,
                            endpoint_tol=endpoint_tol)
    lasts_m = _reduce_min(tm, *_min_candidates(tm, workers, counters, tr_max))
    lasts = {}
    for rid, c in lasts_m.items():
        lasts[rid] = CandidatePoint(rid, Point(-c.point.x, c.point.y),
                                    c.blue_id, c.source)
    diagnostics = {"anomalies": counters.anomalies}
    result = FirstLastResult(firsts=firsts, lasts=lasts, counters=counters,
                             diagnostics=diagnostics)
    if trace:
        result.trace = {"min": tr_min, "max": tr_max, "tree": t, "tree_mirror": tm}
    return result


# ---------------------------------------------------------------------------
# spec-level step operations (reference paths used by the tests)
# ---------------------------------------------------------------------------

def step2_cover_candidates(t, workers=1):
    """Candidates from blue cover-list neighbors of every red occurrence."""
    counters = Counters()
    a, x, y, b, src = _run_step2(t, workers, counters)
    out = [CandidatePoint(t.curves[a[k]].id, Point(float(x[k]), float(y[k])),
                          t.curves[b[k]].id, _SOURCES[int(src[k])])
           for k in range(len(a))]
    out.sort(key=lambda c: (c.red_id, c.point.x, c.blue_id))
    return out


def node_rank_intervals(t, v):
    """RankIntervals of node v; owners are internal blue indices and
    ``piece`` carries the owning subsegment's x window."""
    counters = Counters()
    bsel = t.end_slice(v, BLUE)
    if t.cover_len[RED][v] == 0 or len(bsel) == 0:
        return []
    items = (bsel.astype(np.int64), np.full(len(bsel), v, dtype=np.int64))
    iv_v, rlo, rhi, owner, plo, phi, tag = _run_step31(t, 1, counters, items)
    return [RankInterval(int(rlo[k]), int(rhi[k]), int(owner[k]),
                         CASE_NAMES[int(tag[k])], (float(plo[k]), float(phi[k])))
            for k in range(len(iv_v))]


def step31_rank_intervals(t, v):
    """Blue subsegments of node v with their rank intervals (Fig. 4 cases)."""
    return [BlueSubsegment(t.curves[iv.owner].id, iv.piece[0], iv.piece[1],
                           iv.lo, iv.hi, iv.case)
            for iv in node_rank_intervals(t, v)]


def step33_shrink(entries):
    """Prefix-min/max shrinking of one interval-tree node's intervals.

    ``entries`` are (RankInterval, x_key) pairs; the x key is the abscissa
    of the owner's crossing with the node's reference segment.
    """
    if not entries:
        return []
    idx = sorted(range(len(entries)),
                 key=lambda i: (entries[i][1], entries[i][0].owner,
                                entries[i][0].lo, entries[i][0].hi))
    lo = np.array([entries[i][0].lo for i in idx], dtype=np.int64)
    hi = np.array([entries[i][0].hi for i in idx], dtype=np.int64)
    new_lo, new_hi, src = _shrink_rows(np.zeros(len(idx), dtype=np.int64), lo, hi)
    out = []
    for k in range(len(src)):
        base = entries[idx[src[k]]][0]
        out.append(RankInterval(int(new_lo[k]), int(new_hi[k]), base.owner,
                                base.case, base.piece))
    return out


def step35_query(t, trees):
    """Reference stabbing pass over per-node IntervalTree objects.

    ``trees`` maps segment-tree node -> IntervalTree of RankIntervals whose
    ``piece`` is the owner subsegment's (x_lo, x_hi) window and whose owner
    is the blue curve's internal index.
    """
    best = {}
    for v, tree in trees.items():
        ca = t.cover_slice(v, RED)
        for rank, a in enumerate(ca):
            for ivr in tree.stab(rank):
                x_lo, x_hi = ivr.piece
                cnt, px, py, _, _ = kernels.intersect_batch(
                    t.P, np.array([a], dtype=np.int64),
                    np.array([ivr.owner], dtype=np.int64),
                    np.array([x_lo]), np.array([x_hi]))
                for j in range(cnt[0]):
                    key = (px[0, j], t.curves[ivr.owner].id)
                    if a not in best or key < best[a][0]:
                        best[a] = (key, py[0, j])
    out = []
    for a, ((x, bid), y) in sorted(best.items()):
        out.append(CandidatePoint(t.curves[a].id, Point(float(x), float(y)),
                                  int(bid), SOURCE_STEP3))
    return out


def step4_reduce(cands):
    """Per red id, the candidate with minimal x; ties broken by blue id."""
    out = {}
    for c in cands:
        cur = out.get(c.red_id)
        if cur is None or (c.point.x, c.blue_id) < (cur.point.x, cur.blue_id):
            out[c.red_id] = c
    return out
