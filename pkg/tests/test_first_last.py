import math

import numpy as np
import pytest

from conftest import assert_results_equal
from redblue import interval_tree, kernels, oracle
from redblue import segment_tree as st
from redblue.first_last import (BlueSubsegment, CandidatePoint, Point,
                                first_last, mirror_x, node_rank_intervals,
                                step2_cover_candidates, step4_reduce,
                                step31_rank_intervals, step33_shrink,
                                step35_query, validate_sets)
from redblue.geometry import Curve, ValidationError, parabola_from_poly
from redblue.instances import KINDS, generate
from redblue.interval_tree import RankInterval


class TestFirstLastBasic:
    def test_spec_instance(self):
        red = [Curve.line((0, 1), (10, 1), id=0)]
        blue = [Curve.line((2, 0), (3, 2), id=0), Curve.line((5, 0), (6, 2), id=1)]
        r = first_last(red, blue)
        assert r.first_of(0).point == pytest.approx((2.5, 1.0))
        assert r.first_of(0).blue_id == 0
        assert r.last_of(0).point == pytest.approx((5.5, 1.0))
        assert r.last_of(0).blue_id == 1

    def test_disjoint_boxes_empty(self):
        r = first_last([Curve.line((0, 0), (1, 1), id=0)],
                       [Curve.line((5, 5), (6, 6), id=0)])
        assert r.first_of(0) is None and r.last_of(0) is None

    def test_first_le_last(self):
        for seed in range(6):
            A, B = generate("grid-crossing", 25, seed)
            r = first_last(A, B, validate=False)
            for rid in r.firsts:
                assert r.firsts[rid].point.x <= r.lasts[rid].point.x + 1e-12
                assert (rid in r.firsts) == (rid in r.lasts)

    def test_validation_error_on_crossing_set(self):
        red = [Curve.line((0, 0), (10, 2), id=0), Curve.line((0, 2), (10, 0), id=1)]
        with pytest.raises(ValidationError):
            first_last(red, [Curve.line((0, 5), (1, 5), id=0)])

    def test_role_swap(self):
        for seed in range(5):
            A, B = generate("random-disjoint", 40, seed)
            assert_results_equal(first_last(B, A, validate=False),
                                 oracle.brute_first_last(B, A))


class TestOracleEquivalence:
    @pytest.mark.parametrize("kind", KINDS)
    def test_random_instances(self, kind):
        for seed in range(12):
            n = int(np.random.default_rng(seed + 1000).integers(6, 120))
            A, B = generate(kind, n, seed)
            got = first_last(A, B, validate=False)
            want = oracle.brute_first_last(A, B)
            assert_results_equal(got, want)

    def test_workers_deterministic(self):
        A, B = generate("random-disjoint", 200, 9)
        rs = [first_last(A, B, workers=w, validate=False) for w in (1, 2, 8)]
        for r in rs[1:]:
            for rid in rs[0].firsts:
                assert r.firsts[rid] == rs[0].firsts[rid]
                assert r.lasts[rid] == rs[0].lasts[rid]


class TestStep2:
    def test_single_crossing_slab_emitted(self):
        # red has an endpoint inside the wide blue's covered slab, so the
        # crossing is a type-(2) candidate found from the entry neighbors
        red = [Curve.line((2, 1), (8, 1), id=0)]
        blue = [Curve.line((0, 0), (10, 2), id=0)]
        t = st.build(red, blue)
        cands = step2_cover_candidates(t)
        assert any(abs(c.point.x - 5.0) < 1e-9 for c in cands)
        for c in cands:
            assert c.source in ("step2-cover", "step2-end")

    def test_no_blue_cover_no_candidates(self):
        red = [Curve.line((0, 1), (10, 1), id=0)]
        t = st.build(red, [])
        assert step2_cover_candidates(t) == []

    def test_candidates_are_genuine(self):
        A, B = generate("nested-parabola", 24, 4)
        t = st.build(A, B)
        rep = oracle.oracle_report(A, B)
        for c in step2_cover_candidates(t):
            pts = [p for p, bid in rep[c.red_id] if bid == c.blue_id]
            assert any(abs(p.x - c.point.x) < 1e-7 and abs(p.y - c.point.y) < 1e-7
                       for p in pts)


def _nodes_with(t, min_ca=1, min_eb=1):
    out = []
    for v in range(1, t.n_nodes):
        if t.cover_len[st.RED][v] >= min_ca and t.end_len[st.BLUE][v] >= min_eb:
            out.append(v)
    return out


class TestStep31Cases:
    def test_once_once_single_piece(self):
        # steep blue crossing a stack of horizontal reds once each
        reds = [Curve.line((0, i), (10, i), id=i) for i in range(6)]
        blue = [Curve.line((4, -1), (5, 6), id=0)]
        t = st.build(reds, blue)
        found = []
        for v in _nodes_with(t):
            found.extend(step31_rank_intervals(t, v))
        assert found
        whole = [s for s in found if s.rank_hi - s.rank_lo == 5]
        assert whole and all(s.case == "once-once" for s in whole)

    def test_once_twice_split(self):
        # blue parabola dips through wide reds; crossings with red i sit at
        # +-sqrt(i + 0.5) and the window clips the top-left one away
        reds = [Curve.line((-10, i), (10, i), id=i) for i in range(3)]
        blue = [parabola_from_poly(1.0, 0.0, -0.5, -1.3, 3.0, id=0)]
        t = st.build(reds, blue)
        segs = []
        for v in _nodes_with(t):
            segs.extend(step31_rank_intervals(t, v))
        assert any(s.case == "once-twice" for s in segs)
        self._check_single_crossing(t, segs)

    def test_twice_nested_split(self):
        reds = [Curve.line((-10, i), (10, i), id=i) for i in range(3)]
        blue = [parabola_from_poly(1.0, 0.0, -0.5, -3.0, 3.0, id=0)]
        t = st.build(reds, blue)
        segs = []
        for v in _nodes_with(t):
            segs.extend(step31_rank_intervals(t, v))
        assert any(s.case == "twice-nested" for s in segs)
        self._check_single_crossing(t, segs)

    def test_twice_disjoint_three_pieces(self):
        # blue line crossing a down parabola twice then an up parabola twice
        a1 = parabola_from_poly(-1.0, 1.0, 0.0, -0.5, 3.5, id=0)   # roots 0, 1
        a2 = parabola_from_poly(1.0, -5.0, 6.0, -0.5, 3.5, id=1)   # roots 2, 3
        blue = [Curve.line((-0.4, 0), (3.4, 0), id=0)]
        t = st.build([a1, a2], blue)
        segs = []
        for v in _nodes_with(t):
            segs.extend(step31_rank_intervals(t, v))
        disjoint = [s for s in segs if s.case == "twice-disjoint"]
        assert len(disjoint) == 3
        middle = [s for s in disjoint if s.rank_lo == 0 and s.rank_hi == 1]
        assert middle, "middle subsegment keeps the full rank interval"
        self._check_single_crossing(t, segs)
        assert_results_equal(first_last([a1, a2], blue),
                             oracle.brute_first_last([a1, a2], blue))

    @staticmethod
    def _check_single_crossing(t, segs):
        """Every emitted subsegment crosses every red in its rank interval
        exactly once within its window."""
        for s in segs:
            bi = next(k for k, c in enumerate(t.curves[t.n_red:], start=t.n_red)
                      if c.id == s.blue_id)
            for v in range(1, t.n_nodes):
                ca = t.cover_slice(v, st.RED)
                if len(ca) <= max(s.rank_lo, s.rank_hi):
                    continue
                lo, hi = t.interval(v)
                if not (lo - 1e-9 <= s.x_lo and s.x_hi <= hi + 1e-9):
                    continue
                for rank in range(s.rank_lo, s.rank_hi + 1):
                    cnt, _, _, _, _ = kernels.intersect_batch(
                        t.P, np.array([ca[rank]], dtype=np.int64),
                        np.array([bi], dtype=np.int64),
                        np.array([s.x_lo]), np.array([s.x_hi]))
                    assert cnt[0] == 1, (s, rank)
                break


class TestStep33Shrink:
    def test_figure_example(self):
        table = [((2, 4), 1.0), ((4, 5), 2.0), ((3, 4), 3.0),
                 ((1, 6), 4.0), ((2, 7), 5.0)]
        entries = [(RankInterval(lo, hi, owner=i), x)
                   for i, ((lo, hi), x) in enumerate(table)]
        out = step33_shrink(entries)
        got = [(iv.owner, iv.lo, iv.hi) for iv in out]
        assert got == [(0, 2, 4), (1, 5, 5), (3, 1, 1), (3, 6, 6), (4, 7, 7)]

    def test_single_interval_unchanged(self):
        out = step33_shrink([(RankInterval(2, 9, 0), 1.0)])
        assert [(iv.lo, iv.hi) for iv in out] == [(2, 9)]

    def test_nested_descending_chain(self):
        entries = [(RankInterval(1, 9, 0), 1.0), (RankInterval(2, 8, 1), 2.0),
                   (RankInterval(3, 7, 2), 3.0)]
        out = step33_shrink(entries)
        assert [(iv.owner, iv.lo, iv.hi) for iv in out] == [(0, 1, 9)]

    def test_outputs_disjoint_and_safety(self, rng):
        # node intervals all contain the node's reference rank, like real
        # interval-tree node lists do
        ref = 15
        for _ in range(200):
            k = int(rng.integers(1, 10))
            entries = []
            for i in range(k):
                lo = ref - int(rng.integers(0, 10))
                hi = ref + int(rng.integers(0, 10))
                entries.append((RankInterval(lo, hi, i), float(rng.random())))
            out = step33_shrink(entries)
            assert len(out) <= 2 * len(entries)
            spans = sorted((iv.lo, iv.hi) for iv in out)
            for (l1, h1), (l2, h2) in zip(spans, spans[1:]):
                assert h1 < l2, spans  # pairwise disjoint
            # shrink safety: every removed rank is covered by an earlier-x
            # interval of the same node
            order = sorted(range(k), key=lambda i: (entries[i][1], i))
            for pos, i in enumerate(order):
                iv = entries[i][0]
                kept = {r for o in out if o.owner == i
                        for r in range(o.lo, o.hi + 1)}
                removed = set(range(iv.lo, iv.hi + 1)) - kept
                earlier = {r for j in order[:pos]
                           for r in range(entries[j][0].lo, entries[j][0].hi + 1)}
                assert removed <= earlier

    def test_empty(self):
        assert step33_shrink([]) == []


class TestStep35AndReduce:
    def _reference_step3(self, t):
        """Independent slow path: per-node interval trees, per-tree-node
        shrink, rebuild, stab."""
        cands = []
        for v in range(1, t.n_nodes):
            ivs = node_rank_intervals(t, v)
            if not ivs:
                continue
            tree = interval_tree.build(ivs)
            by_node = {}
            for k, iv in enumerate(ivs):
                by_node.setdefault(int(tree.node_of[k]), []).append(iv)
            shrunk = []
            for p, group in sorted(by_node.items()):
                ref_rank = tree.refs[p]
                ca = t.cover_slice(v, st.RED)
                entries = []
                for iv in group:
                    cnt, px, _, _, _ = kernels.intersect_batch(
                        t.P, np.array([ca[ref_rank]], dtype=np.int64),
                        np.array([iv.owner], dtype=np.int64),
                        np.array([iv.piece[0]]), np.array([iv.piece[1]]))
                    assert cnt[0] == 1, "owner must cross the reference once"
                    entries.append((iv, float(px[0, 0])))
                shrunk.extend(step33_shrink(entries))
            cands.extend(step35_query(t, {v: interval_tree.build(shrunk)}))
        return cands

    def test_matches_pipeline_on_smalls(self):
        for seed in range(6):
            for kind in KINDS:
                A, B = generate(kind, 14, seed)
                t = st.build(A, B)
                ref3 = self._reference_step3(t)
                ref2 = step2_cover_candidates(t)
                ref = step4_reduce(ref2 + ref3)
                got = {rid: c for rid, c in
                       first_last(A, B, validate=False).firsts.items()}
                want_oracle = oracle.brute_first_last(A, B)
                for rid in set(ref) | set(got) | set(want_oracle.firsts):
                    a = got.get(rid)
                    b = ref.get(rid)
                    o = want_oracle.firsts.get(rid)
                    assert (a is None) == (b is None) == (o is None), (kind, seed, rid)
                    if a is not None:
                        assert abs(a.point.x - b.point.x) < 1e-9
                        assert abs(a.point.x - o.point.x) < 1e-9

    def test_step4_reduce_min_per_group(self):
        cands = [CandidatePoint(1, Point(3.0, 0.0), 5, "step3"),
                 CandidatePoint(1, Point(2.0, 0.0), 7, "step3"),
                 CandidatePoint(2, Point(7.0, 0.0), 5, "step3")]
        out = step4_reduce(cands)
        assert out[1].point.x == 2.0 and out[2].point.x == 7.0

    def test_step4_tie_by_blue_id(self):
        cands = [CandidatePoint(1, Point(2.0, 0.0), 9, "step3"),
                 CandidatePoint(1, Point(2.0, 0.0), 3, "step3")]
        assert step4_reduce(cands)[1].blue_id == 3

    def test_step4_empty(self):
        assert step4_reduce([]) == {}


class TestMirror:
    def test_involution(self):
        A, B = generate("random-disjoint", 20, 7)
        for c, m in zip(A + B, mirror_x(mirror_x(A + B))):
            assert np.allclose(c.row, m.row, atol=1e-12)

    def test_first_of_mirror_is_mirrored_last(self):
        for seed in range(5):
            A, B = generate("grid-crossing", 20, seed)
            r = first_last(A, B, validate=False)
            rm = first_last(mirror_x(A), mirror_x(B), validate=False)
            for rid in r.lasts:
                assert rm.firsts[rid].point.x == pytest.approx(-r.lasts[rid].point.x,
                                                               abs=1e-9)

    def test_symmetric_instance(self):
        red = [Curve.line((-5, 1), (5, 1), id=0)]
        blue = [Curve.line((-3, 0), (-2, 2), id=0), Curve.line((2, 0), (3, 2), id=1)]
        r = first_last(red, blue)
        assert r.first_of(0).point.x == pytest.approx(-r.last_of(0).point.x)


def test_anomaly_counter_zero_on_corpus():
    for seed in range(8):
        for kind in KINDS:
            A, B = generate(kind, 40, seed)
            r = first_last(A, B, validate=False)
            assert r.counters.anomalies == 0, (kind, seed)
