import math

import numpy as np
import pytest

from redblue import kernels, oracle
from redblue import segment_tree as st
from redblue.geometry import Curve, ValidationError
from redblue.instances import generate


def cover_nodes(t, color):
    return sorted(set(t.cover_node[color].tolist()))


class TestBuildAnatomy:
    def test_single_segment_three_elementary_intervals(self):
        t = st.build([Curve.line((1, 0), (3, 1), id=0)], [])
        assert t.leaf_count == 3
        nodes = cover_nodes(t, st.RED)
        assert len(nodes) == 1
        lo, hi = t.interval(nodes[0])
        assert (lo, hi) == (1, 3)

    def test_four_segments_structural(self):
        # staggered overlaps in the style of the segment-tree figure; exact
        # lists re-derived from the cover definition below
        segs = [Curve.line((0, 1), (4, 1), id=0),
                Curve.line((2, 2), (8, 2), id=1),
                Curve.line((1, 3), (6, 3), id=2),
                Curve.line((5, 4), (9, 4), id=3)]
        t = st.build(segs, [])
        present = set(t.cover_curve[st.RED].tolist())
        assert present == {0, 1, 2, 3}
        assert len(t.cover_node[st.RED]) <= 2 * (t.depth + 1) * 4
        self._check_cover_predicate(t, st.RED)

    @staticmethod
    def _check_cover_predicate(t, color):
        offs = 0 if color == st.RED else t.n_red
        cnt = t.n_red if color == st.RED else len(t.curves) - t.n_red
        for v in range(1, t.n_nodes):
            cov = set(t.cover_slice(v, color).tolist())
            lo, hi = t.interval(v)
            par = v // 2
            for ci in range(offs, offs + cnt):
                c = t.curves[ci]
                inside = lo >= c.x_min - 1e-12 and hi <= c.x_max + 1e-12 and lo <= hi
                if par >= 1:
                    plo, phi = t.interval(par)
                    par_inside = plo >= c.x_min - 1e-12 and phi <= c.x_max + 1e-12
                else:
                    par_inside = False
                assert (inside and not par_inside) == (ci in cov), (v, ci)

    def test_random_cover_predicate(self):
        A, B = generate("random-disjoint", 24, 5)
        t = st.build(A, B)
        self._check_cover_predicate(t, st.RED)
        self._check_cover_predicate(t, st.BLUE)

    def test_per_level_bounds(self):
        A, B = generate("random-disjoint", 40, 2)
        t = st.build(A, B)
        for color in (st.RED, st.BLUE):
            for nodes, curves in ((t.cover_node[color], t.cover_curve[color]),
                                  (t.end_node[color], t.end_curve[color])):
                if not len(nodes):
                    continue
                lev = np.floor(np.log2(nodes)).astype(int)
                from collections import Counter
                assert max(Counter(zip(lev.tolist(), curves.tolist())).values()) <= 2

    def test_size_bound(self):
        A, B = generate("grid-crossing", 64, 1)
        t = st.build(A, B)
        n = len(t.curves)
        total = sum(len(t.cover_node[c]) + len(t.end_node[c]) for c in (0, 1))
        assert len(t.breaks) + 1 <= 2 * n + 1
        assert total <= 4 * n * (t.depth + 1)

    def test_cover_lists_y_sorted(self):
        A, B = generate("nested-parabola", 30, 3)
        t = st.build(A, B)
        for v in range(1, t.n_nodes):
            for color in (st.RED, st.BLUE):
                sl = t.cover_slice(v, color)
                if len(sl) < 2:
                    continue
                mid = t.slab_mid(v)
                ys = [kernels.eval_y_one(t.P, int(c), mid) for c in sl]
                assert all(ys[i] <= ys[i + 1] + 1e-12 for i in range(len(ys) - 1))

    def test_crossing_same_set_raises_naming_pair(self):
        a = Curve.line((0, 0), (10, 2), id=7)
        b = Curve.line((0, 2), (10, 0), id=9)
        with pytest.raises(ValidationError) as exc:
            st.build([a, b], [])
        assert exc.value.pair in ((7, 9), (9, 7))

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError):
            st.build([Curve.line((0, 0), (1, 1), id=1),
                      Curve.line((2, 0), (3, 1), id=1)], [])


class TestYRank:
    def _tree(self):
        blues = [Curve.line((0, 0), (10, 0), id=0),
                 Curve.line((0, 2), (10, 2), id=1),
                 Curve.line((0, 4), (10, 4), id=2)]
        t = st.build([], blues)
        v = [v for v in range(1, t.n_nodes) if t.cover_len[st.BLUE][v] == 3]
        assert v
        return t, v[0]

    def test_between_horizontals(self):
        t, v = self._tree()
        pred, succ = t.y_rank(v, 5.0, 1.0)
        assert pred.id == 0 and succ.id == 1

    def test_below_all(self):
        t, v = self._tree()
        pred, succ = t.y_rank(v, 5.0, -1.0)
        assert pred is None and succ.id == 0

    def test_matches_linear_scan(self, rng):
        A, B = generate("random-disjoint", 30, 11)
        t = st.build(A, B)
        for v in range(1, t.n_nodes):
            sl = t.cover_slice(v, st.BLUE)
            if len(sl) < 2:
                continue
            lo, hi = t.interval(v)
            x = 0.5 * (lo + hi)
            y = rng.uniform(-5, 40)
            pred, succ = t.y_rank(v, x, y)
            ys = [(kernels.eval_y_one(t.P, int(c), x), t.curves[c]) for c in sl]
            want_pred = max((e for e in ys if e[0] <= y), default=(None, None),
                            key=lambda e: e[0])[1]
            want_succ = min((e for e in ys if e[0] >= y), default=(None, None),
                            key=lambda e: e[0])[1]
            assert pred is want_pred and succ is want_succ


def test_chazelle_locality():
    """Every oracle intersection pair is witnessed at a node as cover/cover,
    end/cover, or cover/end, with the intersection x inside the interval."""
    for seed, kind in ((3, "random-disjoint"), (1, "grid-crossing"),
                       (2, "nested-parabola")):
        A, B = generate(kind, 24, seed)
        t = st.build(A, B)
        rep = oracle.oracle_report(A, B)
        idx_of_red = {c.id: k for k, c in enumerate(A)}
        idx_of_blue = {c.id: k + len(A) for k, c in enumerate(B)}
        for rid, entries in rep.items():
            for p, bid in entries:
                ai = idx_of_red[rid]
                bi = idx_of_blue[bid]
                found = False
                for v in range(1, t.n_nodes):
                    lo, hi = t.interval(v)
                    if not (lo - 1e-9 <= p.x <= hi + 1e-9):
                        continue
                    a_cov = ai in t.cover_slice(v, st.RED)
                    b_cov = bi in t.cover_slice(v, st.BLUE)
                    a_end = ai in t.end_slice(v, st.RED)
                    b_end = bi in t.end_slice(v, st.BLUE)
                    if (a_cov and b_cov) or (a_end and b_cov) or (a_cov and b_end):
                        found = True
                        break
                assert found, (kind, seed, rid, bid, p)


def test_dump_mentions_nonempty_nodes():
    A, B = generate("random-disjoint", 10, 0)
    t = st.build(A, B)
    text = t.dump()
    assert "node" in text and "|C_A|" in text
