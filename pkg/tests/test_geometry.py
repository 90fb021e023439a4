import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redblue.geometry import (Curve, GeometryError, LinePiece, ParabolaArc,
                              Point, Site, ValidationError, bisector,
                              clip_piece_to_box, eval_y, intersect,
                              parabola_from_poly, piece_to_curves,
                              point_site_distance, split_x_monotone)

PAR = dict(focus=(0, 1), d_point=(0, 0), d_dir=(1, 0))  # y = x^2/2 + 1/2


def make_par(t0=-2, t1=2, id=0):
    return Curve.parabola(PAR["focus"], PAR["d_point"], PAR["d_dir"], t0, t1, id=id)


class TestEvalY:
    def test_line_midpoint(self):
        assert eval_y(Curve.line((0, 0), (4, 4)), 2) == pytest.approx(2, abs=1e-12)

    def test_parabola_textbook(self):
        assert eval_y(make_par(), 1) == pytest.approx(1, abs=1e-12)

    def test_horizontal(self):
        assert eval_y(Curve.line((0, 5), (10, 5)), 7) == pytest.approx(5, abs=1e-12)

    def test_outside_range_raises(self):
        with pytest.raises(GeometryError):
            eval_y(Curve.line((0, 0), (4, 4)), 5.0)


class TestIntersect:
    def test_symmetric_x_crossing(self):
        pts = intersect(Curve.line((0, 0), (4, 4)), Curve.line((0, 4), (4, 0)))
        assert len(pts) == 1
        assert pts[0].x == pytest.approx(2, abs=1e-12)
        assert pts[0].y == pytest.approx(2, abs=1e-12)

    def test_line_parabola_two_points(self):
        pts = intersect(Curve.line((-2, 1), (2, 1)), make_par())
        assert [(round(p.x, 9), round(p.y, 9)) for p in pts] == [(-1, 1), (1, 1)]

    def test_tangency_single_point(self):
        pts = intersect(Curve.line((-2, 0.5), (2, 0.5)), make_par())
        assert len(pts) == 1
        assert pts[0].x == pytest.approx(0, abs=1e-9)
        assert pts[0].y == pytest.approx(0.5, abs=1e-9)

    def test_disjoint_empty(self):
        assert intersect(Curve.line((0, 0), (1, 0)), Curve.line((0, 5), (1, 5))) == []

    def test_sorted_by_x(self):
        pts = intersect(Curve.line((-2, 1), (2, 1)), make_par())
        assert pts[0].x < pts[1].x


class TestSplitXMonotone:
    def test_sideways_split_at_vertex(self):
        # x = y^2 over y in [-1, 1]: vertical tangent at the vertex (0, 0)
        arc = ParabolaArc(Point(0.25, 0), Point(-0.25, 0), Point(0, 1), -1, 1)
        pieces = split_x_monotone(arc)
        assert len(pieces) == 2
        for p in pieces:
            assert p.x_min < p.x_max
        joint = p.point_at(pieces[0].t_hi)
        assert abs(joint.x) < 1e-12 and abs(joint.y) < 1e-12

    def test_monotone_unchanged(self):
        c = make_par(0.5, 2)
        arc = ParabolaArc(c.focus, c.d_point, c.d_dir, 0.5, 2)
        pieces = split_x_monotone(arc)
        assert len(pieces) == 1
        assert pieces[0].t_lo == 0.5 and pieces[0].t_hi == 2

    def test_tangent_outside_arc(self):
        arc = ParabolaArc(Point(0.25, 0), Point(-0.25, 0), Point(0, 1), 0.1, 1)
        assert len(split_x_monotone(arc)) == 1


class TestPointSiteDistance:
    def test_point_345(self):
        assert point_site_distance((0, 0), Site("point", Point(3, 4))) == pytest.approx(5)

    def test_segment_interior_foot(self):
        s = Site("segment", Point(0, 0), Point(10, 0))
        assert point_site_distance((5, 2), s) == pytest.approx(2)

    def test_segment_endpoint_nearest(self):
        s = Site("segment", Point(0, 0), Point(10, 0))
        assert point_site_distance((-3, 4), s) == pytest.approx(5)


class TestBisector:
    def test_point_point_vertical_line(self):
        out = bisector(Site("point", Point(0, 0)), Site("point", Point(2, 0)))
        assert len(out) == 1 and isinstance(out[0], LinePiece)
        for t in (-3, 0, 7):
            p = out[0].point_at(t)
            assert p.x == pytest.approx(1, abs=1e-12)

    def test_point_segment_parabola(self):
        out = bisector(Site("point", Point(0, 1)),
                       Site("segment", Point(-10, 0), Point(10, 0)))
        assert len(out) == 1
        for s in np.linspace(out[0].s_lo, out[0].s_hi, 25):
            p = out[0].point_at(s)
            assert p.y == pytest.approx(p.x ** 2 / 2 + 0.5, abs=1e-9)

    def test_parallel_segments_midline(self):
        out = bisector(Site("segment", Point(0, 0), Point(10, 0)),
                       Site("segment", Point(0, 2), Point(10, 2)))
        assert len(out) == 1
        for t in np.linspace(out[0].t_lo, out[0].t_hi, 9):
            assert out[0].point_at(t).y == pytest.approx(1, abs=1e-12)

    def test_identical_point_sites_error(self):
        with pytest.raises(GeometryError):
            bisector(Site("point", Point(1, 1)), Site("point", Point(1, 1)))

    def test_equidistance_sampled(self, rng):
        # every piece: |d(p, s1) - d(p, s2)| <= 1e-9 (1 + d) at 1000 samples
        for _ in range(15):
            sites = []
            p1 = Point(*rng.uniform(-5, 5, 2))
            sites.append(Site("point", p1, id=0))
            if rng.random() < 0.5:
                sites.append(Site("point", Point(*rng.uniform(-5, 5, 2)), id=1))
            else:
                q1 = Point(*rng.uniform(-5, 5, 2))
                q2 = Point(q1.x + rng.uniform(0.5, 4), q1.y + rng.uniform(-2, 2))
                sites.append(Site("segment", q1, q2, id=1))
            try:
                pieces = bisector(sites[0], sites[1])
            except GeometryError:
                continue
            for piece in pieces:
                for clipped in clip_piece_to_box(piece, (-20, 20, -20, 20)):
                    if isinstance(clipped, LinePiece):
                        ts = np.linspace(clipped.t_lo, clipped.t_hi, 1000)
                    else:
                        ts = np.linspace(clipped.s_lo, clipped.s_hi, 1000)
                    for t in ts[::37]:
                        p = clipped.point_at(t)
                        d1 = point_site_distance(p, sites[0])
                        d2 = point_site_distance(p, sites[1])
                        assert abs(d1 - d2) <= 1e-9 * (1 + d1)


class TestCurveValidation:
    def test_vertical_line_rejected(self):
        with pytest.raises(ValidationError):
            Curve.line((1, 0), (1, 5))

    def test_focus_on_directrix_rejected(self):
        with pytest.raises(ValidationError):
            Curve.parabola((0, 0), (0, 0), (1, 0), -1, 1)

    def test_non_monotone_arc_rejected(self):
        with pytest.raises(ValidationError):
            Curve.parabola((0.25, 0), (-0.25, 0), (0, 1), -1, 1)

    def test_line_canonicalized(self):
        c = Curve.line((4, 1), (0, 0))
        assert c.p1.x < c.p2.x


def test_mirror_involution(rng):
    for _ in range(30):
        if rng.random() < 0.5:
            x1, x2 = sorted(rng.uniform(-5, 5, 2))
            c = Curve.line((x1, rng.uniform(-5, 5)), (max(x2, x1 + 0.3), rng.uniform(-5, 5)))
        else:
            c = parabola_from_poly(rng.uniform(0.2, 1.5), 0.0, rng.uniform(-2, 2),
                                   *sorted([rng.uniform(-4, 0), rng.uniform(0.5, 4)]))
        m = c.mirror().mirror()
        assert np.allclose(m.row, c.row, atol=1e-12)


@settings(max_examples=120, deadline=None)
@given(a=st.floats(-2, 2).filter(lambda v: abs(v) > 0.05),
       b=st.floats(-3, 3), c=st.floats(-3, 3),
       x=st.floats(-3.5, 3.5))
def test_eval_on_defining_equation(a, b, c, x):
    cur = parabola_from_poly(a, b, c, -4, 4)
    y = eval_y(cur, x)
    assert abs(y - (a * x * x + b * x + c)) <= 1e-9 * (1 + abs(y))


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_intersect_points_on_both_curves(data):
    a = data.draw(st.floats(0.1, 1.5))
    c0 = data.draw(st.floats(-2, 2))
    y0 = data.draw(st.floats(-2, 4))
    par = parabola_from_poly(a, 0.0, c0, -4, 4)
    line = Curve.line((-4, y0), (4, y0 + data.draw(st.floats(-2, 2))))
    for p in intersect(par, line):
        assert par.x_min - 1e-9 <= p.x <= par.x_max + 1e-9
        assert line.x_min - 1e-9 <= p.x <= line.x_max + 1e-9
        assert abs(eval_y(par, p.x) - p.y) <= 1e-9 * (1 + abs(p.y))
        assert abs(eval_y(line, p.x) - p.y) <= 1e-9 * (1 + abs(p.y))


def test_collinear_overlap_reports_extremes():
    a = Curve.line((0, 0), (10, 0), id=0)
    b = Curve.line((3, 0), (12, 0), id=1)
    pts = intersect(a, b)
    assert len(pts) == 2
    assert pts[0].x == pytest.approx(3) and pts[1].x == pytest.approx(10)


def test_piece_to_curves_drops_slivers():
    piece = LinePiece(Point(0, 0), Point(0, 1), 0.0, 1e-9)
    assert piece_to_curves(piece) == []
