"""Planar primitives: x-monotone line segments and parabola arcs.

Curves are the atomic red/blue elements.  A parabola arc is stored in
focus/directrix form so that rotated parabolas (Voronoi edges of segments)
are representable; internally every curve is packed into a parametric-plus-
implicit row consumed by the numeric kernels (see ``_corepy`` for the
layout).  All coordinate comparisons use an absolute tolerance ``EPS`` on
inputs normalized to a bounding box of diameter <= 1e6.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .kernels import EPS, KIND_LINE, KIND_PARABOLA, NCOLS


class GeometryError(ValueError):
    pass


class ValidationError(ValueError):
    """Input violates a well-behavedness precondition."""

    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


class Point(NamedTuple):
    x: float
    y: float


def _unit(dx, dy):
    n = math.hypot(dx, dy)
    if n <= 1e-300:
        raise GeometryError("zero-length direction")
    return dx / n, dy / n


def rotate_point(p, angle):
    c, s = math.cos(angle), math.sin(angle)
    return Point(c * p[0] - s * p[1], s * p[0] + c * p[1])


@dataclass(frozen=True, eq=False)
class Curve:
    """An x-monotone curve segment (line or parabola arc)."""

    kind: int
    id: int
    p1: Optional[Point] = None
    p2: Optional[Point] = None
    focus: Optional[Point] = None
    d_point: Optional[Point] = None
    d_dir: Optional[Point] = None
    t_lo: float = 0.0
    t_hi: float = 1.0
    x_min: float = field(init=False, default=0.0)
    x_max: float = field(init=False, default=0.0)
    row: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        row = np.zeros(NCOLS)
        row[0] = self.kind
        if self.kind == KIND_LINE:
            (x1, y1), (x2, y2) = self.p1, self.p2
            if not all(map(math.isfinite, (x1, y1, x2, y2))):
                raise ValidationError("non-finite line endpoint")
            if x2 < x1:
                x1, y1, x2, y2 = x2, y2, x1, y1
                object.__setattr__(self, "p1", Point(x1, y1))
                object.__setattr__(self, "p2", Point(x2, y2))
            if x2 - x1 <= EPS * (1.0 + abs(x1) + abs(x2)):
                raise ValidationError(
                    f"curve {self.id}: vertical or degenerate line segment")
            row[1], row[2] = x1, y1
            row[3], row[4] = x2 - x1, y2 - y1
            row[7], row[8] = 0.0, 1.0
            row[9], row[10] = x1, x2
            nx, ny = _unit(-(y2 - y1), x2 - x1)
            row[11:17] = (0.0, 0.0, 0.0, nx, ny, -(nx * x1 + ny * y1))
        else:
            fx, fy = self.focus
            px, py = self.d_point
            ux, uy = _unit(*self.d_dir)
            object.__setattr__(self, "d_dir", Point(ux, uy))
            nx, ny = -uy, ux
            h = (fx - px) * nx + (fy - py) * ny
            if h < 0.0:
                nx, ny, h = -nx, -ny, -h
            if h <= EPS:
                raise ValidationError(
                    f"curve {self.id}: focus lies on the directrix")
            if not self.t_lo < self.t_hi:
                raise ValidationError(f"curve {self.id}: empty parameter range")
            gx, gy = fx - h * nx, fy - h * ny
            row[1], row[2] = gx + 0.5 * h * nx, gy + 0.5 * h * ny
            row[3], row[4] = ux, uy
            row[5], row[6] = nx / (2.0 * h), ny / (2.0 * h)
            row[7], row[8] = self.t_lo, self.t_hi
            ttol = 1e-9 * (abs(self.t_hi - self.t_lo) + 1.0)
            if row[5] != 0.0:
                tstar = -row[3] / (2.0 * row[5])
                if self.t_lo + ttol < tstar < self.t_hi - ttol:
                    raise ValidationError(
                        f"curve {self.id}: arc is not x-monotone "
                        "(vertical tangent inside range); split it first")
            xa = row[1] + self.t_lo * (row[3] + self.t_lo * row[5])
            xb = row[1] + self.t_hi * (row[3] + self.t_hi * row[5])
            lo, hi = (xa, xb) if xa <= xb else (xb, xa)
            if hi - lo <= EPS * (1.0 + abs(lo) + abs(hi)):
                raise ValidationError(
                    f"curve {self.id}: vertical or degenerate parabola arc")
            row[9], row[10] = lo, hi
            k = nx * px + ny * py
            row[11:17] = (ny * ny, -2.0 * nx * ny, nx * nx,
                          2.0 * k * nx - 2.0 * fx, 2.0 * k * ny - 2.0 * fy,
                          fx * fx + fy * fy - k * k)
        object.__setattr__(self, "x_min", row[9])
        object.__setattr__(self, "x_max", row[10])
        object.__setattr__(self, "row", row)

    @staticmethod
    def line(p1, p2, id=0):
        return Curve(kind=KIND_LINE, id=id, p1=Point(*p1), p2=Point(*p2))

    @staticmethod
    def parabola(focus, d_point, d_dir, t_lo, t_hi, id=0):
        return Curve(kind=KIND_PARABOLA, id=id, focus=Point(*focus),
                     d_point=Point(*d_point), d_dir=Point(*d_dir),
                     t_lo=float(t_lo), t_hi=float(t_hi))

    def point_at(self, t):
        r = self.row
        return Point(r[1] + t * (r[3] + t * r[5]), r[2] + t * (r[4] + t * r[6]))

    def endpoints(self):
        return self.point_at(self.row[7]), self.point_at(self.row[8])

    def mirror(self):
        """Reflection x -> -x (parameter range is preserved)."""
        if self.kind == KIND_LINE:
            return Curve.line((-self.p2.x, self.p2.y), (-self.p1.x, self.p1.y),
                              id=self.id)
        return Curve.parabola((-self.focus.x, self.focus.y),
                              (-self.d_point.x, self.d_point.y),
                              (-self.d_dir.x, self.d_dir.y),
                              self.t_lo, self.t_hi, id=self.id)

    def with_id(self, id):
        if self.kind == KIND_LINE:
            return Curve.line(self.p1, self.p2, id=id)
        return Curve.parabola(self.focus, self.d_point, self.d_dir,
                              self.t_lo, self.t_hi, id=id)

    def rotate(self, angle):
        """Rotation about the origin; raises if the result is not x-monotone."""
        if angle == 0.0:
            return self
        if self.kind == KIND_LINE:
            return Curve.line(rotate_point(self.p1, angle),
                              rotate_point(self.p2, angle), id=self.id)
        return Curve.parabola(rotate_point(self.focus, angle),
                              rotate_point(self.d_point, angle),
                              rotate_point(self.d_dir, angle),
                              self.t_lo, self.t_hi, id=self.id)

    def __repr__(self):
        if self.kind == KIND_LINE:
            return f"Curve.line({tuple(self.p1)}, {tuple(self.p2)}, id={self.id})"
        return (f"Curve.parabola({tuple(self.focus)}, {tuple(self.d_point)}, "
                f"{tuple(self.d_dir)}, {self.t_lo}, {self.t_hi}, id={self.id})")


def pack_curves(curves):
    """Stack curve rows into the kernel table; row order = list order."""
    if not curves:
        return np.zeros((0, NCOLS))
    return np.ascontiguousarray(np.stack([c.row for c in curves]))


def parabola_from_poly(a, b, c, x_lo, x_hi, id=0):
    """Arc of y = a x^2 + b x + c over [x_lo, x_hi] (a != 0)."""
    if a == 0.0:
        raise GeometryError("leading coefficient must be nonzero")
    h = -b / (2.0 * a)
    k = c - b * b / (4.0 * a)
    p = 1.0 / (4.0 * a)
    focus = (h, k + p)
    d_point = (h, k - p)
    if a > 0.0:
        d_dir = (1.0, 0.0)
        t_lo, t_hi = x_lo - h, x_hi - h
    else:
        d_dir = (-1.0, 0.0)
        t_lo, t_hi = h - x_hi, h - x_lo
    return Curve.parabola(focus, d_point, d_dir, t_lo, t_hi, id=id)


@dataclass(frozen=True)
class ParabolaArc:
    """A parabola arc that may still contain its vertical-tangent point."""

    focus: Point
    d_point: Point
    d_dir: Point
    t_lo: float
    t_hi: float


def split_x_monotone(arc, id=0):
    """Split a general parabola arc into 1 or 2 x-monotone curves.

    The pieces share only the vertical-tangent point (if it lies strictly
    inside the parameter range).
    """
    ux, uy = _unit(*arc.d_dir)
    nx, ny = -uy, ux
    fx, fy = arc.focus
    px, py = arc.d_point
    h = (fx - px) * nx + (fy - py) * ny
    if h < 0.0:
        nx, ny, h = -nx, -ny, -h
    if h <= EPS:
        raise GeometryError("focus lies on the directrix")
    cx = nx / (2.0 * h)
    ttol = 1e-9 * (abs(arc.t_hi - arc.t_lo) + 1.0)
    cuts = [arc.t_lo, arc.t_hi]
    if cx != 0.0:
        tstar = -ux / (2.0 * cx)
        if arc.t_lo + ttol < tstar < arc.t_hi - ttol:
            cuts = [arc.t_lo, tstar, arc.t_hi]
    out = []
    for i in range(len(cuts) - 1):
        out.append(Curve.parabola(arc.focus, arc.d_point, (ux, uy),
                                  cuts[i], cuts[i + 1], id=id))
    return out


# ---------------------------------------------------------------------------
# operations on curves
# ---------------------------------------------------------------------------

def eval_y(c, x):
    """Unique y with (x, y) on c; x must lie within the curve's x range."""
    P = c.row.reshape(1, -1)
    y = kernels.eval_y_one(P, 0, float(x))
    if math.isnan(y):
        raise GeometryError(
            f"x={x} outside range [{c.x_min}, {c.x_max}] of curve {c.id}")
    return y


def intersect(a, b):
    """Common points of two x-monotone curves, sorted by x (at most two).

    A tangential touch counts as one intersection.  Raises if more than two
    genuine intersections exist (the pair is not well-behaved).
    """
    P = np.stack([a.row, b.row])
    cnt, px, py, flags, _ = kernels.intersect_batch(
        P, np.array([0], dtype=np.int64), np.array([1], dtype=np.int64),
        np.array([-math.inf]), np.array([math.inf]))
    if flags[0] & kernels.FLAG_TOO_MANY:
        raise ValidationError(
            f"curves {a.id} and {b.id} intersect more than twice",
            pair=(a.id, b.id))
    return [Point(px[0, j], py[0, j]) for j in range(cnt[0])]


def curves_cross(a, b, endpoint_tol=EPS):
    """True if a and b share a point that is not a common endpoint."""
    P = np.stack([a.row, b.row])
    bad = kernels.validate_pairs_batch(
        P, np.array([0], dtype=np.int64), np.array([1], dtype=np.int64),
        endpoint_tol)
    return bool(bad[0])


# ---------------------------------------------------------------------------
# sites and bisectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Site:
    """A point site or an open-segment site (a segment's interior)."""

    kind: str  # "point" | "segment"
    p1: Point
    p2: Optional[Point] = None
    id: int = 0

    def __post_init__(self):
        if self.kind == "segment":
            if self.p2 is None or (abs(self.p1.x - self.p2.x) <= 0.0
                                   and abs(self.p1.y - self.p2.y) <= 0.0):
                raise GeometryError("segment site needs distinct endpoints")
        elif self.kind != "point":
            raise GeometryError(f"unknown site kind {self.kind!r}")


def pack_sites(sites):
    S = np.zeros((len(sites), 5))
    for i, s in enumerate(sites):
        if s.kind == "point":
            S[i] = (0.0, s.p1.x, s.p1.y, s.p1.x, s.p1.y)
        else:
            S[i] = (1.0, s.p1.x, s.p1.y, s.p2.x, s.p2.y)
    return S


def point_site_distance(p, s):
    """Euclidean distance from p to the nearest point of the site."""
    S = pack_sites([s])
    d = kernels.site_dist_batch(S, np.zeros(1, dtype=np.int64),
                                np.array([float(p[0])]), np.array([float(p[1])]))
    return float(d[0])


@dataclass(frozen=True)
class LinePiece:
    """origin + t * direction over [t_lo, t_hi]; bounds may be infinite."""

    origin: Point
    direction: Point
    t_lo: float = -math.inf
    t_hi: float = math.inf

    def point_at(self, t):
        return Point(self.origin.x + t * self.direction.x,
                     self.origin.y + t * self.direction.y)


@dataclass(frozen=True)
class ArcPiece:
    """Parabola arc piece in focus/directrix form (s range always finite)."""

    focus: Point
    d_point: Point
    d_dir: Point
    s_lo: float
    s_hi: float

    def _frame(self):
        ux, uy = self.d_dir
        nx, ny = -uy, ux
        h = (self.focus.x - self.d_point.x) * nx + (self.focus.y - self.d_point.y) * ny
        if h < 0.0:
            nx, ny, h = -nx, -ny, -h
        gx = self.focus.x - h * nx
        gy = self.focus.y - h * ny
        return gx, gy, ux, uy, nx, ny, h

    def point_at(self, s):
        gx, gy, ux, uy, nx, ny, h = self._frame()
        w = s * s / (2.0 * h) + 0.5 * h
        return Point(gx + s * ux + w * nx, gy + s * uy + w * ny)


def piece_points(piece, ts):
    return [piece.point_at(t) for t in ts]


def bisector(s1, s2):
    """Equidistance locus of two disjoint sites, as raw geometric pieces.

    point-point: the perpendicular bisector line.  point-segment: the
    parabola (focus = point, directrix = supporting line) clipped to the
    segment's strip; a point coinciding with a segment endpoint yields the
    perpendicular line at that endpoint.  segment-segment: angular-bisector
    line piece(s) clipped to both strips (midline when parallel).

    Pieces are raw (may be unbounded lines or contain a vertical tangent);
    callers clip and split them.
    """
    if s1.kind == "point" and s2.kind == "point":
        if math.hypot(s1.p1.x - s2.p1.x, s1.p1.y - s2.p1.y) <= 1e-12:
            raise GeometryError("identical point sites")
        mx = 0.5 * (s1.p1.x + s2.p1.x)
        my = 0.5 * (s1.p1.y + s2.p1.y)
        dx, dy = _unit(-(s2.p1.y - s1.p1.y), s2.p1.x - s1.p1.x)
        return [LinePiece(Point(mx, my), Point(dx, dy))]

    if s1.kind == "segment" and s2.kind == "segment":
        u1x, u1y = _unit(s1.p2.x - s1.p1.x, s1.p2.y - s1.p1.y)
        u2x, u2y = _unit(s2.p2.x - s2.p1.x, s2.p2.y - s2.p1.y)
        cross = u1x * u2y - u1y * u2x
        if abs(cross) <= 1e-12:
            n1x, n1y = -u1y, u1x
            off = (s2.p1.x - s1.p1.x) * n1x + (s2.p1.y - s1.p1.y) * n1y
            if abs(off) <= 1e-12:
                return []  # coincident supporting lines; endpoints carry edges
            ox = s1.p1.x + 0.5 * off * n1x
            oy = s1.p1.y + 0.5 * off * n1y
            piece = LinePiece(Point(ox, oy), Point(u1x, u1y))
            return _clip_line_to_strips(piece, (s1, s2))
        ox, oy = _line_line_point(s1.p1, (u1x, u1y), s2.p1, (u2x, u2y))
        out = []
        for ex, ey in ((u1x + u2x, u1y + u2y), (u1x - u2x, u1y - u2y)):
            n = math.hypot(ex, ey)
            if n <= 1e-12:
                continue
            piece = LinePiece(Point(ox, oy), Point(ex / n, ey / n))
            out.extend(_clip_line_to_strips(piece, (s1, s2)))
        return out

    # point vs segment
    p, seg = (s1, s2) if s1.kind == "point" else (s2, s1)
    ux, uy = _unit(seg.p2.x - seg.p1.x, seg.p2.y - seg.p1.y)
    nx, ny = -uy, ux
    h = (p.p1.x - seg.p1.x) * nx + (p.p1.y - seg.p1.y) * ny
    if h < 0.0:
        nx, ny, h = -nx, -ny, -h
    seg_len = math.hypot(seg.p2.x - seg.p1.x, seg.p2.y - seg.p1.y)
    scale = 1.0 + abs(h) + seg_len
    if h <= 1e-9 * scale:
        sp = (p.p1.x - seg.p1.x) * ux + (p.p1.y - seg.p1.y) * uy
        tol = 1e-9 * scale
        if tol < sp < seg_len - tol:
            raise GeometryError("point site lies on the open segment site")
        if -tol <= sp <= seg_len + tol:
            return [LinePiece(p.p1, Point(nx, ny))]
        return []
    gx = p.p1.x - h * nx
    gy = p.p1.y - h * ny
    sa = (seg.p1.x - gx) * ux + (seg.p1.y - gy) * uy
    sb = (seg.p2.x - gx) * ux + (seg.p2.y - gy) * uy
    if sb < sa:
        sa, sb = sb, sa
    return [ArcPiece(p.p1, seg.p1, Point(ux, uy), sa, sb)]


def _line_line_point(p1, d1, p2, d2):
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    t = ((p2.x - p1.x) * d2[1] - (p2.y - p1.y) * d2[0]) / denom
    return p1.x + t * d1[0], p1.y + t * d1[1]


def _clip_line_to_strips(piece, segs):
    t_lo, t_hi = piece.t_lo, piece.t_hi
    for seg in segs:
        ux, uy = _unit(seg.p2.x - seg.p1.x, seg.p2.y - seg.p1.y)
        L = math.hypot(seg.p2.x - seg.p1.x, seg.p2.y - seg.p1.y)
        c0 = (piece.origin.x - seg.p1.x) * ux + (piece.origin.y - seg.p1.y) * uy
        c1 = piece.direction.x * ux + piece.direction.y * uy
        if abs(c1) <= 1e-14:
            if not (0.0 <= c0 <= L):
                return []
            continue
        ta = (0.0 - c0) / c1
        tb = (L - c0) / c1
        if tb < ta:
            ta, tb = tb, ta
        t_lo = max(t_lo, ta)
        t_hi = min(t_hi, tb)
    if t_lo >= t_hi:
        return []
    return [LinePiece(piece.origin, piece.direction, t_lo, t_hi)]


# ---------------------------------------------------------------------------
# clipping pieces to an axis-aligned box
# ---------------------------------------------------------------------------

def _quad_nonneg_intervals(a, b, c, lo, hi):
    """{s in [lo, hi] : a s^2 + b s + c >= 0} as a list of intervals."""
    if abs(a) <= 1e-14 * (abs(b) + abs(c) + 1.0):
        if abs(b) <= 1e-14 * (abs(c) + 1.0):
            return [(lo, hi)] if c >= 0.0 else []
        s0 = -c / b
        return [(max(lo, s0), hi)] if b > 0.0 else [(lo, min(hi, s0))]
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return [(lo, hi)] if a > 0.0 else []
    sq = math.sqrt(disc)
    r1 = (-b - sq) / (2.0 * a)
    r2 = (-b + sq) / (2.0 * a)
    if r2 < r1:
        r1, r2 = r2, r1
    if a > 0.0:
        out = [(lo, min(hi, r1)), (max(lo, r2), hi)]
    else:
        out = [(max(lo, r1), min(hi, r2))]
    return [(s, e) for s, e in out if e > s]


def _intersect_interval_lists(A, B):
    out = []
    for a0, a1 in A:
        for b0, b1 in B:
            s, e = max(a0, b0), min(a1, b1)
            if e > s:
                out.append((s, e))
    out.sort()
    return out


def clip_piece_to_box(piece, box):
    """Clip a bisector piece to [xlo, xhi] x [ylo, yhi]; returns pieces with
    finite parameter ranges."""
    xlo, xhi, ylo, yhi = box
    if isinstance(piece, LinePiece):
        t_lo, t_hi = piece.t_lo, piece.t_hi
        for c0, c1, lo, hi in ((piece.origin.x, piece.direction.x, xlo, xhi),
                               (piece.origin.y, piece.direction.y, ylo, yhi)):
            if abs(c1) <= 1e-14:
                if not (lo - 1e-9 <= c0 <= hi + 1e-9):
                    return []
                continue
            ta = (lo - c0) / c1
            tb = (hi - c0) / c1
            if tb < ta:
                ta, tb = tb, ta
            t_lo = max(t_lo, ta)
            t_hi = min(t_hi, tb)
        if not (math.isfinite(t_lo) and math.isfinite(t_hi)) or t_lo >= t_hi:
            return []
        return [LinePiece(piece.origin, piece.direction, t_lo, t_hi)]
    gx, gy, ux, uy, nx, ny, h = piece._frame()
    # x(s) = gx + s ux + (s^2/(2h) + h/2) nx  (quadratic in s), same for y
    ivs = [(piece.s_lo, piece.s_hi)]
    for g, u, n, lo, hi in ((gx, ux, nx, xlo, xhi), (gy, uy, ny, ylo, yhi)):
        qa = n / (2.0 * h)
        qb = u
        qc = g + 0.5 * h * n
        lower = _quad_nonneg_intervals(qa, qb, qc - lo, piece.s_lo, piece.s_hi)
        upper = _quad_nonneg_intervals(-qa, -qb, hi - qc, piece.s_lo, piece.s_hi)
        ivs = _intersect_interval_lists(ivs, _intersect_interval_lists(lower, upper))
    return [ArcPiece(piece.focus, piece.d_point, piece.d_dir, s, e)
            for s, e in ivs]


def piece_to_curves(piece, id=0, min_span=1e-9, sliver=1e-7):
    """Convert a finite bisector piece into x-monotone Curves.

    Pieces shorter than ``sliver`` are dropped; a long line piece with a
    near-vertical direction raises (the caller retries in a rotated frame).
    """
    if isinstance(piece, LinePiece):
        if piece.t_hi - piece.t_lo <= sliver:
            return []
        a = piece.point_at(piece.t_lo)
        b = piece.point_at(piece.t_hi)
        if abs(b.x - a.x) <= min_span * (1.0 + abs(a.x) + abs(b.x)):
            raise ValidationError("vertical line piece")
        return [Curve.line(a, b, id=id)]
    if piece.s_hi - piece.s_lo <= sliver:
        return []
    arc = ParabolaArc(piece.focus, piece.d_point, piece.d_dir,
                      piece.s_lo, piece.s_hi)
    out = []
    for c in split_x_monotone(arc, id=id):
        if c.x_max - c.x_min > min_span * (1.0 + abs(c.x_min) + abs(c.x_max)):
            out.append(c)
    return out
