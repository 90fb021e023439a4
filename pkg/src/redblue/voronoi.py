"""Naive exact construction of the Voronoi edge skeleton of a set of
non-crossing line segments.

Each segment decomposes into two endpoint sites (deduplicated across
segments) and one open-interior site.  For every candidate site pair the
bisector pieces are clipped to a bounding box 3x the input extent and
subdivided at their equidistance events with the remaining sites (located by
dense sampling plus bisection on the continuous clearance margin); pieces
where the pair is jointly nearest survive, are verified at a denser offset
grid, and are split x-monotone.

Vertical input segments or vertical output edges trigger a retry of the
whole construction in a rotated frame (angle doubling from 1e-3); edges are
reported in that frame together with the angle, since a vertical edge has no
x-monotone representation in the original frame.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import (ArcPiece, Curve, GeometryError, LinePiece, Point, Site,
                       ValidationError, bisector, clip_piece_to_box,
                       pack_sites, piece_to_curves, rotate_point)

BOX_FACTOR = 3.0
PAIR_EXHAUSTIVE_LIMIT = 240
SAMPLES = 129
VERIFY_SAMPLES = 64
# just above the float noise floor of the distance computations: at vertices
# where the clearance margin grazes zero quadratically, the boundary offset
# scales with sqrt(KEEP_TOL); SNAP_TOL must exceed the worst such overshoot
# (a contact between kept pieces is always near a true vertex, so snapping
# removes only overshoot-scale material)
KEEP_TOL = 1e-13
SNAP_TOL = 2e-3
ROTATION_BASE = 1e-3
MAX_ROTATIONS = 40


@dataclass(frozen=True)
class VoronoiEdge:
    """An x-monotone piece of the bisector of its two defining sites; every
    point of the curve is equidistant from them and no other site is
    nearer (within tolerance)."""

    curve: Curve
    s1: int
    s2: int


@dataclass
class VoronoiDiagram:
    angle: float
    segments: list
    sites: list
    site_parent: list
    edges: list = field(default_factory=list)
    box: tuple = (0.0, 0.0, 0.0, 0.0)

    @property
    def S(self):
        return pack_sites(self.sites)


class _VerticalEdge(Exception):
    pass


def decompose_sites(segments):
    """Elementary sites: deduplicated endpoints plus open interiors."""
    sites = []
    parent = []
    seen = {}
    for si, c in enumerate(segments):
        for p in (c.p1, c.p2):
            key = (round(p.x, 9), round(p.y, 9))
            if key not in seen:
                seen[key] = len(sites)
                sites.append(Site("point", Point(*p), id=len(sites)))
                parent.append([])
            parent[seen[key]].append(si)
    for si, c in enumerate(segments):
        sites.append(Site("segment", Point(*c.p1), Point(*c.p2), id=len(sites)))
        parent.append([si])
    return sites, parent


def _scene_box(segments):
    xs = [v for c in segments for v in (c.p1.x, c.p2.x)]
    ys = [v for c in segments for v in (c.p1.y, c.p2.y)]
    cx = 0.5 * (min(xs) + max(xs))
    cy = 0.5 * (min(ys) + max(ys))
    half = 0.5 * max(max(xs) - min(xs), max(ys) - min(ys), 1.0) * BOX_FACTOR
    return (cx - half, cx + half, cy - half, cy + half)


def _piece_points(piece, ts):
    ts = np.asarray(ts, dtype=float)
    if isinstance(piece, LinePiece):
        return (piece.origin.x + ts * piece.direction.x,
                piece.origin.y + ts * piece.direction.y)
    gx, gy, ux, uy, nx, ny, h = piece._frame()
    w = ts * ts / (2.0 * h) + 0.5 * h
    return gx + ts * ux + w * nx, gy + ts * uy + w * ny


def _piece_range(piece):
    if isinstance(piece, LinePiece):
        return piece.t_lo, piece.t_hi
    return piece.s_lo, piece.s_hi


def _sub_piece(piece, a, b):
    if isinstance(piece, LinePiece):
        return LinePiece(piece.origin, piece.direction, a, b)
    return ArcPiece(piece.focus, piece.d_point, piece.d_dir, a, b)


def _candidate_pairs(segments, sites, parent, S, box):
    m = len(sites)
    if m <= PAIR_EXHAUSTIVE_LIMIT:
        return [(i, j) for i in range(m) for j in range(i + 1, m)]
    pairs = set()
    # same-parent sites always interact
    by_parent = {}
    for si, par in enumerate(parent):
        for p in par:
            by_parent.setdefault(p, []).append(si)
    for group in by_parent.values():
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                pairs.add((min(group[i], group[j]), max(group[i], group[j])))
    # Delaunay adjacency of dense boundary samples
    from scipy.spatial import Delaunay
    pts = []
    lab = []
    extent = max(box[1] - box[0], box[3] - box[2]) / BOX_FACTOR
    step = max(extent / 800.0, 1e-6)
    for si, s in enumerate(sites):
        if s.kind == "point":
            pts.append((s.p1.x, s.p1.y))
            lab.append(si)
        else:
            L = math.hypot(s.p2.x - s.p1.x, s.p2.y - s.p1.y)
            k = min(400, max(2, int(L / step)))
            for t in np.linspace(0.02, 0.98, k):
                pts.append((s.p1.x + t * (s.p2.x - s.p1.x),
                            s.p1.y + t * (s.p2.y - s.p1.y)))
                lab.append(si)
    tri = Delaunay(np.array(pts))
    ind, indptr = tri.vertex_neighbor_vertices
    for a in range(len(pts)):
        for b in indptr[ind[a]:ind[a + 1]]:
            la, lb = lab[a], lab[int(b)]
            if la != lb:
                pairs.add((min(la, lb), max(la, lb)))
    # raster adjacency net for thin regions
    G = 160
    gx, gy = np.meshgrid(np.linspace(box[0], box[1], G),
                         np.linspace(box[2], box[3], G))
    _, idx = kernels.nearest_site_batch(S, gx.ravel(), gy.ravel())
    idx = idx.reshape(G, G)
    for aa, bb in ((idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])):
        diff = aa != bb
        for a, b in zip(aa[diff].ravel(), bb[diff].ravel()):
            pairs.add((min(int(a), int(b)), max(int(a), int(b))))
    return sorted(pairs)


def _margin_points(S, xs, ys, si, sj, workers=1):
    from . import parallel
    d1 = kernels.site_dist_batch(S, si, xs, ys)
    d2 = kernels.site_dist_batch(S, sj, xs, ys)
    dother, _ = parallel.run_batch(
        lambda x, y, a, b: kernels.nearest_site_excl_batch(S, x, y, a, b),
        (xs, ys, si, sj), workers=workers, n_out_scalars=0)
    dpair = np.maximum(d1, d2)
    return dpair - dother, dpair


def _margins(S, piece, ts, i, j):
    xs, ys = _piece_points(piece, ts)
    si = np.full(len(xs), i, dtype=np.int64)
    sj = np.full(len(xs), j, dtype=np.int64)
    return _margin_points(S, xs, ys, si, sj)


def _inside(S, piece, ts, i, j):
    marg, dpair = _margins(S, piece, ts, i, j)
    return marg <= KEEP_TOL * (1.0 + dpair)


def _refine_crossings(S, piece, lo_t, hi_t, lo_in, i, j, iters=55):
    """Vectorized bisection of inside/outside flips in brackets (the same
    tolerance predicate as the run detection, so tie regions at margin ~ 0
    do not flicker)."""
    lo_t = lo_t.copy()
    hi_t = hi_t.copy()
    for _ in range(iters):
        mid = 0.5 * (lo_t + hi_t)
        same = _inside(S, piece, mid, i, j) == lo_in
        lo_t = np.where(same, mid, lo_t)
        hi_t = np.where(same, hi_t, mid)
    return 0.5 * (lo_t + hi_t)


def _keep_runs(S, piece, i, j, t0, t1, n_samples, depth=0):
    """Parameter subintervals of [t0, t1] where the pair is jointly nearest."""
    ts = np.linspace(t0, t1, n_samples)
    marg, dpair = _margins(S, piece, ts, i, j)
    inside = marg <= KEEP_TOL * (1.0 + dpair)
    if not inside.any():
        return []
    flips = np.nonzero(inside[:-1] != inside[1:])[0]
    if len(flips):
        cross = _refine_crossings(S, piece, ts[flips], ts[flips + 1],
                                  inside[flips], i, j)
    else:
        cross = np.zeros(0)
    bounds = [t0]
    bounds.extend(cross.tolist())
    bounds.append(t1)
    runs = []
    ci = 0
    cur_inside = bool(inside[0])
    for k in range(len(bounds) - 1):
        a, b = bounds[k], bounds[k + 1]
        if cur_inside and b - a > 1e-12 * (1.0 + abs(a) + abs(b)):
            runs.append((a, b))
        cur_inside = not cur_inside
    # verification at an offset denser grid; re-subdivide on violation
    out = []
    for a, b in runs:
        vts = np.linspace(a, b, VERIFY_SAMPLES + 1)[1:-1]
        if len(vts):
            vm, vd = _margins(S, piece, vts, i, j)
            if (vm > 1e-7 * (1.0 + vd)).any():
                if depth < 2:
                    out.extend(_keep_runs(S, piece, i, j, a, b,
                                          4 * n_samples, depth + 1))
                continue
        out.append((a, b))
    return out


def _piece_coeffs(piece):
    """Quadratic parametric coefficients A + B t + C t^2 of a piece."""
    if isinstance(piece, LinePiece):
        return (piece.origin.x, piece.origin.y, piece.direction.x,
                piece.direction.y, 0.0, 0.0)
    gx, gy, ux, uy, nx, ny, h = piece._frame()
    return (gx + 0.5 * h * nx, gy + 0.5 * h * ny, ux, uy,
            nx / (2.0 * h), ny / (2.0 * h))


def _construct(segments, workers=1, box=None):
    sites, parent = decompose_sites(segments)
    S = pack_sites(sites)
    if box is None:
        box = _scene_box(segments)
    pairs = _candidate_pairs(segments, sites, parent, S, box)

    # collect clipped bisector pieces of every candidate pair
    pieces = []
    for i, j in pairs:
        try:
            raw = bisector(sites[i], sites[j])
        except GeometryError:
            continue
        for piece in raw:
            for clipped in clip_piece_to_box(piece, box):
                t0, t1 = _piece_range(clipped)
                if t1 > t0:
                    pieces.append((clipped, i, j, t0, t1))
    runs = _batched_keep_runs(S, pieces, workers)

    edges = []
    next_id = 0
    for (clipped, i, j, _, _), piece_runs in zip(pieces, runs):
        for a, b in piece_runs:
            sub = _sub_piece(clipped, a, b)
            try:
                curves = piece_to_curves(sub, id=0)
            except ValidationError:
                raise _VerticalEdge from None
            for c in curves:
                edges.append(VoronoiEdge(c.with_id(next_id), i, j))
                next_id += 1
    for _ in range(3):
        edges, changed = _trim_crossings(edges)
        if not changed:
            break
    return VoronoiDiagram(angle=0.0, segments=list(segments), sites=sites,
                          site_parent=parent, edges=edges, box=box)


def _batched_keep_runs(S, pieces, workers=1):
    """Jointly-nearest parameter runs for many pieces at once: one global
    margin evaluation for all samples, one vectorized bisection for all
    inside/outside brackets, one verification pass."""
    np_ = len(pieces)
    if np_ == 0:
        return []
    A = np.array([_piece_coeffs(p[0]) for p in pieces])
    si = np.array([p[1] for p in pieces], dtype=np.int64)
    sj = np.array([p[2] for p in pieces], dtype=np.int64)
    t0 = np.array([p[3] for p in pieces])
    t1 = np.array([p[4] for p in pieces])

    def points(pidx, ts):
        ax, ay, bx, by, cx, cy = (A[pidx, k] for k in range(6))
        return ax + ts * (bx + ts * cx), ay + ts * (by + ts * cy)

    steps = np.linspace(0.0, 1.0, SAMPLES)
    ts = t0[:, None] + (t1 - t0)[:, None] * steps[None, :]
    pidx = np.repeat(np.arange(np_), SAMPLES)
    xs, ys = points(pidx, ts.ravel())
    marg, dpair = _margin_points(S, xs, ys, si[pidx], sj[pidx], workers)
    inside = (marg <= KEEP_TOL * (1.0 + dpair)).reshape(np_, SAMPLES)

    flip_p, flip_k = np.nonzero(inside[:, :-1] != inside[:, 1:])
    lo_t = ts[flip_p, flip_k]
    hi_t = ts[flip_p, flip_k + 1]
    lo_in = inside[flip_p, flip_k]
    for _ in range(34):
        mid = 0.5 * (lo_t + hi_t)
        mx, my = points(flip_p, mid)
        mm, md = _margin_points(S, mx, my, si[flip_p], sj[flip_p], workers)
        same = (mm <= KEEP_TOL * (1.0 + md)) == lo_in
        lo_t = np.where(same, mid, lo_t)
        hi_t = np.where(same, hi_t, mid)
    cross = 0.5 * (lo_t + hi_t)

    runs = [[] for _ in range(np_)]
    ver_piece = []
    ver_lo = []
    ver_hi = []
    for p in range(np_):
        if not inside[p].any():
            continue
        sel = np.nonzero(flip_p == p)[0]
        bounds = [t0[p]] + sorted(cross[sel].tolist()) + [t1[p]]
        cur = bool(inside[p, 0])
        for k in range(len(bounds) - 1):
            a, b = bounds[k], bounds[k + 1]
            if cur and b - a > 1e-12 * (1.0 + abs(a) + abs(b)):
                ver_piece.append(p)
                ver_lo.append(a)
                ver_hi.append(b)
            cur = not cur
    if not ver_piece:
        return runs
    vp = np.array(ver_piece, dtype=np.int64)
    va = np.array(ver_lo)
    vb = np.array(ver_hi)
    vsteps = np.linspace(0.0, 1.0, VERIFY_SAMPLES + 1)[1:-1]
    vts = va[:, None] + (vb - va)[:, None] * vsteps[None, :]
    vidx = np.repeat(vp, len(vsteps))
    vx, vy = points(vidx, vts.ravel())
    vm, vd = _margin_points(S, vx, vy, si[vidx], sj[vidx], workers)
    bad = (vm > 1e-7 * (1.0 + vd)).reshape(len(vp), len(vsteps)).any(axis=1)
    for k in range(len(vp)):
        p = int(vp[k])
        if not bad[k]:
            runs[p].append((float(va[k]), float(vb[k])))
        else:
            piece, i, j = pieces[p][0], pieces[p][1], pieces[p][2]
            runs[p].extend(_keep_runs(S, piece, i, j, float(va[k]),
                                      float(vb[k]), 4 * SAMPLES, depth=1))
    return runs


def _trim_crossings(edges):
    """Snap edge ends that overshoot a vertex by up to SNAP_TOL onto the
    crossing point with the neighboring edge.

    Margin-located boundaries can overrun a degenerate vertex by
    ~sqrt(KEEP_TOL); the resulting hairline crossings would break the
    well-behavedness of the edge set as a red input.
    """
    n = len(edges)
    if n < 2:
        return edges, False
    from .geometry import pack_curves
    P = pack_curves([e.curve for e in edges])
    bounds = [[P[k, 7], P[k, 8]] for k in range(n)]
    lo = P[:, 9]
    hi = P[:, 10]
    ii, jj = np.nonzero((lo[:, None] <= hi[None, :] + 1e-12)
                        & (hi[:, None] >= lo[None, :] - 1e-12))
    keep = ii < jj
    ia = ii[keep].astype(np.int64)
    ib = jj[keep].astype(np.int64)
    if not len(ia):
        return edges, False
    ninf = np.full(len(ia), -np.inf)
    pinf = np.full(len(ia), np.inf)
    cnt, px, py, _, _ = kernels.intersect_batch(P, ia, ib, ninf, pinf)
    changed = False

    def endpoint(k, t):
        return (P[k, 1] + t * (P[k, 3] + t * P[k, 5]),
                P[k, 2] + t * (P[k, 4] + t * P[k, 6]))

    for w in np.nonzero(cnt)[0]:
        for j in range(cnt[w]):
            x, y = px[w, j], py[w, j]
            near = []
            for k in (ia[w], ib[w]):
                t = ((x - P[k, 1]) * P[k, 3] + (y - P[k, 2]) * P[k, 4]) \
                    / (P[k, 3] ** 2 + P[k, 4] ** 2)
                ex0, ey0 = endpoint(k, bounds[k][0])
                ex1, ey1 = endpoint(k, bounds[k][1])
                d0 = math.hypot(ex0 - x, ey0 - y)
                d1 = math.hypot(ex1 - x, ey1 - y)
                near.append((k, t, d0, d1))
            if all(min(d0, d1) <= 1e-9 * (1.0 + abs(x) + abs(y))
                   for _, _, d0, d1 in near):
                continue  # clean shared endpoint already
            for k, t, d0, d1 in near:
                if min(d0, d1) > SNAP_TOL:
                    continue
                if d0 <= d1:
                    bounds[k][0] = max(bounds[k][0], t)
                else:
                    bounds[k][1] = min(bounds[k][1], t)
    out = []
    for k, e in enumerate(edges):
        t0, t1 = bounds[k]
        if t0 == P[k, 7] and t1 == P[k, 8]:
            out.append(e)
            continue
        changed = True
        if t1 - t0 <= 1e-9:
            continue
        c = e.curve
        try:
            if c.kind == 0:
                nc = Curve.line(endpoint(k, t0), endpoint(k, t1), id=c.id)
            else:
                nc = Curve.parabola(c.focus, c.d_point, c.d_dir, t0, t1, id=c.id)
        except ValidationError:
            continue
        out.append(VoronoiEdge(nc, e.s1, e.s2))
    return [VoronoiEdge(e.curve.with_id(k), e.s1, e.s2)
            for k, e in enumerate(out)], changed


def rotation_angles():
    yield 0.0
    a = ROTATION_BASE
    for _ in range(MAX_ROTATIONS):
        yield a
        a *= 2.0


def build_voronoi(Q, workers=1, extra_curves=None):
    """Voronoi edges of Q, in a rotated frame if verticals force one.

    ``extra_curves`` (e.g. the other distance argument) are rotated along
    with Q when picking the frame so that the whole downstream computation
    can run jointly; they do not influence the diagram itself.
    """
    if not Q:
        raise GeometryError("empty segment set")
    if any(c.kind != 0 for c in Q):
        raise GeometryError("Voronoi input must be line segments")
    last_err = None
    for angle in rotation_angles():
        try:
            rot_q = [c.rotate(angle) for c in Q]
            rot_extra = [c.rotate(angle) for c in (extra_curves or [])]
        except ValidationError as exc:
            last_err = exc
            continue
        try:
            # clip box covers the whole scene so that critical points (which
            # lie on the extra curves) are never beyond the truncation
            dia = _construct(rot_q, workers=workers,
                             box=_scene_box(rot_q + rot_extra))
        except _VerticalEdge as exc:
            last_err = exc
            continue
        dia.angle = angle
        dia.rotated_extra = rot_extra
        return dia
    raise GeometryError(f"no rotation avoided vertical edges: {last_err}")


def voronoi_edges(Q, workers=1):
    """The 1-skeleton of VD(Q) clipped to the 3x box, split x-monotone."""
    return build_voronoi(Q, workers=workers).edges


def sample_edge_points(dia, total):
    """~total points spread over the diagram's edges, with their defining
    site pair; used by the nearest-site verification."""
    edges = dia.edges
    if not edges:
        return np.zeros(0), np.zeros(0), np.zeros((0, 2), dtype=np.int64)
    per = max(3, int(math.ceil(total / len(edges))))
    xs = []
    ys = []
    ss = []
    for e in edges:
        r = e.curve.row
        ts = np.linspace(r[7], r[8], per)
        x = r[1] + ts * (r[3] + ts * r[5])
        y = r[2] + ts * (r[4] + ts * r[6])
        xs.append(x)
        ys.append(y)
        ss.append(np.tile((e.s1, e.s2), (per, 1)))
    return (np.concatenate(xs), np.concatenate(ys),
            np.concatenate(ss).astype(np.int64))


def verify_edges(dia, total=10000):
    """Max violation of the defining-pair-is-nearest property at sampled
    edge points; criterion: equidistant and jointly nearest within 1e-7."""
    xs, ys, ss = sample_edge_points(dia, total)
    if not len(xs):
        return 0.0
    S = dia.S
    s1 = np.ascontiguousarray(ss[:, 0])
    s2 = np.ascontiguousarray(ss[:, 1])
    d1 = kernels.site_dist_batch(S, s1, xs, ys)
    d2 = kernels.site_dist_batch(S, s2, xs, ys)
    dother, _ = kernels.nearest_site_excl_batch(S, xs, ys, s1, s2)
    eq = np.abs(d1 - d2)
    enc = np.maximum(d1, d2) - dother
    return float(max(eq.max(), enc.max(), 0.0))
