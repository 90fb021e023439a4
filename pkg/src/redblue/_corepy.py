"""Pure-Python kernel backend.

Reference implementation of the numeric kernels; the compiled backend in
``_core.pyx`` mirrors these routines one-for-one.  All functions operate on
the packed curve table produced by :mod:`redblue.geometry`:

row layout (float64, 17 columns)::

    0      kind (0 = line segment, 1 = parabola arc)
    1..6   parametric coefficients A, B, C with X(t) = A + B*t + C*t**2
    7..8   parameter range t_lo, t_hi
    9..10  x range x_min, x_max
    11..16 implicit conic qa*x^2 + qb*x*y + qc*y^2 + qd*x + qe*y + qf = 0

Sites are packed as (m, 5) float64: type (0 point / 1 segment), ax, ay, bx, by.
"""

import math

import numpy as np

BACKEND = "python"

NCOLS = 17
KIND_LINE = 0
KIND_PARABOLA = 1

EPS = 1e-9
# relative residual accepted when checking a candidate point against the
# second curve; quartic roots are Newton-polished well below this
RES_REL = 1e-6
# two intersection points closer than this (relative) collapse to one
MERGE_REL = 1e-7

FLAG_OVERLAP = 1  # curves share a supporting line/parabola over an x range
FLAG_TOO_MANY = 2  # more than two genuine intersections survived


# ---------------------------------------------------------------------------
# polynomial root finding (degree <= 4, real roots only)
# ---------------------------------------------------------------------------

def _peval(c, x, deg):
    f = 0.0
    df = 0.0
    for k in range(deg + 1):
        df = df * x + f
        f = f * x + c[k]
    return f, df


def _polish(c, x, deg):
    # guarded Newton: steps must shrink |f| (unguarded steps explode at
    # double roots where the derivative is at noise level)
    f, df = _peval(c, x, deg)
    for _ in range(3):
        if df == 0.0:
            break
        step = f / df
        if abs(step) > 1e-2 * (1.0 + abs(x)):
            break
        xn = x - step
        fn, dfn = _peval(c, xn, deg)
        if abs(fn) > abs(f):
            break
        x, f, df = xn, fn, dfn
        if abs(step) <= 1e-15 * (1.0 + abs(x)):
            break
    return x


def _quad_real(a, b, c, out):
    if a == 0.0:
        if b == 0.0:
            return 0
        out[0] = -c / b
        return 1
    disc = b * b - 4.0 * a * c
    tol = 1e-12 * (b * b + 4.0 * abs(a * c))
    if disc < -tol:
        return 0
    if disc < 0.0:
        disc = 0.0
    sq = math.sqrt(disc)
    if b >= 0.0:
        q = -0.5 * (b + sq)
    else:
        q = -0.5 * (b - sq)
    if q != 0.0:
        out[0] = q / a
        out[1] = c / q
        return 2
    out[0] = 0.0
    out[1] = 0.0
    return 2 if sq > 0.0 else 1


def _cubic_real(a, b, c, out):
    # monic t^3 + a t^2 + b t + c; returns all real roots (1 or 3)
    ao3 = a / 3.0
    p = b - a * ao3
    q = c + ao3 * (2.0 * ao3 * ao3 - b)
    n = 0
    if abs(p) < 1e-14 * (1.0 + abs(q)) ** (2.0 / 3.0):
        out[0] = math.copysign(abs(q) ** (1.0 / 3.0), -q) - ao3
        return 1
    half_q = 0.5 * q
    disc = half_q * half_q + p * p * p / 27.0
    tol3 = 1e-12 * (half_q * half_q + abs(p * p * p) / 27.0)
    if disc > tol3:
        sq = math.sqrt(disc)
        u = -half_q + sq
        v = -half_q - sq
        u = math.copysign(abs(u) ** (1.0 / 3.0), u)
        v = math.copysign(abs(v) ** (1.0 / 3.0), v)
        out[0] = u + v - ao3
        return 1
    # three real roots (within tolerance of a repeated root when disc ~ 0)
    if p >= 0.0:
        out[0] = -ao3
        return 1
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    arg = min(1.0, max(-1.0, arg))
    theta = math.acos(arg) / 3.0
    for k in range(3):
        out[n] = m * math.cos(theta - 2.0 * math.pi * k / 3.0) - ao3
        n += 1
    return n


def poly_real_roots(coeffs):
    """Real roots of c[0]*t^4 + ... + c[4]; returns a sorted list."""
    c = [float(v) for v in coeffs]
    maxc = max(abs(v) for v in c)
    if maxc == 0.0:
        return []
    c = [v / maxc for v in c]
    # effective degree
    lead = 0
    while lead < 4 and abs(c[lead]) <= 1e-13:
        lead += 1
    deg = 4 - lead
    cc = c[lead:]
    roots = [0.0] * 4
    if deg == 0:
        return []
    if deg == 1:
        roots[0] = -cc[1] / cc[0]
        n = 1
    elif deg == 2:
        n = _quad_real(cc[0], cc[1], cc[2], roots)
    elif deg == 3:
        n = _cubic_real(cc[1] / cc[0], cc[2] / cc[0], cc[3] / cc[0], roots)
    else:
        a = cc[1] / cc[0]
        b = cc[2] / cc[0]
        c1 = cc[3] / cc[0]
        d = cc[4] / cc[0]
        # depressed quartic y^4 + p y^2 + q y + r, t = y - a/4
        a2 = a * a
        p = b - 0.375 * a2
        q = c1 - 0.5 * a * b + 0.125 * a2 * a
        r = d - 0.25 * a * c1 + 0.0625 * a2 * b - (3.0 / 256.0) * a2 * a2
        ys = [0.0] * 4
        n = 0
        if abs(q) <= 1e-12 * (1.0 + abs(p) + abs(r)):
            us = [0.0, 0.0]
            nu = _quad_real(1.0, p, r, us)
            for i in range(nu):
                u = us[i]
                if u >= -1e-12 * (1.0 + abs(p) + abs(r)):
                    u = max(u, 0.0)
                    s = math.sqrt(u)
                    ys[n] = s
                    n += 1
                    if s > 0.0:
                        ys[n] = -s
                        n += 1
        else:
            ms = [0.0] * 3
            nm = _cubic_real(p, 0.25 * p * p - r, -0.125 * q * q, ms)
            m = max(ms[:nm])
            if m <= 0.0:
                m = 1e-300
            s = math.sqrt(2.0 * m)
            t1 = p / 2.0 + m
            t2 = q / (2.0 * s)
            qs = [0.0, 0.0]
            nq = _quad_real(1.0, -s, t1 + t2, qs)
            for i in range(nq):
                ys[n] = qs[i]
                n += 1
            nq = _quad_real(1.0, s, t1 - t2, qs)
            for i in range(nq):
                ys[n] = qs[i]
                n += 1
        for i in range(n):
            roots[i] = ys[i] - 0.25 * a
    out = [_polish(cc, roots[i], deg) for i in range(n)]
    out.sort()
    return out


def poly_roots_batch(C):
    """Batched real roots; C is (m, 5) high-to-low coefficients."""
    m = C.shape[0]
    cnt = np.zeros(m, dtype=np.int64)
    roots = np.full((m, 4), np.nan)
    for i in range(m):
        rr = poly_real_roots(C[i])
        cnt[i] = len(rr)
        for j, r in enumerate(rr):
            roots[i, j] = r
    return cnt, roots


# ---------------------------------------------------------------------------
# curve evaluation
# ---------------------------------------------------------------------------

def _t_for_x(row, x):
    a2 = row[5]
    a1 = row[3]
    a0 = row[1] - x
    t0 = row[7]
    t1 = row[8]
    span = abs(t1 - t0) + 1.0
    ttol = 1e-9 * span
    if abs(a2) * span <= 1e-13 * (abs(a1) + 1.0):
        if a1 == 0.0:
            return math.nan
        t = -a0 / a1
        if t0 - ttol <= t <= t1 + ttol:
            return min(max(t, t0), t1)
        return math.nan
    rr = [0.0, 0.0]
    n = _quad_real(a2, a1, a0, rr)
    best = math.nan
    best_d = math.inf
    for i in range(n):
        t = rr[i]
        if t0 - ttol <= t <= t1 + ttol:
            d = abs(t - 0.5 * (t0 + t1))
            if d < best_d:
                best_d = d
                best = min(max(t, t0), t1)
    return best


def curve_point(P, i, t):
    row = P[i]
    return (row[1] + t * (row[3] + t * row[5]),
            row[2] + t * (row[4] + t * row[6]))


def eval_y_one(P, i, x):
    row = P[i]
    xtol = EPS * (1.0 + abs(x))
    if x < row[9] - xtol or x > row[10] + xtol:
        return math.nan
    t = _t_for_x(row, x)
    if math.isnan(t):
        return math.nan
    return row[2] + t * (row[4] + t * row[6])


def eval_y_batch(P, idx, xs):
    m = len(idx)
    out = np.empty(m)
    for k in range(m):
        out[k] = eval_y_one(P, idx[k], xs[k])
    return out


def curve_points_batch(P, idx, ts):
    m = len(idx)
    xs = np.empty(m)
    ys = np.empty(m)
    for k in range(m):
        xs[k], ys[k] = curve_point(P, idx[k], ts[k])
    return xs, ys


# ---------------------------------------------------------------------------
# pairwise intersection
# ---------------------------------------------------------------------------

def _intersect_core(P, i, j, clip_lo, clip_hi):
    """Intersections of curves i and j with x in [clip_lo, clip_hi].

    Returns (pts, flags) where pts is a list of (x, y) sorted by x with at
    most two entries kept (extremes if more survive, flagged).
    """
    ri = P[i]
    rj = P[j]
    xlo = max(ri[9], rj[9], clip_lo)
    xhi = min(ri[10], rj[10], clip_hi)
    xtol = EPS * (1.0 + abs(xlo) + abs(xhi))
    if xlo > xhi + xtol:
        return [], 0
    flags = 0
    pts = []
    if ri[0] == KIND_LINE and rj[0] == KIND_LINE:
        dix, diy = ri[3], ri[4]
        djx, djy = rj[3], rj[4]
        denom = dix * djy - diy * djx
        rx = rj[1] - ri[1]
        ry = rj[2] - ri[2]
        scale = abs(dix * djy) + abs(diy * djx)
        if abs(denom) <= 1e-14 * (scale + 1.0):
            cross = rx * djy - ry * djx
            if abs(cross) <= RES_REL * (abs(rx) + abs(ry) + 1.0):
                # collinear overlap: report the x extremes of the overlap
                if xhi - xlo > MERGE_REL * (1.0 + abs(xlo)):
                    ya = eval_y_one(P, i, xlo)
                    yb = eval_y_one(P, i, xhi)
                    pts = [(xlo, ya), (xhi, yb)]
                    flags |= FLAG_OVERLAP
                elif xhi >= xlo - xtol:
                    xm = 0.5 * (xlo + xhi)
                    pts = [(xm, eval_y_one(P, i, xm))]
            return pts, flags
        ti = (rx * djy - ry * djx) / denom
        x = ri[1] + ti * dix
        y = ri[2] + ti * diy
        if xlo - xtol <= x <= xhi + xtol:
            pts = [(x, y)]
        return pts, flags

    # parametrize the (first) parabola over the other curve's conic
    if ri[0] == KIND_PARABOLA:
        pi, pj = i, j
    else:
        pi, pj = j, i
    rp = P[pi]
    q = P[pj][11:17]
    # compose conic with X(t) = A + B t + C t^2
    ax, ay = rp[1], rp[2]
    bx, by = rp[3], rp[4]
    cx, cy = rp[5], rp[6]
    qa, qb, qc, qd, qe, qf = q
    # x(t)^2, y(t)^2, x(t)*y(t) as degree-4 polys (high->low)
    c4 = qa * cx * cx + qb * cx * cy + qc * cy * cy
    c3 = qa * 2 * bx * cx + qb * (bx * cy + by * cx) + qc * 2 * by * cy
    c2 = (qa * (bx * bx + 2 * ax * cx) + qb * (ax * cy + ay * cx + bx * by)
          + qc * (by * by + 2 * ay * cy) + qd * cx + qe * cy)
    c1 = (qa * 2 * ax * bx + qb * (ax * by + ay * bx) + qc * 2 * ay * by
          + qd * bx + qe * by)
    c0 = qa * ax * ax + qb * ax * ay + qc * ay * ay + qd * ax + qe * ay + qf
    coeffs = (c4, c3, c2, c1, c0)
    maxc = max(abs(v) for v in coeffs)
    qscale = max(abs(v) for v in q)
    pscale = max(1.0, abs(ax), abs(ay), abs(bx), abs(by), abs(cx), abs(cy)) ** 2
    if maxc <= 1e-12 * qscale * pscale:
        # same supporting parabola: arcs overlap along an x window, or touch
        # only at a shared extreme point if they sit on different branches
        ylo_i = eval_y_one(P, i, xlo)
        ylo_j = eval_y_one(P, j, xlo)
        yhi_i = eval_y_one(P, i, xhi)
        yhi_j = eval_y_one(P, j, xhi)
        xm = 0.5 * (xlo + xhi)
        same_branch = abs(eval_y_one(P, i, xm) - eval_y_one(P, j, xm)) <= RES_REL * (1.0 + abs(xm))
        if same_branch and xhi - xlo > MERGE_REL * (1.0 + abs(xlo)):
            pts = [(xlo, ylo_i), (xhi, yhi_i)]
            flags |= FLAG_OVERLAP
        else:
            if abs(ylo_i - ylo_j) <= RES_REL * (1.0 + abs(ylo_i)):
                pts.append((xlo, ylo_i))
            if xhi > xlo + xtol and abs(yhi_i - yhi_j) <= RES_REL * (1.0 + abs(yhi_i)):
                pts.append((xhi, yhi_i))
        return pts, flags

    t0 = rp[7]
    t1 = rp[8]
    ttol = 1e-9 * (abs(t1 - t0) + 1.0)
    ro = P[pj]
    ob2 = ro[3] * ro[3] + ro[4] * ro[4]
    raw = []
    for t in poly_real_roots(coeffs):
        if t < t0 - ttol or t > t1 + ttol:
            continue
        x = ax + t * (bx + t * cx)
        y = ay + t * (by + t * cy)
        if x < xlo - xtol or x > xhi + xtol:
            continue
        # verify the point sits on the other arc (kills wrong-branch roots)
        to = ((x - ro[1]) * ro[3] + (y - ro[2]) * ro[4]) / ob2
        oxp = ro[1] + to * (ro[3] + to * ro[5])
        oyp = ro[2] + to * (ro[4] + to * ro[6])
        otol = 1e-9 * (abs(ro[8] - ro[7]) + 1.0)
        if to < ro[7] - otol or to > ro[8] + otol:
            continue
        if abs(oxp - x) + abs(oyp - y) > RES_REL * (1.0 + abs(x) + abs(y)):
            continue
        raw.append((x, y))
    raw.sort()
    for x, y in raw:
        if pts and (abs(x - pts[-1][0]) + abs(y - pts[-1][1])
                    <= MERGE_REL * (1.0 + abs(x) + abs(y))):
            continue
        pts.append((x, y))
    if len(pts) > 2:
        pts = [pts[0], pts[-1]]
        flags |= FLAG_TOO_MANY
    return pts, flags


def intersect_batch(P, ia, ib, clip_lo, clip_hi):
    m = len(ia)
    cnt = np.zeros(m, dtype=np.uint8)
    px = np.full((m, 2), np.nan)
    py = np.full((m, 2), np.nan)
    flags = np.zeros(m, dtype=np.uint8)
    for k in range(m):
        pts, f = _intersect_core(P, ia[k], ib[k], clip_lo[k], clip_hi[k])
        cnt[k] = len(pts)
        flags[k] = f
        for j, (x, y) in enumerate(pts):
            px[k, j] = x
            py[k, j] = y
    return cnt, px, py, flags, m


def _is_endpoint_of(row, x, y, tol):
    for t in (row[7], row[8]):
        ex = row[1] + t * (row[3] + t * row[5])
        ey = row[2] + t * (row[4] + t * row[6])
        if abs(ex - x) <= tol and abs(ey - y) <= tol:
            return True
    return False


def validate_pairs_batch(P, ia, ib, endpoint_tol):
    """1 where the pair has a common point that is not a shared endpoint."""
    m = len(ia)
    bad = np.zeros(m, dtype=np.uint8)
    for k in range(m):
        pts, f = _intersect_core(P, ia[k], ib[k], -math.inf, math.inf)
        if f & FLAG_TOO_MANY:
            bad[k] = 1
            continue
        if f & FLAG_OVERLAP:
            bad[k] = 1
            continue
        for x, y in pts:
            tol = endpoint_tol * (1.0 + abs(x) + abs(y))
            if not (_is_endpoint_of(P[ia[k]], x, y, tol)
                    and _is_endpoint_of(P[ib[k]], x, y, tol)):
                bad[k] = 1
                break
    return bad


# ---------------------------------------------------------------------------
# site distances
# ---------------------------------------------------------------------------

def _site_dist(S, si, x, y):
    ax, ay, bx, by = S[si, 1], S[si, 2], S[si, 3], S[si, 4]
    dx = bx - ax
    dy = by - ay
    L2 = dx * dx + dy * dy
    if L2 > 0.0:
        t = ((x - ax) * dx + (y - ay) * dy) / L2
        t = min(1.0, max(0.0, t))
        ax += t * dx
        ay += t * dy
    return math.hypot(x - ax, y - ay)


def site_dist_batch(S, si, px, py):
    m = len(px)
    out = np.empty(m)
    for k in range(m):
        out[k] = _site_dist(S, si[k], px[k], py[k])
    return out


def nearest_site_batch(S, px, py, excl1=-1, excl2=-1):
    m = len(px)
    dist = np.full(m, np.inf)
    idx = np.full(m, -1, dtype=np.int64)
    for k in range(m):
        best = math.inf
        bi = -1
        for s in range(S.shape[0]):
            if s == excl1 or s == excl2:
                continue
            d = _site_dist(S, s, px[k], py[k])
            if d < best:
                best = d
                bi = s
        dist[k] = best
        idx[k] = bi
    return dist, idx


def nearest_site_excl_batch(S, px, py, e1, e2):
    """Nearest site with per-point exclusion pairs."""
    m = len(px)
    dist = np.full(m, np.inf)
    idx = np.full(m, -1, dtype=np.int64)
    for k in range(m):
        best = math.inf
        bi = -1
        for s in range(S.shape[0]):
            if s == e1[k] or s == e2[k]:
                continue
            d = _site_dist(S, s, px[k], py[k])
            if d < best:
                best = d
                bi = s
        dist[k] = best
        idx[k] = bi
    return dist, idx


# ---------------------------------------------------------------------------
# pipeline step kernels
# ---------------------------------------------------------------------------

def step2_batch(P, cb_flat, a_idx, cb_start, cb_len, xq, slab_lo, slab_hi):
    m = len(a_idx)
    found = np.zeros(m, dtype=np.uint8)
    cx = np.full(m, np.nan)
    cy = np.full(m, np.nan)
    cb = np.full(m, -1, dtype=np.int64)
    ops = 0
    for k in range(m):
        n = cb_len[k]
        if n == 0:
            continue
        a = a_idx[k]
        x = xq[k]
        ya = eval_y_one(P, a, x)
        base = cb_start[k]
        lo, hi = 0, n
        while lo < hi:
            mid = (lo + hi) // 2
            yb = eval_y_one(P, cb_flat[base + mid], x)
            ops += 1
            if yb < ya:
                lo = mid + 1
            else:
                hi = mid
        # probe the two neighbors plus tie-expanded positions around them
        ytol = EPS * (1.0 + abs(ya))
        p0 = lo - 1
        p1 = lo
        while p0 - 1 >= 0 and abs(eval_y_one(P, cb_flat[base + p0], x) - ya) <= ytol:
            p0 -= 1
            ops += 1
            if lo - p0 > 4:
                break
        while p1 + 1 < n and abs(eval_y_one(P, cb_flat[base + p1], x) - ya) <= ytol:
            p1 += 1
            ops += 1
            if p1 - lo > 4:
                break
        best_x = math.inf
        best_y = math.nan
        best_b = -1
        for pos in range(max(0, p0), min(n, p1 + 1)):
            b = cb_flat[base + pos]
            pts, _ = _intersect_core(P, a, b, slab_lo[k], slab_hi[k])
            ops += 1
            for x2, y2 in pts:
                if x2 < best_x - 1e-15 or (x2 <= best_x and b < best_b):
                    best_x = x2
                    best_y = y2
                    best_b = b
        if best_b >= 0:
            found[k] = 1
            cx[k] = best_x
            cy[k] = best_y
            cb[k] = best_b
    return found, cx, cy, cb, ops


def _cross_state(P, b, red, lo, hi):
    """(count, x1, x2, side) of in-window crossings of blue b with a red."""
    pts, _ = _intersect_core(P, b, red, lo, hi)
    if pts:
        x1 = pts[0][0]
        x2 = pts[-1][0]
        return len(pts), x1, x2, 0
    mx = 0.5 * (lo + hi)
    d = eval_y_one(P, b, mx) - eval_y_one(P, red, mx)
    return 0, math.nan, math.nan, (1 if d >= 0.0 else -1)


def _rank_range(P, ca_flat, base, k, b, lo, hi):
    """Contiguous rank range of C_A entries crossed by b within [lo, hi].

    The relative position of b against rank r (above / crossing / below) is
    monotone in r, which makes both boundary searches binary.
    """
    ops = 0

    def f(r):
        c, _, _, side = _cross_state(P, b, ca_flat[base + r], lo, hi)
        return 0 if c else side

    l, h = 0, k
    while l < h:
        mid = (l + h) // 2
        ops += 1
        if f(mid) <= 0:
            h = mid
        else:
            l = mid + 1
    if l == k or f(l) < 0:
        return -1, -1, ops + 1
    r1 = l
    l, h = r1, k - 1
    while l < h:
        mid = (l + h + 1) // 2
        ops += 1
        if f(mid) >= 0:
            l = mid
        else:
            h = mid - 1
    return r1, l, ops + 1


def step31_batch(P, ca_flat, b_idx, ca_start, ca_len, lo, hi):
    m = len(b_idx)
    npc = np.zeros(m, dtype=np.uint8)
    plo = np.full((m, 3), np.nan)
    phi = np.full((m, 3), np.nan)
    rlo = np.full((m, 3), -1, dtype=np.int64)
    rhi = np.full((m, 3), -1, dtype=np.int64)
    ptag = np.zeros((m, 3), dtype=np.uint8)
    anom = np.zeros(m, dtype=np.uint8)
    ops = 0
    for it in range(m):
        b = b_idx[it]
        base = ca_start[it]
        k = ca_len[it]
        wlo = lo[it]
        whi = hi[it]
        if k == 0 or whi - wlo <= 0.0:
            continue
        r1, r2, o = _rank_range(P, ca_flat, base, k, b, wlo, whi)
        ops += o
        if r1 < 0:
            continue
        c1, a1x1, a1x2, _ = _cross_state(P, b, ca_flat[base + r1], wlo, whi)
        c2, a2x1, a2x2, _ = _cross_state(P, b, ca_flat[base + r2], wlo, whi)
        ops += 2
        splits = []
        if r1 == r2:
            tag = 0
            if c1 == 2:
                tag = 2
                splits = [0.5 * (a1x1 + a1x2)]
        elif c1 == 1 and c2 == 1:
            tag = 0
        elif c1 == 1 or c2 == 1:
            tag = 1
            if c1 == 2:
                splits = [0.5 * (a1x1 + a1x2)]
            else:
                splits = [0.5 * (a2x1 + a2x2)]
        else:
            # both ends crossed twice: nested or disjoint x pairs
            if a1x2 < a2x1 or a2x2 < a1x1:
                tag = 3
                splits = [0.5 * (a1x1 + a1x2), 0.5 * (a2x1 + a2x2)]
            elif (a1x1 < a2x1 and a2x2 < a1x2) or (a2x1 < a1x1 and a1x2 < a2x2):
                tag = 2
                if a1x1 < a2x1:
                    splits = [0.5 * (a2x1 + a2x2)]
                else:
                    splits = [0.5 * (a1x1 + a1x2)]
            else:
                anom[it] = 1
                tag = 3
                splits = [0.5 * (a1x1 + a1x2), 0.5 * (a2x1 + a2x2)]
        wtol = EPS * (1.0 + abs(wlo) + abs(whi))
        cuts = [wlo]
        for s in sorted(splits):
            if s > cuts[-1] + wtol and s < whi - wtol:
                cuts.append(s)
        cuts.append(whi)
        n_out = 0
        for ci in range(len(cuts) - 1):
            a_lo, a_hi = cuts[ci], cuts[ci + 1]
            if len(cuts) == 2:
                pr1, pr2 = r1, r2
            else:
                pr1, pr2, o = _rank_range(P, ca_flat, base, k, b, a_lo, a_hi)
                ops += o
            if pr1 < 0:
                continue
            plo[it, n_out] = a_lo
            phi[it, n_out] = a_hi
            rlo[it, n_out] = pr1
            rhi[it, n_out] = pr2
            ptag[it, n_out] = tag
            n_out += 1
        npc[it] = n_out
    return npc, plo, phi, rlo, rhi, ptag, anom, ops


def it_assign_batch(refs_flat, ref_start, ref_len, lo, hi):
    """Highest node of the per-tree median-split BST whose ref the interval
    contains.  Returns the local position of that node (its ref index)."""
    m = len(lo)
    pos = np.full(m, -1, dtype=np.int64)
    ops = 0
    for k in range(m):
        base = ref_start[k]
        s, e = 0, ref_len[k]
        while s < e:
            mid = (s + e) // 2
            r = refs_flat[base + mid]
            ops += 1
            if hi[k] < r:
                e = mid
            elif lo[k] > r:
                s = mid + 1
            else:
                pos[k] = mid
                break
    return pos, ops


def step35_batch(P, a_idx, a_rank, tr_id, tr_ref_start, tr_ref_len, refs_flat,
                 node_lo_start, node_lo_len, list_lo,
                 node_hi_start, node_hi_len, list_hi,
                 iv_lo, iv_hi, iv_owner, iv_plo, iv_phi):
    m = len(a_idx)
    found = np.zeros(m, dtype=np.uint8)
    cx = np.full(m, np.nan)
    cy = np.full(m, np.nan)
    cb = np.full(m, -1, dtype=np.int64)
    hits = np.zeros(m, dtype=np.int32)
    maxnode = np.zeros(m, dtype=np.int32)
    ops = 0
    for it in range(m):
        tr = tr_id[it]
        if tr < 0:
            continue
        a = a_idx[it]
        q = a_rank[it]
        base = tr_ref_start[tr]
        s, e = 0, tr_ref_len[tr]
        best_x = math.inf
        best_y = math.nan
        best_b = -1
        while s < e:
            mid = (s + e) // 2
            gp = base + mid
            r = refs_flat[gp]
            ops += 1
            node_hits = 0
            matches = []
            if q == r:
                st = node_lo_start[gp]
                for j in range(node_lo_len[gp]):
                    matches.append(list_lo[st + j])
                s = e  # neither subtree can contain q
            elif q < r:
                st = node_lo_start[gp]
                for j in range(node_lo_len[gp]):
                    ivx = list_lo[st + j]
                    ops += 1
                    if iv_lo[ivx] > q:
                        break
                    matches.append(ivx)
                e = mid
            else:
                st = node_hi_start[gp]
                for j in range(node_hi_len[gp]):
                    ivx = list_hi[st + j]
                    ops += 1
                    if iv_hi[ivx] < q:
                        break
                    matches.append(ivx)
                s = mid + 1
            for ivx in matches:
                node_hits += 1
                pts, _ = _intersect_core(P, a, iv_owner[ivx],
                                         iv_plo[ivx], iv_phi[ivx])
                ops += 1
                for x2, y2 in pts:
                    bo = iv_owner[ivx]
                    if x2 < best_x - 1e-15 or (x2 <= best_x and bo < best_b):
                        best_x = x2
                        best_y = y2
                        best_b = bo
            hits[it] += node_hits
            if node_hits > maxnode[it]:
                maxnode[it] = node_hits
        if best_b >= 0:
            found[it] = 1
            cx[it] = best_x
            cy[it] = best_y
            cb[it] = best_b
    return found, cx, cy, cb, hits, maxnode, ops
