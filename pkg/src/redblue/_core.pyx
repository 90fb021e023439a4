# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

One-for-one mirror of the pure-Python reference in ``_corepy.py``; see that
module for the packed table layouts and the semantics of every routine.
Batch loops release the GIL so chunked thread pools scale.
"""

from libc.math cimport (INFINITY, NAN, acos, copysign, cos, fabs, hypot,
                        isnan, pi, pow, sqrt)
from libc.stdint cimport int32_t, int64_t, uint8_t

import numpy as np

BACKEND = "c"

NCOLS = 17
KIND_LINE = 0
KIND_PARABOLA = 1

EPS = 1e-9
RES_REL = 1e-6
MERGE_REL = 1e-7

FLAG_OVERLAP = 1
FLAG_TOO_MANY = 2

cdef double _EPS = 1e-9
cdef double _RES_REL = 1e-6
cdef double _MERGE_REL = 1e-7


# ---------------------------------------------------------------------------
# polynomial root finding
# ---------------------------------------------------------------------------

cdef inline void _peval(const double* c, int deg, double x,
                        double* f, double* df) noexcept nogil:
    cdef int k
    cdef double fv = 0.0
    cdef double dv = 0.0
    for k in range(deg + 1):
        dv = dv * x + fv
        fv = fv * x + c[k]
    f[0] = fv
    df[0] = dv


cdef double _polish(const double* c, int deg, double x) noexcept nogil:
    # guarded Newton: steps must shrink |f| (unguarded steps explode at
    # double roots where the derivative is at noise level)
    cdef int it
    cdef double f, df, fn, dfn, step, xn
    _peval(c, deg, x, &f, &df)
    for it in range(3):
        if df == 0.0:
            break
        step = f / df
        if fabs(step) > 1e-2 * (1.0 + fabs(x)):
            break
        xn = x - step
        _peval(c, deg, xn, &fn, &dfn)
        if fabs(fn) > fabs(f):
            break
        x = xn
        f = fn
        df = dfn
        if fabs(step) <= 1e-15 * (1.0 + fabs(x)):
            break
    return x


cdef int _quad_real(double a, double b, double c, double* out) noexcept nogil:
    cdef double disc, tol, sq, q
    if a == 0.0:
        if b == 0.0:
            return 0
        out[0] = -c / b
        return 1
    disc = b * b - 4.0 * a * c
    tol = 1e-12 * (b * b + 4.0 * fabs(a * c))
    if disc < -tol:
        return 0
    if disc < 0.0:
        disc = 0.0
    sq = sqrt(disc)
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


cdef int _cubic_real(double a, double b, double c, double* out) noexcept nogil:
    cdef double ao3 = a / 3.0
    cdef double p = b - a * ao3
    cdef double q = c + ao3 * (2.0 * ao3 * ao3 - b)
    cdef double half_q, disc, sq, u, v, m, arg, theta
    cdef int n = 0, k
    if fabs(p) < 1e-14 * pow(1.0 + fabs(q), 2.0 / 3.0):
        out[0] = copysign(pow(fabs(q), 1.0 / 3.0), -q) - ao3
        return 1
    half_q = 0.5 * q
    disc = half_q * half_q + p * p * p / 27.0
    cdef double tol3 = 1e-12 * (half_q * half_q + fabs(p * p * p) / 27.0)
    if disc > tol3:
        sq = sqrt(disc)
        u = -half_q + sq
        v = -half_q - sq
        u = copysign(pow(fabs(u), 1.0 / 3.0), u)
        v = copysign(pow(fabs(v), 1.0 / 3.0), v)
        out[0] = u + v - ao3
        return 1
    if p >= 0.0:
        out[0] = -ao3
        return 1
    m = 2.0 * sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    if arg > 1.0:
        arg = 1.0
    elif arg < -1.0:
        arg = -1.0
    theta = acos(arg) / 3.0
    for k in range(3):
        out[n] = m * cos(theta - 2.0 * pi * k / 3.0) - ao3
        n += 1
    return n


cdef int _real_roots(double* cin, double* roots) noexcept nogil:
    """Real roots of cin[0]*t^4 + ... + cin[4]; sorted ascending."""
    cdef double c[5]
    cdef double cc[5]
    cdef double maxc = 0.0
    cdef int k, lead, deg, n, i, j, nu, nq, nm
    cdef double a, b, c1, d, a2, p, q, r, u, s, t1, t2, m, tmp
    cdef double ys[4]
    cdef double us[2]
    cdef double qs[2]
    cdef double ms[3]
    for k in range(5):
        c[k] = cin[k]
        if fabs(c[k]) > maxc:
            maxc = fabs(c[k])
    if maxc == 0.0:
        return 0
    for k in range(5):
        c[k] /= maxc
    lead = 0
    while lead < 4 and fabs(c[lead]) <= 1e-13:
        lead += 1
    deg = 4 - lead
    for k in range(deg + 1):
        cc[k] = c[lead + k]
    if deg == 0:
        return 0
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
        a2 = a * a
        p = b - 0.375 * a2
        q = c1 - 0.5 * a * b + 0.125 * a2 * a
        r = d - 0.25 * a * c1 + 0.0625 * a2 * b - (3.0 / 256.0) * a2 * a2
        n = 0
        if fabs(q) <= 1e-12 * (1.0 + fabs(p) + fabs(r)):
            nu = _quad_real(1.0, p, r, us)
            for i in range(nu):
                u = us[i]
                if u >= -1e-12 * (1.0 + fabs(p) + fabs(r)):
                    if u < 0.0:
                        u = 0.0
                    s = sqrt(u)
                    ys[n] = s
                    n += 1
                    if s > 0.0:
                        ys[n] = -s
                        n += 1
        else:
            nm = _cubic_real(p, 0.25 * p * p - r, -0.125 * q * q, ms)
            m = ms[0]
            for i in range(1, nm):
                if ms[i] > m:
                    m = ms[i]
            if m <= 0.0:
                m = 1e-300
            s = sqrt(2.0 * m)
            t1 = p / 2.0 + m
            t2 = q / (2.0 * s)
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
    for i in range(n):
        roots[i] = _polish(cc, deg, roots[i])
    # insertion sort
    for i in range(1, n):
        tmp = roots[i]
        j = i - 1
        while j >= 0 and roots[j] > tmp:
            roots[j + 1] = roots[j]
            j -= 1
        roots[j + 1] = tmp
    return n


def poly_real_roots(coeffs):
    cdef double c[5]
    cdef double roots[4]
    cdef int k, n
    for k in range(5):
        c[k] = float(coeffs[k])
    n = _real_roots(c, roots)
    return [roots[k] for k in range(n)]


def poly_roots_batch(double[:, ::1] C):
    cdef Py_ssize_t m = C.shape[0]
    cnt_np = np.zeros(m, dtype=np.int64)
    roots_np = np.full((m, 4), np.nan)
    cdef int64_t[::1] cnt = cnt_np
    cdef double[:, ::1] roots = roots_np
    cdef double buf[4]
    cdef double c[5]
    cdef Py_ssize_t i
    cdef int n, j
    with nogil:
        for i in range(m):
            for j in range(5):
                c[j] = C[i, j]
            n = _real_roots(c, buf)
            cnt[i] = n
            for j in range(n):
                roots[i, j] = buf[j]
    return cnt_np, roots_np


# ---------------------------------------------------------------------------
# curve evaluation
# ---------------------------------------------------------------------------

cdef double _t_for_x(const double* row, double x) noexcept nogil:
    cdef double a2 = row[5]
    cdef double a1 = row[3]
    cdef double a0 = row[1] - x
    cdef double t0 = row[7]
    cdef double t1 = row[8]
    cdef double span = fabs(t1 - t0) + 1.0
    cdef double ttol = 1e-9 * span
    cdef double rr[2]
    cdef double best, best_d, t, dmid
    cdef int n, i
    if fabs(a2) * span <= 1e-13 * (fabs(a1) + 1.0):
        if a1 == 0.0:
            return NAN
        t = -a0 / a1
        if t0 - ttol <= t <= t1 + ttol:
            if t < t0:
                t = t0
            elif t > t1:
                t = t1
            return t
        return NAN
    n = _quad_real(a2, a1, a0, rr)
    best = NAN
    best_d = INFINITY
    for i in range(n):
        t = rr[i]
        if t0 - ttol <= t <= t1 + ttol:
            dmid = fabs(t - 0.5 * (t0 + t1))
            if dmid < best_d:
                best_d = dmid
                if t < t0:
                    t = t0
                elif t > t1:
                    t = t1
                best = t
    return best


cdef inline double _eval_y_row(const double* row, double x) noexcept nogil:
    cdef double xtol = _EPS * (1.0 + fabs(x))
    cdef double t
    if x < row[9] - xtol or x > row[10] + xtol:
        return NAN
    t = _t_for_x(row, x)
    if isnan(t):
        return NAN
    return row[2] + t * (row[4] + t * row[6])


def curve_point(double[:, ::1] P, Py_ssize_t i, double t):
    return (P[i, 1] + t * (P[i, 3] + t * P[i, 5]),
            P[i, 2] + t * (P[i, 4] + t * P[i, 6]))


def eval_y_one(double[:, ::1] P, Py_ssize_t i, double x):
    return _eval_y_row(&P[i, 0], x)


def eval_y_batch(double[:, ::1] P, int64_t[::1] idx, double[::1] xs):
    cdef Py_ssize_t m = idx.shape[0]
    out_np = np.empty(m)
    cdef double[::1] out = out_np
    cdef Py_ssize_t k
    with nogil:
        for k in range(m):
            out[k] = _eval_y_row(&P[idx[k], 0], xs[k])
    return out_np


def curve_points_batch(double[:, ::1] P, int64_t[::1] idx, double[::1] ts):
    cdef Py_ssize_t m = idx.shape[0]
    xs_np = np.empty(m)
    ys_np = np.empty(m)
    cdef double[::1] xs = xs_np
    cdef double[::1] ys = ys_np
    cdef Py_ssize_t k
    cdef const double* row
    cdef double t
    with nogil:
        for k in range(m):
            row = &P[idx[k], 0]
            t = ts[k]
            xs[k] = row[1] + t * (row[3] + t * row[5])
            ys[k] = row[2] + t * (row[4] + t * row[6])
    return xs_np, ys_np


# ---------------------------------------------------------------------------
# pairwise intersection
# ---------------------------------------------------------------------------

cdef int _intersect_core(double[:, ::1] P, Py_ssize_t i, Py_ssize_t j,
                         double clip_lo, double clip_hi,
                         double* ox, double* oy, int* oflags) noexcept nogil:
    cdef const double* ri = &P[i, 0]
    cdef const double* rj = &P[j, 0]
    cdef double xlo = ri[9]
    cdef double xhi = ri[10]
    cdef double xtol, dix, diy, djx, djy, denom, rx, ry, scale, cross, ti, x, y
    cdef double ax, ay, bx, by, cx, cy, qa, qb, qc, qd, qe, qf
    cdef double c4, c3, c2, c1, c0, maxc, qscale, pscale, t0, t1, ttol
    cdef double ylo_i, ylo_j, yhi_i, yhi_j, xm, ym, t, to, oxp, oyp, otol, ob2
    cdef double coeffs[5]
    cdef double roots[4]
    cdef double rawx[6]
    cdef double rawy[6]
    cdef int nraw = 0, nr, k, n = 0, same_branch
    cdef Py_ssize_t pi, pj
    cdef const double* rp
    cdef const double* ro
    cdef double tmpx, tmpy
    cdef int a_, b_

    oflags[0] = 0
    if rj[9] > xlo:
        xlo = rj[9]
    if clip_lo > xlo:
        xlo = clip_lo
    if rj[10] < xhi:
        xhi = rj[10]
    if clip_hi < xhi:
        xhi = clip_hi
    xtol = _EPS * (1.0 + fabs(xlo) + fabs(xhi))
    if xlo > xhi + xtol:
        return 0

    if ri[0] == 0.0 and rj[0] == 0.0:
        dix = ri[3]
        diy = ri[4]
        djx = rj[3]
        djy = rj[4]
        denom = dix * djy - diy * djx
        rx = rj[1] - ri[1]
        ry = rj[2] - ri[2]
        scale = fabs(dix * djy) + fabs(diy * djx)
        if fabs(denom) <= 1e-14 * (scale + 1.0):
            cross = rx * djy - ry * djx
            if fabs(cross) <= _RES_REL * (fabs(rx) + fabs(ry) + 1.0):
                if xhi - xlo > _MERGE_REL * (1.0 + fabs(xlo)):
                    ox[0] = xlo
                    oy[0] = _eval_y_row(ri, xlo)
                    ox[1] = xhi
                    oy[1] = _eval_y_row(ri, xhi)
                    oflags[0] |= 1
                    return 2
                elif xhi >= xlo - xtol:
                    xm = 0.5 * (xlo + xhi)
                    ox[0] = xm
                    oy[0] = _eval_y_row(ri, xm)
                    return 1
            return 0
        ti = (rx * djy - ry * djx) / denom
        x = ri[1] + ti * dix
        y = ri[2] + ti * diy
        if xlo - xtol <= x <= xhi + xtol:
            ox[0] = x
            oy[0] = y
            return 1
        return 0

    if ri[0] == 1.0:
        pi = i
        pj = j
    else:
        pi = j
        pj = i
    rp = &P[pi, 0]
    ro = &P[pj, 0]
    ax = rp[1]; ay = rp[2]
    bx = rp[3]; by = rp[4]
    cx = rp[5]; cy = rp[6]
    qa = ro[11]; qb = ro[12]; qc = ro[13]
    qd = ro[14]; qe = ro[15]; qf = ro[16]
    c4 = qa * cx * cx + qb * cx * cy + qc * cy * cy
    c3 = qa * 2 * bx * cx + qb * (bx * cy + by * cx) + qc * 2 * by * cy
    c2 = (qa * (bx * bx + 2 * ax * cx) + qb * (ax * cy + ay * cx + bx * by)
          + qc * (by * by + 2 * ay * cy) + qd * cx + qe * cy)
    c1 = (qa * 2 * ax * bx + qb * (ax * by + ay * bx) + qc * 2 * ay * by
          + qd * bx + qe * by)
    c0 = qa * ax * ax + qb * ax * ay + qc * ay * ay + qd * ax + qe * ay + qf
    coeffs[0] = c4; coeffs[1] = c3; coeffs[2] = c2
    coeffs[3] = c1; coeffs[4] = c0
    maxc = 0.0
    for k in range(5):
        if fabs(coeffs[k]) > maxc:
            maxc = fabs(coeffs[k])
    qscale = 0.0
    for k in range(11, 17):
        if fabs(ro[k]) > qscale:
            qscale = fabs(ro[k])
    pscale = 1.0
    if fabs(ax) > pscale: pscale = fabs(ax)
    if fabs(ay) > pscale: pscale = fabs(ay)
    if fabs(bx) > pscale: pscale = fabs(bx)
    if fabs(by) > pscale: pscale = fabs(by)
    if fabs(cx) > pscale: pscale = fabs(cx)
    if fabs(cy) > pscale: pscale = fabs(cy)
    pscale = pscale * pscale
    if maxc <= 1e-12 * qscale * pscale:
        ylo_i = _eval_y_row(ri, xlo)
        ylo_j = _eval_y_row(rj, xlo)
        yhi_i = _eval_y_row(ri, xhi)
        yhi_j = _eval_y_row(rj, xhi)
        xm = 0.5 * (xlo + xhi)
        same_branch = fabs(_eval_y_row(ri, xm) - _eval_y_row(rj, xm)) <= _RES_REL * (1.0 + fabs(xm))
        if same_branch and xhi - xlo > _MERGE_REL * (1.0 + fabs(xlo)):
            ox[0] = xlo; oy[0] = ylo_i
            ox[1] = xhi; oy[1] = yhi_i
            oflags[0] |= 1
            return 2
        n = 0
        if fabs(ylo_i - ylo_j) <= _RES_REL * (1.0 + fabs(ylo_i)):
            ox[n] = xlo; oy[n] = ylo_i
            n += 1
        if xhi > xlo + xtol and fabs(yhi_i - yhi_j) <= _RES_REL * (1.0 + fabs(yhi_i)):
            ox[n] = xhi; oy[n] = yhi_i
            n += 1
        return n

    t0 = rp[7]
    t1 = rp[8]
    ttol = 1e-9 * (fabs(t1 - t0) + 1.0)
    ob2 = ro[3] * ro[3] + ro[4] * ro[4]
    otol = 1e-9 * (fabs(ro[8] - ro[7]) + 1.0)
    nr = _real_roots(coeffs, roots)
    for k in range(nr):
        t = roots[k]
        if t < t0 - ttol or t > t1 + ttol:
            continue
        x = ax + t * (bx + t * cx)
        y = ay + t * (by + t * cy)
        if x < xlo - xtol or x > xhi + xtol:
            continue
        to = ((x - ro[1]) * ro[3] + (y - ro[2]) * ro[4]) / ob2
        oxp = ro[1] + to * (ro[3] + to * ro[5])
        oyp = ro[2] + to * (ro[4] + to * ro[6])
        if to < ro[7] - otol or to > ro[8] + otol:
            continue
        if fabs(oxp - x) + fabs(oyp - y) > _RES_REL * (1.0 + fabs(x) + fabs(y)):
            continue
        rawx[nraw] = x
        rawy[nraw] = y
        nraw += 1
    # sort raw by (x, y)
    for a_ in range(1, nraw):
        tmpx = rawx[a_]
        tmpy = rawy[a_]
        b_ = a_ - 1
        while b_ >= 0 and (rawx[b_] > tmpx or (rawx[b_] == tmpx and rawy[b_] > tmpy)):
            rawx[b_ + 1] = rawx[b_]
            rawy[b_ + 1] = rawy[b_]
            b_ -= 1
        rawx[b_ + 1] = tmpx
        rawy[b_ + 1] = tmpy
    # dedupe into a small buffer, then keep extremes if more than two
    cdef double keep_x[6]
    cdef double keep_y[6]
    n = 0
    for k in range(nraw):
        x = rawx[k]
        y = rawy[k]
        if n > 0 and (fabs(x - keep_x[n - 1]) + fabs(y - keep_y[n - 1])
                      <= _MERGE_REL * (1.0 + fabs(x) + fabs(y))):
            continue
        keep_x[n] = x
        keep_y[n] = y
        n += 1
    if n > 2:
        keep_x[1] = keep_x[n - 1]
        keep_y[1] = keep_y[n - 1]
        n = 2
        oflags[0] |= 2
    for k in range(n):
        ox[k] = keep_x[k]
        oy[k] = keep_y[k]
    return n


def intersect_batch(double[:, ::1] P, int64_t[::1] ia, int64_t[::1] ib,
                    double[::1] clip_lo, double[::1] clip_hi):
    cdef Py_ssize_t m = ia.shape[0]
    cnt_np = np.zeros(m, dtype=np.uint8)
    px_np = np.full((m, 2), np.nan)
    py_np = np.full((m, 2), np.nan)
    flags_np = np.zeros(m, dtype=np.uint8)
    cdef uint8_t[::1] cnt = cnt_np
    cdef double[:, ::1] px = px_np
    cdef double[:, ::1] py = py_np
    cdef uint8_t[::1] flags = flags_np
    cdef Py_ssize_t k
    cdef double bx[2]
    cdef double by[2]
    cdef int f, n, j
    with nogil:
        for k in range(m):
            n = _intersect_core(P, ia[k], ib[k], clip_lo[k], clip_hi[k],
                                bx, by, &f)
            cnt[k] = n
            flags[k] = f
            for j in range(n):
                px[k, j] = bx[j]
                py[k, j] = by[j]
    return cnt_np, px_np, py_np, flags_np, m


cdef int _is_endpoint_of(const double* row, double x, double y, double tol) noexcept nogil:
    cdef double t, ex, ey
    cdef int k
    for k in range(2):
        t = row[7 + k]
        ex = row[1] + t * (row[3] + t * row[5])
        ey = row[2] + t * (row[4] + t * row[6])
        if fabs(ex - x) <= tol and fabs(ey - y) <= tol:
            return 1
    return 0


def validate_pairs_batch(double[:, ::1] P, int64_t[::1] ia, int64_t[::1] ib,
                         double endpoint_tol):
    cdef Py_ssize_t m = ia.shape[0]
    bad_np = np.zeros(m, dtype=np.uint8)
    cdef uint8_t[::1] bad = bad_np
    cdef Py_ssize_t k
    cdef double bx[2]
    cdef double by[2]
    cdef int f, n, j
    cdef double tol
    with nogil:
        for k in range(m):
            n = _intersect_core(P, ia[k], ib[k], -INFINITY, INFINITY, bx, by, &f)
            if f & 2 or f & 1:
                bad[k] = 1
                continue
            for j in range(n):
                tol = endpoint_tol * (1.0 + fabs(bx[j]) + fabs(by[j]))
                if not (_is_endpoint_of(&P[ia[k], 0], bx[j], by[j], tol)
                        and _is_endpoint_of(&P[ib[k], 0], bx[j], by[j], tol)):
                    bad[k] = 1
                    break
    return bad_np


# ---------------------------------------------------------------------------
# site distances
# ---------------------------------------------------------------------------

cdef inline double _site_dist(double[:, ::1] S, Py_ssize_t si, double x, double y) noexcept nogil:
    cdef double ax = S[si, 1]
    cdef double ay = S[si, 2]
    cdef double dx = S[si, 3] - ax
    cdef double dy = S[si, 4] - ay
    cdef double L2 = dx * dx + dy * dy
    cdef double t
    if L2 > 0.0:
        t = ((x - ax) * dx + (y - ay) * dy) / L2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        ax += t * dx
        ay += t * dy
    return hypot(x - ax, y - ay)


def site_dist_batch(double[:, ::1] S, int64_t[::1] si,
                    double[::1] px, double[::1] py):
    cdef Py_ssize_t m = px.shape[0]
    out_np = np.empty(m)
    cdef double[::1] out = out_np
    cdef Py_ssize_t k
    with nogil:
        for k in range(m):
            out[k] = _site_dist(S, si[k], px[k], py[k])
    return out_np


def nearest_site_batch(double[:, ::1] S, double[::1] px, double[::1] py,
                       int64_t excl1=-1, int64_t excl2=-1):
    cdef Py_ssize_t m = px.shape[0]
    cdef Py_ssize_t ns = S.shape[0]
    dist_np = np.full(m, np.inf)
    idx_np = np.full(m, -1, dtype=np.int64)
    cdef double[::1] dist = dist_np
    cdef int64_t[::1] idx = idx_np
    cdef Py_ssize_t k, s
    cdef double best, d
    cdef int64_t bi
    with nogil:
        for k in range(m):
            best = INFINITY
            bi = -1
            for s in range(ns):
                if s == excl1 or s == excl2:
                    continue
                d = _site_dist(S, s, px[k], py[k])
                if d < best:
                    best = d
                    bi = s
            dist[k] = best
            idx[k] = bi
    return dist_np, idx_np


def nearest_site_excl_batch(double[:, ::1] S, double[::1] px, double[::1] py,
                            int64_t[::1] e1, int64_t[::1] e2):
    cdef Py_ssize_t m = px.shape[0]
    cdef Py_ssize_t ns = S.shape[0]
    dist_np = np.full(m, np.inf)
    idx_np = np.full(m, -1, dtype=np.int64)
    cdef double[::1] dist = dist_np
    cdef int64_t[::1] idx = idx_np
    cdef Py_ssize_t k, s
    cdef double best, d
    cdef int64_t bi
    with nogil:
        for k in range(m):
            best = INFINITY
            bi = -1
            for s in range(ns):
                if s == e1[k] or s == e2[k]:
                    continue
                d = _site_dist(S, s, px[k], py[k])
                if d < best:
                    best = d
                    bi = s
            dist[k] = best
            idx[k] = bi
    return dist_np, idx_np


# ---------------------------------------------------------------------------
# pipeline step kernels
# ---------------------------------------------------------------------------

def step2_batch(double[:, ::1] P, int64_t[::1] cb_flat,
                int64_t[::1] a_idx, int64_t[::1] cb_start, int64_t[::1] cb_len,
                double[::1] xq, double[::1] slab_lo, double[::1] slab_hi):
    cdef Py_ssize_t m = a_idx.shape[0]
    found_np = np.zeros(m, dtype=np.uint8)
    cx_np = np.full(m, np.nan)
    cy_np = np.full(m, np.nan)
    cb_np = np.full(m, -1, dtype=np.int64)
    cdef uint8_t[::1] found = found_np
    cdef double[::1] cx = cx_np
    cdef double[::1] cy = cy_np
    cdef int64_t[::1] cbv = cb_np
    cdef int64_t ops = 0
    cdef Py_ssize_t k
    cdef int64_t n, base, lo, hi, mid, p0, p1, pos, a, b, best_b
    cdef double x, ya, yb, ytol, best_x, best_y
    cdef double bx[2]
    cdef double by[2]
    cdef int f, nn, j
    with nogil:
        for k in range(m):
            n = cb_len[k]
            if n == 0:
                continue
            a = a_idx[k]
            x = xq[k]
            ya = _eval_y_row(&P[a, 0], x)
            base = cb_start[k]
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) // 2
                yb = _eval_y_row(&P[cb_flat[base + mid], 0], x)
                ops += 1
                if yb < ya:
                    lo = mid + 1
                else:
                    hi = mid
            ytol = _EPS * (1.0 + fabs(ya))
            p0 = lo - 1
            p1 = lo
            while p0 - 1 >= 0 and fabs(_eval_y_row(&P[cb_flat[base + p0], 0], x) - ya) <= ytol:
                p0 -= 1
                ops += 1
                if lo - p0 > 4:
                    break
            while p1 + 1 < n and fabs(_eval_y_row(&P[cb_flat[base + p1], 0], x) - ya) <= ytol:
                p1 += 1
                ops += 1
                if p1 - lo > 4:
                    break
            best_x = INFINITY
            best_y = NAN
            best_b = -1
            pos = p0
            if pos < 0:
                pos = 0
            while pos < n and pos <= p1:
                b = cb_flat[base + pos]
                nn = _intersect_core(P, a, b, slab_lo[k], slab_hi[k], bx, by, &f)
                ops += 1
                for j in range(nn):
                    if bx[j] < best_x - 1e-15 or (bx[j] <= best_x and b < best_b):
                        best_x = bx[j]
                        best_y = by[j]
                        best_b = b
                pos += 1
            if best_b >= 0:
                found[k] = 1
                cx[k] = best_x
                cy[k] = best_y
                cbv[k] = best_b
    return found_np, cx_np, cy_np, cb_np, ops


cdef int _cross_state(double[:, ::1] P, int64_t b, int64_t red,
                      double lo, double hi,
                      double* x1, double* x2) noexcept nogil:
    """count >= 1: in-window crossings (x1, x2 filled); count == 0: x1 holds
    +1 if b is above the red curve at the window midpoint, else -1."""
    cdef double bx[2]
    cdef double by[2]
    cdef int f, n
    cdef double mx, d
    n = _intersect_core(P, b, red, lo, hi, bx, by, &f)
    if n > 0:
        x1[0] = bx[0]
        x2[0] = bx[n - 1]
        return n
    mx = 0.5 * (lo + hi)
    d = _eval_y_row(&P[b, 0], mx) - _eval_y_row(&P[red, 0], mx)
    x1[0] = 1.0 if d >= 0.0 else -1.0
    return 0


cdef int _fstate(double[:, ::1] P, int64_t[::1] ca_flat, int64_t base,
                 int64_t b, int64_t r, double lo, double hi) noexcept nogil:
    cdef double x1, x2
    cdef int c = _cross_state(P, b, ca_flat[base + r], lo, hi, &x1, &x2)
    if c:
        return 0
    return 1 if x1 > 0.0 else -1


cdef int _rank_range(double[:, ::1] P, int64_t[::1] ca_flat, int64_t base,
                     int64_t k, int64_t b, double lo, double hi,
                     int64_t* r1, int64_t* r2, int64_t* ops) noexcept nogil:
    cdef int64_t l = 0
    cdef int64_t h = k
    cdef int64_t mid
    while l < h:
        mid = (l + h) // 2
        ops[0] += 1
        if _fstate(P, ca_flat, base, b, mid, lo, hi) <= 0:
            h = mid
        else:
            l = mid + 1
    ops[0] += 1
    if l == k or _fstate(P, ca_flat, base, b, l, lo, hi) < 0:
        r1[0] = -1
        r2[0] = -1
        return 0
    r1[0] = l
    h = k - 1
    while l < h:
        mid = (l + h + 1) // 2
        ops[0] += 1
        if _fstate(P, ca_flat, base, b, mid, lo, hi) >= 0:
            l = mid
        else:
            h = mid - 1
    r2[0] = l
    return 1


def step31_batch(double[:, ::1] P, int64_t[::1] ca_flat,
                 int64_t[::1] b_idx, int64_t[::1] ca_start, int64_t[::1] ca_len,
                 double[::1] lo, double[::1] hi):
    cdef Py_ssize_t m = b_idx.shape[0]
    npc_np = np.zeros(m, dtype=np.uint8)
    plo_np = np.full((m, 3), np.nan)
    phi_np = np.full((m, 3), np.nan)
    rlo_np = np.full((m, 3), -1, dtype=np.int64)
    rhi_np = np.full((m, 3), -1, dtype=np.int64)
    ptag_np = np.zeros((m, 3), dtype=np.uint8)
    anom_np = np.zeros(m, dtype=np.uint8)
    cdef uint8_t[::1] npc = npc_np
    cdef double[:, ::1] plo = plo_np
    cdef double[:, ::1] phi = phi_np
    cdef int64_t[:, ::1] rlo = rlo_np
    cdef int64_t[:, ::1] rhi = rhi_np
    cdef uint8_t[:, ::1] ptag = ptag_np
    cdef uint8_t[::1] anom = anom_np
    cdef int64_t ops = 0
    cdef Py_ssize_t it
    cdef int64_t b, base, k, r1, r2, pr1, pr2
    cdef double wlo, whi, a1x1, a1x2, a2x1, a2x2, wtol, tmp, a_lo, a_hi
    cdef int c1, c2, tag, nsp, ci, ncut, n_out
    cdef double splits[2]
    cdef double cuts[4]
    with nogil:
        for it in range(m):
            b = b_idx[it]
            base = ca_start[it]
            k = ca_len[it]
            wlo = lo[it]
            whi = hi[it]
            if k == 0 or whi - wlo <= 0.0:
                continue
            if not _rank_range(P, ca_flat, base, k, b, wlo, whi, &r1, &r2, &ops):
                continue
            c1 = _cross_state(P, b, ca_flat[base + r1], wlo, whi, &a1x1, &a1x2)
            c2 = _cross_state(P, b, ca_flat[base + r2], wlo, whi, &a2x1, &a2x2)
            ops += 2
            nsp = 0
            tag = 0
            if r1 == r2:
                if c1 == 2:
                    tag = 2
                    splits[0] = 0.5 * (a1x1 + a1x2)
                    nsp = 1
            elif c1 == 1 and c2 == 1:
                tag = 0
            elif c1 == 1 or c2 == 1:
                tag = 1
                if c1 == 2:
                    splits[0] = 0.5 * (a1x1 + a1x2)
                else:
                    splits[0] = 0.5 * (a2x1 + a2x2)
                nsp = 1
            else:
                if a1x2 < a2x1 or a2x2 < a1x1:
                    tag = 3
                    splits[0] = 0.5 * (a1x1 + a1x2)
                    splits[1] = 0.5 * (a2x1 + a2x2)
                    nsp = 2
                elif (a1x1 < a2x1 and a2x2 < a1x2) or (a2x1 < a1x1 and a1x2 < a2x2):
                    tag = 2
                    if a1x1 < a2x1:
                        splits[0] = 0.5 * (a2x1 + a2x2)
                    else:
                        splits[0] = 0.5 * (a1x1 + a1x2)
                    nsp = 1
                else:
                    anom[it] = 1
                    tag = 3
                    splits[0] = 0.5 * (a1x1 + a1x2)
                    splits[1] = 0.5 * (a2x1 + a2x2)
                    nsp = 2
            if nsp == 2 and splits[1] < splits[0]:
                tmp = splits[0]
                splits[0] = splits[1]
                splits[1] = tmp
            wtol = _EPS * (1.0 + fabs(wlo) + fabs(whi))
            cuts[0] = wlo
            ncut = 1
            for ci in range(nsp):
                if splits[ci] > cuts[ncut - 1] + wtol and splits[ci] < whi - wtol:
                    cuts[ncut] = splits[ci]
                    ncut += 1
            cuts[ncut] = whi
            ncut += 1
            n_out = 0
            for ci in range(ncut - 1):
                a_lo = cuts[ci]
                a_hi = cuts[ci + 1]
                if ncut == 2:
                    pr1 = r1
                    pr2 = r2
                else:
                    if not _rank_range(P, ca_flat, base, k, b, a_lo, a_hi,
                                       &pr1, &pr2, &ops):
                        continue
                if pr1 < 0:
                    continue
                plo[it, n_out] = a_lo
                phi[it, n_out] = a_hi
                rlo[it, n_out] = pr1
                rhi[it, n_out] = pr2
                ptag[it, n_out] = tag
                n_out += 1
            npc[it] = n_out
    return npc_np, plo_np, phi_np, rlo_np, rhi_np, ptag_np, anom_np, ops


def it_assign_batch(int64_t[::1] refs_flat, int64_t[::1] ref_start,
                    int64_t[::1] ref_len, int64_t[::1] lo, int64_t[::1] hi):
    cdef Py_ssize_t m = lo.shape[0]
    pos_np = np.full(m, -1, dtype=np.int64)
    cdef int64_t[::1] pos = pos_np
    cdef int64_t ops = 0
    cdef Py_ssize_t k
    cdef int64_t base, s, e, mid, r
    with nogil:
        for k in range(m):
            base = ref_start[k]
            s = 0
            e = ref_len[k]
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
    return pos_np, ops


def step35_batch(double[:, ::1] P, int64_t[::1] a_idx, int64_t[::1] a_rank,
                 int64_t[::1] tr_id, int64_t[::1] tr_ref_start,
                 int64_t[::1] tr_ref_len, int64_t[::1] refs_flat,
                 int64_t[::1] node_lo_start, int64_t[::1] node_lo_len,
                 int64_t[::1] list_lo,
                 int64_t[::1] node_hi_start, int64_t[::1] node_hi_len,
                 int64_t[::1] list_hi,
                 int64_t[::1] iv_lo, int64_t[::1] iv_hi, int64_t[::1] iv_owner,
                 double[::1] iv_plo, double[::1] iv_phi):
    cdef Py_ssize_t m = a_idx.shape[0]
    found_np = np.zeros(m, dtype=np.uint8)
    cx_np = np.full(m, np.nan)
    cy_np = np.full(m, np.nan)
    cb_np = np.full(m, -1, dtype=np.int64)
    hits_np = np.zeros(m, dtype=np.int32)
    maxnode_np = np.zeros(m, dtype=np.int32)
    cdef uint8_t[::1] found = found_np
    cdef double[::1] cx = cx_np
    cdef double[::1] cy = cy_np
    cdef int64_t[::1] cbv = cb_np
    cdef int32_t[::1] hits = hits_np
    cdef int32_t[::1] maxnode = maxnode_np
    cdef int64_t ops = 0
    cdef Py_ssize_t it
    cdef int64_t tr, a, q, base, s, e, mid, gp, r, st, j, ivx, bo, best_b
    cdef int node_hits, nn, jj
    cdef double best_x, best_y
    cdef double bx[2]
    cdef double by[2]
    cdef int f
    with nogil:
        for it in range(m):
            tr = tr_id[it]
            if tr < 0:
                continue
            a = a_idx[it]
            q = a_rank[it]
            base = tr_ref_start[tr]
            s = 0
            e = tr_ref_len[tr]
            best_x = INFINITY
            best_y = NAN
            best_b = -1
            while s < e:
                mid = (s + e) // 2
                gp = base + mid
                r = refs_flat[gp]
                ops += 1
                node_hits = 0
                if q == r:
                    st = node_lo_start[gp]
                    for j in range(node_lo_len[gp]):
                        ivx = list_lo[st + j]
                        node_hits += 1
                        nn = _intersect_core(P, a, iv_owner[ivx], iv_plo[ivx],
                                             iv_phi[ivx], bx, by, &f)
                        ops += 1
                        bo = iv_owner[ivx]
                        for jj in range(nn):
                            if bx[jj] < best_x - 1e-15 or (bx[jj] <= best_x and bo < best_b):
                                best_x = bx[jj]
                                best_y = by[jj]
                                best_b = bo
                    s = e
                elif q < r:
                    st = node_lo_start[gp]
                    for j in range(node_lo_len[gp]):
                        ivx = list_lo[st + j]
                        ops += 1
                        if iv_lo[ivx] > q:
                            break
                        node_hits += 1
                        nn = _intersect_core(P, a, iv_owner[ivx], iv_plo[ivx],
                                             iv_phi[ivx], bx, by, &f)
                        ops += 1
                        bo = iv_owner[ivx]
                        for jj in range(nn):
                            if bx[jj] < best_x - 1e-15 or (bx[jj] <= best_x and bo < best_b):
                                best_x = bx[jj]
                                best_y = by[jj]
                                best_b = bo
                    e = mid
                else:
                    st = node_hi_start[gp]
                    for j in range(node_hi_len[gp]):
                        ivx = list_hi[st + j]
                        ops += 1
                        if iv_hi[ivx] < q:
                            break
                        node_hits += 1
                        nn = _intersect_core(P, a, iv_owner[ivx], iv_plo[ivx],
                                             iv_phi[ivx], bx, by, &f)
                        ops += 1
                        bo = iv_owner[ivx]
                        for jj in range(nn):
                            if bx[jj] < best_x - 1e-15 or (bx[jj] <= best_x and bo < best_b):
                                best_x = bx[jj]
                                best_y = by[jj]
                                best_b = bo
                    s = mid + 1
                hits[it] += node_hits
                if node_hits > maxnode[it]:
                    maxnode[it] = node_hits
            if best_b >= 0:
                found[it] = 1
                cx[it] = best_x
                cy[it] = best_y
                cbv[it] = best_b
    return found_np, cx_np, cy_np, cb_np, hits_np, maxnode_np, ops
