"""Instance I/O and seeded generators.

File format: one record per line, ``L x1 y1 x2 y2`` for a line segment and
``PAR fx fy dx dy ux uy t0 t1`` for a parabola arc (focus, directrix point,
directrix unit direction, parameter range).  Blank lines and ``#`` comments
are ignored.  A single file carries the two sets in ``[A]`` / ``[B]``
sections; a file without section headers is one set.
"""

import math

import numpy as np

from .first_last import validate_sets
from .geometry import Curve, ValidationError, parabola_from_poly


def _fmt(x):
    return format(float(x), ".17g")


def format_set(curves):
    lines = []
    for c in curves:
        if c.kind == 0:
            lines.append(f"L {_fmt(c.p1.x)} {_fmt(c.p1.y)} {_fmt(c.p2.x)} {_fmt(c.p2.y)}")
        else:
            lines.append(
                "PAR " + " ".join(_fmt(v) for v in
                                  (c.focus.x, c.focus.y, c.d_point.x, c.d_point.y,
                                   c.d_dir.x, c.d_dir.y, c.t_lo, c.t_hi)))
    return "\n".join(lines)


def format_instance(A, B):
    return f"[A]\n{format_set(A)}\n[B]\n{format_set(B)}\n"


def _parse_record(tok, lineno, idx):
    try:
        vals = [float(v) for v in tok[1:]]
    except ValueError as exc:
        raise ValidationError(f"line {lineno}: bad number ({exc})") from None
    if tok[0] == "L":
        if len(vals) != 4:
            raise ValidationError(f"line {lineno}: L needs 4 numbers")
        return Curve.line((vals[0], vals[1]), (vals[2], vals[3]), id=idx)
    if tok[0] == "PAR":
        if len(vals) != 8:
            raise ValidationError(f"line {lineno}: PAR needs 8 numbers")
        return Curve.parabola((vals[0], vals[1]), (vals[2], vals[3]),
                              (vals[4], vals[5]), vals[6], vals[7], id=idx)
    raise ValidationError(f"line {lineno}: unknown record {tok[0]!r}")


def parse_instance(text, validate=True):
    """Parse ``[A]``/``[B]`` sections into two curve lists."""
    sets = {"A": [], "B": []}
    cur = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("[A]", "[B]"):
            cur = line[1]
            continue
        if cur is None:
            raise ValidationError(f"line {lineno}: record before [A]/[B] header")
        tok = line.split()
        try:
            sets[cur].append(_parse_record(tok, lineno, len(sets[cur])))
        except ValidationError as exc:
            if "line" in str(exc):
                raise
            raise ValidationError(f"line {lineno}: {exc}") from None
    if validate:
        validate_sets(sets["A"], sets["B"])
    return sets["A"], sets["B"]


def parse_set(text, validate=True):
    """Parse a single-set file (no section headers)."""
    curves = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("[A]", "[B]"):
            raise ValidationError(f"line {lineno}: unexpected section header")
        curves.append(_parse_record(line.split(), lineno, len(curves)))
    if validate:
        validate_sets(curves, [])
    return curves


# ---------------------------------------------------------------------------
# generators (deterministic per seed)
# ---------------------------------------------------------------------------

def _band_curve(rng, idx, base, amp, x0, x1, par_frac, slope=0.0):
    """A curve confined to [base-amp, base+amp] around y = base + slope*x."""
    if rng.random() < par_frac:
        half = 0.5 * (x1 - x0)
        xm = x0 + half
        alpha = rng.uniform(0.15, 0.5) * amp / (half * half)
        if rng.random() < 0.5:
            alpha = -alpha
        beta = rng.uniform(-0.25, 0.25) * amp / half
        delta = rng.uniform(-0.2, 0.2) * amp
        # y = alpha x^2 + (beta + slope - 2 alpha xm) x + const
        a = alpha
        b = beta + slope - 2.0 * alpha * xm
        c = base + delta + alpha * xm * xm - beta * xm
        return parabola_from_poly(a, b, c, x0, x1, id=idx)
    y0 = base + slope * x0 + rng.uniform(-0.4, 0.4) * amp
    y1 = base + slope * x1 + rng.uniform(-0.4, 0.4) * amp
    return Curve.line((x0, y0), (x1, y1), id=idx)


def gen_random_disjoint(n, rng, par_frac=0.3):
    """Mixed lines and parabola arcs in disjoint same-set bands; reds are
    horizontal-ish, blues slanted, so cross-set intersections abound."""
    n_red = max(1, int(round(n * rng.uniform(0.35, 0.65))))
    n_blue = max(1, n - n_red)
    W = 20.0 + 0.8 * n
    gap = 2.0
    amp = 0.55
    A = []
    for i in range(n_red):
        x0 = rng.uniform(0.0, W - 4.0)
        max_len = min(0.8 * W if rng.random() < 0.4 else 14.0, W - x0)
        x1 = x0 + rng.uniform(3.0, max(3.5, max_len))
        A.append(_band_curve(rng, i, i * gap, amp, x0, x1, par_frac))
    slope = rng.uniform(0.3, 1.1) * (1.0 if rng.random() < 0.5 else -1.0)
    c0 = -slope * W * 0.5 + n_red * gap * 0.5
    B = []
    for j in range(n_blue):
        base = c0 + (j - n_blue / 2.0) * gap
        # window where this blue's baseline passes through the red stack
        xa = (-2.0 - base) / slope
        xb = (n_red * gap + 2.0 - base) / slope
        if xb < xa:
            xa, xb = xb, xa
        xa = max(0.0, xa)
        xb = min(W, xb)
        if xb - xa < 4.0:
            x0 = rng.uniform(0.0, W - 4.0)
        else:
            x0 = rng.uniform(xa, xb - 4.0)
        x1 = x0 + rng.uniform(3.0, min(14.0, W - x0))
        B.append(_band_curve(rng, j, base, amp, x0, x1, par_frac, slope=slope))
    return A, B


def gen_grid_crossing(n, rng):
    """n curves forming a rows x cols crossing grid: horizontal reds crossed
    by steep parallel blues; rows*cols >= n crossings for n >= 4."""
    rows = max(1, n // 2)
    cols = max(1, n - rows)
    A = []
    for i in range(rows):
        j1 = rng.uniform(-1e-3, 1e-3)
        j2 = rng.uniform(-1e-3, 1e-3)
        A.append(Curve.line((-1.0, i + j1), (0.6 * cols + 1.0, i + j2), id=i))
    B = []
    for j in range(cols):
        x = 0.6 * j + rng.uniform(-1e-3, 1e-3)
        B.append(Curve.line((x, -1.0), (x + 0.5, float(rows)), id=j))
    return A, B


def _disjoint_unit(rng, base, u, ids):
    """Fig-4(d) family: a blue line crossing two red parabolas in disjoint
    x-pairs (reds never cross: their difference is positive definite)."""
    s = rng.uniform(0.6, 1.4)
    a1 = parabola_from_poly(-s, s * (2 * u + 1), base - s * u * (u + 1),
                            u - 0.5, u + 3.5, id=ids[0])
    a2 = parabola_from_poly(s, -s * (2 * u + 5), base + s * (u + 2) * (u + 3),
                            u - 0.5, u + 3.5, id=ids[1])
    blue = Curve.line((u - 0.4, base), (u + 3.4, base), id=ids[2])
    return [a1, a2], [blue]


def _dip_unit(rng, base, u, m, ids):
    """A blue parabola dipping through m stacked horizontal reds (Fig-4 b/c
    cases depending on how the window clips the top crossings)."""
    reds = [Curve.line((u - 4.0, base + i), (u + 4.0, base + i), id=ids[i])
            for i in range(m)]
    depth = rng.uniform(0.3, 0.9)
    gamma = rng.uniform(0.3, 1.2)
    half = math.sqrt((m - 1 + depth + 0.5) / gamma)
    w_lo = -half * rng.uniform(0.55, 1.0)
    w_hi = half * rng.uniform(0.55, 1.0)
    # vertex sits depth below the lowest red: y = gamma (x-u)^2 + base - depth
    blue = parabola_from_poly(gamma, -2.0 * gamma * u,
                              base - depth + gamma * u * u,
                              u + w_lo, u + w_hi, id=ids[m])
    return reds, [blue]


def gen_nested_parabola(n, rng):
    """Stress instance exercising the once-twice / twice-nested /
    twice-disjoint splitting cases."""
    A = []
    B = []
    base = 0.0
    u = 0.0
    while len(A) + len(B) < n:
        kind = rng.integers(0, 3)
        if kind == 0:
            reds, blues = _disjoint_unit(
                rng, base, u, (len(A), len(A) + 1, len(B)))
        elif kind == 1:
            m = int(rng.integers(2, 5))
            ids = list(range(len(A), len(A) + m)) + [len(B)]
            reds, blues = _dip_unit(rng, base, u, m, ids)
        else:
            # steep line crossing a stack once each (once-once case)
            m = int(rng.integers(2, 5))
            reds = [Curve.line((u - 3.0, base + i), (u + 3.0, base + i),
                               id=len(A) + i) for i in range(m)]
            x = u + rng.uniform(-1.5, 1.0)
            blues = [Curve.line((x, base - 0.7), (x + 0.5, base + m - 0.3),
                                id=len(B))]
        A.extend(reds)
        B.extend(blues)
        base += 12.0
        u += 11.0
    return A, B


KINDS = ("random-disjoint", "grid-crossing", "nested-parabola")


def generate(kind, n, seed):
    """Deterministic well-behaved instance; same seed, same instance."""
    if n <= 0:
        raise ValidationError("n must be positive")
    rng = np.random.default_rng(seed)
    if kind == "random-disjoint":
        return gen_random_disjoint(n, rng)
    if kind == "grid-crossing":
        return gen_grid_crossing(n, rng)
    if kind == "nested-parabola":
        return gen_nested_parabola(n, rng)
    raise ValidationError(f"unknown kind {kind!r} (choose from {KINDS})")


def gen_segment_set(n, rng, extent=20.0, min_len=0.4, max_len=3.0,
                    chain_frac=0.3):
    """Non-crossing line segments (with some polyline chains sharing
    endpoints) for the Hausdorff/Voronoi pipeline; rejection sampled."""
    segs = []

    def ok(c):
        for s in segs:
            if c.x_max < s.x_min or s.x_max < c.x_min:
                continue
            from .geometry import curves_cross
            if curves_cross(c, s):
                return False
        return True

    guard = 0
    while len(segs) < n and guard < 200 * n:
        guard += 1
        x1 = rng.uniform(0, extent)
        y1 = rng.uniform(0, extent)
        ang = rng.uniform(0, math.pi)
        if abs(math.cos(ang)) < 0.15:
            continue
        ln = rng.uniform(min_len, max_len)
        x2 = x1 + ln * math.cos(ang)
        y2 = y1 + ln * math.sin(ang)
        try:
            c = Curve.line((x1, y1), (x2, y2), id=len(segs))
        except ValidationError:
            continue
        if not ok(c):
            continue
        segs.append(c)
        # occasionally grow a chain from the last endpoint
        while (len(segs) < n and rng.random() < chain_frac):
            bx, by = segs[-1].p2
            ang2 = rng.uniform(0.25, math.pi - 0.25)
            ln2 = rng.uniform(min_len, max_len)
            nx, ny = bx + ln2 * math.cos(ang2), by + ln2 * math.sin(ang2)
            try:
                c2 = Curve.line((bx, by), (nx, ny), id=len(segs))
            except ValidationError:
                break
            if not ok(c2):
                break
            segs.append(c2)
    if len(segs) < n:
        raise ValidationError("could not place the requested segment count")
    return segs
