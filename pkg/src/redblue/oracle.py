"""Brute-force references.

Sequential all-pairs / dense-sampling baselines used to verify the pipeline;
they share nothing with it beyond the geometry primitives.
"""

import math

import numpy as np

from . import kernels
from .first_last import CandidatePoint, Counters, FirstLastResult
from .geometry import GeometryError, Point, pack_curves, pack_sites


def oracle_report(red, blue):
    """Per red id, the full x-sorted list of (Point, blue_id) intersections."""
    report = {c.id: [] for c in red}
    if not red or not blue:
        return report
    P = pack_curves(list(red) + list(blue))
    nr = len(red)
    nb = len(blue)
    ii = np.repeat(np.arange(nr, dtype=np.int64), nb)
    jj = np.tile(np.arange(nr, nr + nb, dtype=np.int64), nr)
    ninf = np.full(len(ii), -math.inf)
    pinf = np.full(len(ii), math.inf)
    for s in range(0, len(ii), 1 << 20):
        e = min(len(ii), s + (1 << 20))
        cnt, px, py, flags, _ = kernels.intersect_batch(
            P, ii[s:e], jj[s:e], ninf[s:e], pinf[s:e])
        if (flags & kernels.FLAG_TOO_MANY).any():
            k = int(np.nonzero(flags & kernels.FLAG_TOO_MANY)[0][0])
            raise GeometryError(
                f"curves {red[ii[s + k]].id} and {blue[jj[s + k] - nr].id} "
                "intersect more than twice")
        for k in np.nonzero(cnt)[0]:
            rid = red[ii[s + k]].id
            bid = blue[jj[s + k] - nr].id
            for j in range(cnt[k]):
                report[rid].append((Point(float(px[k, j]), float(py[k, j])), bid))
    for rid in report:
        report[rid].sort(key=lambda e: (e[0].x, e[1]))
    return report


def brute_first_last(red, blue):
    """All |red| x |blue| pairs tested; min/max x per red curve."""
    report = oracle_report(red, blue)
    firsts = {}
    lasts = {}
    for rid, entries in report.items():
        if not entries:
            continue
        p, bid = entries[0]
        firsts[rid] = CandidatePoint(rid, p, bid, "oracle")
        p, bid = max(entries, key=lambda e: (e[0].x, -e[1]))
        lasts[rid] = CandidatePoint(rid, p, bid, "oracle")
    return FirstLastResult(firsts=firsts, lasts=lasts, counters=Counters())


def brute_nearest(p, sites):
    """Linear-scan nearest site; ties broken by site id (list order)."""
    if not sites:
        raise GeometryError("empty site list")
    S = pack_sites(sites)
    d, idx = kernels.nearest_site_batch(S, np.array([float(p[0])]),
                                        np.array([float(p[1])]))
    return sites[int(idx[0])], float(d[0])


def sample_segments(P_curves, delta):
    """Points every <= delta of arc length along each segment, endpoints
    always included."""
    xs = []
    ys = []
    for c in P_curves:
        (x1, y1), (x2, y2) = c.endpoints()
        length = math.hypot(x2 - x1, y2 - y1)
        k = max(1, int(math.ceil(length / delta)))
        ts = np.linspace(0.0, 1.0, k + 1)
        xs.append(x1 + ts * (x2 - x1))
        ys.append(y1 + ts * (y2 - y1))
    return np.concatenate(xs), np.concatenate(ys)


def sampled_directed_hausdorff(P_curves, Q_sites, delta):
    """Sampled lower bound: sampled <= exact <= sampled + delta/2 (distance
    to Q is 1-Lipschitz along P)."""
    if delta <= 0.0:
        raise GeometryError("delta must be positive")
    if not P_curves or not Q_sites:
        raise GeometryError("empty input set")
    px, py = sample_segments(P_curves, delta)
    S = pack_sites(Q_sites)
    d, _ = kernels.nearest_site_batch(S, px, py)
    return float(d.max())
