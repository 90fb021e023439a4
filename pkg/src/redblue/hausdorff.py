"""Directed and undirected Hausdorff distance for two sets of
non-crossing line segments.

Candidates for the directed distance d_H(P, Q) are the endpoints of P plus
the critical points: per Voronoi edge of Q, the first and last intersection
with P along the edge (the first-last engine with red = edges, blue = P).
Extra candidates from x-monotone edge splitting are harmless: every
candidate lies on P, so its distance to Q never exceeds the true maximum.

The whole computation runs in the rotation frame chosen by the Voronoi
builder (P is rotated along with Q); distances are rotation invariant and
the witness is rotated back for reporting.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, voronoi
from .first_last import first_last, validate_sets
from .geometry import GeometryError, Point, rotate_point

ENDPOINT = "endpoint"
CRITICAL = "critical-point"


@dataclass(frozen=True)
class HausdorffResult:
    value: float
    witness: Point
    direction: str  # "P->Q" | "Q->P" | "undirected"
    witness_kind: str  # "endpoint" | "critical-point"
    n_endpoint_candidates: int = 0
    n_critical_candidates: int = 0
    angle: float = 0.0
    max_site_discrepancy: float = 0.0

    def record(self):
        return "\t".join([
            format(self.value, ".12g"), format(self.witness.x, ".12g"),
            format(self.witness.y, ".12g"), self.direction, self.witness_kind,
            str(self.n_endpoint_candidates), str(self.n_critical_candidates)])


def critical_points(P, edges, validate=True, workers=1):
    """Extreme intersection points of P with each x-monotone Voronoi edge
    piece (at most two per piece)."""
    pts = [p for p, _ in _critical_with_sites(P, edges, validate, workers)]
    return pts


def _critical_with_sites(P, edges, validate, workers):
    reds = [e.curve.with_id(k) for k, e in enumerate(edges)]
    if validate:
        validate_sets(reds, P, endpoint_tol=1e-6)
    if not reds or not P:
        return []
    # trimmed edge endpoints coincide only to construction accuracy, so the
    # shared-endpoint tolerance is looser than for user input
    res = first_last(reds, P, workers=workers, validate=False,
                     endpoint_tol=1e-6)
    out = []
    for k, e in enumerate(edges):
        f = res.first_of(k)
        l = res.last_of(k)
        if f is None:
            continue
        out.append((f.point, e.s1))
        if (abs(l.point.x - f.point.x) > 1e-12
                or abs(l.point.y - f.point.y) > 1e-12):
            out.append((l.point, e.s1))
    return out


def directed_hausdorff(P, Q, workers=1, debug_nearest=True):
    """max over p in P of the distance to the nearest point of Q, with the
    witness point where the maximum is attained."""
    if not P or not Q:
        raise GeometryError("empty input set")
    if any(c.kind != 0 for c in P) or any(c.kind != 0 for c in Q):
        raise GeometryError("Hausdorff input sets must be line segments")
    validate_sets(P, Q)
    dia = voronoi.build_voronoi(Q, workers=workers, extra_curves=P)
    P_rot = dia.rotated_extra
    S = dia.S
    xlo, xhi, ylo, yhi = dia.box
    ex = []
    ey = []
    for c in P_rot:
        for p in c.endpoints():
            ex.append(p.x)
            ey.append(p.y)
    ex = np.array(ex)
    ey = np.array(ey)
    if (ex < xlo).any() or (ex > xhi).any() or (ey < ylo).any() or (ey > yhi).any():
        raise GeometryError(
            "P leaves the 3x clipping box of Q; the truncated Voronoi "
            "skeleton is only valid for P inside it")
    ed, _ = kernels.nearest_site_batch(S, ex, ey)

    crit = _critical_with_sites(P_rot, dia.edges, False, workers)
    if crit:
        cx = np.array([p.x for p, _ in crit])
        cy = np.array([p.y for p, _ in crit])
        cs = np.array([s for _, s in crit], dtype=np.int64)
        cd = kernels.site_dist_batch(S, cs, cx, cy)
        discrepancy = 0.0
        if debug_nearest:
            nd, _ = kernels.nearest_site_batch(S, cx, cy)
            discrepancy = float(np.max(np.abs(cd - nd)))
    else:
        cx = cy = cd = np.zeros(0)
        discrepancy = 0.0

    best_val = -1.0
    best_xy = None
    best_kind = ENDPOINT
    for k in range(len(ex)):
        if ed[k] > best_val:
            best_val = float(ed[k])
            best_xy = (float(ex[k]), float(ey[k]))
    for k in range(len(cd)):
        if cd[k] > best_val:
            best_val = float(cd[k])
            best_xy = (float(cx[k]), float(cy[k]))
            best_kind = CRITICAL
    witness = rotate_point(Point(*best_xy), -dia.angle)
    return HausdorffResult(value=best_val, witness=witness, direction="P->Q",
                           witness_kind=best_kind,
                           n_endpoint_candidates=len(ex),
                           n_critical_candidates=len(cd),
                           angle=dia.angle,
                           max_site_discrepancy=discrepancy)


def hausdorff(P, Q, workers=1):
    """Undirected distance: the larger of the two directed runs."""
    pq = directed_hausdorff(P, Q, workers=workers)
    qp = directed_hausdorff(Q, P, workers=workers)
    win, direction = (pq, "P->Q") if pq.value >= qp.value else (qp, "Q->P")
    return HausdorffResult(value=win.value, witness=win.witness,
                           direction=direction, witness_kind=win.witness_kind,
                           n_endpoint_candidates=win.n_endpoint_candidates,
                           n_critical_candidates=win.n_critical_candidates,
                           angle=win.angle,
                           max_site_discrepancy=max(pq.max_site_discrepancy,
                                                    qp.max_site_discrepancy))
