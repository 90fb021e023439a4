"""Command-line front end.

Machine output is TSV-ish with ``#``-prefixed commentary.  Exit codes:
0 success, 1 usage/parse/validation error, 2 oracle-check mismatch.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import instances, kernels, oracle, voronoi
from .first_last import first_last
from .geometry import GeometryError, Point, Site, ValidationError
from .hausdorff import directed_hausdorff, hausdorff
from .parallel import resolve_workers


def _fmt(x):
    return format(float(x), ".12g")


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(str(exc)) from None


def _load_two_sets(args):
    if args.fileB:
        A = instances.parse_set(_read(args.fileA))
        B = instances.parse_set(_read(args.fileB))
        return A, B
    return instances.parse_instance(_read(args.fileA))


def cmd_gen(args, out):
    A, B = instances.generate(args.kind, args.n, args.seed)
    text = instances.format_instance(A, B)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


def _result_line(rid, f, l):
    def triple(c):
        if c is None:
            return "none"
        return f"{_fmt(c.point.x)} {_fmt(c.point.y)} {c.blue_id}"

    return f"{rid} {triple(f)} | {triple(l)}"


def cmd_firstlast(args, out):
    A, B = _load_two_sets(args)
    workers = resolve_workers(args.threads)
    res = first_last(A, B, workers=workers, validate=False)
    for c in A:
        out.write(_result_line(c.id, res.first_of(c.id), res.last_of(c.id)) + "\n")
    if args.stats:
        ctr = res.counters
        out.write(f"# backend {kernels.BACKEND}\n")
        for k, v in vars(ctr).items():
            out.write(f"# ops {k} {v}\n")
        out.write(f"# ops total {ctr.total()}\n")
    if args.check:
        ref = oracle.brute_first_last(A, B)
        for c in A:
            for side in ("firsts", "lasts"):
                a = getattr(res, side).get(c.id)
                b = getattr(ref, side).get(c.id)
                if (a is None) != (b is None):
                    out.write(f"# MISMATCH red {c.id} {side} presence\n")
                    return 2
                if a is not None and (
                        abs(a.point.x - b.point.x) > 1e-9 * (1 + abs(b.point.x))
                        or abs(a.point.y - b.point.y) > 1e-9 * (1 + abs(b.point.y))):
                    out.write(f"# MISMATCH red {c.id} {side} "
                              f"{a.point} vs {b.point}\n")
                    return 2
        out.write("# check ok\n")
    return 0


def cmd_hausdorff(args, out):
    P = instances.parse_set(_read(args.fileP))
    Q = instances.parse_set(_read(args.fileQ))
    workers = resolve_workers(args.threads)
    if args.directed:
        res = directed_hausdorff(P, Q, workers=workers)
    else:
        res = hausdorff(P, Q, workers=workers)
    out.write("# value\twitness_x\twitness_y\tdirection\twitness_kind"
              "\tn_endpoint\tn_critical\n")
    out.write(res.record() + "\n")
    rc = 0
    if args.check is not None:
        delta = args.check
        qs = [Site("segment", Point(*c.p1), Point(*c.p2), id=i)
              for i, c in enumerate(Q)]
        ps = [Site("segment", Point(*c.p1), Point(*c.p2), id=i)
              for i, c in enumerate(P)]
        pairs = [(P, qs)] if args.directed else [(P, qs), (Q, ps)]
        vals = [res.value]
        if not args.directed:
            vals = [directed_hausdorff(P, Q, workers=workers).value,
                    directed_hausdorff(Q, P, workers=workers).value]
        for (side, sites), val in zip(pairs, vals):
            sampled = oracle.sampled_directed_hausdorff(side, sites, delta)
            ok = (sampled <= val + 1e-9) and (val <= sampled + delta / 2 + 1e-9)
            out.write(f"# sampled {_fmt(sampled)} exact {_fmt(val)} "
                      f"{'ok' if ok else 'VIOLATION'}\n")
            if not ok:
                rc = 2
    if args.svg:
        _render(args.svg, P, Q, res, workers)
    return rc


def _render(path, P, Q, res, workers):
    from .svg import Scene
    scene = Scene()
    dia = voronoi.build_voronoi(Q, workers=workers, extra_curves=P)
    import math

    def unrot(c):
        return c.rotate(-dia.angle) if dia.angle else c

    for e in dia.edges:
        try:
            scene.curve(unrot(e.curve), "#bbbbbb", 0.8)
        except ValidationError:
            r = e.curve.row
            ts = np.linspace(r[7], r[8], 64)
            xs = r[1] + ts * (r[3] + ts * r[5])
            ys = r[2] + ts * (r[4] + ts * r[6])
            ca, sa = math.cos(-dia.angle), math.sin(-dia.angle)
            scene.polyline(list(zip(ca * xs - sa * ys, sa * xs + ca * ys)),
                           "#bbbbbb", 0.8)
    for c in Q:
        scene.curve(c, "#d62728", 2.0)
    for c in P:
        scene.curve(c, "#1f77b4", 2.0)
    from .hausdorff import critical_points
    for p in critical_points(dia.rotated_extra, dia.edges, validate=False):
        q = Point(*p)
        if dia.angle:
            from .geometry import rotate_point
            q = rotate_point(q, -dia.angle)
        scene.point(q, "#2ca02c", 2.5)
    scene.star(res.witness, "#000000", 7.0)
    scene.text(f"distance {res.value:.6g} at ({res.witness.x:.4g}, "
               f"{res.witness.y:.4g}) [{res.witness_kind}, {res.direction}]")
    scene.write(path)


def cmd_bench(args, out):
    sizes = [int(s) for s in args.sizes.split(",") if s]
    threads = [int(s) for s in args.threads_list.split(",") if s]
    out.write("# n\tthreads\tbuild_and_run_s\tops_total\n")
    for n in sizes:
        A, B = instances.generate(args.kind, n, args.seed)
        base = None
        for w in threads:
            t0 = time.perf_counter()
            res = first_last(A, B, workers=w, validate=False)
            dt = time.perf_counter() - t0
            ops = res.counters.total()
            if base is None:
                base = ops
            elif ops != base:
                out.write(f"# WARNING ops differ across thread counts at n={n}\n")
            out.write(f"{n}\t{w}\t{dt:.4f}\t{ops}\n")
    return 0


def cmd_bench_kernels(args, out):
    """Compare the compiled and pure-Python kernel backends."""
    from .geometry import pack_curves
    names = kernels.available_backends()
    rng = np.random.default_rng(0)
    A, B = instances.generate("random-disjoint", args.n, 0)
    P = pack_curves(A + B)
    n = len(A) + len(B)
    m = args.pairs
    ia = rng.integers(0, n, m).astype(np.int64)
    ib = rng.integers(0, n, m).astype(np.int64)
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    xq = rng.uniform(P[:, 9].min(), P[:, 10].max(), m)
    idx = rng.integers(0, n, m).astype(np.int64)
    xs = P[idx, 9] + (P[idx, 10] - P[idx, 9]) * rng.random(m)
    out.write("# op\tn_items\tbackend\tseconds\tMitems_per_s\n")
    rows = {}
    for name in names:
        mod = kernels.get_backend(name)
        reps = 3 if name == "c" else 1
        scale = 1 if name == "c" else max(1, m // 20000)
        for op, fn, count in (
                ("intersect_batch",
                 lambda md=mod, s=scale: md.intersect_batch(
                     P, ia[::s], ib[::s], lo[::s], hi[::s]), m // scale),
                ("eval_y_batch",
                 lambda md=mod, s=scale: md.eval_y_batch(P, idx[::s], xs[::s]),
                 m // scale)):
            t0 = time.perf_counter()
            for _ in range(reps):
                fn()
            dt = (time.perf_counter() - t0) / reps
            rows[(op, name)] = (count, dt)
            out.write(f"{op}\t{count}\t{name}\t{dt:.5f}\t"
                      f"{count / dt / 1e6:.2f}\n")
    for op in ("intersect_batch", "eval_y_batch"):
        if (op, "c") in rows and (op, "python") in rows:
            (nc, tc), (np_, tp) = rows[(op, "c")], rows[(op, "python")]
            out.write(f"# {op}: compiled is {(tp / np_) / (tc / nc):.0f}x "
                      "faster per item\n")
    return 0


def make_parser():
    ap = argparse.ArgumentParser(prog="redblue")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a well-behaved instance")
    g.add_argument("n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--kind", choices=instances.KINDS, default="random-disjoint")
    g.add_argument("--out")

    f = sub.add_parser("firstlast", help="first/last intersections per red curve")
    f.add_argument("fileA")
    f.add_argument("fileB", nargs="?")
    f.add_argument("--check", action="store_true",
                   help="verify against the brute-force oracle")
    f.add_argument("--threads", type=int, default=None)
    f.add_argument("--stats", action="store_true")

    h = sub.add_parser("hausdorff", help="Hausdorff distance of two segment sets")
    h.add_argument("fileP")
    h.add_argument("fileQ")
    h.add_argument("--directed", action="store_true")
    h.add_argument("--check", type=float, default=None, metavar="DELTA",
                   help="validate against the sampled oracle sandwich")
    h.add_argument("--svg")
    h.add_argument("--threads", type=int, default=None)

    b = sub.add_parser("bench", help="wall time and operation counters")
    b.add_argument("--sizes", default="128,256,512")
    b.add_argument("--threads-list", default="1", dest="threads_list")
    b.add_argument("--kind", choices=instances.KINDS, default="random-disjoint")
    b.add_argument("--seed", type=int, default=0)

    bk = sub.add_parser("bench-kernels",
                        help="compare compiled and pure-Python kernels")
    bk.add_argument("--n", type=int, default=512)
    bk.add_argument("--pairs", type=int, default=200000)
    return ap


def main(argv=None, out=None):
    out = out or sys.stdout
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        if args.cmd == "gen":
            return cmd_gen(args, out)
        if args.cmd == "firstlast":
            return cmd_firstlast(args, out)
        if args.cmd == "hausdorff":
            return cmd_hausdorff(args, out)
        if args.cmd == "bench":
            return cmd_bench(args, out)
        if args.cmd == "bench-kernels":
            return cmd_bench_kernels(args, out)
    except (ValidationError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
