"""Backend cross-checks: compiled and pure-Python kernels must agree, and
both must agree with independent numpy references."""

import numpy as np
import pytest

from redblue import kernels
from redblue.geometry import Curve, pack_curves, pack_sites, parabola_from_poly, Point, Site

BACKENDS = [kernels.get_backend(n) for n in kernels.available_backends()]


def _random_curve(rng, i):
    if rng.random() < 0.5:
        x1, x2 = sorted(rng.uniform(-10, 10, 2))
        x2 = max(x2, x1 + 0.5)
        return Curve.line((x1, rng.uniform(-10, 10)), (x2, rng.uniform(-10, 10)), id=i)
    a = rng.uniform(0.05, 2.0) * (1 if rng.random() < 0.5 else -1)
    x1, x2 = sorted(rng.uniform(-6, 6, 2))
    x2 = max(x2, x1 + 0.5)
    return parabola_from_poly(a, rng.uniform(-3, 3), rng.uniform(-8, 8),
                              x1, x2, id=i)


def test_poly_roots_against_numpy(rng):
    bad = 0
    for trial in range(1500):
        coef = rng.normal(size=5) * (10.0 ** float(rng.integers(-2, 3)))
        if trial % 7 == 0:
            r = rng.normal(size=2)
            coef = np.concatenate([[0.0], np.polymul(
                np.polymul([1.0, -r[0]], [1.0, -r[0]]), [1.0, -r[1]])])
        if trial % 11 == 0:
            coef[0] = 0.0
        npr = np.roots(coef) if np.any(coef != 0) else []
        npreal = sorted(float(z.real) for z in npr
                        if abs(z.imag) <= 1e-7 * (1.0 + abs(z)))
        # separate well-isolated real roots must all be found (clustered
        # pairs may legitimately merge near the double-root boundary)
        isolated = [r0 for r0 in npreal
                    if all(abs(r0 - o) > 1e-5 * (1 + abs(r0))
                           for o in npreal if o is not r0)]
        for backend in BACKENDS:
            mine = backend.poly_real_roots(coef)
            for r0 in isolated:
                if not any(abs(m - r0) < 1e-6 * (1 + abs(r0)) for m in mine):
                    bad += 1
            # every reported root really is a root
            for m in mine:
                val = np.polyval(coef, m)
                assert abs(val) <= 1e-6 * (1 + np.abs(coef).max()) * (1 + abs(m)) ** 4
    assert bad == 0


def test_poly_roots_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend unavailable")
    for trial in range(2000):
        coef = rng.normal(size=5)
        if trial % 3 == 0:
            coef[0] = 0.0
        a = BACKENDS[0].poly_real_roots(coef)
        b = BACKENDS[1].poly_real_roots(coef)
        assert len(a) == len(b)
        assert all(abs(x - y) <= 1e-9 * (1 + abs(y)) for x, y in zip(a, b))


def test_intersect_backends_agree_and_residuals(rng):
    curves = [_random_curve(rng, i) for i in range(300)]
    P = pack_curves(curves)
    m = 3000
    ia = rng.integers(0, len(curves), m).astype(np.int64)
    ib = rng.integers(0, len(curves), m).astype(np.int64)
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    results = [b.intersect_batch(P, ia, ib, lo, hi) for b in BACKENDS]
    cnt, px, py, flags, _ = results[0]
    for other in results[1:]:
        assert np.array_equal(cnt, other[0])
        assert np.array_equal(flags, other[3])
        assert np.allclose(np.nan_to_num(px), np.nan_to_num(other[1]), atol=0)
    # residuals on both defining conics
    for k in range(m):
        for j in range(cnt[k]):
            x, y = px[k, j], py[k, j]
            for ci in (ia[k], ib[k]):
                q = P[ci, 11:17]
                r = q[0] * x * x + q[1] * x * y + q[2] * y * y + q[3] * x + q[4] * y + q[5]
                scale = max(1.0, np.abs(q).max() * (1 + x * x + y * y))
                assert abs(r) / scale < 1e-9


def test_intersect_symmetric(rng):
    curves = [_random_curve(rng, i) for i in range(120)]
    P = pack_curves(curves)
    m = 1500
    ia = rng.integers(0, len(curves), m).astype(np.int64)
    ib = rng.integers(0, len(curves), m).astype(np.int64)
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    r1 = kernels.intersect_batch(P, ia, ib, lo, hi)
    r2 = kernels.intersect_batch(P, ib, ia, lo, hi)
    for k in range(m):
        assert r1[0][k] == r2[0][k]
        for j in range(r1[0][k]):
            d = np.abs(r1[1][k, j] - r2[1][k, :r1[0][k]]) \
                + np.abs(r1[2][k, j] - r2[2][k, :r1[0][k]])
            assert d.min() <= 1e-9 * (1 + abs(r1[1][k, j]))


def test_eval_backends_agree(rng):
    curves = [_random_curve(rng, i) for i in range(100)]
    P = pack_curves(curves)
    idx = rng.integers(0, len(curves), 2000).astype(np.int64)
    xs = P[idx, 9] + (P[idx, 10] - P[idx, 9]) * rng.random(2000)
    ys = [b.eval_y_batch(P, idx, xs) for b in BACKENDS]
    for other in ys[1:]:
        assert np.array_equal(ys[0], other)


def test_nearest_site_matches_per_site_min(rng):
    sites = []
    for i in range(40):
        p1 = Point(*rng.uniform(0, 10, 2))
        if rng.random() < 0.5:
            sites.append(Site("point", p1, id=i))
        else:
            sites.append(Site("segment", p1, Point(*rng.uniform(0, 10, 2)), id=i))
    S = pack_sites(sites)
    px = rng.uniform(-2, 12, 500)
    py = rng.uniform(-2, 12, 500)
    d, idx = kernels.nearest_site_batch(S, px, py)
    alld = np.stack([kernels.site_dist_batch(
        S, np.full(500, s, dtype=np.int64), px, py) for s in range(len(sites))])
    assert np.allclose(d, alld.min(axis=0))
    assert np.array_equal(idx, alld.argmin(axis=0))
    # exclusion variant
    e1 = rng.integers(0, len(sites), 500).astype(np.int64)
    e2 = rng.integers(0, len(sites), 500).astype(np.int64)
    dx, ix = kernels.nearest_site_excl_batch(S, px, py, e1, e2)
    masked = alld.copy()
    masked[e1, np.arange(500)] = np.inf
    masked[e2, np.arange(500)] = np.inf
    assert np.allclose(dx, masked.min(axis=0))


def test_validate_pairs_flags_crossings():
    a = Curve.line((0, 0), (4, 4), id=0)
    b = Curve.line((0, 4), (4, 0), id=1)
    c = Curve.line((0, 0), (4, -2), id=2)  # shares an endpoint with a
    P = pack_curves([a, b, c])
    bad = kernels.validate_pairs_batch(
        P, np.array([0, 0], dtype=np.int64), np.array([1, 2], dtype=np.int64),
        kernels.EPS)
    assert bad.tolist() == [1, 0]
