import numpy as np
import pytest


def assert_results_equal(got, want, tol=1e-9):
    """first_last results match: presence exact, coordinates within tol."""
    rids = set(got.firsts) | set(want.firsts) | set(got.lasts) | set(want.lasts)
    for rid in rids:
        for side in ("firsts", "lasts"):
            a = getattr(got, side).get(rid)
            b = getattr(want, side).get(rid)
            assert (a is None) == (b is None), (rid, side, a, b)
            if a is None:
                continue
            assert abs(a.point.x - b.point.x) <= tol * (1 + abs(b.point.x)), \
                (rid, side, a.point, b.point)
            assert abs(a.point.y - b.point.y) <= tol * (1 + abs(b.point.y)), \
                (rid, side, a.point, b.point)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
