"""Kernel backend selection.

The compiled extension ``redblue._core`` is preferred when importable; the
pure-Python backend ``redblue._corepy`` is the fallback.  ``RB_BACKEND`` can
force either one (values ``c`` / ``python``).  Both expose the same batch
functions over the packed curve/site tables.
"""

import os

from . import _corepy

_FORCED = os.environ.get("RB_BACKEND", "").strip().lower()


def _load_compiled():
    from . import _core  # noqa: PLC0415
    return _core


if _FORCED in ("python", "py"):
    impl = _corepy
elif _FORCED in ("c", "compiled", "cython"):
    impl = _load_compiled()
else:
    try:
        impl = _load_compiled()
    except ImportError:
        impl = _corepy

BACKEND = impl.BACKEND

NCOLS = _corepy.NCOLS
KIND_LINE = _corepy.KIND_LINE
KIND_PARABOLA = _corepy.KIND_PARABOLA
EPS = _corepy.EPS
FLAG_OVERLAP = _corepy.FLAG_OVERLAP
FLAG_TOO_MANY = _corepy.FLAG_TOO_MANY


def get_backend(name):
    """Explicit backend module by name, for benchmarks and tests."""
    if name in ("python", "py"):
        return _corepy
    if name in ("c", "compiled", "cython"):
        return _load_compiled()
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        _load_compiled()
        names.insert(0, "c")
    except ImportError:
        pass
    return names


# thin passthroughs (single entry point so modules never import impl directly)
poly_real_roots = lambda c: impl.poly_real_roots(c)  # noqa: E731
poly_roots_batch = lambda C: impl.poly_roots_batch(C)  # noqa: E731
eval_y_one = lambda P, i, x: impl.eval_y_one(P, i, x)  # noqa: E731
curve_point = lambda P, i, t: impl.curve_point(P, i, t)  # noqa: E731
eval_y_batch = lambda P, idx, xs: impl.eval_y_batch(P, idx, xs)  # noqa: E731
curve_points_batch = lambda P, idx, ts: impl.curve_points_batch(P, idx, ts)  # noqa: E731
intersect_batch = lambda *a: impl.intersect_batch(*a)  # noqa: E731
validate_pairs_batch = lambda *a: impl.validate_pairs_batch(*a)  # noqa: E731
site_dist_batch = lambda *a: impl.site_dist_batch(*a)  # noqa: E731
nearest_site_batch = lambda *a, **kw: impl.nearest_site_batch(*a, **kw)  # noqa: E731
nearest_site_excl_batch = lambda *a: impl.nearest_site_excl_batch(*a)  # noqa: E731
step2_batch = lambda *a: impl.step2_batch(*a)  # noqa: E731
step31_batch = lambda *a: impl.step31_batch(*a)  # noqa: E731
it_assign_batch = lambda *a: impl.it_assign_batch(*a)  # noqa: E731
step35_batch = lambda *a: impl.step35_batch(*a)  # noqa: E731
