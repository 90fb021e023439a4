"""Bulk-parallel phase execution.

Pipeline phases are maps over independent items.  With the compiled backend
the kernels drop the GIL, so chunking a batch across a thread pool gives real
parallelism; results are concatenated in chunk order, so the output is
identical for any worker count.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_MIN_CHUNK = 2048


def resolve_workers(workers=None):
    if workers is None:
        env = os.environ.get("RB_THREADS", "").strip()
        workers = int(env) if env else 1
    return max(1, int(workers))


def run_batch(fn, item_arrays, shared_args=(), workers=1, n_out_scalars=0):
    """Run ``fn(*sliced_item_arrays, *shared_args)`` over row chunks.

    ``fn`` may return a single per-item array or a tuple whose leading
    entries are per-item arrays and whose trailing ``n_out_scalars`` entries
    are scalars summed across chunks.
    """
    n = len(item_arrays[0])
    workers = resolve_workers(workers)
    if workers <= 1 or n < 2 * _MIN_CHUNK:
        return fn(*item_arrays, *shared_args)
    bounds = np.linspace(0, n, workers + 1).astype(np.int64)
    spans = [(bounds[i], bounds[i + 1]) for i in range(workers)
             if bounds[i + 1] > bounds[i]]

    def job(span):
        s, e = span
        return fn(*[a[s:e] for a in item_arrays], *shared_args)

    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        parts = list(pool.map(job, spans))
    if not isinstance(parts[0], tuple):
        return np.concatenate(parts)
    out = []
    width = len(parts[0])
    for k in range(width - n_out_scalars):
        out.append(np.concatenate([p[k] for p in parts]))
    for k in range(width - n_out_scalars, width):
        out.append(sum(p[k] for p in parts))
    return tuple(out)
