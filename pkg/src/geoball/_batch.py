"""Deterministic chunked evaluation.

Work is cut into chunks of a fixed size that does not depend on the worker
count, the last chunk is padded to full size, and results are reassembled in
chunk order. Threads only decide *who* runs a chunk, never *what* it contains,
so outputs are bit-identical for any ``GEOBALL_WORKERS``.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

WORKERS_ENV = "GEOBALL_WORKERS"


def worker_count(workers=None):
    if workers is not None:
        return max(1, int(workers))
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def padded_chunks(X, chunk):
    """Split ``X`` along axis 0 into equal chunks; the tail is padded with its last row."""
    X = np.asarray(X)
    n = X.shape[0]
    nchunks = max(1, -(-n // chunk))
    pad = nchunks * chunk - n
    if pad:
        X = np.concatenate([X, np.repeat(X[-1:], pad, axis=0)], axis=0)
    return [X[i * chunk:(i + 1) * chunk] for i in range(nchunks)], n


def run_ordered(fn, items, workers=None):
    """Apply ``fn`` to each item, returning results in input order."""
    w = worker_count(workers)
    if w == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, items))


def map_chunks(fn, X, chunk=4096, workers=None):
    """Evaluate a batched ``fn`` over the rows of ``X`` in fixed-size chunks.

    ``fn`` maps an array of shape ``(chunk, ...)`` to a pytree-free array (or
    tuple of arrays) with leading dimension ``chunk``.
    """
    chunks, n = padded_chunks(X, chunk)
    outs = run_ordered(lambda c: fn(c), chunks, workers)
    if isinstance(outs[0], tuple):
        return tuple(np.concatenate([np.asarray(o[k]) for o in outs])[:n] for k in range(len(outs[0])))
    return np.concatenate([np.asarray(o) for o in outs])[:n]
