"""
Reproducible random streams.

Every stream is numpy's counter-based Philox-4x64 generator keyed by the
first 16 bytes of ``sha256("<seed>:<part>:<part>...")`` read as two
little-endian 64-bit words, counter starting at zero. Workers derive their
own stream from ``(seed, suite, n, trial)`` so results do not depend on
scheduling.
"""

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def stream_key(seed, *parts):
    text = ":".join(str(x) for x in (seed,) + parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return np.frombuffer(digest[:16], dtype="<u8").copy()


def substream(seed, *parts) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *parts)))


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return substream(0 if rng is None else rng)


def worker_count(default=None):
    raw = os.environ.get("WASSKNN_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return default or 1


def ordered_map(fn, items, workers=None):
    """``list(map(fn, items))`` spread over a thread pool; output order is
    the input order whatever the worker count."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
