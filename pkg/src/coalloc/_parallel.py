"""Seeded random streams and deterministic block-parallel mapping.

Sample index ranges are cut into fixed-size blocks. Block ``b`` draws from a
Philox stream keyed on ``(seed, b)``, so sample ``k`` always sees the same
randomness no matter how many samples are requested or how many workers run.
Block results are merged in block order.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_SIZE = 8192


def thread_count(threads=None):
    """Worker count: explicit value, else CPU count, capped by ``COALLOC_THREADS``."""
    if threads is None:
        threads = os.cpu_count() or 1
    cap = os.environ.get("COALLOC_THREADS")
    if cap:
        threads = min(threads, int(cap))
    return max(1, int(threads))


def block_rng(seed, block):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, int(block)])))


def map_blocks(fn, total, threads=None, block_size=BLOCK_SIZE):
    """Call ``fn(block, start, stop)`` over ``[0, total)`` and return results in block order."""
    spans = [(b, s, min(s + block_size, total)) for b, s in enumerate(range(0, total, block_size))]
    workers = min(thread_count(threads), max(1, len(spans)))
    if workers == 1:
        return [fn(*span) for span in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda span: fn(*span), spans))
