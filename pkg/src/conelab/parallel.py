"""Deterministic chunked evaluation.

Work is split into fixed index chunks that do not depend on the thread
count; every chunk writes to its own output slots, so serial and threaded
runs produce bit-identical results.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ValidationError

ENV_THREADS = "CONELAB_THREADS"


def resolve_threads(threads: int | None) -> int:
    """Explicit argument, else the CONELAB_THREADS variable, else 1."""
    if threads is None:
        raw = os.environ.get(ENV_THREADS, "")
        threads = int(raw) if raw.strip() else 1
    if threads < 1:
        raise ValidationError(f"thread count must be >= 1, got {threads}")
    return threads


def chunk_slices(n_items: int, n_chunks: int = 16) -> list[slice]:
    """Split range(n_items) into at most n_chunks contiguous slices.

    The split depends only on n_items (not on the thread count) so that
    per-chunk vectorised numerics are reproducible.
    """
    n_chunks = max(1, min(n_chunks, n_items))
    bounds = [n_items * i // n_chunks for i in range(n_chunks + 1)]
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def map_chunks(fn, n_items: int, threads: int = 1) -> None:
    """Call fn(slice) for every chunk, serially or on a thread pool."""
    slices = chunk_slices(n_items)
    if threads <= 1 or len(slices) <= 1:
        for s in slices:
            fn(s)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(fn, slices))
