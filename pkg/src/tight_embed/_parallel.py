"""Chunked evaluation over index ranges, bounded by TIGHT_EMBED_THREADS."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")


def workers() -> int:
    raw = os.environ.get("TIGHT_EMBED_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def chunked_map(fn: Callable[[int, int], T], total: int, chunk: int) -> list[T]:
    """Apply fn(start, stop) over [0, total) in chunks; results keep chunk order."""
    bounds = [(a, min(a + chunk, total)) for a in range(0, total, max(1, chunk))]
    n = workers()
    if n == 1 or len(bounds) < 2:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))
