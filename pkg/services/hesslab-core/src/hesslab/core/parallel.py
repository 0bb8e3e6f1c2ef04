# =============================================================================
# hesslab - Deterministic Chunked Reduction
# =============================================================================

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from .config import settings

T = TypeVar("T")


def chunk_bounds(total: int, chunk_size: Optional[int] = None) -> List[tuple[int, int]]:
    """Split ``range(total)`` into consecutive ``(start, stop)`` chunks."""
    size = chunk_size or settings.chunk_size
    return [(start, min(start + size, total)) for start in range(0, total, size)]


def tree_reduce(parts: Sequence[T], combine: Callable[[T, T], T]) -> T:
    """
    Pairwise reduction in a fixed binary-tree order.

    The grouping depends only on ``len(parts)``, so the floating point result
    is the same however the parts were produced.
    """
    if not parts:
        raise ValueError("tree_reduce needs at least one part")
    level = list(parts)
    while len(level) > 1:
        paired = [combine(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            paired.append(level[-1])
        level = paired
    return level[0]


def map_chunks(
    fn: Callable[[int, int], T],
    total: int,
    threads: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> List[T]:
    """Evaluate ``fn(start, stop)`` on every chunk; results come back in chunk order."""
    bounds = chunk_bounds(total, chunk_size)
    workers = threads or settings.threads
    if workers <= 1 or len(bounds) <= 1:
        return [fn(start, stop) for start, stop in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


def chunked_sum(
    fn: Callable[[int, int], T],
    total: int,
    threads: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> T:
    """Sum of per-chunk partials, reduced with :func:`tree_reduce`."""
    return tree_reduce(map_chunks(fn, total, threads, chunk_size), lambda a, b: a + b)
