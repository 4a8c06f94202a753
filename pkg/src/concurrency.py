"""
Ordered fan-out over a thread pool capped by FQA_NUM_WORKERS.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from config.settings import NUM_WORKERS

T = TypeVar('T')
R = TypeVar('R')


def ordered_map(fn: Callable[[T], R], items: Iterable[T],
                max_workers: Optional[int] = None) -> List[R]:
    """
    Apply `fn` to every item, possibly in parallel, and return the results in
    input order. With one worker (or one item) runs inline.
    """
    items = list(items)
    workers = max(1, min(max_workers or NUM_WORKERS, len(items) or 1))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
