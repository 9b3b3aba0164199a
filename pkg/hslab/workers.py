# Copyright 2025 R5 Labs
# This file is part of the hslab toolkit.
#
# This software is provided "as is", without warranty of any kind,
# express or implied, including but not limited to the warranties
# of merchantability, fitness for a particular purpose and
# noninfringement. In no event shall the authors or copyright
# holders be liable for any claim, damages, or other liability,
# whether in an action of contract, tort or otherwise, arising
# from, out of or in connection with the software or the use or
# other dealings in the software.
"""Order-preserving parallel map over independent tasks."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


def default_workers() -> int:
    return max(1, (os.cpu_count() or 2) // 2)


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Apply func to every item; results come back in submission order.

    func and items must be picklable when workers > 1. The output does not
    depend on the worker count.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    results: list = [None] * len(items)
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        fut2idx = {ex.submit(func, item): idx for idx, item in enumerate(items)}
        for fut in as_completed(fut2idx):
            idx = fut2idx[fut]
            results[idx] = fut.result()
            logger.debug("task %d/%d done", idx + 1, len(items))
    return results
