"""Order-preserving thread map capped by SYMTOMO_THREADS."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def max_threads() -> int:
    raw = os.environ.get("SYMTOMO_THREADS", "")
    try:
        k = int(raw)
    except ValueError:
        k = 1
    return max(1, k)


def pmap(fn, items):
    items = list(items)
    k = min(max_threads(), len(items))
    if k <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))
