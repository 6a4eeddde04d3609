"""Order-preserving task map over a process pool.

Results come back in task order whatever the worker count, so any reduction
done by the caller is independent of scheduling.
"""

from concurrent.futures import ProcessPoolExecutor

import numpy as np


def pmap(fn, tasks, workers=1):
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def split(n, parts):
    """Contiguous ``(start, stop)`` ranges covering ``range(n)``."""
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def sample_rng(seed, block):
    """Counter-based generator for sample block ``block`` of the stream ``seed``."""
    if not 0 <= seed < (1 << 64) or block < 0:
        raise ValueError("seed must lie in [0, 2**64) and block must be >= 0")
    return np.random.Generator(np.random.Philox(key=(seed << 64) | block))
