from __future__ import annotations

import numpy as np
from joblib import Parallel, delayed


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for one explained instance; depends only on ``(seed, index)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def map_instances(fn, n_items: int, n_jobs: int = 1, *args) -> list:
    """Apply ``fn(index_chunk, *args) -> list`` over ``range(n_items)`` and flatten in order.

    Results never depend on ``n_jobs``: chunking only decides which process runs
    which indices, and every per-instance computation is seeded by its index.
    """
    if n_items == 0:
        return []
    n_jobs = max(1, int(n_jobs))
    n_chunks = min(n_items, 1 if n_jobs == 1 else 4 * n_jobs)
    chunks = np.array_split(np.arange(n_items), n_chunks)
    if n_jobs == 1:
        parts = [fn(chunk, *args) for chunk in chunks]
    else:
        parts = Parallel(n_jobs=n_jobs)(delayed(fn)(chunk, *args) for chunk in chunks)
    return [r for part in parts for r in part]
