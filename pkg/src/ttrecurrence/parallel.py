"""Deterministic trial-level parallelism.

Trial ``i`` of an experiment seeded with ``seed`` always draws from
``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on how
trials are spread over workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

WORKERS_ENV = "TTREC_WORKERS"


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        return max(1, int(value))
    return 1


def _run_block(fn, seed, kwargs, trials):
    return [fn(trial_rng(seed, t), **kwargs) for t in trials]


def run_trials(fn, n_trials: int, seed: int, workers: int | None = None, **kwargs) -> list:
    """Evaluate ``fn(rng, **kwargs)`` for trials ``0..n_trials-1``, in trial order.

    ``fn`` must be a module-level function when ``workers > 1``.
    """
    workers = default_workers() if workers is None else workers
    trials = list(range(n_trials))
    if workers <= 1 or n_trials <= 1:
        return _run_block(fn, seed, kwargs, trials)
    nblocks = min(n_trials, 4 * workers)
    blocks = [trials[i::nblocks] for i in range(nblocks)]
    results: list = [None] * n_trials
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for block, out in zip(blocks, pool.map(partial(_run_block, fn, seed, kwargs), blocks)):
            for t, r in zip(block, out):
                results[t] = r
    return results
