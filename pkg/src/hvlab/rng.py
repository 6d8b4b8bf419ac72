"""Seeded, splittable random streams.

Every random draw in the package comes from a Philox generator keyed by the
run seed plus a spawn key such as ``(worker, batch)``.  Two streams with
different keys are statistically independent, and the same key always
replays the same numbers, so parallel runs are reproducible for a fixed
``(seed, workers)`` pair.
"""

from __future__ import annotations

import numpy as np

PILOT_STREAM = 1_000_003


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def split_evenly(total: int, parts: int) -> list[int]:
    """Split ``total`` into ``parts`` integers differing by at most one."""
    base, extra = divmod(int(total), int(parts))
    return [base + (1 if i < extra else 0) for i in range(parts)]
