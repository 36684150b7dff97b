"""Deterministic, splittable random streams.

Every Monte Carlo routine splits its trials into fixed-size chunks.  Chunk
``c`` of stream ``s`` under master seed ``seed`` draws from a Philox
(counter-based) generator keyed by ``SeedSequence(seed, spawn_key=(s, c))``.
Chunk boundaries depend only on the trial index, so results are identical
for any number of workers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

CHUNK = 256

# Stream ids keep the generators of different experiments disjoint.
STREAMS = {
    "rqc": 1,
    "aux": 2,
    "ideal": 3,
    "fourier": 4,
    "conjecture": 5,
    "sigma": 6,
    "zstring": 7,
    "coupon": 8,
    "haar": 9,
    "misc": 99,
}

T = TypeVar("T")


def stream_id(name: str | int) -> int:
    return name if isinstance(name, int) else STREAMS[name]


def generator(seed: int, stream: str | int, chunk: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=(stream_id(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def chunks(trials: int, size: int = CHUNK) -> list[tuple[int, int]]:
    """(chunk index, number of trials) pairs covering ``trials``."""
    return [(c, min(size, trials - c * size)) for c in range((trials + size - 1) // size)]


def chunked_map(fn: Callable[[np.random.Generator, int], T], trials: int, seed: int,
                stream: str | int, workers: int = 1) -> list[T]:
    """Apply ``fn(rng, count)`` to each chunk; results come back in chunk order."""
    jobs = chunks(trials)

    def run(job):
        c, count = job
        return fn(generator(seed, stream, c), count)

    if workers <= 1 or len(jobs) <= 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(run, jobs))


def concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts) if parts else np.empty(0)
