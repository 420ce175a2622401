"""Deterministic random streams.

All randomness in the package flows from a single user seed through named
substreams, so runs are reproducible and independent of worker count.
Shard indices extend the spawn key, which keeps per-shard streams fixed
no matter how shards are scheduled.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ParameterError

_STREAMS = {
    "validate": 0,
    "measure": 1,
    "nonres": 2,
    "scan": 3,
    "secular": 4,
    "build": 5,
}


def substream(seed: int, name: str, *shard: int) -> np.random.Generator:
    if name not in _STREAMS:
        raise ParameterError(f"unknown random stream {name!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_STREAMS[name], *map(int, shard)))
    return np.random.Generator(np.random.PCG64(ss))


def resolve_threads(threads=None) -> int:
    """Worker count: explicit argument, else RESOKAM_THREADS, else 1."""
    if threads is None:
        raw = os.environ.get("RESOKAM_THREADS", "").strip()
        threads = int(raw) if raw else 1
    threads = int(threads)
    if threads < 1:
        raise ParameterError("threads must be >= 1")
    return threads
