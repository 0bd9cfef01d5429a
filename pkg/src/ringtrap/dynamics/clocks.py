"""Shared Poisson clock streams.

A ClockStream fixes ``n_clocks`` unit-rate Poisson processes and exposes their
superposition as a deterministic, replayable sequence of (time, clock) pairs.
The superposition is materialized lazily: global gaps are exponential with
rate ``n_clocks`` and each event is assigned a uniform clock index, which makes
the per-clock sequences independent unit-rate Poisson processes.

Two consumers that iterate the same stream observe the exact same rings, which
is what couplings and trajectory mappings rely on. Streams are split by key:
``derive(i)`` yields an independent stream, and independent replicas across a
Monte Carlo run come from ``(master_seed, replica_index)`` so that results do
not depend on worker scheduling.
"""
from __future__ import annotations

import heapq
from typing import Iterator

import numpy as np

_BLOCK = 1024


class ClockStream:
    def __init__(self, n_clocks: int, master_seed: int, key: tuple[int, ...] = ()):
        if n_clocks < 1:
            raise ValueError("need at least one clock")
        self.n_clocks = int(n_clocks)
        self.master_seed = int(master_seed)
        self.key = tuple(int(k) for k in key)

    def _generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(seq))

    def events(self, horizon: float) -> Iterator[tuple[float, int]]:
        """Yield (time, clock) in increasing time order up to the horizon.

        Every call replays the identical sequence.
        """
        if horizon < 0:
            raise ValueError("horizon must be >= 0")
        rng = self._generator()
        t = 0.0
        while True:
            gaps = rng.exponential(1.0 / self.n_clocks, size=_BLOCK)
            clocks = rng.integers(0, self.n_clocks, size=_BLOCK)
            for g, c in zip(gaps, clocks):
                t += g
                if t > horizon:
                    return
                yield t, int(c)

    def derive(self, index: int) -> "ClockStream":
        """An independent stream addressed by (master_seed, *key, index)."""
        return ClockStream(self.n_clocks, self.master_seed, self.key + (int(index),))

    def with_clock_count(self, n_clocks: int) -> "ClockStream":
        """Same seeding, different clock count (distinct event sequence)."""
        return ClockStream(n_clocks, self.master_seed, self.key)


class ScriptedClockStream:
    """Fixed event list standing in for a ClockStream in scripted replays."""

    def __init__(self, n_clocks: int, events: list[tuple[float, int]]):
        self.n_clocks = int(n_clocks)
        self._events = sorted((float(t), int(c)) for t, c in events)
        if any(c < 0 or c >= self.n_clocks for _, c in self._events):
            raise ValueError("clock index out of range")

    def events(self, horizon: float) -> Iterator[tuple[float, int]]:
        for t, c in self._events:
            if t > horizon:
                return
            yield t, c


def merge_streams(streams, horizon: float) -> Iterator[tuple[float, int, int]]:
    """Time-merge several streams; yields (time, stream_index, clock).

    Ties (probability zero in exact arithmetic) resolve by stream then clock
    index so replays stay deterministic.
    """
    iters = [s.events(horizon) for s in streams]
    heap = []
    for i, it in enumerate(iters):
        first = next(it, None)
        if first is not None:
            heapq.heappush(heap, (first[0], i, first[1]))
    while heap:
        t, i, c = heapq.heappop(heap)
        yield t, i, c
        nxt = next(iters[i], None)
        if nxt is not None:
            heapq.heappush(heap, (nxt[0], i, nxt[1]))
