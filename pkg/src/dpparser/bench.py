"""Decode timing over random score tables (checks the cubic growth)."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .chart import ScoreTables, decode
from .transition import system_kind


@dataclass(frozen=True)
class BenchRow:
    n: int
    mean_seconds: float
    ratio: float | None      # mean time relative to the previous n in the list


def bench_decode(ns=(50, 100, 200, 400), system="eager", repeats: int = 3,
                 seed: int = 0) -> list[BenchRow]:
    system = system_kind(system)
    rng = np.random.default_rng(seed)
    decode(ScoreTables.random(system, 4, rng))       # compile outside the timed region
    rows, prev = [], None
    for n in ns:
        times = []
        for _ in range(repeats):
            tables = ScoreTables.random(system, n, rng)
            start = time.perf_counter()
            decode(tables)
            times.append(time.perf_counter() - start)
        mean = float(np.mean(times))
        rows.append(BenchRow(n, mean, None if prev is None else mean / prev))
        prev = mean
    return rows
