"""Monte Carlo estimates of winning probabilities.

Voter ``i`` of sample ``s`` draws its randomness from a counter-based stream
keyed by ``(seed, s * n + i)``, so the estimate does not depend on how
samples are split across worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .asymptotics import win_bound
from .culture import Culture, sample_rankings
from .errors import InvalidInputError
from .saddle import Thresholds

CHUNK_VOTERS = 1 << 20


def thread_count() -> int:
    env = os.environ.get("CONDORCET_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidInputError(f"CONDORCET_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class MCResult:
    estimate: float
    stderr: float
    samples: int
    seed: int
    successes: int = 0


def _count(culture: Culture, candidate: int, bounds: np.ndarray, n: int, seed: int, s0: int, s1: int) -> int:
    m = culture.m
    adversaries = [c for c in range(1, m + 1) if c != candidate]
    r = sample_rankings(culture, seed, s0 * n, (s1 - s0) * n)
    # position of each candidate in each ballot
    pos = np.argsort(r, axis=1)
    above = pos[:, np.array(adversaries) - 1] < pos[:, [candidate - 1]]
    votes = above.reshape(s1 - s0, n, m - 1).sum(axis=1)
    return int(np.all(votes <= bounds, axis=1).sum())


def mc_estimate(
    culture: Culture,
    candidate: int | None,
    th: Thresholds,
    n: int,
    samples: int,
    seed: int,
    threads: int | None = None,
) -> MCResult:
    if samples < 1:
        raise InvalidInputError("samples must be at least 1")
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    m = culture.m
    candidate = m if candidate is None else candidate
    if not 1 <= candidate <= m:
        raise InvalidInputError(f"candidate {candidate} not in 1..{m}")
    if th.dim != m - 1:
        raise InvalidInputError(f"threshold vector has {th.dim} entries, expected {m - 1}")
    bounds = np.array([win_bound(b, n, th.weak) for b in th.beta])
    per_chunk = max(1, CHUNK_VOTERS // n)
    ranges = [(s, min(s + per_chunk, samples)) for s in range(0, samples, per_chunk)]
    workers = threads or thread_count()
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(workers) as ex:
            hits = sum(ex.map(lambda r: _count(culture, candidate, bounds, n, seed, *r), ranges))
    else:
        hits = sum(_count(culture, candidate, bounds, n, seed, *r) for r in ranges)
    est = hits / samples
    return MCResult(est, math.sqrt(est * (1 - est) / samples), samples, seed, hits)
