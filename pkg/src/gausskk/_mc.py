"""Batched Monte Carlo core.

Every estimator splits its sample budget into fixed-size batches; batch k draws
from ``rng.derive(k)``. The batch plan depends only on (samples, batch_size), so
results are bit-identical no matter how many worker threads run the batches.
"""
from __future__ import annotations

import contextlib
import contextvars
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

DEFAULT_BATCH = 1 << 15

_workers: contextvars.ContextVar[int | None] = contextvars.ContextVar("gausskk_workers", default=None)


def worker_count() -> int:
    w = _workers.get()
    if w is None:
        w = int(os.environ.get("GAUSSKK_WORKERS", "1"))
    return max(1, w)


@contextlib.contextmanager
def workers(n: int) -> Iterator[None]:
    """Run estimators inside the block on ``n`` threads."""
    token = _workers.set(int(n))
    try:
        yield
    finally:
        _workers.reset(token)


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo mean with its standard error and provenance."""

    mean: float
    std_error: float
    samples: int
    seed: tuple[int, int]

    def z(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == target else math.copysign(math.inf, self.mean - target)
        return (self.mean - target) / self.std_error


@dataclass(frozen=True)
class DensityEstimate(Estimate):
    """A Bernoulli mean; std_error = sqrt(mean (1 - mean) / samples)."""


@dataclass(frozen=True)
class Moments:
    """Column means and sample variances of a batched estimate."""

    mean: np.ndarray
    var: np.ndarray
    count: int

    def std_error(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.var, 0.0) / self.count)


def batch_sizes(samples: int, batch_size: int = DEFAULT_BATCH) -> list[int]:
    if samples <= 0:
        raise ValueError("samples must be positive")
    full, rest = divmod(int(samples), batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def batched_moments(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    samples: int,
    rng,
    batch_size: int = DEFAULT_BATCH,
) -> Moments:
    """Sum ``fn(gen_k, m_k)`` over the batch plan.

    ``fn`` returns an array of shape (m,) or (m, k); moments are per column.
    """
    sizes = batch_sizes(samples, batch_size)

    def run(k: int):
        vals = np.asarray(fn(rng.derive(k).generator, sizes[k]), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        return vals.sum(axis=0), (vals * vals).sum(axis=0)

    nw = worker_count()
    if nw > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(k) for k in range(len(sizes))]

    s1 = np.array([math.fsum(col) for col in zip(*(p[0] for p in parts))])
    s2 = np.array([math.fsum(col) for col in zip(*(p[1] for p in parts))])
    n = int(samples)
    mean = s1 / n
    var = (s2 - n * mean * mean) / max(n - 1, 1)
    return Moments(mean=mean, var=np.maximum(var, 0.0), count=n)


def batched_reduce(
    fn: Callable[[np.random.Generator, int], tuple],
    samples: int,
    rng,
    batch_size: int = DEFAULT_BATCH,
) -> tuple:
    """Elementwise sum of the tuples ``fn(gen_k, m_k)`` over the batch plan, in batch order."""
    sizes = batch_sizes(samples, batch_size)

    def run(k: int):
        return fn(rng.derive(k).generator, sizes[k])

    nw = worker_count()
    if nw > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(k) for k in range(len(sizes))]
    total = list(parts[0])
    for p in parts[1:]:
        for i, v in enumerate(p):
            total[i] = total[i] + v
    return tuple(total)


def bernoulli_estimate(mean: float, samples: int, seed: tuple[int, int]) -> DensityEstimate:
    m = min(max(mean, 0.0), 1.0)
    return DensityEstimate(mean=float(mean), std_error=math.sqrt(m * (1 - m) / samples), samples=int(samples), seed=seed)
