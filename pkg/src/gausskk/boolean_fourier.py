"""Exact Fourier analysis of Boolean functions on {-1, 1}^n for n <= 20.

Truth tables are indexed by integers x in [0, 2^n): bit i of x set means
x_i = -1. Coefficients are indexed by subset masks the same way, so the
character chi_S(x) equals (-1)^{popcount(x & S)}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .sampling import as_stream

__all__ = [
    "BooleanFunction",
    "MAX_VARS",
    "fwht",
    "exact_fourier",
    "inverse_fourier",
    "dictator",
    "majority",
    "tribes",
    "influences",
    "low_level_weight_boolean",
    "random_monotone",
    "is_monotone",
    "tribes_params_near_half",
]

MAX_VARS = 20


@dataclass(frozen=True, eq=False)
class BooleanFunction:
    n: int
    table: np.ndarray

    def __post_init__(self):
        if not 0 <= self.n <= MAX_VARS:
            raise ContractViolation(f"n must lie in [0, {MAX_VARS}]")
        t = np.asarray(self.table, dtype=np.int8)
        if t.shape != (1 << self.n,):
            raise ContractViolation("truth table must have exactly 2^n entries")
        if not np.all(np.abs(t) == 1):
            raise ContractViolation("truth table values must be +-1")
        object.__setattr__(self, "table", t)

    @staticmethod
    def from_callable(n: int, fn) -> "BooleanFunction":
        """Build from fn(X) on the (2^n, n) matrix of +-1 points."""
        return BooleanFunction(n, np.asarray(fn(points(n)), dtype=np.int8))


def points(n: int) -> np.ndarray:
    idx = np.arange(1 << n)[:, None]
    bits = (idx >> np.arange(n)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along a length-2^n axis."""
    a = np.array(a, dtype=float)
    size = a.shape[0]
    h = 1
    while h < size:
        v = a.reshape(-1, 2, h)
        top = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = top - v[:, 1, :]
        h *= 2
    return a


def exact_fourier(f: BooleanFunction) -> np.ndarray:
    """All 2^n coefficients f_hat(S), indexed by subset mask."""
    if f.n > MAX_VARS:
        raise ContractViolation(f"n must be at most {MAX_VARS}")
    return fwht(f.table) / (1 << f.n)


def inverse_fourier(coeffs: np.ndarray) -> np.ndarray:
    return fwht(coeffs)


def dictator(n: int, i: int = 0) -> BooleanFunction:
    return BooleanFunction.from_callable(n, lambda x: x[:, i])


def majority(n: int) -> BooleanFunction:
    if n % 2 == 0:
        raise ContractViolation("majority needs an odd number of variables")
    return BooleanFunction.from_callable(n, lambda x: np.sign(x.sum(axis=1, dtype=int)))


def tribes(w: int, k: int) -> BooleanFunction:
    """OR of k disjoint ANDs of width w; variable j*w + i sits in tribe j. True is +1."""
    if w < 1 or k < 1 or w * k > MAX_VARS:
        raise ContractViolation(f"need w, k >= 1 and w*k <= {MAX_VARS}")

    def fn(x):
        tr = (x.reshape(x.shape[0], k, w) == 1).all(axis=2)
        return np.where(tr.any(axis=1), 1, -1)

    return BooleanFunction.from_callable(w * k, fn)


def influences(f: BooleanFunction) -> np.ndarray:
    """Inf_i(f) = Pr_x[f(x) != f(x with coordinate i flipped)], by enumeration."""
    idx = np.arange(1 << f.n)
    return np.array([np.mean(f.table != f.table[idx ^ (1 << i)]) for i in range(f.n)])


def low_level_weight_boolean(f: BooleanFunction) -> tuple[float, float]:
    """(W^{=0}, W^{=1}) from the exact spectrum."""
    c = exact_fourier(f)
    singles = c[[1 << i for i in range(f.n)]]
    return float(c[0] ** 2), float(np.sum(singles ** 2))


def is_monotone(f: BooleanFunction) -> bool:
    """Non-decreasing in every coordinate in the +-1 order."""
    idx = np.arange(1 << f.n)
    for i in range(f.n):
        up = idx[(idx >> i) & 1 == 1]  # x_i = -1
        if np.any(f.table[up] > f.table[up ^ (1 << i)]):
            return False
    return True


def random_monotone(n: int, seeds: int, rng) -> BooleanFunction:
    """Upward closure of ``seeds`` random points.

    A test-data generator, not a uniform draw from monotone functions.
    """
    gen = as_stream(rng).generator
    pos = np.zeros(1 << n, dtype=bool)
    pos[gen.integers(0, 1 << n, size=seeds)] = True
    # y dominates x iff the -1 set of y is a subset of the -1 set of x,
    # so push each seed down to every submask
    for i in range(n):
        v = pos.reshape(-1, 2, 1 << i)
        v[:, 0, :] |= v[:, 1, :]
    return BooleanFunction(n, np.where(pos, 1, -1))


def tribes_params_near_half(n: int) -> tuple[int, int]:
    """Factorization n = w*k whose tribes function has Pr[true] closest to 1/2."""
    best = None
    for w in range(1, n + 1):
        if n % w:
            continue
        k = n // w
        pr = 1 - (1 - 2.0 ** -w) ** k
        key = (abs(pr - 0.5), w)
        if best is None or key < best[0]:
            best = (key, (w, k))
    return best[1]
