"""Weak learners for convex bodies under the Gaussian distribution.

Examples come from a *source*: any callable ``draw(m) -> (X, y)`` returning m
points and their +-1 labels. Sources are consumed sequentially in chunks, so
a budget in the millions never has to sit in memory at once.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._mc import DEFAULT_BATCH, DensityEstimate, batched_moments, bernoulli_estimate
from .bodies import Body
from .errors import ContractViolation
from .sampling import RngStream, chi_quantile

__all__ = [
    "HypothesisKind",
    "Hypothesis",
    "LearnResult",
    "GaussianExamples",
    "C_THR",
    "evaluate_hypothesis",
    "three_hypothesis_learner",
    "learn_halfspace_average",
    "general_convex_weak_learner",
]

C_THR = 1 / 40
CHUNK = 1 << 15
THETA_GRID = np.linspace(-3.0, 3.0, 101)

Source = Callable[[int], tuple[np.ndarray, np.ndarray]]


class HypothesisKind(enum.Enum):
    EMPTY = "empty"
    FULL = "full"
    MEDIAN_BALL = "median-ball"
    HALFSPACE = "halfspace"


@dataclass(frozen=True, eq=False)
class Hypothesis:
    kind: HypothesisKind
    n: int
    radius: float | None = None
    w: np.ndarray | None = None
    theta: float | None = None

    @staticmethod
    def empty(n: int) -> "Hypothesis":
        return Hypothesis(HypothesisKind.EMPTY, n)

    @staticmethod
    def full(n: int) -> "Hypothesis":
        return Hypothesis(HypothesisKind.FULL, n)

    @staticmethod
    def median_ball(n: int) -> "Hypothesis":
        return Hypothesis(HypothesisKind.MEDIAN_BALL, n, radius=chi_quantile(n, 0.5))

    @staticmethod
    def halfspace(w, theta: float) -> "Hypothesis":
        w = np.asarray(w, dtype=float)
        nw = np.linalg.norm(w)
        if nw == 0:
            raise ContractViolation("halfspace normal must be nonzero")
        return Hypothesis(HypothesisKind.HALFSPACE, w.shape[0], w=w / nw, theta=float(theta))

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if x.shape[1] != self.n:
            raise ContractViolation("point dimension does not match the hypothesis")
        if self.kind is HypothesisKind.EMPTY:
            return -np.ones(x.shape[0])
        if self.kind is HypothesisKind.FULL:
            return np.ones(x.shape[0])
        if self.kind is HypothesisKind.MEDIAN_BALL:
            return np.where(np.einsum("ij,ij->i", x, x) <= self.radius ** 2, 1.0, -1.0)
        return np.where(x @ self.w - self.theta > 0, 1.0, -1.0)

    def describe(self) -> str:
        if self.kind is HypothesisKind.HALFSPACE:
            return f"halfspace(theta={self.theta:.4g})"
        return self.kind.value


@dataclass(frozen=True)
class LearnResult:
    hypothesis: Hypothesis
    advantage: float
    std_error: float
    agreements: dict[str, float] = field(default_factory=dict)
    gate: str = ""  # "empty", "full" or "passed"
    volume_estimate: float = float("nan")


class GaussianExamples:
    """Labeled Gaussian examples for a body, drawn sequentially from one stream."""

    def __init__(self, body: Body, rng: RngStream):
        self.body = body
        self.gen = rng.generator
        self.drawn = 0

    def __call__(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        x = self.gen.standard_normal((m, self.body.dim))
        self.drawn += m
        return x, np.where(self.body.contains(x), 1.0, -1.0)


def evaluate_hypothesis(h: Hypothesis, body: Body, samples: int, rng: RngStream,
                        batch_size: int = DEFAULT_BATCH) -> DensityEstimate:
    """Pr[h(g) = K(g)] over fresh Gaussians."""
    if h.n != body.dim:
        raise ContractViolation("hypothesis and body dimensions differ")

    def fn(gen, m):
        x = gen.standard_normal((m, body.dim))
        return h.predict(x) == np.where(body.contains(x), 1.0, -1.0)

    mom = batched_moments(fn, samples, rng, batch_size)
    return bernoulli_estimate(float(mom.mean[0]), samples, rng.ident)


def _chunks(total: int):
    while total > 0:
        m = min(CHUNK, total)
        yield m
        total -= m


def _volume_gate(source: Source, count: int, n: int, c_thr: float) -> tuple[str, float]:
    pos = 0.0
    for m in _chunks(count):
        _, y = source(m)
        pos += float(np.sum(y > 0))
    vol = pos / count
    if abs(vol - 0.5) > c_thr / math.sqrt(n):
        return ("full" if vol > 0.5 else "empty"), vol
    return "passed", vol


def _held_out(source: Source, count: int, candidates: list[Hypothesis]) -> np.ndarray:
    hits = np.zeros(len(candidates))
    for m in _chunks(count):
        x, y = source(m)
        for i, h in enumerate(candidates):
            hits[i] += float(np.sum(h.predict(x) == y))
    return hits / count


def _pick(candidates: list[Hypothesis], agree: np.ndarray, count: int, gate: str, vol: float) -> LearnResult:
    best = int(np.argmax(agree))  # first maximum wins, so list order is the tie order
    a = float(agree[best])
    return LearnResult(candidates[best], a - 0.5, math.sqrt(a * (1 - a) / count),
                       {h.describe(): float(v) for h, v in zip(candidates, agree)}, gate, vol)


def three_hypothesis_learner(source: Source, budget: int, n: int, c_thr: float = C_THR) -> LearnResult:
    """Weak learner for symmetric bodies over {median ball, full, empty}.

    The first half of the budget runs the volume gate; the second half scores
    all three hypotheses and the best one is returned. The gate outcome is
    reported alongside.
    """
    if budget < 100:
        raise ContractViolation("budget must be at least 100")
    gate_n = budget // 2
    hold_n = budget - gate_n
    gate, vol = _volume_gate(source, gate_n, n, c_thr)
    cands = [Hypothesis.median_ball(n), Hypothesis.full(n), Hypothesis.empty(n)]
    return _pick(cands, _held_out(source, hold_n, cands), hold_n, gate, vol)


def learn_halfspace_average(x: np.ndarray, y: np.ndarray) -> Hypothesis:
    """Averaging halfspace learner: w = normalized mean of y*x, then an offset sweep.

    The offset is the grid value on [-3, 3] with the best training agreement,
    ties going to the smallest |theta|.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 1000:
        raise ContractViolation("need at least 1000 training examples")
    if not np.all(np.abs(y) == 1):
        raise ContractViolation("labels must be +-1")
    n = x.shape[1]
    mean = (y[:, None] * x).mean(axis=0)
    norm = float(np.linalg.norm(mean))
    order = np.argsort(np.abs(THETA_GRID), kind="stable")
    grid = THETA_GRID[order]
    if norm < 1e-12:
        # no direction signal: a halfspace far from the data acts as a constant
        w = np.zeros(n)
        w[0] = 1.0
        agree_full = float(np.mean(y > 0))
        return Hypothesis.halfspace(w, -1e6 if agree_full >= 0.5 else 1e6)
    w = mean / norm
    proj = x @ w
    ps = np.sort(proj)
    # positives predicted for proj > theta; count agreements per grid offset
    above = x.shape[0] - np.searchsorted(ps, grid, side="right")
    pos_proj = np.sort(proj[y > 0])
    pos_above = pos_proj.shape[0] - np.searchsorted(pos_proj, grid, side="right")
    neg_total = int(np.sum(y < 0))
    neg_above = above - pos_above
    agree = pos_above + (neg_total - neg_above)
    return Hypothesis.halfspace(w, float(grid[int(np.argmax(agree))]))


def general_convex_weak_learner(source: Source, budget: int, n: int, c_thr: float = C_THR) -> LearnResult:
    """Weak learner for arbitrary convex bodies.

    Budget split: half for the volume gate, a quarter to train the halfspace
    learner, a quarter to score Halfspace, MedianBall, Full and Empty (ties in
    that order).
    """
    if budget < 10_000:
        raise ContractViolation("budget must be at least 10^4")
    gate_n = budget // 2
    train_n = budget // 4
    hold_n = budget - gate_n - train_n
    gate, vol = _volume_gate(source, gate_n, n, c_thr)
    xs, ys = [], []
    for m in _chunks(train_n):
        x, y = source(m)
        xs.append(x)
        ys.append(y)
    hs = learn_halfspace_average(np.vstack(xs), np.concatenate(ys))
    cands = [hs, Hypothesis.median_ball(n), Hypothesis.full(n), Hypothesis.empty(n)]
    return _pick(cands, _held_out(source, hold_n, cands), hold_n, gate, vol)
