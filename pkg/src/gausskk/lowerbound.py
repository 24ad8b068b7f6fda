"""The hard distribution over slab conjunctions and the membership-query game.

A target f is the conjunction of slabs |z.x| <= d over an active subset of a
fixed support S_actual of M unit vectors; each index is active independently
with probability p = Lambda/M. Its Poissonized twin draws a Poisson(Lambda)
number of fresh uniform normals.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from ._mc import DEFAULT_BATCH, DensityEstimate, batched_moments, bernoulli_estimate, worker_count
from .bodies import Body, full_space, slab_conjunction
from .errors import ContractViolation, QueryBudgetExceeded
from .sampling import RngStream, cap_mass, solve_slab_width

__all__ = [
    "HardDistParams",
    "SlabConjunctionSample",
    "OracleState",
    "Entry",
    "Positive",
    "RevealedIndex",
    "GameReport",
    "SweepReport",
    "C_LB",
    "build_hard_params",
    "sample_actual",
    "sample_ideal",
    "ideal_membership_prob",
    "actual_membership_prob",
    "augmented_query",
    "posterior_positive_prob",
    "run_adversary_game",
    "run_query_sweep",
    "zero_query_bayes_error",
    "bridge_gap",
    "tv_poisson_vs_bernoulli",
    "slab_symmetric_difference",
    "vector_difference_bound",
    "advantage_bound",
]

C_LB = 0.35
CHUNK = 1 << 16
MATERIALIZE_LIMIT = 1 << 24  # floats


@dataclass(frozen=True, eq=False)
class HardDistParams:
    n: int
    s: int
    gamma: float
    d: float
    Lambda: float
    M: int
    p: float
    stream: RngStream = field(repr=False)

    def chunk(self, j: int) -> np.ndarray:
        """Rows [j*CHUNK, (j+1)*CHUNK) of S_actual, regenerated from the stream."""
        size = min(CHUNK, self.M - j * CHUNK)
        g = self.stream.derive(j).generator.standard_normal((size, self.n))
        return g / np.linalg.norm(g, axis=1)[:, None]

    @property
    def chunks(self) -> int:
        return -(-self.M // CHUNK)

    @cached_property
    def S_actual(self) -> np.ndarray:
        """The full support, materialized (only for moderate M * n)."""
        if self.M * self.n > MATERIALIZE_LIMIT:
            raise ContractViolation("support too large to materialize; use chunked access")
        return np.vstack([self.chunk(j) for j in range(self.chunks)])

    @property
    def materializable(self) -> bool:
        return self.M * self.n <= MATERIALIZE_LIMIT

    def region_indices(self, x: np.ndarray) -> np.ndarray:
        """S_actual(x): indices i with |z_i.x| > d, in generation order."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ContractViolation(f"query must be a vector of dimension {self.n}")
        if self.materializable:
            return np.flatnonzero(np.abs(self.S_actual @ x) > self.d)
        parts = [np.flatnonzero(np.abs(self.chunk(j) @ x) > self.d) + j * CHUNK for j in range(self.chunks)]
        return np.concatenate(parts)

    def region_counts(self, xs: np.ndarray) -> np.ndarray:
        """|S_actual(x)| for each row of xs."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.materializable:
            return (np.abs(xs @ self.S_actual.T) > self.d).sum(axis=1)
        counts = np.zeros(xs.shape[0], dtype=np.int64)
        for j in range(self.chunks):
            counts += (np.abs(xs @ self.chunk(j).T) > self.d).sum(axis=1)
        return counts


def build_hard_params(n: int, s: int, gamma: float = 2, M_override: int | None = None, seed=0) -> HardDistParams:
    """Scaled hard-distribution parameters: slab width d with two-sided tail s^-gamma,
    Lambda = s^gamma ln 2, support size M and p = Lambda / M."""
    if s < 2 or gamma < 1 or n < 2:
        raise ContractViolation("need s >= 2, gamma >= 1 and n >= 2")
    tail = float(s) ** (-gamma)
    d = solve_slab_width(n, tail)
    lam = float(s) ** gamma * math.log(2)
    M = int(M_override) if M_override is not None else max(10_000, math.ceil(100 * lam * lam))
    p = lam / M
    if p > 1:
        raise ContractViolation(f"p = Lambda/M = {p:.4g} exceeds 1; increase M")
    stream = seed if isinstance(seed, RngStream) else RngStream(int(seed), 0)
    return HardDistParams(n, int(s), float(gamma), d, lam, M, p, stream)


@dataclass(frozen=True, eq=False)
class SlabConjunctionSample:
    active: np.ndarray  # sorted indices into S_actual
    params: HardDistParams = field(repr=False)

    def is_active(self, idx: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self.active, idx)
        pos = np.minimum(pos, max(len(self.active) - 1, 0))
        return (self.active[pos] == idx) if len(self.active) else np.zeros(len(idx), dtype=bool)

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if len(self.active) == 0:
            return np.ones(x.shape[0], dtype=bool)
        par = self.params
        if par.materializable:
            z = par.S_actual[self.active]
        else:
            z = np.vstack([par.chunk(int(j))[self.active[(self.active // CHUNK) == j] - j * CHUNK]
                           for j in np.unique(self.active // CHUNK)])
        return np.all(np.abs(x @ z.T) <= par.d, axis=1)


def sample_actual(params: HardDistParams, rng: RngStream) -> SlabConjunctionSample:
    """Each support index active independently with probability p."""
    u = rng.generator.random(params.M)
    return SlabConjunctionSample(np.flatnonzero(u < params.p), params)


def sample_ideal(n: int, d: float, Lambda: float, rng: RngStream) -> Body:
    """Poisson(Lambda) many fresh uniform normals, as a slab conjunction."""
    gen = rng.generator
    N = int(gen.poisson(Lambda))
    if N == 0:
        return full_space(n)
    g = gen.standard_normal((N, n))
    return slab_conjunction(g, d, label=f"ideal:{N}")


def ideal_membership_prob(n: int, d: float, Lambda: float, norm_x: float) -> float:
    """exp(-Lambda * mu(Region(x))) with mu = Pr_u[|u.x| > d]."""
    if norm_x <= 0:
        raise ContractViolation("norm must be positive")
    if norm_x <= d:
        return 1.0
    mu = 2 * cap_mass(n, min(1.0, d / norm_x))
    return math.exp(-Lambda * mu)


def actual_membership_prob(params: HardDistParams, x) -> np.ndarray | float:
    """(1 - p)^{|S_actual(x)|} for one point or a batch."""
    x = np.asarray(x, dtype=float)
    counts = params.region_counts(x)
    out = np.power(1.0 - params.p, counts)
    return float(out[0]) if x.ndim == 1 else out


# ---------------------------------------------------------------- oracle

class Entry(enum.IntEnum):
    ZERO = 0
    ONE = 1
    UNSET = 2


class _PositiveAnswer:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "Positive"


Positive = _PositiveAnswer()


@dataclass(frozen=True)
class RevealedIndex:
    index: int


@dataclass
class OracleState:
    M: int
    cap: int | None = None
    v: np.ndarray = field(default=None, repr=False)
    queries_used: int = 0
    transcript: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.v is None:
            self.v = np.full(self.M, Entry.UNSET, dtype=np.int8)

    @property
    def ones(self) -> int:
        return int(np.count_nonzero(self.v == Entry.ONE))

    @property
    def zeros(self) -> int:
        return int(np.count_nonzero(self.v == Entry.ZERO))


def augmented_query(state: OracleState, f: SlabConjunctionSample, x) -> object:
    """Answer one membership query, revealing the first violated slab in order.

    Walks S_actual(x) in generation order: Zero entries are skipped, a One
    entry is revealed at once, an Unset entry is resolved from f (becoming One
    and revealed if active, Zero otherwise). Exhausting the walk answers Positive.
    """
    if state.cap is not None and state.queries_used >= state.cap:
        raise QueryBudgetExceeded(f"query budget of {state.cap} exhausted")
    idx = f.params.region_indices(x)
    vals = state.v[idx]
    stop = (vals == Entry.ONE) | ((vals == Entry.UNSET) & f.is_active(idx))
    hits = np.flatnonzero(stop)
    if hits.size == 0:
        walked = idx
        answer = Positive
    else:
        k = int(hits[0])
        walked = idx[:k]
        if vals[k] == Entry.UNSET:
            state.v[idx[k]] = Entry.ONE
        answer = RevealedIndex(int(idx[k]))
    unset = walked[state.v[walked] == Entry.UNSET]
    state.v[unset] = Entry.ZERO
    state.queries_used += 1
    state.transcript.append((np.array(x, dtype=float), answer))
    return answer


def posterior_positive_prob(params: HardDistParams, state: OracleState, xs: np.ndarray,
                            region: np.ndarray | None = None) -> np.ndarray:
    """Pr[f(x) = 1 | transcript]: 0 if S_actual(x) meets a One, else (1-p)^{|S_actual(x) minus Zeros|}."""
    xs = np.atleast_2d(xs)
    if region is None:
        region = np.abs(xs @ params.S_actual.T) > params.d
    r = region.astype(np.float32)
    ones = r @ (state.v == Entry.ONE).astype(np.float32)
    free = r @ (state.v != Entry.ZERO).astype(np.float32)
    prob = np.power(1.0 - params.p, free.astype(np.float64))
    return np.where(ones > 0, 0.0, prob)


# ---------------------------------------------------------------- game

Strategy = Callable[[OracleState, HardDistParams, np.random.Generator], np.ndarray]


def _strategy(kind) -> Strategy:
    if callable(kind):
        return kind
    if kind == "random":
        return lambda state, par, gen: gen.standard_normal(par.n)
    if kind == "ball":
        def ball(state, par, gen):
            g = gen.standard_normal(par.n)
            return g * (math.sqrt(par.n) / np.linalg.norm(g))
        return ball
    raise ContractViolation(f"unknown strategy {kind!r}; use 'random', 'ball' or a callable")


@dataclass(frozen=True)
class GameReport:
    queries: int
    error: float
    std_error: float
    trials: int
    ones: np.ndarray = field(repr=False)
    zeros: np.ndarray = field(repr=False)
    errors: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SweepReport:
    reports: list[GameReport]

    def at(self, q: int) -> GameReport:
        for r in self.reports:
            if r.queries == q:
                return r
        raise KeyError(q)


def _play(params: HardDistParams, strat: Strategy, checkpoints: list[int], eval_samples: int, sub: RngStream):
    f = sample_actual(params, sub.derive(0))
    qgen = sub.derive(1).generator
    xe = sub.derive(2).generator.standard_normal((eval_samples, params.n)) if eval_samples else None
    region = np.abs(xe @ params.S_actual.T) > params.d if eval_samples else None
    truth = f.contains(xe) if eval_samples else None
    state = OracleState(params.M, cap=max(checkpoints))
    out = []
    for q in range(max(checkpoints) + 1):
        if q in checkpoints:
            if eval_samples:
                pred = posterior_positive_prob(params, state, xe, region) >= 0.5
                err = float(np.mean(pred != truth))
            else:
                err = float("nan")
            out.append((state.ones, state.zeros, err))
        if q < max(checkpoints):
            augmented_query(state, f, strat(state, params, qgen))
    return out


def run_query_sweep(params: HardDistParams, strategy, checkpoints, trials: int, eval_samples: int,
                    rng: RngStream) -> SweepReport:
    """Play each trial once and score the exact-posterior predictor after each
    checkpoint query count, so all checkpoints share targets and test points."""
    if not params.materializable:
        raise ContractViolation("games need a materializable support; pass M_override")
    cps = sorted({int(c) for c in checkpoints})
    if cps[0] < 0:
        raise ContractViolation("query counts must be nonnegative")
    strat = _strategy(strategy)

    def run(t):
        return _play(params, strat, cps, eval_samples, rng.derive(t))

    nw = worker_count()
    if nw > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(run, range(trials)))
    else:
        results = [run(t) for t in range(trials)]
    reports = []
    for i, q in enumerate(cps):
        ones = np.array([r[i][0] for r in results])
        zeros = np.array([r[i][1] for r in results])
        errs = np.array([r[i][2] for r in results])
        mean = float(errs.mean())
        se = float(errs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
        reports.append(GameReport(q, mean, se, trials, ones, zeros, errs))
    return SweepReport(reports)


def run_adversary_game(params: HardDistParams, strategy, s_queries: int, trials: int, eval_samples: int,
                       rng: RngStream) -> GameReport:
    """Error of the exact-posterior predictor after s_queries oracle queries."""
    if s_queries < 0:
        raise ContractViolation("s_queries must be nonnegative")
    return run_query_sweep(params, strategy, [s_queries], trials, eval_samples, rng).reports[0]


def zero_query_bayes_error(params: HardDistParams, samples: int, rng: RngStream) -> DensityEstimate:
    """E[min(D(x), 1 - D(x))] with D the actual membership probability."""
    def fn(gen, m):
        prob = actual_membership_prob(params, gen.standard_normal((m, params.n)))
        return np.minimum(prob, 1 - prob)

    mom = batched_moments(fn, samples, rng, batch_size=min(DEFAULT_BATCH, 2048))
    return DensityEstimate(float(mom.mean[0]), float(mom.std_error()[0]), int(samples), rng.ident)


def bridge_gap(params: HardDistParams, samples: int, rng: RngStream) -> tuple[float, float]:
    """Mean over Gaussian x of actual minus ideal membership probability, with std error."""
    x = rng.generator.standard_normal((samples, params.n))
    act = np.atleast_1d(actual_membership_prob(params, x))
    norms = np.linalg.norm(x, axis=1)
    ideal = np.array([ideal_membership_prob(params.n, params.d, params.Lambda, float(r)) for r in norms])
    diff = act - ideal
    return float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(samples))


def advantage_bound(n: int, s: int, gamma: float, c: float = C_LB) -> float:
    """c * gamma * log2(s) * sqrt(ln n) / sqrt(n)."""
    return c * gamma * math.log2(s) * math.sqrt(math.log(n)) / math.sqrt(n)


# ---------------------------------------------------------------- Poissonization and slab geometry

def tv_poisson_vs_bernoulli(M: int, Lambda: float) -> float:
    """Exact total variation between independent Bernoulli(p) and Poisson(p)
    multiplicities on M elements, p = Lambda / M.

    Outcomes are grouped by how many elements carry each multiplicity
    (0..4, or 5+ folded together). Any outcome with a multiplicity >= 2 has
    Bernoulli mass 0, so the fold loses nothing.
    """
    if not 1 <= M <= 12:
        raise ContractViolation("exact enumeration supports 1 <= M <= 12")
    if Lambda < 0:
        raise ContractViolation("Lambda must be nonnegative")
    if Lambda == 0:
        return 0.0
    p = Lambda / M
    if p > 1:
        raise ContractViolation("Lambda / M must not exceed 1")
    ep = math.exp(-p)
    pois = [ep * p ** k / math.factorial(k) for k in range(5)]
    pois.append(max(0.0, 1.0 - sum(pois)))
    bern = [1 - p, p, 0.0, 0.0, 0.0, 0.0]
    cats = len(pois)
    total = 0.0

    def compositions(remaining: int, slots: int):
        if slots == 1:
            yield (remaining,)
            return
        for k in range(remaining + 1):
            for rest in compositions(remaining - k, slots - 1):
                yield (k,) + rest

    for ks in compositions(M, cats):
        mult = math.factorial(M)
        P = Q = 1.0
        for k, a, b in zip(ks, pois, bern):
            mult //= math.factorial(k)
            P *= a ** k
            Q *= b ** k
        total += mult * abs(P - Q)
    return 0.5 * total


def vector_difference_bound(delta: float) -> float:
    """5 delta sqrt(ln(1/delta))."""
    if delta <= 0:
        return 0.0
    return 5 * delta * math.sqrt(math.log(1 / delta))


def slab_symmetric_difference(z, z_prime, d: float, samples: int, rng: RngStream,
                              batch_size: int = DEFAULT_BATCH) -> DensityEstimate:
    """Pr_g[ slab_z(g) != slab_z'(g) ] for unit vectors z, z'."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(z_prime, dtype=float)
    if z.shape != zp.shape:
        raise ContractViolation("z and z' must have equal dimension")
    if abs(np.linalg.norm(z) - 1) > 1e-9 or abs(np.linalg.norm(zp) - 1) > 1e-9:
        raise ContractViolation("z and z' must be unit vectors")
    if np.linalg.norm(z - zp) > 1 / 3:
        raise ContractViolation("need |z - z'| <= 1/3")
    pair = np.vstack([z, zp])

    def fn(gen, m):
        proj = np.abs(gen.standard_normal((m, z.shape[0])) @ pair.T) <= d
        return proj[:, 0] != proj[:, 1]

    mom = batched_moments(fn, samples, rng, batch_size)
    return bernoulli_estimate(float(mom.mean[0]), samples, rng.ident)
