import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gausskk._mc import workers
from gausskk.errors import ContractViolation, QueryBudgetExceeded
from gausskk.lowerbound import (C_LB, Entry, OracleState, Positive, RevealedIndex, SlabConjunctionSample,
                                actual_membership_prob, advantage_bound, augmented_query, bridge_gap,
                                build_hard_params, ideal_membership_prob, posterior_positive_prob,
                                run_adversary_game, run_query_sweep, sample_actual, sample_ideal,
                                slab_symmetric_difference, tv_poisson_vs_bernoulli, vector_difference_bound,
                                zero_query_bayes_error)
from gausskk.sampling import RngStream, cap_mass


@pytest.fixture(scope="module")
def small():
    return build_hard_params(16, 4, 2, M_override=400, seed=RngStream(1))


@pytest.fixture(scope="module")
def scaled():
    return build_hard_params(64, 16, 2, M_override=20_000, seed=RngStream(2))


# ---------------------------------------------------------------- parameters

def test_scaled_parameters(scaled):
    assert scaled.Lambda == pytest.approx(256 * math.log(2))
    assert 2 * cap_mass(64, scaled.d / 8) == pytest.approx(16.0 ** -2, rel=1e-10)
    assert scaled.p == pytest.approx(scaled.Lambda / 20_000)
    assert np.allclose(np.linalg.norm(scaled.S_actual, axis=1), 1, atol=1e-12)


def test_default_support_size():
    par = build_hard_params(64, 16, 2)
    assert par.M == math.ceil(100 * par.Lambda ** 2)
    assert not par.materializable
    with pytest.raises(ContractViolation):
        par.S_actual


def test_parameter_errors():
    with pytest.raises(ContractViolation):
        build_hard_params(16, 4, 2, M_override=10)
    with pytest.raises(ContractViolation):
        build_hard_params(16, 1, 2)


def test_chunked_and_materialized_support_agree(small):
    x = RngStream(3).generator.standard_normal((5, 16))
    assert np.array_equal(small.region_counts(x), (np.abs(x @ small.S_actual.T) > small.d).sum(axis=1))
    assert np.array_equal(small.region_indices(x[0]), np.flatnonzero(np.abs(small.S_actual @ x[0]) > small.d))


# ---------------------------------------------------------------- membership probabilities

def test_ideal_anchor(scaled):
    assert ideal_membership_prob(64, scaled.d, scaled.Lambda, 8.0) == pytest.approx(0.5, abs=1e-9)
    assert ideal_membership_prob(64, scaled.d, scaled.Lambda, scaled.d) == 1.0
    with pytest.raises(ContractViolation):
        ideal_membership_prob(64, scaled.d, scaled.Lambda, 0.0)


def test_ideal_sampler_frequency(scaled):
    x = np.zeros(64)
    x[0] = 8.0
    draws = 3000
    hits = sum(bool(sample_ideal(64, scaled.d, scaled.Lambda, RngStream(4, j)).contains(x)) for j in range(draws))
    assert abs(hits / draws - 0.5) <= 3.5 * math.sqrt(0.25 / draws)


def test_ideal_sampler_zero_lambda():
    assert sample_ideal(5, 1.0, 0.0, RngStream(0)).contains(np.full(5, 100.0))


def test_actual_membership_frequency(small):
    x = RngStream(5).generator.standard_normal(16) * 1.2
    prob = actual_membership_prob(small, x)
    hits = np.mean([bool(sample_actual(small, RngStream(6, j)).contains(x)[0]) for j in range(3000)])
    assert abs(hits - prob) <= 3.5 * math.sqrt(prob * (1 - prob) / 3000)


def test_mid_norm_closeness(scaled):
    n = 64
    half = 8 * math.sqrt(n * math.log(n))
    bound = 1.0 * 2 * math.log2(16) * math.sqrt(math.log(n)) / math.sqrt(n)
    for sq in np.linspace(n - half, n + half, 9):
        if sq <= 0:
            continue
        p = ideal_membership_prob(n, scaled.d, scaled.Lambda, math.sqrt(sq))
        assert abs(p - 0.5) <= bound


@pytest.mark.slow
def test_bridge_at_default_support():
    par = build_hard_params(64, 16, 2, seed=RngStream(7))
    gap, se = bridge_gap(par, 200, RngStream(8))
    assert abs(gap) <= 0.02


# ---------------------------------------------------------------- oracle

def literal_query(state_v, f_active, region):
    """Walk the region in order exactly as the oracle is described; returns (answer, new state)."""
    v = state_v.copy()
    for i in region:
        if v[i] == Entry.ZERO:
            continue
        if v[i] == Entry.ONE:
            return RevealedIndex(int(i)), v
        if i in f_active:
            v[i] = Entry.ONE
            return RevealedIndex(int(i)), v
        v[i] = Entry.ZERO
    return Positive, v


@given(st.integers(0, 10_000), st.integers(1, 25))
def test_oracle_matches_literal_walk_and_never_rewrites(seed, queries):
    par = build_hard_params(16, 4, 2, M_override=400, seed=RngStream(1))
    root = RngStream(seed)
    f = sample_actual(par, root.derive(0))
    state = OracleState(par.M)
    gen = root.derive(1).generator
    active = set(f.active.tolist())
    for q in range(queries):
        x = gen.standard_normal(16) * gen.uniform(0.5, 2.0)
        before = state.v.copy()
        expect, v_expect = literal_query(before, active, par.region_indices(x))
        got = augmented_query(state, f, x)
        assert got == expect
        assert np.array_equal(state.v, v_expect)
        settled = before != Entry.UNSET
        assert np.array_equal(state.v[settled], before[settled])
        assert state.ones <= q + 1
    # every One is an active index, every Zero an inactive one
    assert set(np.flatnonzero(state.v == Entry.ONE)) <= active
    assert not set(np.flatnonzero(state.v == Entry.ZERO)) & active


def test_positive_answer_agrees_with_membership(small):
    f = sample_actual(small, RngStream(9))
    state = OracleState(small.M)
    gen = RngStream(10).generator
    for _ in range(50):
        x = gen.standard_normal(16)
        ans = augmented_query(state, f, x)
        assert (ans is Positive) == bool(f.contains(x)[0])


def test_empty_target_always_positive(small):
    f = SlabConjunctionSample(np.array([], dtype=int), small)
    state = OracleState(small.M)
    assert augmented_query(state, f, np.full(16, 10.0)) is Positive
    assert state.ones == 0


def test_query_budget(small):
    f = sample_actual(small, RngStream(11))
    state = OracleState(small.M, cap=2)
    augmented_query(state, f, np.ones(16))
    augmented_query(state, f, np.ones(16))
    with pytest.raises(QueryBudgetExceeded):
        augmented_query(state, f, np.ones(16))
    with pytest.raises(ContractViolation):
        augmented_query(OracleState(small.M), f, np.ones(3))


def test_posterior_probability_cases(small):
    state = OracleState(small.M)
    x = RngStream(12).generator.standard_normal((4, 16)) * 2
    prior = posterior_positive_prob(small, state, x)
    assert np.allclose(prior, actual_membership_prob(small, x))
    region = np.abs(x[0] @ small.S_actual.T) > small.d
    idx = np.flatnonzero(region)
    state.v[idx[0]] = Entry.ONE
    assert posterior_positive_prob(small, state, x[:1])[0] == 0.0
    state.v[idx[0]] = Entry.ZERO
    p = posterior_positive_prob(small, state, x[:1])[0]
    assert p == pytest.approx((1 - small.p) ** (len(idx) - 1))


# ---------------------------------------------------------------- games

def test_game_invariants(scaled):
    s = 16
    rep = run_adversary_game(scaled, "random", s, 200, 0, RngStream(13))
    assert np.all(rep.ones <= s)
    assert np.mean(rep.zeros <= 2 * s / scaled.p) >= 0.99
    assert math.isnan(rep.error)


def test_game_sphere_strategy_and_callable(small):
    rep = run_adversary_game(small, "ball", 5, 20, 50, RngStream(14))
    assert 0 <= rep.error <= 1 and np.all(rep.ones <= 5)
    fixed = lambda state, par, gen: np.ones(par.n)
    rep2 = run_adversary_game(small, fixed, 5, 20, 50, RngStream(14))
    # repeating one query reveals at most one slab
    assert np.all(rep2.ones <= 1)
    with pytest.raises(ContractViolation):
        run_adversary_game(small, "spiral", 1, 1, 1, RngStream(0))


def test_game_deterministic_across_workers(small):
    with workers(1):
        a = run_query_sweep(small, "random", [0, 3], 12, 40, RngStream(15))
    with workers(3):
        b = run_query_sweep(small, "random", [0, 3], 12, 40, RngStream(15))
    for ra, rb in zip(a.reports, b.reports):
        assert np.array_equal(ra.errors, rb.errors) and np.array_equal(ra.zeros, rb.zeros)


def test_zero_query_error_matches_bayes_error(scaled):
    sweep = run_query_sweep(scaled, "random", [0], 150, 200, RngStream(16))
    bayes = zero_query_bayes_error(scaled, 6000, RngStream(17))
    r = sweep.reports[0]
    assert abs(r.error - bayes.mean) <= 3 * math.hypot(r.std_error, bayes.std_error)
    assert 0.5 - bayes.mean <= advantage_bound(64, 16, 2, C_LB)


def test_error_non_increasing_in_queries(scaled):
    sweep = run_query_sweep(scaled, "random", [0, 4, 16, 64], 80, 200, RngStream(18))
    for a, b in zip(sweep.reports, sweep.reports[1:]):
        diff = b.errors - a.errors
        assert diff.mean() <= 3 * diff.std(ddof=1) / math.sqrt(len(diff))


def test_advantage_bound_value():
    assert advantage_bound(64, 16, 2) == pytest.approx(0.35 * 2 * 4 * math.sqrt(math.log(64)) / 8)


# ---------------------------------------------------------------- Poissonization

def tv_brute_force(M, lam, cap=12):
    """Sum over all multiplicity vectors in {0..cap}^M, Poisson tail beyond cap ignored."""
    p = lam / M
    pois = [math.exp(-p) * p ** k / math.factorial(k) for k in range(cap + 1)]
    bern = [1 - p, p] + [0.0] * (cap - 1)
    total = 0.0
    for ks in itertools.product(range(cap + 1), repeat=M):
        a = math.prod(pois[k] for k in ks)
        b = math.prod(bern[k] for k in ks)
        total += abs(a - b)
    tail = 1 - sum(pois) ** M
    return 0.5 * (total + tail)


@pytest.mark.parametrize("M,lam", [(1, 0.1), (1, 1.0), (2, 0.5), (3, 1.0), (4, 0.1)])
def test_tv_matches_brute_force(M, lam):
    assert tv_poisson_vs_bernoulli(M, lam) == pytest.approx(tv_brute_force(M, lam, cap=6 if M > 2 else 12),
                                                            abs=1e-12)


def test_tv_single_element_closed_form():
    p = 0.1
    ref = 0.5 * (abs(math.exp(-p) - (1 - p)) + abs(p * math.exp(-p) - p) + (1 - math.exp(-p) - p * math.exp(-p)))
    assert tv_poisson_vs_bernoulli(1, 0.1) == pytest.approx(ref, rel=1e-12)
    assert tv_poisson_vs_bernoulli(1, 0.1) == pytest.approx(0.009516258196404, rel=1e-9)


def test_tv_grid_bound():
    for M in range(1, 9):
        for lam in (0.1, 0.5, 1.0):
            assert tv_poisson_vs_bernoulli(M, lam) <= 2 * lam * lam / M


def test_tv_edge_cases():
    assert tv_poisson_vs_bernoulli(5, 0.0) == 0.0
    with pytest.raises(ContractViolation):
        tv_poisson_vs_bernoulli(13, 1.0)
    with pytest.raises(ContractViolation):
        tv_poisson_vs_bernoulli(2, 3.0)


# ---------------------------------------------------------------- slab geometry

def test_slab_difference_identical_is_zero():
    z = np.eye(8)[0]
    assert slab_symmetric_difference(z, z, 1.0, 10_000, RngStream(0)).mean == 0.0


def test_slab_difference_bound_and_trend():
    n = 32
    z = np.eye(n)[0]
    vals = []
    for i, delta in enumerate((0.02, 0.05, 0.1)):
        theta = 2 * math.asin(delta / 2)
        zp = math.cos(theta) * z + math.sin(theta) * np.eye(n)[1]
        assert np.linalg.norm(z - zp) == pytest.approx(delta)
        e = slab_symmetric_difference(z, zp, 1.0, 200_000, RngStream(19, i))
        assert e.mean <= vector_difference_bound(delta) + 3 * e.std_error
        vals.append(e)
    for a, b in zip(vals, vals[1:]):
        assert b.mean >= a.mean - 3 * math.hypot(a.std_error, b.std_error)
    assert vector_difference_bound(0.1) == pytest.approx(0.759, abs=1e-3)


def test_slab_difference_preconditions():
    with pytest.raises(ContractViolation):
        slab_symmetric_difference(np.eye(3)[0], np.eye(3)[1], 1.0, 10, RngStream(0))
    with pytest.raises(ContractViolation):
        slab_symmetric_difference(np.ones(3), np.ones(3), 1.0, 10, RngStream(0))
