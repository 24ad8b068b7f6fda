import math

import numpy as np
import pytest

from gausskk.bodies import ball, empty_set, full_space, halfspace, slab
from gausskk.errors import ContractViolation
from gausskk.learners import (GaussianExamples, Hypothesis, HypothesisKind, evaluate_hypothesis,
                              general_convex_weak_learner, learn_halfspace_average, three_hypothesis_learner)
from gausskk.sampling import RngStream, chi_quantile

D_HALF = 0.6744897501960817


def test_hypothesis_predictions():
    x = np.array([[0.0, 0.0], [3.0, 0.0]])
    assert Hypothesis.full(2).predict(x).tolist() == [1, 1]
    assert Hypothesis.empty(2).predict(x).tolist() == [-1, -1]
    mb = Hypothesis.median_ball(2)
    assert mb.radius == pytest.approx(chi_quantile(2, 0.5))
    assert mb.predict(x).tolist() == [1, -1]
    hs = Hypothesis.halfspace([2.0, 0.0], 1.0)
    assert hs.predict(x).tolist() == [-1, 1]
    with pytest.raises(ContractViolation):
        hs.predict(np.zeros((1, 3)))
    with pytest.raises(ContractViolation):
        Hypothesis.halfspace([0.0, 0.0], 0.0)


def test_examples_source_labels():
    src = GaussianExamples(ball(3, 1.0), RngStream(1))
    x, y = src(500)
    assert np.array_equal(y > 0, np.linalg.norm(x, axis=1) <= 1.0)
    assert src.drawn == 500


def test_evaluate_hypothesis_exact_cases():
    assert evaluate_hypothesis(Hypothesis.full(4), full_space(4), 1000, RngStream(0)).mean == 1.0
    assert evaluate_hypothesis(Hypothesis.full(4), empty_set(4), 1000, RngStream(0)).mean == 0.0
    e = evaluate_hypothesis(Hypothesis.empty(4), halfspace(np.eye(4)[0], 0.0), 100_000, RngStream(1))
    assert abs(e.z(0.5)) <= 4


@pytest.mark.parametrize("n", [16, 64])
def test_three_hypothesis_learner_on_half_slab(n):
    res = three_hypothesis_learner(GaussianExamples(slab(n, D_HALF), RngStream(2, n)), 200_000, n)
    assert res.hypothesis.kind is HypothesisKind.MEDIAN_BALL
    assert res.gate == "passed"
    assert res.advantage > 3 * res.std_error
    # advantage scales like 1/sqrt(n)
    assert 0.1 < res.advantage * math.sqrt(n) < 0.5


def test_three_hypothesis_learner_gate_on_large_body():
    res = three_hypothesis_learner(GaussianExamples(ball(16, 100.0), RngStream(3)), 10_000, 16)
    assert res.gate == "full"
    assert res.hypothesis.kind is HypothesisKind.FULL


def test_three_hypothesis_learner_budget():
    with pytest.raises(ContractViolation):
        three_hypothesis_learner(GaussianExamples(ball(4, 1.0), RngStream(0)), 99, 4)


def test_halfspace_average_recovers_direction():
    n = 10
    w = RngStream(4).generator.standard_normal(n)
    w /= np.linalg.norm(w)
    body = halfspace(w, 0.3)
    x, y = GaussianExamples(body, RngStream(5))(20_000)
    h = learn_halfspace_average(x, y)
    assert h.w @ w > 0.97
    assert h.theta == pytest.approx(0.3, abs=0.1)
    agree = evaluate_hypothesis(h, body, 50_000, RngStream(6))
    assert agree.mean > 0.95


def test_halfspace_average_without_signal_is_constant():
    x = np.vstack([np.eye(2), -np.eye(2)] * 250)
    y = np.ones(1000)
    h = learn_halfspace_average(x, y)
    assert np.all(h.predict(x) == 1)


def test_halfspace_average_input_checks():
    with pytest.raises(ContractViolation):
        learn_halfspace_average(np.zeros((10, 2)), np.ones(10))
    with pytest.raises(ContractViolation):
        learn_halfspace_average(np.zeros((1000, 2)), np.zeros(1000))


def test_general_learner_on_halfspace():
    n = 32
    body = halfspace(np.eye(n)[0], 0.05)
    res = general_convex_weak_learner(GaussianExamples(body, RngStream(7)), 40_000, n)
    assert res.hypothesis.kind is HypothesisKind.HALFSPACE
    assert 0.5 + res.advantage >= 7 / 8


def test_general_learner_budget():
    with pytest.raises(ContractViolation):
        general_convex_weak_learner(GaussianExamples(ball(4, 1.0), RngStream(0)), 9999, 4)
