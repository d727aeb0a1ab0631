"""
Unit tests for the Cox partial-likelihood losses and the Breslow baseline.
"""

import numpy as np
import pytest

from src.exceptions import InvalidArgumentError
from src.survival.cox import SurvivalOutcome, breslow_baseline, cox_loss_exact, cox_loss_fast, cox_loss_grad


def _random_outcome(rng, n, ties=False):
    durations = rng.integers(1, 6, size=n).astype(float) if ties else rng.permutation(np.arange(1, n + 1)).astype(float)
    events = (rng.uniform(size=n) < 0.7).astype(int)
    events[0] = 1
    return SurvivalOutcome(durations, events)


@pytest.mark.parametrize("loss", [cox_loss_exact, cox_loss_fast])
def test_three_patient_hand_case(loss, toy_outcome):
    assert loss(np.zeros(3), toy_outcome) == pytest.approx(np.log(6.0))


@pytest.mark.parametrize("loss", [cox_loss_exact, cox_loss_fast])
def test_single_event_patient_has_zero_loss(loss):
    assert loss(np.array([1.3]), SurvivalOutcome([2.0], [1])) == pytest.approx(0.0)


@pytest.mark.parametrize("loss", [cox_loss_exact, cox_loss_fast])
def test_no_events_is_rejected(loss):
    with pytest.raises(InvalidArgumentError):
        loss(np.zeros(2), SurvivalOutcome([1.0, 2.0], [0, 0]))


@pytest.mark.parametrize("n", [50, 500])
def test_fast_equals_exact_on_distinct_durations(n, rng):
    outcome = _random_outcome(rng, n)
    theta = rng.normal(size=n)
    assert cox_loss_fast(theta, outcome) == pytest.approx(cox_loss_exact(theta, outcome), rel=1e-10)
    np.testing.assert_allclose(cox_loss_grad(theta, outcome, fast=True), cox_loss_grad(theta, outcome, fast=False), atol=1e-10)


def test_fast_loss_deviates_on_ties(rng):
    outcome = _random_outcome(rng, 200, ties=True)
    theta = rng.normal(size=200)
    gap = cox_loss_fast(theta, outcome) - cox_loss_exact(theta, outcome)
    # the running prefix sees fewer tied rows than the full risk set
    assert gap < 0


def test_tied_censored_rows_stay_in_fast_risk_set():
    outcome = SurvivalOutcome([1.0, 1.0], [1, 0])
    theta = np.array([0.0, 0.0])
    assert cox_loss_fast(theta, outcome) == pytest.approx(np.log(2.0))


@pytest.mark.parametrize("fast", [True, False])
@pytest.mark.parametrize("ties", [True, False])
def test_shift_invariance(fast, ties, rng):
    outcome = _random_outcome(rng, 60, ties=ties)
    theta = rng.normal(size=60)
    loss = cox_loss_fast if fast else cox_loss_exact
    assert loss(theta + 7.5, outcome) == pytest.approx(loss(theta, outcome), rel=1e-10)
    grad = cox_loss_grad(theta, outcome, fast=fast)
    assert grad.sum() == pytest.approx(0.0, abs=1e-10)
    np.testing.assert_allclose(cox_loss_grad(theta + 7.5, outcome, fast=fast), grad, atol=1e-10)


def test_two_patient_gradient():
    grad = cox_loss_grad(np.zeros(2), SurvivalOutcome([1.0, 2.0], [1, 1]), fast=False)
    np.testing.assert_allclose(grad, [-0.5, 0.5])


@pytest.mark.parametrize("fast", [True, False])
@pytest.mark.parametrize("reduction", ["sum", "mean"])
def test_gradient_matches_finite_differences(fast, reduction, rng):
    outcome = _random_outcome(rng, 30, ties=not fast)
    theta = rng.normal(size=30)
    loss = cox_loss_fast if fast else cox_loss_exact
    grad = cox_loss_grad(theta, outcome, fast=fast, reduction=reduction)
    h = 1e-6
    for j in range(30):
        bump = np.zeros(30)
        bump[j] = h
        numeric = (loss(theta + bump, outcome, reduction) - loss(theta - bump, outcome, reduction)) / (2 * h)
        assert grad[j] == pytest.approx(numeric, rel=1e-6, abs=1e-7)


def test_mean_reduction_divides_by_event_count(rng):
    outcome = _random_outcome(rng, 40)
    theta = rng.normal(size=40)
    assert cox_loss_exact(theta, outcome, "mean") == pytest.approx(cox_loss_exact(theta, outcome) / outcome.n_events)
    with pytest.raises(InvalidArgumentError):
        cox_loss_exact(theta, outcome, "median")


def test_large_scores_stay_finite():
    outcome = SurvivalOutcome([1.0, 2.0, 3.0], [1, 1, 1])
    theta = np.array([800.0, 790.0, -800.0])
    assert np.isfinite(cox_loss_exact(theta, outcome))
    assert np.all(np.isfinite(cox_loss_grad(theta, outcome)))


@pytest.mark.parametrize("durations, events", [([0.0, 1.0], [1, 1]), ([1.0, np.nan], [1, 0]), ([1.0, 2.0], [1, 2]), ([1.0], [1, 0])])
def test_outcome_validation(durations, events):
    with pytest.raises(InvalidArgumentError):
        SurvivalOutcome(durations, events)


def test_breslow_hand_computed():
    outcome = SurvivalOutcome([1.0, 2.0, 3.0, 4.0], [1, 0, 1, 1])
    H0 = breslow_baseline(np.zeros(4), outcome)
    np.testing.assert_allclose(H0.times, [1.0, 3.0, 4.0])
    np.testing.assert_allclose(H0.increments(), [1 / 4, 1 / 2, 1.0])
    assert H0(0.5) == 0.0
    assert H0(2.5) == pytest.approx(0.25)
    assert H0(10.0) == pytest.approx(1.75)


def test_breslow_is_nelson_aalen_for_zero_scores(rng):
    durations = rng.permutation(np.arange(1, 31)).astype(float)
    outcome = SurvivalOutcome(durations, np.ones(30, dtype=int))
    H0 = breslow_baseline(np.zeros(30), outcome)
    at_risk = 30 - np.arange(30)
    np.testing.assert_allclose(H0.cumulative, np.cumsum(1.0 / at_risk))
    assert np.all(np.diff(H0.cumulative) > 0)


def test_survival_curves_shape_and_monotonicity():
    outcome = SurvivalOutcome([1.0, 2.0, 3.0, 4.0], [1, 1, 0, 1])
    H0 = breslow_baseline(np.zeros(4), outcome)
    S = H0.survival([0.5, 2.0, 5.0], [0.0, 1.0])
    assert S.shape == (2, 3)
    assert np.all(np.diff(S, axis=1) <= 0)
    assert np.all(S[1] <= S[0])
