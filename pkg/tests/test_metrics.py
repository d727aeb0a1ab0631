"""
Unit tests for the concordance index and bootstrap intervals.
"""

import numpy as np
import pytest

from src.exceptions import InvalidArgumentError, UndefinedMetricError
from src.survival.cox import SurvivalOutcome
from src.survival.metrics import bootstrap_ci, concordance_index


def _exponential_outcome(rng, theta):
    death = rng.exponential(1.0 / np.exp(theta))
    censor = rng.exponential(2.0, size=theta.size)
    return SurvivalOutcome(np.minimum(death, censor), (death <= censor).astype(int))


def test_perfect_ranking():
    outcome = SurvivalOutcome([1.0, 2.0, 3.0, 4.0], [1, 1, 1, 1])
    assert concordance_index(np.array([4.0, 3.0, 2.0, 1.0]), outcome) == 1.0


def test_all_ties_give_half():
    outcome = SurvivalOutcome([1.0, 2.0, 3.0], [1, 1, 0])
    assert concordance_index(np.zeros(3), outcome) == 0.5


def test_hand_enumerated_case():
    outcome = SurvivalOutcome([1.0, 2.0, 3.0], [1, 0, 1])
    assert concordance_index(np.array([2.0, 1.0, 0.5]), outcome) == 1.0


def test_no_comparable_pairs():
    with pytest.raises(UndefinedMetricError):
        concordance_index(np.array([1.0, 2.0]), SurvivalOutcome([1.0, 2.0], [0, 0]))


def test_non_finite_scores_rejected():
    with pytest.raises(InvalidArgumentError):
        concordance_index(np.array([np.nan, 1.0]), SurvivalOutcome([1.0, 2.0], [1, 1]))


def test_monotone_invariance_and_antisymmetry(rng):
    theta = rng.normal(size=300)
    outcome = _exponential_outcome(rng, theta)
    c = concordance_index(theta, outcome)
    assert concordance_index(np.exp(2 * theta) + 1, outcome) == pytest.approx(c)
    assert concordance_index(-theta, outcome) == pytest.approx(1 - c)
    assert c > 0.6


def test_bootstrap_on_perfect_ranking():
    outcome = SurvivalOutcome(np.arange(1.0, 21.0), np.ones(20, dtype=int))
    report = bootstrap_ci(-np.arange(20.0), outcome, B=200, seed=0)
    assert (report.ci_low, report.c_index, report.ci_high) == (1.0, 1.0, 1.0)


def test_bootstrap_is_deterministic(rng):
    theta = rng.normal(size=150)
    outcome = _exponential_outcome(rng, theta)
    a = bootstrap_ci(theta, outcome, B=200, seed=3)
    b = bootstrap_ci(theta, outcome, B=200, seed=3)
    assert a.to_dict() == b.to_dict()
    assert a.ci_low <= a.c_index <= a.ci_high
    assert bootstrap_ci(theta, outcome, B=200, seed=4).ci_low != a.ci_low


def test_bootstrap_redraws_resamples_without_pairs():
    outcome = SurvivalOutcome([1.0, 2.0, 3.0], [1, 0, 0])
    report = bootstrap_ci(np.array([3.0, 2.0, 1.0]), outcome, B=50, seed=0)
    assert report.redraws > 0
    assert report.c_index == 1.0


def test_bootstrap_gives_up_when_pairs_are_too_rare(monkeypatch):
    from src.survival import metrics

    real = metrics._pair_counts
    calls = []

    def first_call_only(theta, durations, events):
        calls.append(1)
        return real(theta, durations, events) if len(calls) == 1 else (0.0, 0)

    monkeypatch.setattr(metrics, "_pair_counts", first_call_only)
    outcome = SurvivalOutcome([1.0, 2.0, 3.0], [1, 1, 1])
    with pytest.raises(UndefinedMetricError):
        bootstrap_ci(np.array([3.0, 2.0, 1.0]), outcome, B=5, seed=0)
    assert len(calls) == 1 + 10 * 5


def test_interval_narrows_with_more_rows():
    widths = {}
    for n in (200, 2000):
        per_seed = []
        for seed in range(3):
            gen = np.random.default_rng(seed)
            theta = gen.normal(size=n)
            report = bootstrap_ci(theta, _exponential_outcome(gen, theta), B=100, seed=seed)
            per_seed.append(report.ci_high - report.ci_low)
        widths[n] = np.mean(per_seed)
    assert widths[2000] < widths[200]


@pytest.mark.parametrize("B, confidence", [(0, 0.95), (10, 1.0)])
def test_bootstrap_argument_validation(B, confidence):
    outcome = SurvivalOutcome([1.0, 2.0], [1, 1])
    with pytest.raises(InvalidArgumentError):
        bootstrap_ci(np.array([1.0, 0.0]), outcome, B=B, confidence=confidence)
