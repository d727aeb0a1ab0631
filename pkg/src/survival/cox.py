"""
Cox partial-likelihood losses, their gradients and the Breslow baseline hazard.

The exact loss uses full risk sets R(t_i) = {j : t_j >= t_i}, so tied rows all
share one denominator. The fast loss walks rows in descending time and takes a
running log-sum-exp, which is exact when durations are distinct. Within a tie
group censored rows are visited before events (then by original index), so
censored rows at time t stay in the risk set of the events at t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.exceptions import InvalidArgumentError

REDUCTIONS = ("sum", "mean")


@dataclass(frozen=True, eq=False)
class SurvivalOutcome:
    durations: np.ndarray
    events: np.ndarray

    def __post_init__(self) -> None:
        durations = np.asarray(self.durations, dtype=float).reshape(-1)
        events = np.asarray(self.events).reshape(-1)
        if durations.shape != events.shape:
            raise InvalidArgumentError(
                f"durations and events differ in length ({durations.size} vs {events.size})"
            )
        if not np.all(np.isfinite(durations)) or np.any(durations <= 0):
            raise InvalidArgumentError("Durations must be finite and strictly positive")
        if not np.all(np.isin(events, (0, 1))):
            raise InvalidArgumentError("Event indicators must be 0 or 1")
        object.__setattr__(self, "durations", durations)
        object.__setattr__(self, "events", events.astype(int))

    def __len__(self) -> int:
        return self.durations.size

    @property
    def n_events(self) -> int:
        return int(self.events.sum())

    def subset(self, rows: np.ndarray) -> "SurvivalOutcome":
        return SurvivalOutcome(self.durations[rows], self.events[rows])


def _prepare(theta: np.ndarray, outcome: SurvivalOutcome, reduction: str) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != len(outcome):
        raise InvalidArgumentError(f"theta has {theta.size} rows, outcome has {len(outcome)}")
    if outcome.n_events == 0:
        raise InvalidArgumentError("The Cox loss needs at least one observed event")
    if reduction not in REDUCTIONS:
        raise InvalidArgumentError(f"reduction must be one of {REDUCTIONS}, got {reduction!r}")
    return theta


def _scale(value, outcome: SurvivalOutcome, reduction: str):
    return value / outcome.n_events if reduction == "mean" else value


def _exact_terms(theta: np.ndarray, outcome: SurvivalOutcome) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Ascending order, sorted theta, sorted events and log risk-set sums per sorted row."""
    order = np.argsort(outcome.durations, kind="stable")
    t = outcome.durations[order]
    th = theta[order]
    suffix = np.logaddexp.accumulate(th[::-1])[::-1]
    first = np.searchsorted(t, t, side="left")
    return order, th, outcome.events[order], suffix[first]


def cox_loss_exact(theta: np.ndarray, outcome: SurvivalOutcome, reduction: str = "sum") -> float:
    """Negative log partial likelihood with exact (Breslow) risk sets."""
    theta = _prepare(theta, outcome, reduction)
    _, th, d, log_risk = _exact_terms(theta, outcome)
    loss = -float(np.sum(d * (th - log_risk)))
    return _scale(loss, outcome, reduction)


def _fast_order(outcome: SurvivalOutcome) -> np.ndarray:
    idx = np.arange(len(outcome))
    return np.lexsort((idx, outcome.events, -outcome.durations))


def cox_loss_fast(theta: np.ndarray, outcome: SurvivalOutcome, reduction: str = "sum") -> float:
    theta = _prepare(theta, outcome, reduction)
    order = _fast_order(outcome)
    th = theta[order]
    d = outcome.events[order]
    running = np.logaddexp.accumulate(th)
    loss = -float(np.sum(d * (th - running)))
    return _scale(loss, outcome, reduction)


def cox_loss_grad(theta: np.ndarray, outcome: SurvivalOutcome, fast: bool = True, reduction: str = "sum") -> np.ndarray:
    """dL/dtheta for the chosen loss variant, in the caller's row order."""
    theta = _prepare(theta, outcome, reduction)
    grad = np.empty_like(theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        if fast:
            order = _fast_order(outcome)
            th = theta[order]
            d = outcome.events[order]
            running = np.logaddexp.accumulate(th)
            weights = np.where(d == 1, -running, -np.inf)
            later = np.logaddexp.accumulate(weights[::-1])[::-1]
            grad[order] = -d + np.exp(th + later)
        else:
            order, th, d, log_risk = _exact_terms(theta, outcome)
            t = outcome.durations[order]
            weights = np.where(d == 1, -log_risk, -np.inf)
            cumulative = np.logaddexp.accumulate(weights)
            last = np.searchsorted(t, t, side="right") - 1
            grad[order] = -d + np.exp(th + cumulative[last])
    return _scale(grad, outcome, reduction)


@dataclass(frozen=True, eq=False)
class BaselineHazard:
    """Right-continuous step function H0(t) over the distinct event times."""

    times: np.ndarray
    cumulative: np.ndarray

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        pos = np.searchsorted(self.times, t, side="right") - 1
        return np.where(pos >= 0, self.cumulative[np.clip(pos, 0, None)], 0.0)

    def survival(self, t, theta) -> np.ndarray:
        """S(t | x) = exp(-H0(t) * exp(theta)); rows follow theta, columns follow t."""
        H = np.atleast_1d(self(t))
        risk = np.exp(np.atleast_1d(np.asarray(theta, dtype=float)))
        return np.exp(-np.outer(risk, H))

    def increments(self) -> np.ndarray:
        return np.diff(self.cumulative, prepend=0.0)


def breslow_baseline(theta: np.ndarray, outcome: SurvivalOutcome) -> BaselineHazard:
    theta = _prepare(theta, outcome, "sum")
    order = np.argsort(outcome.durations, kind="stable")
    t = outcome.durations[order]
    d = outcome.events[order]
    risk_sum = np.exp(np.logaddexp.accumulate(theta[order][::-1])[::-1])

    event_times, deaths = np.unique(t[d == 1], return_counts=True)
    first = np.searchsorted(t, event_times, side="left")
    increments = deaths / risk_sum[first]
    return BaselineHazard(times=event_times, cumulative=np.cumsum(increments))
