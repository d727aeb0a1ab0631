"""
Concordance index and percentile-bootstrap confidence intervals.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.config import COX_CONFIG
from src.exceptions import InvalidArgumentError, UndefinedMetricError
from src.survival.cox import SurvivalOutcome

_CHUNK = 1024


def _pair_counts(theta: np.ndarray, durations: np.ndarray, events: np.ndarray) -> tuple[float, int]:
    """Concordance score (concordant + 0.5 * tied) and the comparable pair count."""
    score = 0.0
    comparable = 0
    rows = np.flatnonzero(events == 1)
    for start in range(0, rows.size, _CHUNK):
        i = rows[start : start + _CHUNK]
        pairs = durations[i, None] < durations[None, :]
        diff = theta[i, None] - theta[None, :]
        comparable += int(pairs.sum())
        score += float(np.sum(pairs & (diff > 0))) + 0.5 * float(np.sum(pairs & (diff == 0)))
    return score, comparable


def concordance_index(theta: np.ndarray, outcome: SurvivalOutcome) -> float:
    """Fraction of comparable pairs (t_i < t_j, event at i) ranked with theta_i > theta_j."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != len(outcome):
        raise InvalidArgumentError(f"theta has {theta.size} rows, outcome has {len(outcome)}")
    if not np.all(np.isfinite(theta)):
        raise InvalidArgumentError("Risk scores must be finite")
    score, comparable = _pair_counts(theta, outcome.durations, outcome.events)
    if comparable == 0:
        raise UndefinedMetricError("No comparable pairs: the C-index is undefined")
    return score / comparable


@dataclass
class EvalReport:
    c_index: float
    ci_low: float
    ci_high: float
    n_bootstrap: int
    seed: int
    confidence: float = 0.95
    redraws: int = 0
    point_outside_interval: bool = False
    term_importance: Optional[dict] = field(default=None)

    def to_dict(self) -> dict:
        payload = {
            "c_index": self.c_index,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_bootstrap": self.n_bootstrap,
            "seed": self.seed,
            "confidence": self.confidence,
            "redraws": self.redraws,
            "point_outside_interval": self.point_outside_interval,
        }
        if self.term_importance is not None:
            payload["term_importance"] = self.term_importance
        return payload

    def __str__(self) -> str:
        return f"{self.c_index:.4f} ({self.ci_low:.4f}, {self.ci_high:.4f})"


def bootstrap_ci(
    theta: np.ndarray,
    outcome: SurvivalOutcome,
    B: int = COX_CONFIG["bootstrap"],
    seed: int = 0,
    confidence: float = COX_CONFIG["confidence"],
) -> EvalReport:
    """Resample rows with replacement B times; percentile interval of the resampled C-index.

    Resample b draws from its own stream default_rng([seed, b]). Draws without a
    comparable pair are redrawn from that stream; more than 10 * B total draws
    is an error.
    """
    if B < 1:
        raise InvalidArgumentError("B must be >= 1")
    if not 0 < confidence < 1:
        raise InvalidArgumentError("confidence must lie in (0, 1)")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    point = concordance_index(theta, outcome)

    n = theta.size
    stats = np.empty(B)
    attempts = 0
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        while True:
            attempts += 1
            if attempts > 10 * B:
                raise UndefinedMetricError(
                    f"Bootstrap gave up after {attempts - 1} draws without enough comparable resamples"
                )
            rows = rng.integers(0, n, size=n)
            score, comparable = _pair_counts(theta[rows], outcome.durations[rows], outcome.events[rows])
            if comparable:
                stats[b] = score / comparable
                break

    tail = (1.0 - confidence) / 2.0 * 100.0
    low, high = np.percentile(stats, [tail, 100.0 - tail])
    outside = not (low <= point <= high)
    if outside:
        warnings.warn(
            f"C-index {point:.4f} lies outside its bootstrap interval ({low:.4f}, {high:.4f})", stacklevel=2
        )
    return EvalReport(
        c_index=point,
        ci_low=float(low),
        ci_high=float(high),
        n_bootstrap=B,
        seed=seed,
        confidence=confidence,
        redraws=attempts - B,
        point_outside_interval=outside,
    )
