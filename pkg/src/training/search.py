"""
K-fold cross-validation and random hyperparameter search.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.model_selection import KFold, StratifiedKFold
from tqdm import tqdm

from src.config import SEARCH_SPACE_DEFAULTS
from src.dataset import Dataset
from src.exceptions import InvalidArgumentError, SurvKANError, UndefinedMetricError
from src.survival.metrics import concordance_index
from src.training.trainer import TrainConfig, auto_prune, build_network, train


def _fold_indices(data: Dataset, folds: int, seed: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    rows = np.arange(len(data))
    events = data.outcome.events
    splits = list(KFold(n_splits=folds, shuffle=True, random_state=seed).split(rows))
    if all(events[val].any() and events[fit].any() for fit, val in splits):
        return splits
    if events.sum() < folds:
        raise InvalidArgumentError(f"{int(events.sum())} events cannot cover {folds} folds")
    warnings.warn("A fold had no events; reassigning folds stratified by event indicator", stacklevel=3)
    return list(StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed).split(rows, events))


def fold_scores(data: Dataset, cfg: TrainConfig, folds: int = 4) -> List[float]:
    """Validation C-index of the pruned network on each fold."""
    if folds < 2:
        raise InvalidArgumentError("folds must be >= 2")
    if len(data) < folds:
        raise InvalidArgumentError(f"{len(data)} rows cannot be split into {folds} folds")
    scores = []
    for fit_rows, val_rows in _fold_indices(data, folds, cfg.seed):
        fit, val = data.subset(fit_rows), data.subset(val_rows)
        net, _ = train(build_network(cfg, fit), fit, cfg)
        pruned, _ = auto_prune(net, fit, cfg)
        scores.append(concordance_index(pruned.predict(val.X), val.outcome))
    return scores


def cross_validate(data: Dataset, cfg: TrainConfig, folds: int = 4) -> float:
    return float(np.mean(fold_scores(data, cfg, folds)))


def _log_uniform(rng: np.random.Generator, bounds: Sequence[float]) -> float:
    lo, hi = bounds
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


@dataclass
class SearchSpace:
    learning_rate: Tuple[float, float] = SEARCH_SPACE_DEFAULTS["learning_rate"]
    G: List[int] = field(default_factory=lambda: list(SEARCH_SPACE_DEFAULTS["G"]))
    lam: Tuple[float, float] = SEARCH_SPACE_DEFAULTS["lam"]
    lambda_ent: Tuple[float, float] = SEARCH_SPACE_DEFAULTS["lambda_ent"]
    lambda_coef: Tuple[float, float] = SEARCH_SPACE_DEFAULTS["lambda_coef"]
    xi_b: Tuple[float, float] = SEARCH_SPACE_DEFAULTS["xi_b"]
    xi_s: Tuple[float, float] = SEARCH_SPACE_DEFAULTS["xi_s"]
    hidden_layers: Tuple[int, int] = SEARCH_SPACE_DEFAULTS["hidden_layers"]
    hidden_width: Tuple[int, int] = SEARCH_SPACE_DEFAULTS["hidden_width"]
    base_kind: List[str] = field(default_factory=lambda: list(SEARCH_SPACE_DEFAULTS["base_kind"]))
    early_stopping: List[bool] = field(default_factory=lambda: list(SEARCH_SPACE_DEFAULTS["early_stopping"]))
    prune_threshold: Tuple[float, float] = SEARCH_SPACE_DEFAULTS["prune_threshold"]
    steps: int = SEARCH_SPACE_DEFAULTS["steps"]

    def __post_init__(self) -> None:
        for name in ("learning_rate", "lam"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise InvalidArgumentError(f"{name} needs 0 < low <= high for log-uniform sampling")
        for name in ("lambda_ent", "lambda_coef", "xi_b", "xi_s", "prune_threshold", "hidden_layers", "hidden_width"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise InvalidArgumentError(f"{name} needs 0 <= low <= high")
        if self.hidden_width[0] < 1:
            raise InvalidArgumentError("hidden_width must be >= 1")
        if not self.G or not self.base_kind or not self.early_stopping:
            raise InvalidArgumentError("Choice lists in the search space must not be empty")

    def sample(self, rng: np.random.Generator, seed: int = 0) -> TrainConfig:
        n_hidden = int(rng.integers(self.hidden_layers[0], self.hidden_layers[1] + 1))
        hidden = [int(rng.integers(self.hidden_width[0], self.hidden_width[1] + 1)) for _ in range(n_hidden)]
        early_stopping = bool(self.early_stopping[int(rng.integers(len(self.early_stopping)))])
        threshold = float(rng.uniform(*self.prune_threshold))
        return TrainConfig(
            learning_rate=_log_uniform(rng, self.learning_rate),
            steps=self.steps,
            lam=_log_uniform(rng, self.lam),
            lambda_ent=float(rng.uniform(*self.lambda_ent)),
            lambda_coef=float(rng.uniform(*self.lambda_coef)),
            early_stopping=early_stopping,
            prune_threshold="auto" if early_stopping else threshold,
            G=int(self.G[int(rng.integers(len(self.G)))]),
            base_kind=str(self.base_kind[int(rng.integers(len(self.base_kind)))]),
            xi_b=float(rng.uniform(*self.xi_b)),
            xi_s=float(rng.uniform(*self.xi_s)),
            seed=seed,
            hidden=hidden,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {key: list(value) if isinstance(value, tuple) else value for key, value in asdict(self).items()}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "SearchSpace":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise InvalidArgumentError(f"Unknown search-space options: {unknown}")
        converted = {
            key: tuple(value) if isinstance(getattr(cls, key, None), tuple) else value
            for key, value in payload.items()
        }
        return cls(**converted)

    @classmethod
    def load(cls, path: str) -> "SearchSpace":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


def _score_trial(data: Dataset, cfg: TrainConfig, folds: int) -> Tuple[float, str]:
    try:
        return cross_validate(data, cfg, folds), ""
    except (SurvKANError, np.linalg.LinAlgError) as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def random_search(
    data: Dataset,
    space: Optional[SearchSpace] = None,
    trials: int = 30,
    seed: int = 0,
    folds: int = 4,
    jobs: int = 1,
    verbose: bool = False,
) -> Tuple[TrainConfig, pd.DataFrame]:
    """Score `trials` sampled configurations by cross-validation; returns the argmax and the leaderboard.

    Trial t samples from default_rng([seed, t]); failed trials score NaN.
    """
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    space = space or SearchSpace()
    configs = [space.sample(np.random.default_rng([seed, t]), seed=seed) for t in range(trials)]
    runner = Parallel(n_jobs=jobs)
    results = runner(
        delayed(_score_trial)(data, cfg, folds)
        for cfg in tqdm(configs, desc="Search trials", disable=not verbose)
    )

    rows = []
    for t, (cfg, (score, error)) in enumerate(zip(configs, results)):
        row = {"trial": t, **cfg.to_dict(), "mean_c": score, "error": error}
        row["hidden"] = json.dumps(cfg.hidden)
        rows.append(row)
    leaderboard = pd.DataFrame(rows)
    if leaderboard["mean_c"].isna().all():
        raise UndefinedMetricError("Every search trial failed; see the leaderboard errors")
    best = int(leaderboard["mean_c"].idxmax())
    return configs[best], leaderboard
