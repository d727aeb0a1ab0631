"""
Full-batch Adam training on the Cox loss plus sparsity penalty, early stopping
on a held-out validation C-index, and threshold selection for pruning.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split
from tqdm import tqdm

from src.config import DEFAULT_PRUNE_THRESHOLD, PRESETS, TRAIN_DEFAULTS
from src.dataset import Dataset
from src.exceptions import DivergedError, InvalidArgumentError, PruneTooAggressiveError, UndefinedMetricError
from src.kan.network import (
    Network,
    backward,
    edge_l1,
    fit_input_knots,
    forward,
    init_network,
    penalty,
    penalty_grads,
    prune,
    refresh_hidden_knots,
)
from src.kan.splines import BASE_KINDS
from src.survival.cox import cox_loss_fast, cox_loss_grad
from src.survival.metrics import concordance_index
from src.training.optim import AdamState, adam_step


@dataclass
class TrainConfig:
    learning_rate: float = TRAIN_DEFAULTS["learning_rate"]
    steps: int = TRAIN_DEFAULTS["steps"]
    lam: float = TRAIN_DEFAULTS["lam"]
    lambda_ent: float = TRAIN_DEFAULTS["lambda_ent"]
    lambda_coef: float = TRAIN_DEFAULTS["lambda_coef"]
    early_stopping: bool = TRAIN_DEFAULTS["early_stopping"]
    patience: int = TRAIN_DEFAULTS["patience"]
    prune_threshold: Union[float, str] = TRAIN_DEFAULTS["prune_threshold"]
    G: int = TRAIN_DEFAULTS["G"]
    k: int = TRAIN_DEFAULTS["k"]
    base_kind: str = TRAIN_DEFAULTS["base_kind"]
    xi_b: float = TRAIN_DEFAULTS["xi_b"]
    xi_s: float = TRAIN_DEFAULTS["xi_s"]
    seed: int = TRAIN_DEFAULTS["seed"]
    grid_refresh_every: int = TRAIN_DEFAULTS["grid_refresh_every"]
    hidden: List[int] = field(default_factory=lambda: list(TRAIN_DEFAULTS["hidden"]))
    validation_fraction: float = TRAIN_DEFAULTS["validation_fraction"]

    def __post_init__(self) -> None:
        if not self.learning_rate >= 0:
            raise InvalidArgumentError("learning_rate must be >= 0")
        if self.steps < 1:
            raise InvalidArgumentError("steps must be >= 1")
        if min(self.lam, self.lambda_ent, self.lambda_coef) < 0:
            raise InvalidArgumentError("Regularization strengths must be >= 0")
        if self.patience < 1:
            raise InvalidArgumentError("patience must be >= 1")
        if isinstance(self.prune_threshold, str):
            if self.prune_threshold != "auto":
                raise InvalidArgumentError("prune_threshold must be a number or 'auto'")
        elif self.prune_threshold < 0:
            raise InvalidArgumentError("prune_threshold must be >= 0")
        if self.base_kind not in BASE_KINDS:
            raise InvalidArgumentError(f"base_kind must be one of {BASE_KINDS}")
        if self.G < 1 or self.k < 1:
            raise InvalidArgumentError("G and k must be >= 1")
        if any(int(w) < 1 for w in self.hidden):
            raise InvalidArgumentError("Hidden widths must be >= 1")
        if not 0 < self.validation_fraction < 1:
            raise InvalidArgumentError("validation_fraction must lie in (0, 1)")
        self.hidden = [int(w) for w in self.hidden]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "TrainConfig":
        payload = dict(payload)
        if "lambda" in payload:
            payload["lam"] = payload.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise InvalidArgumentError(f"Unknown training options: {unknown}")
        return cls(**payload)

    @classmethod
    def from_preset(cls, name: str, **overrides: Any) -> "TrainConfig":
        if name not in PRESETS:
            raise InvalidArgumentError(f"Unknown preset '{name}'; choose from {sorted(PRESETS)}")
        return cls.from_dict({**PRESETS[name], **overrides})

    def save(self, path: str) -> str:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2)
        return path

    @classmethod
    def load(cls, path: str) -> "TrainConfig":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


@dataclass
class TrainHistory:
    loss: List[float] = field(default_factory=list)
    cox_loss: List[float] = field(default_factory=list)
    penalty: List[float] = field(default_factory=list)
    val_c: List[float] = field(default_factory=list)
    best_step: int = -1

    def __len__(self) -> int:
        return len(self.loss)

    def record(self, loss: float, cox: float, reg: float, val_c: float = math.nan) -> None:
        self.loss.append(loss)
        self.cox_loss.append(cox)
        self.penalty.append(reg)
        self.val_c.append(val_c)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "step": np.arange(len(self.loss)),
                "loss": self.loss,
                "cox_loss": self.cox_loss,
                "penalty": self.penalty,
                "val_c": self.val_c,
            }
        )


def build_network(cfg: TrainConfig, data: Dataset) -> Network:
    shape = [data.X.shape[1], *cfg.hidden, 1]
    return init_network(
        shape,
        base_kind=cfg.base_kind,
        G=cfg.G,
        k=cfg.k,
        xi_b=cfg.xi_b,
        xi_s=cfg.xi_s,
        seed=cfg.seed,
        input_meta=data.input_meta(),
    )


def validation_split(data: Dataset, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded, event-stratified (fit_rows, validation_rows)."""
    rows = np.arange(len(data))
    events = data.outcome.events
    stratify = events if np.bincount(events, minlength=2).min() >= 2 else None
    fit_rows, val_rows = train_test_split(rows, test_size=fraction, random_state=seed, stratify=stratify)
    return np.sort(fit_rows), np.sort(val_rows)


def _check_data(net: Network, data: Dataset) -> None:
    if data.outcome.n_events == 0:
        raise InvalidArgumentError("Training data has no observed events")
    if data.X.shape[1] != net.shape[0]:
        raise InvalidArgumentError(f"Network expects {net.shape[0]} covariates, data has {data.X.shape[1]}")


def _reset_coeff_moments(state: AdamState) -> None:
    state.reset([key for key in state.m if key.endswith(".coeffs")])


def train(net: Network, data: Dataset, cfg: TrainConfig, verbose: bool = False) -> Tuple[Network, TrainHistory]:
    """Fit a private copy of net; the caller's network is never mutated."""
    _check_data(net, data)
    net = net.copy()
    fit, val = data, None
    if cfg.early_stopping:
        fit_rows, val_rows = validation_split(data, cfg.validation_fraction, cfg.seed)
        fit, val = data.subset(fit_rows), data.subset(val_rows)
        if fit.outcome.n_events == 0:
            raise InvalidArgumentError("No events left for training after holding out the validation split")

    fit_input_knots(net, fit.X)
    history = TrainHistory()
    state = AdamState()
    best_net, best_c, stale = net.copy(), -math.inf, 0
    refresh_until = cfg.steps / 2

    for step in tqdm(range(cfg.steps), desc="Training", disable=not verbose):
        if cfg.grid_refresh_every > 0 and 0 < step < refresh_until and step % cfg.grid_refresh_every == 0 and net.depth > 1:
            _, cache = forward(net, fit.X)
            refresh_hidden_knots(net, cache)
            _reset_coeff_moments(state)

        theta, cache = forward(net, fit.X)
        with np.errstate(all="ignore"):
            cox = cox_loss_fast(theta, fit.outcome, reduction="mean")
            reg = penalty(net, cache, cfg.lambda_ent, cfg.lambda_coef).total
        total = cox + cfg.lam * reg
        if not math.isfinite(total):
            raise DivergedError(step, total)

        val_c = math.nan
        if val is not None:
            try:
                val_c = concordance_index(net.predict(val.X), val.outcome)
            except UndefinedMetricError:
                val_c = math.nan
            if val_c > best_c:
                best_net, best_c, stale = net.copy(), val_c, 0
                history.best_step = step
            else:
                stale += 1
        history.record(total, cox, reg, val_c)
        if val is not None and stale >= cfg.patience:
            break

        grads = backward(net, cache, cox_loss_grad(theta, fit.outcome, fast=True, reduction="mean"))
        if cfg.lam > 0:
            reg_grads = penalty_grads(net, cache, cfg.lambda_ent, cfg.lambda_coef)
            grads = {key: g + cfg.lam * reg_grads[key] for key, g in grads.items()}
        params, state = adam_step(net.parameters("spline"), grads, state, cfg.learning_rate)
        net.load_parameters(params)

    if val is not None and history.best_step >= 0:
        net = best_net
    else:
        history.best_step = len(history) - 1
    net.stage = "trained"
    return net, history


def _threshold_value(cfg: TrainConfig) -> float:
    return DEFAULT_PRUNE_THRESHOLD if cfg.prune_threshold == "auto" else float(cfg.prune_threshold)


def auto_prune(net: Network, data: Dataset, cfg: TrainConfig) -> Tuple[Network, float]:
    """Prune on edge L1 over the full training set.

    With early stopping there is a validation split, so every candidate in
    [0] + sorted edge L1 values is tried and the one with the best validation
    C-index wins (ties go to the larger, sparser threshold); prune_threshold
    is ignored. Without early stopping the configured threshold is used
    ("auto" means DEFAULT_PRUNE_THRESHOLD), falling back to the largest
    feasible one.
    """
    _check_data(net, data)
    _, cache = forward(net, data.X)

    if cfg.early_stopping:
        _, val_rows = validation_split(data, cfg.validation_fraction, cfg.seed)
        val = data.subset(val_rows)
        l1 = np.concatenate([e[layer.mask] for layer, e in zip(net.layers, edge_l1(cache))])
        candidates = np.concatenate([[0.0], np.unique(l1)])
        best: Optional[Tuple[float, float, Network]] = None
        for threshold in candidates:
            try:
                pruned = prune(net, float(threshold), cache)
            except PruneTooAggressiveError:
                break
            try:
                score = concordance_index(pruned.predict(val.X), val.outcome)
            except UndefinedMetricError:
                score = -math.inf
            if best is None or score >= best[0]:
                best = (score, float(threshold), pruned)
        return best[2], best[1]

    threshold = _threshold_value(cfg)
    try:
        return prune(net, threshold, cache), threshold
    except PruneTooAggressiveError as exc:
        warnings.warn(f"{exc}; pruning at {exc.max_feasible_threshold:.6g} instead", stacklevel=2)
        return prune(net, exc.max_feasible_threshold, cache), exc.max_feasible_threshold
