"""
Linear Cox proportional-hazards baseline fitted by Newton-Raphson.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config import COX_CONFIG
from src.exceptions import InvalidArgumentError
from src.survival.cox import SurvivalOutcome


@dataclass
class CoxPHModel:
    beta: np.ndarray
    feature_names: List[str]
    iterations: int = 0
    grad_norm: float = float("nan")
    converged: bool = True
    message: str = ""
    log_likelihood: float = float("nan")

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.beta.size:
            raise InvalidArgumentError(f"Expected {self.beta.size} covariates, got {X.shape[1]}")
        return X @ self.beta

    def summary(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"coef": self.beta, "exp(coef)": np.exp(self.beta)},
            index=pd.Index(self.feature_names, name="covariate"),
        )

    def to_dict(self) -> dict:
        return {
            "beta": [float(b) for b in self.beta],
            "feature_names": list(self.feature_names),
            "iterations": self.iterations,
            "grad_norm": float(self.grad_norm),
            "converged": self.converged,
            "message": self.message,
            "log_likelihood": float(self.log_likelihood),
        }


def _risk_statistics(X: np.ndarray, outcome: SurvivalOutcome, beta: np.ndarray, ridge: float) -> Tuple[float, np.ndarray, np.ndarray]:
    """Penalized log partial likelihood, its gradient and the observed information matrix."""
    order = np.argsort(outcome.durations, kind="stable")
    t = outcome.durations[order]
    d = outcome.events[order].astype(bool)
    Xs = X[order]
    theta = Xs @ beta
    shift = theta.max()
    w = np.exp(theta - shift)

    S0 = np.cumsum(w[::-1])[::-1]
    S1 = np.cumsum((w[:, None] * Xs)[::-1], axis=0)[::-1]
    S2 = np.cumsum((w[:, None, None] * Xs[:, :, None] * Xs[:, None, :])[::-1], axis=0)[::-1]

    first = np.searchsorted(t, t, side="left")[d]
    s0, s1, s2 = S0[first], S1[first], S2[first]
    xbar = s1 / s0[:, None]

    loglik = float(np.sum(theta[d] - shift - np.log(s0))) - 0.5 * ridge * float(beta @ beta)
    grad = np.sum(Xs[d] - xbar, axis=0) - ridge * beta
    info = np.sum(s2 / s0[:, None, None] - xbar[:, :, None] * xbar[:, None, :], axis=0)
    info = info + ridge * np.eye(beta.size)
    return loglik, grad, info


def coxph_fit(
    X: np.ndarray,
    outcome: SurvivalOutcome,
    ridge: float = COX_CONFIG["ridge"],
    feature_names: Optional[Sequence[str]] = None,
    tol: float = COX_CONFIG["newton_tol"],
    max_iter: int = COX_CONFIG["newton_max_iter"],
) -> CoxPHModel:
    """Maximize the ridge-penalized partial likelihood with step-halving Newton steps.

    Constant columns carry no signal: they get beta = 0 and the fit is flagged
    as not converged. Numerical breakdown returns the best iterate so far.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != len(outcome):
        raise InvalidArgumentError(f"X has {X.shape[0]} rows, outcome has {len(outcome)}")
    if outcome.n_events == 0:
        raise InvalidArgumentError("CoxPH needs at least one observed event")
    if ridge < 0:
        raise InvalidArgumentError("ridge must be >= 0")
    names = list(feature_names) if feature_names is not None else [f"x{i + 1}" for i in range(X.shape[1])]

    beta_full = np.zeros(X.shape[1])
    constant = np.ptp(X, axis=0) == 0
    messages = []
    if constant.any():
        dropped = [names[i] for i in np.flatnonzero(constant)]
        messages.append(f"constant covariates fixed at beta=0: {', '.join(dropped)}")
        warnings.warn(f"CoxPH: {messages[-1]}", stacklevel=2)
    keep = ~constant
    if not keep.any():
        return CoxPHModel(beta=beta_full, feature_names=names, converged=False, message="; ".join(messages))

    Xk = X[:, keep]
    beta = np.zeros(Xk.shape[1])
    loglik, grad, info = _risk_statistics(Xk, outcome, beta, ridge)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if np.linalg.norm(grad) < tol:
            converged = True
            iterations -= 1
            break
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            messages.append("singular information matrix")
            break
        if not np.all(np.isfinite(step)):
            messages.append("non-finite Newton step")
            break

        improved = False
        for _ in range(COX_CONFIG["max_halvings"]):
            candidate = beta + step
            stats = _risk_statistics(Xk, outcome, candidate, ridge)
            # tolerance absorbs rounding once the optimum is reached
            if np.isfinite(stats[0]) and stats[0] >= loglik - 1e-12 * max(1.0, abs(loglik)):
                beta, (loglik, grad, info) = candidate, stats
                improved = True
                break
            step = step / 2.0
        if not improved:
            messages.append("step-halving could not improve the likelihood")
            break
    else:
        converged = np.linalg.norm(grad) < tol
        if not converged:
            messages.append(f"no convergence after {max_iter} iterations")

    if not converged and messages:
        warnings.warn(f"CoxPH did not converge: {'; '.join(messages)}", stacklevel=2)
    beta_full[keep] = beta
    return CoxPHModel(
        beta=beta_full,
        feature_names=names,
        iterations=iterations,
        grad_norm=float(np.linalg.norm(grad)),
        converged=bool(converged and not constant.any()),
        message="; ".join(messages),
        log_likelihood=loglik,
    )


def coxph_subgroup(
    X_col: np.ndarray,
    outcome: SurvivalOutcome,
    rows: Optional[np.ndarray] = None,
    name: str = "x",
    ridge: float = COX_CONFIG["ridge"],
) -> CoxPHModel:
    """One-covariate CoxPH on an optional row subset, for checking extracted interactions."""
    col = np.asarray(X_col, dtype=float).reshape(-1)
    if rows is not None:
        col = col[rows]
        outcome = outcome.subset(rows)
    return coxph_fit(col[:, None], outcome, ridge=ridge, feature_names=[name])
