"""
Run reports: C-index with bootstrap intervals for every model stage, next to
the CoxPH baseline and (for synthetic data) the true formula.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.config import COX_CONFIG
from src.dataset import Dataset
from src.kan.network import Network
from src.survival.coxph import CoxPHModel
from src.survival.metrics import EvalReport, bootstrap_ci

STAGE_ORDER = ("coxph", "true_formula", "trained", "pruned", "symbolic")


@dataclass
class RunReport:
    config: Dict[str, Any] = field(default_factory=dict)
    fingerprints: Dict[str, str] = field(default_factory=dict)
    stages: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    prune_threshold: Optional[float] = None
    dropped_features: List[str] = field(default_factory=list)
    formula: Optional[str] = None
    term_importance: Optional[List[Dict[str, Any]]] = None
    timing: Dict[str, float] = field(default_factory=dict)

    def add_stage(self, name: str, report: EvalReport) -> None:
        self.stages[name] = report.to_dict()

    def summary_lines(self) -> List[str]:
        lines = []
        for name in STAGE_ORDER:
            if name in self.stages:
                s = self.stages[name]
                lines.append(f"{name:>13}: C = {s['c_index']:.4f} ({s['ci_low']:.4f}, {s['ci_high']:.4f})")
        return lines

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save(self, path: str) -> str:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2)
        return path

    @classmethod
    def load(cls, path: str) -> "RunReport":
        with open(path, "r", encoding="utf-8") as handle:
            return cls(**json.load(handle))


def evaluate_stages(
    models: Dict[str, Network],
    test: Dataset,
    coxph: Optional[CoxPHModel] = None,
    B: int = COX_CONFIG["bootstrap"],
    seed: int = 0,
) -> Dict[str, EvalReport]:
    """Bootstrap C-index per model on the same test rows and resampling seed."""
    reports: Dict[str, EvalReport] = {}
    if coxph is not None:
        reports["coxph"] = bootstrap_ci(coxph.predict(test.X), test.outcome, B=B, seed=seed)
    if test.true_theta is not None:
        reports["true_formula"] = bootstrap_ci(test.true_theta, test.outcome, B=B, seed=seed)
    for name, net in models.items():
        theta = net.predict(test.X)
        if not np.all(np.isfinite(theta)):
            bad = int(np.sum(~np.isfinite(theta)))
            warnings.warn(
                f"{name}: {bad} test rows give a non-finite risk score (an operator left its fitted domain); "
                "they are ranked at the extremes",
                stacklevel=2,
            )
            theta = np.nan_to_num(theta, nan=0.0, posinf=np.finfo(float).max, neginf=-np.finfo(float).max)
        reports[name] = bootstrap_ci(theta, test.outcome, B=B, seed=seed)
    return reports
