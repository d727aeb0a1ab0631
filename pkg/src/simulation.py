"""
Synthetic proportional-hazards survival data with a known log-partial hazard.

Event times follow an exponential law with hazard baseline * exp(theta(x)).
Censoring times are uniform on [0, largest event time of the joint train+test
sample], and the observed duration is the smaller of the two. Two irrelevant
U[-1, 1] covariates are appended after the signal columns by default.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config import GENERATOR_CONFIG
from src.dataset import ColumnMeta, Dataset
from src.exceptions import InvalidArgumentError
from src.survival.cox import SurvivalOutcome

ThetaFn = Callable[[pd.DataFrame], np.ndarray]


@dataclass(frozen=True)
class SyntheticFormula:
    name: str
    expression: str
    n_signal: int
    theta: ThetaFn
    ranges: Dict[str, Tuple[float, float]] = field(default_factory=dict)


FORMULAS: Dict[str, SyntheticFormula] = {
    "gaussian": SyntheticFormula(
        "gaussian", "5*exp(-2*(x1**2 + x2**2))", 2,
        lambda f: 5.0 * np.exp(-2.0 * (f["x1"] ** 2 + f["x2"] ** 2)),
    ),
    "shallow": SyntheticFormula(
        "shallow", "tanh(5*x1) + sin(2*pi*x2) + x3**2", 3,
        lambda f: np.tanh(5.0 * f["x1"]) + np.sin(2.0 * np.pi * f["x2"]) + f["x3"] ** 2,
    ),
    "deep": SyntheticFormula(
        "deep", "2*sqrt((x1 - x2)**2 + (x3 - x4)**2)", 4,
        lambda f: 2.0 * np.sqrt((f["x1"] - f["x2"]) ** 2 + (f["x3"] - f["x4"]) ** 2),
    ),
    "difficult": SyntheticFormula(
        "difficult", "tanh(5*(log(x1) + abs(x2)))", 2,
        lambda f: np.tanh(5.0 * (np.log(f["x1"]) + np.abs(f["x2"]))),
        ranges={"x1": (0.1, 1.0)},
    ),
}

_VARIABLE = re.compile(r"\bx(\d+)\b")
_PI = re.compile(r"\bpi\b")


@dataclass
class GeneratorSpec:
    formula: str = "gaussian"
    n_train: int = GENERATOR_CONFIG["n_train"]
    n_test: int = GENERATOR_CONFIG["n_test"]
    baseline: float = GENERATOR_CONFIG["baseline"]
    noise_features: int = GENERATOR_CONFIG["noise_features"]
    seed: int = 0
    beta: Optional[List[float]] = None
    expression: Optional[str] = None
    ranges: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    censoring: bool = True

    def __post_init__(self) -> None:
        if self.formula.startswith("custom:"):
            self.expression = self.formula.split(":", 1)[1]
            self.formula = "custom"
        if self.formula not in (*FORMULAS, "linear", "custom"):
            raise InvalidArgumentError(f"Unknown formula '{self.formula}'")
        if self.n_train < 1 or self.n_test < 1:
            raise InvalidArgumentError("n_train and n_test must be >= 1")
        if not self.baseline > 0:
            raise InvalidArgumentError("baseline hazard must be > 0")
        if self.noise_features < 0:
            raise InvalidArgumentError("noise_features must be >= 0")
        if self.formula == "linear":
            self.beta = [1.0] if self.beta is None else [float(b) for b in self.beta]
            if not self.beta:
                raise InvalidArgumentError("linear formula needs at least one coefficient")
        if self.formula == "custom":
            if not self.expression or not self.expression.strip():
                raise InvalidArgumentError("custom formula needs an expression")
            validate_expression(self.expression)

    @property
    def n_signal(self) -> int:
        if self.formula == "linear":
            return len(self.beta)
        if self.formula == "custom":
            return max(int(i) for i in _VARIABLE.findall(self.expression))
        return FORMULAS[self.formula].n_signal

    @property
    def expression_text(self) -> str:
        if self.formula == "linear":
            return " + ".join(f"{b:g}*x{i + 1}" for i, b in enumerate(self.beta))
        if self.formula == "custom":
            return self.expression
        return FORMULAS[self.formula].expression

    def column_ranges(self) -> List[Tuple[float, float]]:
        defaults = FORMULAS[self.formula].ranges if self.formula in FORMULAS else {}
        merged = {**defaults, **self.ranges}
        return [tuple(merged.get(f"x{i + 1}", (-1.0, 1.0))) for i in range(self.n_signal)]

    def to_dict(self) -> dict:
        return {
            "formula": self.formula,
            "expression": self.expression_text,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "baseline": self.baseline,
            "noise_features": self.noise_features,
            "seed": self.seed,
            "beta": self.beta,
            "censoring": self.censoring,
        }


def _evaluate_expression(expression: str, frame: pd.DataFrame) -> np.ndarray:
    text = _PI.sub(repr(float(np.pi)), expression)
    return np.asarray(frame.eval(text, engine="python"), dtype=float).reshape(-1)


def validate_expression(expression: str) -> None:
    """Evaluate a custom expression on a small sample frame, raising InvalidArgumentError on failure."""
    indices = [int(i) for i in _VARIABLE.findall(expression)]
    if not indices:
        raise InvalidArgumentError(f"Expression '{expression}' references no covariate x1..xn")
    sample = pd.DataFrame({f"x{i + 1}": np.linspace(0.1, 0.9, 5) for i in range(max(indices))})
    try:
        values = _evaluate_expression(expression, sample)
    except Exception as exc:  # noqa: BLE001
        raise InvalidArgumentError(f"Cannot evaluate expression '{expression}': {exc}") from exc
    if values.shape != (len(sample),):
        raise InvalidArgumentError(f"Expression '{expression}' does not produce one value per row")


def true_theta(spec: GeneratorSpec, frame: pd.DataFrame) -> np.ndarray:
    if spec.formula == "linear":
        return frame[[f"x{i + 1}" for i in range(spec.n_signal)]].to_numpy() @ np.asarray(spec.beta)
    if spec.formula == "custom":
        theta = _evaluate_expression(spec.expression, frame)
    else:
        theta = np.asarray(FORMULAS[spec.formula].theta(frame), dtype=float)
    bad = np.flatnonzero(~np.isfinite(theta))
    if bad.size:
        rows = ", ".join(str(r) for r in bad[:10])
        raise InvalidArgumentError(f"Formula '{spec.expression_text}' is not finite at rows {rows}")
    return theta


def generate(spec: GeneratorSpec) -> Tuple[Dataset, Dataset]:
    """Draw train and test sets jointly from one seeded stream."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_train + spec.n_test
    n_cols = spec.n_signal + spec.noise_features
    ranges = spec.column_ranges() + [(-1.0, 1.0)] * spec.noise_features
    X = np.column_stack([rng.uniform(lo, hi, size=n) for lo, hi in ranges])
    names = [f"x{i + 1}" for i in range(n_cols)]
    frame = pd.DataFrame(X, columns=names)

    theta = true_theta(spec, frame)
    rate = spec.baseline * np.exp(theta)
    death = rng.exponential(1.0 / rate)
    if spec.censoring:
        censor = rng.uniform(0.0, death.max(), size=n)
        durations = np.minimum(death, censor)
        events = (death <= censor).astype(int)
    else:
        durations = death
        events = np.ones(n, dtype=int)
    durations = np.maximum(durations, np.finfo(float).tiny)

    columns = [ColumnMeta(name=name) for name in names]
    provenance = spec.to_dict()
    full = Dataset(X=X, columns=columns, outcome=SurvivalOutcome(durations, events), provenance={**provenance, "theta": theta})
    return full.subset(np.arange(spec.n_train)), full.subset(np.arange(spec.n_train, n))


def noise_columns(spec: GeneratorSpec) -> Sequence[str]:
    return [f"x{i + 1}" for i in range(spec.n_signal, spec.n_signal + spec.noise_features)]
