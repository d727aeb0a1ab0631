"""
Symbolic replacements for single network edges.

Three kinds share one parameter vector so they can be fine-tuned uniformly:
  operator:      c * f(a*x + b) + d    params = (a, b, c, d)
  linear:        a*x + b               params = (a, b)
  discrete_map:  value[code]           params = one value per category code
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from src.exceptions import InvalidArgumentError
from src.symbolic.library import get_operator

EDGE_KINDS = ("operator", "linear", "discrete_map")


def format_number(value: float, precision: int) -> str:
    """Round to `precision` significant figures for display."""
    if value == 0 or not math.isfinite(value):
        return f"{value:g}"
    return f"{value:.{precision}g}"


def affine_text(a: float, b: float, inner: str, precision: int) -> str:
    a_txt = format_number(a, precision)
    if a_txt == "1":
        body = inner
    elif a_txt == "-1":
        body = f"-{inner}"
    else:
        body = f"{a_txt}*{inner}"
    b_txt = format_number(abs(b), precision)
    if b_txt == "0":
        return body
    return f"{body} {'-' if b < 0 else '+'} {b_txt}"


@dataclass(eq=False)
class SymbolicEdge:
    kind: str
    params: np.ndarray
    name: str = ""
    r2: float = float("nan")
    low_fidelity: bool = False
    labels: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.kind not in EDGE_KINDS:
            raise InvalidArgumentError(f"Unknown symbolic edge kind: {self.kind}")
        self.params = np.asarray(self.params, dtype=float).copy()
        if self.kind == "operator":
            get_operator(self.name)
            if self.params.shape != (4,):
                raise InvalidArgumentError("Operator edges need (a, b, c, d)")
        elif self.kind == "linear":
            self.name = "linear"
            if self.params.shape != (2,):
                raise InvalidArgumentError("Linear edges need (a, b)")
        else:
            self.name = "map"

    @property
    def operator(self):
        return get_operator(self.name)

    def _codes(self, x: np.ndarray) -> np.ndarray:
        codes = np.rint(x).astype(int)
        if codes.size and (codes.min() < 0 or codes.max() >= self.params.size):
            raise InvalidArgumentError(
                f"Category code outside the discrete map (0..{self.params.size - 1})"
            )
        return codes

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            a, b = self.params
            return a * x + b
        if self.kind == "discrete_map":
            return self.params[self._codes(x)]
        a, b, c, d = self.params
        with np.errstate(all="ignore"):
            return c * self.operator.fn(a * x + b) + d

    def derivative(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return np.full_like(x, self.params[0])
        if self.kind == "discrete_map":
            return np.zeros_like(x)
        a, b, c, _ = self.params
        with np.errstate(all="ignore"):
            return c * self.operator.deriv(a * x + b) * a

    def param_grads(self, x: np.ndarray) -> np.ndarray:
        """d(edge output)/d(params) per row, shape (N, n_params)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return np.stack([x, np.ones_like(x)], axis=1)
        if self.kind == "discrete_map":
            onehot = np.zeros((x.size, self.params.size))
            onehot[np.arange(x.size), self._codes(x)] = 1.0
            return onehot
        a, b, c, _ = self.params
        u = a * x + b
        with np.errstate(all="ignore"):
            fu = self.operator.fn(u)
            dfu = self.operator.deriv(u)
        return np.stack([c * dfu * x, c * dfu, fu, np.ones_like(x)], axis=1)

    def with_params(self, params: np.ndarray) -> "SymbolicEdge":
        return replace(self, params=np.asarray(params, dtype=float))

    def render(self, variable: str, precision: int = 3) -> str:
        if self.kind == "linear":
            return affine_text(self.params[0], self.params[1], variable, precision)
        if self.kind == "discrete_map":
            labels = self.labels or [str(code) for code in range(self.params.size)]
            cases = ", ".join(
                f"{label}: {format_number(value, precision)}" for label, value in zip(labels, self.params)
            )
            return f"{{{cases}}}[{variable}]"
        a, b, c, d = self.params
        inner = self.operator.render(affine_text(a, b, variable, precision))
        return affine_text(c, d, inner, precision)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "kind": self.kind,
            "name": self.name,
            "params": [float(p) for p in self.params],
            "r2": None if math.isnan(self.r2) else float(self.r2),
            "low_fidelity": bool(self.low_fidelity),
        }
        if self.labels:
            payload["labels"] = list(self.labels)
        return payload

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "SymbolicEdge":
        r2: Optional[float] = payload.get("r2")
        return cls(
            kind=payload["kind"],
            params=np.asarray(payload["params"], dtype=float),
            name=payload.get("name", ""),
            r2=float("nan") if r2 is None else float(r2),
            low_fidelity=bool(payload.get("low_fidelity", False)),
            labels=list(payload.get("labels", [])),
        )
