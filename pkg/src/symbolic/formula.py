"""
Hazard formulas built from a fully symbolic network.

A formula is a canonical sum  const + sum_k coef_k * node_k  where a node is a
raw variable, an operator applied to an inner sum, or a categorical lookup.
Linear edges distribute over the sums they receive, so purely linear paths
collapse into top-level terms and constants merge. Terms with an identical
node merge their coefficients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.config import SYMBOLIC_CONFIG
from src.dataset import ColumnMeta
from src.exceptions import InvalidArgumentError, InvalidStateError
from src.kan.network import Network
from src.symbolic.edges import format_number
from src.symbolic.library import get_operator


@dataclass(frozen=True)
class Var:
    index: int
    name: str

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        return X[:, self.index]

    def render(self, precision: int) -> str:
        return self.name

    def variables(self) -> set[int]:
        return {self.index}

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "var", "index": self.index, "name": self.name}


@dataclass(frozen=True, eq=False)
class OpCall:
    name: str
    arg: "Sum"

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            return get_operator(self.name).fn(self.arg.evaluate(X))

    def render(self, precision: int) -> str:
        return get_operator(self.name).render(self.arg.render(precision))

    def variables(self) -> set[int]:
        return self.arg.variables()

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "op", "name": self.name, "arg": self.arg.to_dict()}


@dataclass(frozen=True, eq=False)
class MapCall:
    values: Tuple[float, ...]
    labels: Tuple[str, ...]
    arg: Var

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        codes = np.rint(self.arg.evaluate(X)).astype(int)
        if codes.size and (codes.min() < 0 or codes.max() >= len(self.values)):
            raise InvalidArgumentError(f"Category code outside the lookup table for '{self.arg.name}'")
        return np.asarray(self.values)[codes]

    def render(self, precision: int) -> str:
        labels = self.labels or tuple(str(c) for c in range(len(self.values)))
        cases = ", ".join(f"{label}: {format_number(v, precision)}" for label, v in zip(labels, self.values))
        return f"{{{cases}}}[{self.arg.name}]"

    def variables(self) -> set[int]:
        return {self.arg.index}

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "map", "values": list(self.values), "labels": list(self.labels), "arg": self.arg.to_dict()}


Node = Union[Var, OpCall, MapCall]


def _key(node: Node) -> str:
    return json.dumps(node.to_dict(), sort_keys=True)


@dataclass(eq=False)
class Sum:
    terms: List[Tuple[float, Node]] = field(default_factory=list)
    const: float = 0.0

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        out = np.full(X.shape[0], self.const, dtype=float)
        for coef, node in self.terms:
            out = out + coef * node.evaluate(X)
        return out

    def variables(self) -> set[int]:
        return set().union(*(node.variables() for _, node in self.terms)) if self.terms else set()

    def scaled(self, a: float, b: float = 0.0) -> "Sum":
        if a == 0:
            return Sum([], b)
        return Sum([(a * coef, node) for coef, node in self.terms], a * self.const + b)

    def __add__(self, other: "Sum") -> "Sum":
        merged: Dict[str, List[Any]] = {}
        for coef, node in self.terms + other.terms:
            key = _key(node)
            if key in merged:
                merged[key][0] += coef
            else:
                merged[key] = [coef, node]
        terms = [(coef, node) for coef, node in merged.values() if coef != 0]
        return Sum(terms, self.const + other.const)

    def render(self, precision: int) -> str:
        parts = [render_term(coef, node, precision) for coef, node in self.terms]
        text = ""
        for part in parts:
            if not text:
                text = part
            elif part.startswith("-"):
                text += f" - {part[1:]}"
            else:
                text += f" + {part}"
        const_txt = format_number(abs(self.const), precision)
        if not text:
            return format_number(self.const, precision)
        if const_txt != "0":
            text += f" {'-' if self.const < 0 else '+'} {const_txt}"
        return text

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "sum",
            "const": self.const,
            "terms": [{"coef": coef, "node": node.to_dict()} for coef, node in self.terms],
        }


def render_term(coef: float, node: Node, precision: int) -> str:
    body = node.render(precision)
    coef_txt = format_number(coef, precision)
    if coef_txt == "1":
        return body
    if coef_txt == "-1":
        return f"-{body}"
    return f"{coef_txt}*{body}"


def node_from_dict(payload: Dict[str, Any]) -> Union[Node, Sum]:
    kind = payload["type"]
    if kind == "var":
        return Var(int(payload["index"]), payload["name"])
    if kind == "op":
        return OpCall(payload["name"], node_from_dict(payload["arg"]))
    if kind == "map":
        return MapCall(tuple(payload["values"]), tuple(payload["labels"]), node_from_dict(payload["arg"]))
    if kind == "sum":
        return Sum([(float(t["coef"]), node_from_dict(t["node"])) for t in payload["terms"]], float(payload["const"]))
    raise InvalidArgumentError(f"Unknown formula node type: {kind}")


@dataclass
class FormulaTerm:
    coef: float
    node: Node
    feature_names: List[str]

    @property
    def variables(self) -> List[str]:
        return [self.feature_names[i] for i in sorted(self.node.variables())]

    @property
    def kind(self) -> str:
        return "isolation" if len(self.node.variables()) <= 1 else "interaction"

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        return self.coef * self.node.evaluate(X)

    def render(self, precision: int = SYMBOLIC_CONFIG["precision"]) -> str:
        return render_term(self.coef, self.node, precision)


@dataclass
class Formula:
    expression: Sum
    feature_names: List[str]
    precision: int = SYMBOLIC_CONFIG["precision"]
    raw_inputs: bool = False

    @property
    def text(self) -> str:
        return self.expression.render(self.precision)

    def __str__(self) -> str:
        return self.text

    def terms(self) -> List[FormulaTerm]:
        return [FormulaTerm(coef, node, self.feature_names) for coef, node in self.expression.terms]

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise InvalidArgumentError(f"Expected a (rows, {len(self.feature_names)}) matrix, got {X.shape}")
        return self.expression.evaluate(X)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "text": self.text,
            "feature_names": list(self.feature_names),
            "precision": self.precision,
            "raw_inputs": self.raw_inputs,
            "expression": self.expression.to_dict(),
            "terms": [{"text": t.render(self.precision), "kind": t.kind, "variables": t.variables} for t in self.terms()],
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "Formula":
        return cls(
            expression=node_from_dict(payload["expression"]),
            feature_names=list(payload["feature_names"]),
            precision=int(payload.get("precision", SYMBOLIC_CONFIG["precision"])),
            raw_inputs=bool(payload.get("raw_inputs", False)),
        )


def _input_sum(i: int, name: str, column: Optional[ColumnMeta]) -> Sum:
    """Sum for input i; standardized columns are re-expressed in raw units when stats are given."""
    if column is not None and column.standardized and not column.is_categorical:
        return Sum([(1.0 / column.std, Var(i, name))], -column.mean / column.std)
    return Sum([(1.0, Var(i, name))])


def render_formula(
    symnet: Network,
    feature_names: Optional[Sequence[str]] = None,
    precision: int = SYMBOLIC_CONFIG["precision"],
    columns: Optional[Sequence[ColumnMeta]] = None,
) -> Formula:
    """Collapse a fully symbolic network into a Formula.

    Passing `columns` with standardization stats yields a formula over raw
    (unstandardized) inputs.
    """
    if not symnet.is_symbolic():
        raise InvalidStateError("Network still has spline edges", hint="run auto_symbolic first")
    names = list(feature_names) if feature_names is not None else symnet.feature_names
    if len(names) != symnet.shape[0]:
        raise InvalidArgumentError(f"{len(names)} feature names for {symnet.shape[0]} inputs")
    if columns is not None and len(columns) != symnet.shape[0]:
        raise InvalidArgumentError("Column metadata does not match the network inputs")

    nodes = [_input_sum(i, name, columns[i] if columns else None) for i, name in enumerate(names)]
    for layer in symnet.layers:
        outputs = [Sum() for _ in range(layer.n_out)]
        for (j, i), edge in sorted(layer.symbolic.items()):
            if not layer.mask[j, i]:
                continue
            inner = nodes[i]
            if edge.kind == "linear":
                contribution = inner.scaled(edge.params[0], edge.params[1])
            elif edge.kind == "discrete_map":
                var = next(node for _, node in inner.terms)
                contribution = Sum([(1.0, MapCall(tuple(edge.params), tuple(edge.labels), var))])
            else:
                a, b, c, d = edge.params
                contribution = Sum([(c, OpCall(edge.name, inner.scaled(a, b)))], d)
            outputs[j] = outputs[j] + contribution
        nodes = outputs
    return Formula(expression=nodes[0], feature_names=names, precision=precision, raw_inputs=columns is not None)


def term_importance(formula: Formula, X: np.ndarray, iqr_factor: float = SYMBOLIC_CONFIG["outlier_iqr"]) -> pd.DataFrame:
    """Outlier-robust spread of every top-level term, sorted descending."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidArgumentError("term_importance needs a non-empty covariate matrix")
    terms = formula.terms()
    if not terms:
        raise InvalidArgumentError("The formula has no terms")
    rows = []
    for term in terms:
        values = term.evaluate(X)
        q1, q3 = np.percentile(values, [25, 75])
        spread = q3 - q1
        kept = values[(values >= q1 - iqr_factor * spread) & (values <= q3 + iqr_factor * spread)]
        rows.append(
            {
                "term": term.render(formula.precision),
                "kind": term.kind,
                "variables": ", ".join(term.variables),
                "sigma": float(np.std(kept)) if kept.size else 0.0,
            }
        )
    frame = pd.DataFrame(rows)
    return frame.sort_values("sigma", ascending=False, kind="stable").reset_index(drop=True)
