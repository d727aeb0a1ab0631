"""
Unary operator library used for symbolic fitting.

Every operator exposes its value, its derivative (for affine fine-tuning),
a domain predicate over the affine argument u = a*x + b and a text template.
Domain predicates reduce over the last axis so a whole grid of (a, b) cells
can be screened in one call.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np
from scipy.special import expit

from src.exceptions import InvalidArgumentError

ArrayFn = Callable[[np.ndarray], np.ndarray]
_ATOM = re.compile(r"^[A-Za-z_][\w.]*$")
_GROUPING = re.compile(r"(?<![A-Za-z])\(\{\}\)")


@dataclass(frozen=True)
class SymbolicOperator:
    name: str
    fn: ArrayFn
    deriv: ArrayFn
    template: str
    domain: Callable[[np.ndarray], np.ndarray]

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.fn(u)

    def render(self, inner: str) -> str:
        if _ATOM.match(inner):
            return _GROUPING.sub("{}", self.template).format(inner)
        return self.template.format(inner)


def _anywhere(u: np.ndarray) -> np.ndarray:
    return np.all(np.isfinite(u), axis=-1)


def _positive(u: np.ndarray) -> np.ndarray:
    return np.all(u > 0, axis=-1)


def _nonnegative(u: np.ndarray) -> np.ndarray:
    return np.all(u >= 0, axis=-1)


def _one_signed(u: np.ndarray) -> np.ndarray:
    return np.all(u > 0, axis=-1) | np.all(u < 0, axis=-1)


def _open_unit(u: np.ndarray) -> np.ndarray:
    return np.all(np.abs(u) < 1, axis=-1)


def _between_tan_poles(u: np.ndarray) -> np.ndarray:
    branch = np.floor((u - np.pi / 2) / np.pi)
    same_branch = np.all(branch == branch[..., :1], axis=-1)
    return same_branch & np.all(np.abs(np.cos(u)) > 1e-6, axis=-1)


def _op(name: str, fn: ArrayFn, deriv: ArrayFn, template: str, domain=_anywhere) -> SymbolicOperator:
    return SymbolicOperator(name=name, fn=fn, deriv=deriv, template=template, domain=domain)


_OPERATORS = {
    op.name: op
    for op in [
        _op("x", lambda u: u, np.ones_like, "{}"),
        _op("x^2", lambda u: u**2, lambda u: 2 * u, "({})^2"),
        _op("x^3", lambda u: u**3, lambda u: 3 * u**2, "({})^3"),
        _op("x^4", lambda u: u**4, lambda u: 4 * u**3, "({})^4"),
        _op("1/x", lambda u: 1 / u, lambda u: -1 / u**2, "1/({})", _one_signed),
        _op("1/x^2", lambda u: 1 / u**2, lambda u: -2 / u**3, "1/({})^2", _one_signed),
        _op("1/x^4", lambda u: 1 / u**4, lambda u: -4 / u**5, "1/({})^4", _one_signed),
        _op("sqrt", np.sqrt, lambda u: 0.5 / np.sqrt(u), "sqrt({})", _nonnegative),
        _op("1/sqrt", lambda u: 1 / np.sqrt(u), lambda u: -0.5 * u**-1.5, "1/sqrt({})", _positive),
        _op("exp", np.exp, np.exp, "exp({})"),
        _op("log", np.log, lambda u: 1 / u, "log({})", _positive),
        _op("abs", np.abs, np.sign, "|{}|"),
        _op("sin", np.sin, np.cos, "sin({})"),
        _op("tan", np.tan, lambda u: 1 / np.cos(u) ** 2, "tan({})", _between_tan_poles),
        _op("tanh", np.tanh, lambda u: 1 - np.tanh(u) ** 2, "tanh({})"),
        _op("sgn", np.sign, np.zeros_like, "sgn({})"),
        _op("arctan", np.arctan, lambda u: 1 / (1 + u**2), "arctan({})"),
        _op("arctanh", np.arctanh, lambda u: 1 / (1 - u**2), "arctanh({})", _open_unit),
        _op("sigmoid", expit, lambda u: expit(u) * (1 - expit(u)), "sigmoid({})"),
        _op("gaussian", lambda u: np.exp(-(u**2)), lambda u: -2 * u * np.exp(-(u**2)), "exp(-({})^2)"),
        _op("cosh", np.cosh, np.sinh, "cosh({})"),
        # two-parameter a*x + b, fitted by fit_linear rather than the affine grid search
        _op("linear", lambda u: u, np.ones_like, "{}"),
    ]
}

OPERATORS: Mapping[str, SymbolicOperator] = MappingProxyType(_OPERATORS)


def operator_library() -> Mapping[str, SymbolicOperator]:
    """The registered operators, keyed by name (22 entries including 'linear')."""
    return OPERATORS


def get_operator(name: str) -> SymbolicOperator:
    try:
        return OPERATORS[name]
    except KeyError as exc:
        raise InvalidArgumentError(f"Unknown symbolic operator: {name}") from exc
