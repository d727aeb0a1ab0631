"""
Unit tests for the operator library and symbolic edges.
"""

import math

import numpy as np
import pytest

from src.exceptions import InvalidArgumentError
from src.symbolic.edges import SymbolicEdge, affine_text, format_number
from src.symbolic.library import get_operator, operator_library

DIRECT = {
    "x": lambda u: u,
    "x^2": lambda u: u * u,
    "x^3": lambda u: u**3,
    "x^4": lambda u: u**4,
    "1/x": lambda u: 1 / u,
    "1/x^2": lambda u: 1 / u**2,
    "1/x^4": lambda u: 1 / u**4,
    "sqrt": math.sqrt,
    "1/sqrt": lambda u: 1 / math.sqrt(u),
    "exp": math.exp,
    "log": math.log,
    "abs": abs,
    "sin": math.sin,
    "tan": math.tan,
    "tanh": math.tanh,
    "sgn": lambda u: math.copysign(1.0, u),
    "arctan": math.atan,
    "arctanh": math.atanh,
    "sigmoid": lambda u: 1 / (1 + math.exp(-u)),
    "gaussian": lambda u: math.exp(-u * u),
    "cosh": math.cosh,
    "linear": lambda u: u,
}


def test_library_has_every_operator():
    assert set(operator_library()) == set(DIRECT)
    assert len(operator_library()) == 22


@pytest.mark.parametrize("name", sorted(DIRECT))
def test_operator_values_match_math(name):
    op = get_operator(name)
    points = np.array([0.2, 0.5, 0.9])
    np.testing.assert_allclose(op.fn(points), [DIRECT[name](u) for u in points], rtol=1e-12)


@pytest.mark.parametrize("name", sorted(set(DIRECT) - {"sgn", "abs"}))
def test_operator_derivatives_match_finite_differences(name):
    op = get_operator(name)
    u, h = np.array([0.3, 0.6]), 1e-6
    np.testing.assert_allclose(op.deriv(u), (op.fn(u + h) - op.fn(u - h)) / (2 * h), rtol=1e-5)


def test_domains():
    assert not get_operator("log").domain(np.array([-0.5, 1.0]))
    assert get_operator("log").domain(np.array([0.5, 1.0]))
    assert not get_operator("1/x").domain(np.array([-0.5, 1.0]))
    assert not get_operator("arctanh").domain(np.array([0.5, 1.0]))
    assert not get_operator("tan").domain(np.array([1.0, 2.0]))
    assert get_operator("tan").domain(np.array([-1.0, 1.0]))


def test_unknown_operator():
    with pytest.raises(InvalidArgumentError):
        get_operator("erf")


def test_render_drops_parentheses_for_atoms():
    assert get_operator("x^2").render("x1") == "x1^2"
    assert get_operator("x^2").render("2*x1 + 1") == "(2*x1 + 1)^2"
    assert get_operator("sin").render("x1") == "sin(x1)"


def test_format_number():
    assert format_number(4.98123, 3) == "4.98"
    assert format_number(0.0, 3) == "0"


def test_affine_text():
    assert affine_text(1.0, 0.0, "x", 3) == "x"
    assert affine_text(-1.0, 2.5, "x", 3) == "-x + 2.5"
    assert affine_text(2.0, -0.25, "x", 3) == "2*x - 0.25"


def test_operator_edge_evaluate_and_render():
    edge = SymbolicEdge("operator", [2.0, 1.0, 3.0, -0.5], name="sin")
    x = np.array([0.0, 0.5])
    np.testing.assert_allclose(edge.evaluate(x), 3 * np.sin(2 * x + 1) - 0.5)
    assert edge.render("x1") == "3*sin(2*x1 + 1) - 0.5"


def test_edge_param_grads_match_finite_differences():
    edge = SymbolicEdge("operator", [1.5, 0.2, -0.7, 0.3], name="tanh")
    x = np.linspace(-1, 1, 7)
    analytic = edge.param_grads(x)
    h = 1e-6
    for p in range(4):
        bump = np.zeros(4)
        bump[p] = h
        numeric = (edge.with_params(edge.params + bump).evaluate(x) - edge.with_params(edge.params - bump).evaluate(x)) / (2 * h)
        np.testing.assert_allclose(analytic[:, p], numeric, rtol=1e-6, atol=1e-9)
    np.testing.assert_allclose(edge.derivative(x), 1.5 * -0.7 * (1 - np.tanh(1.5 * x + 0.2) ** 2))


def test_discrete_map_edge():
    edge = SymbolicEdge("discrete_map", [0.5, -1.0, 2.0], labels=["low", "mid", "high"])
    np.testing.assert_array_equal(edge.evaluate(np.array([2, 0, 1])), [2.0, 0.5, -1.0])
    assert edge.render("grade", 3) == "{low: 0.5, mid: -1, high: 2}[grade]"
    with pytest.raises(InvalidArgumentError):
        edge.evaluate(np.array([3]))


@pytest.mark.parametrize("kind, params, name", [("operator", [1, 2, 3], "sin"), ("linear", [1, 2, 3], ""), ("spline", [1], "")])
def test_edge_validation(kind, params, name):
    with pytest.raises(InvalidArgumentError):
        SymbolicEdge(kind, params, name=name)


def test_edge_dict_round_trip():
    edge = SymbolicEdge("operator", [0.1, 0.2, 0.3, 0.4], name="exp", r2=0.995)
    again = SymbolicEdge.from_dict(edge.to_dict())
    assert again.name == "exp" and again.r2 == 0.995
    np.testing.assert_array_equal(again.params, edge.params)
