"""
Unit tests for the synthetic survival data generator.
"""

import numpy as np
import pandas as pd
import pytest

from src.dataset import save_datasets
from src.exceptions import InvalidArgumentError
from src.simulation import FORMULAS, GeneratorSpec, generate, noise_columns, true_theta


def test_row_counts_and_columns():
    train, test = generate(GeneratorSpec(formula="gaussian", n_train=8000, n_test=2000, seed=7))
    assert len(train) == 8000 and len(test) == 2000
    assert train.feature_names == ["x1", "x2", "x3", "x4"]
    assert noise_columns(GeneratorSpec(formula="gaussian")) == ["x3", "x4"]


def test_generation_is_deterministic(tmp_path):
    spec = GeneratorSpec(formula="shallow", n_train=300, n_test=100, seed=3)
    first = save_datasets(dict(zip(("train", "test"), generate(spec))), str(tmp_path / "a"))
    second = save_datasets(dict(zip(("train", "test"), generate(spec))), str(tmp_path / "b"))
    for key in ("train", "test", "meta"):
        with open(first[key], "rb") as a, open(second[key], "rb") as b:
            assert a.read() == b.read()


def test_true_theta_is_stored_per_row():
    spec = GeneratorSpec(formula="gaussian", n_train=200, n_test=50, seed=1)
    train, test = generate(spec)
    frame = pd.DataFrame(test.X, columns=test.feature_names)
    np.testing.assert_allclose(test.true_theta, FORMULAS["gaussian"].theta(frame))
    assert train.provenance["formula"] == "gaussian"
    assert train.provenance["expression"] == "5*exp(-2*(x1**2 + x2**2))"


def test_covariate_ranges():
    train, _ = generate(GeneratorSpec(formula="difficult", n_train=2000, n_test=10, seed=0))
    assert train.X[:, 0].min() >= 0.1 and train.X[:, 0].max() <= 1.0
    assert np.abs(train.X[:, 1:]).max() <= 1.0


def test_censoring_rule():
    train, _ = generate(GeneratorSpec(formula="shallow", n_train=5000, n_test=10, seed=2))
    rate = train.outcome.n_events / len(train)
    assert 0.3 < rate < 0.99
    uncensored, _ = generate(GeneratorSpec(formula="shallow", n_train=500, n_test=10, seed=2, censoring=False))
    assert uncensored.outcome.n_events == 500


def test_null_hazard_has_exponential_mean():
    spec = GeneratorSpec(formula="custom:0*x1", n_train=100000, n_test=1, noise_features=0, seed=5, censoring=False)
    train, _ = generate(spec)
    assert train.outcome.durations.mean() == pytest.approx(100.0, rel=0.05)


def test_linear_formula():
    spec = GeneratorSpec(formula="linear", beta=[1.0, -2.0], n_train=100, n_test=10, noise_features=1)
    train, _ = generate(spec)
    np.testing.assert_allclose(train.true_theta, train.X[:, 0] - 2 * train.X[:, 1])
    assert spec.expression_text == "1*x1 + -2*x2"
    assert train.X.shape[1] == 3


def test_custom_expression_with_pi():
    spec = GeneratorSpec(formula="custom:sin(pi*x1) + x2", n_train=50, n_test=5, noise_features=0)
    train, _ = generate(spec)
    frame = pd.DataFrame(train.X, columns=["x1", "x2"])
    np.testing.assert_allclose(true_theta(spec, frame), np.sin(np.pi * train.X[:, 0]) + train.X[:, 1])


@pytest.mark.parametrize("kwargs", [
    {"formula": "custom:x1+bad("},
    {"formula": "custom:y + 1"},
    {"formula": "quartic"},
    {"n_train": 0},
    {"baseline": 0.0},
    {"noise_features": -1},
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidArgumentError):
        GeneratorSpec(**kwargs)


def test_non_finite_formula_is_rejected():
    spec = GeneratorSpec(formula="custom:log(x1)", n_train=100, n_test=10, noise_features=0, seed=0)
    with pytest.raises(InvalidArgumentError):
        generate(spec)
