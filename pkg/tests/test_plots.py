"""
Unit tests for the SVG figures.
"""

import os

import numpy as np
import pandas as pd
import pytest

from src.analysis.plots import edge_panel, plot_edges, plot_history
from src.kan.network import forward, prune
from src.kan.splines import activation_value
from src.symbolic.fitting import auto_symbolic
from src.training.trainer import TrainConfig, build_network, train


@pytest.fixture
def spline_and_symbolic(linear_data):
    cfg = TrainConfig(steps=40, learning_rate=0.05, lam=0.001, hidden=[2])
    trained, _ = train(build_network(cfg, linear_data), linear_data, cfg)
    _, cache = forward(trained, linear_data.X)
    pruned = prune(trained, 0.0, cache)
    _, cache = forward(pruned, linear_data.X)
    return pruned, cache, auto_symbolic(pruned, cache)


def test_edge_samples_come_from_the_spline(spline_and_symbolic, linear_data):
    pruned, cache, symnet = spline_and_symbolic
    for l, j, i in symnet.active_edges():
        panel = edge_panel(pruned, cache, l, j, i, overlay=symnet)
        np.testing.assert_allclose(panel.y, activation_value(pruned.activation(l, j, i), panel.x))
        assert panel.symbolic is symnet.layers[l].symbolic[(j, i)]

    _, symbolic_cache = forward(symnet, linear_data.X)
    panel = edge_panel(pruned, cache, 1, 0, 0, overlay=symnet)
    np.testing.assert_allclose(symbolic_cache.post[1][:, 0, 0], panel.symbolic.evaluate(symbolic_cache.pre[1][:, 0]))
    assert not np.allclose(symbolic_cache.pre[1][:, 0], cache.pre[1][:, 0])


def test_edge_panel_without_overlay(spline_and_symbolic):
    pruned, cache, _ = spline_and_symbolic
    panel = edge_panel(pruned, cache, 0, 0, 0)
    assert panel.symbolic is None
    assert panel.grid.min() == pytest.approx(panel.x.min())
    assert panel.spline.shape == panel.grid.shape


def test_plot_edges_writes_one_file_per_edge(tmp_path, spline_and_symbolic):
    pruned, cache, symnet = spline_and_symbolic
    paths = plot_edges(pruned, cache, str(tmp_path), overlay=symnet)
    assert len(paths) == len(symnet.active_edges())
    assert all(os.path.exists(p) and p.endswith(".svg") for p in paths)


def test_history_plot(tmp_path):
    history = pd.DataFrame({"step": [0, 1, 2], "loss": [3.0, 2.0, 1.5], "val_c": [np.nan, 0.6, 0.65]})
    path = plot_history(history, str(tmp_path / "history.svg"))
    with open(path) as handle:
        assert "<svg" in handle.read()
