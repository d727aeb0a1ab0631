"""
Unit tests for the KAN forward pass, gradients, regularization and pruning.
"""

import numpy as np
import pytest

from src.exceptions import InvalidArgumentError, InvalidStateError, PruneTooAggressiveError
from src.kan.network import (
    ForwardCache,
    InputMeta,
    backward,
    edge_l1,
    fit_input_knots,
    forward,
    init_network,
    max_feasible_threshold,
    penalty,
    penalty_grads,
    prune,
    refresh_hidden_knots,
)
from src.kan.splines import activation_value


def scalar_theta(net, x):
    """Edge-by-edge recursive evaluation of one row."""
    values = list(x)
    for l, layer in enumerate(net.layers):
        values = [
            sum(activation_value(net.activation(l, j, i), values[i]) for i in range(layer.n_in))
            for j in range(layer.n_out)
        ]
    return values[0]


def _randomize(net, rng):
    for layer in net.layers:
        layer.coeffs = rng.normal(size=layer.coeffs.shape)
        layer.w_b = rng.normal(size=layer.w_b.shape)
        layer.w_s = rng.normal(size=layer.w_s.shape)
    return net


def _numeric_grads(net, loss, h=1e-6):
    params = net.parameters()
    numeric = {}
    for key, value in params.items():
        g = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            for sign in (1, -1):
                bumped = {key: value.copy()}
                bumped[key][idx] += sign * h
                trial = net.copy()
                trial.load_parameters(bumped)
                g[idx] += sign * loss(trial) / (2 * h)
        numeric[key] = g
    return numeric


def test_init_network_shapes():
    net = init_network([3, 2, 1], G=5, k=3, seed=1)
    assert net.depth == 2
    assert net.layers[0].coeffs.shape == (2, 3, 8)
    assert net.layers[1].w_b.shape == (1, 2)
    assert np.all(net.layers[0].w_s == 1.0)
    assert net.feature_names == ["x1", "x2", "x3"]


@pytest.mark.parametrize("shape", [[3], [2, 2], [2, 0, 1]])
def test_init_network_rejects_bad_shapes(shape):
    with pytest.raises(InvalidArgumentError):
        init_network(shape)


def test_init_is_deterministic():
    a = init_network([2, 3, 1], seed=9)
    b = init_network([2, 3, 1], seed=9)
    for la, lb in zip(a.layers, b.layers):
        np.testing.assert_array_equal(la.coeffs, lb.coeffs)
        np.testing.assert_array_equal(la.w_b, lb.w_b)


@pytest.mark.parametrize("shape", [[2, 2, 1], [4, 3, 2, 1]])
def test_forward_matches_scalar_evaluation(shape, rng):
    net = _randomize(init_network(shape, base_kind="silu", seed=2), rng)
    X = rng.uniform(-1, 1, size=(5, shape[0]))
    theta, cache = forward(net, X)
    expected = [scalar_theta(net, row) for row in X]
    np.testing.assert_allclose(theta, expected, atol=1e-10)
    assert cache.n_rows == 5
    assert len(cache.post) == net.depth


def test_forward_rejects_wrong_width(rng):
    net = init_network([2, 1])
    with pytest.raises(InvalidArgumentError):
        forward(net, rng.normal(size=(4, 3)))


def test_categorical_codes_are_checked():
    meta = [InputMeta(name="grade", kind="categorical", n_categories=3), InputMeta(name="x")]
    net = init_network([2, 1], input_meta=meta)
    with pytest.raises(InvalidArgumentError):
        forward(net, np.array([[3.0, 0.1]]))
    with pytest.raises(InvalidArgumentError):
        forward(net, np.array([[0.5, 0.1]]))


def test_backward_matches_finite_differences(rng):
    net = _randomize(init_network([3, 2, 1], base_kind="silu", seed=3), rng)
    X = rng.uniform(-0.9, 0.9, size=(6, 3))
    theta, cache = forward(net, X)
    grads = backward(net, cache, 2 * theta)
    numeric = _numeric_grads(net, lambda n: float(np.sum(n.predict(X) ** 2)))
    for key in numeric:
        np.testing.assert_allclose(grads[key], numeric[key], rtol=1e-4, atol=1e-6)


def test_masked_edges_get_no_gradient(rng):
    net = _randomize(init_network([2, 2, 1], seed=4), rng)
    net.layers[0].mask[1, 0] = False
    X = rng.uniform(-1, 1, size=(5, 2))
    theta, cache = forward(net, X)
    grads = backward(net, cache, np.ones_like(theta))
    assert np.all(grads["0.coeffs"][1, 0] == 0)
    assert grads["0.w_b"][1, 0] == 0
    assert np.all(cache.post[0][:, 1, 0] == 0)


def test_backward_rejects_stale_cache(rng):
    net = init_network([2, 1])
    _, cache = forward(net, rng.normal(size=(4, 2)))
    with pytest.raises(InvalidStateError):
        backward(net, cache, np.ones(3))


def _cache_with_l1(values):
    post = np.array(values, dtype=float).reshape(1, 1, -1)
    return ForwardCache(pre=[np.zeros((1, post.shape[2])), np.zeros((1, 1))], post=[post],
                        base=[np.zeros((1, post.shape[2]))], bases=[], spline=[np.zeros_like(post)])


def test_penalty_hand_computed():
    net = init_network([2, 1], seed=0)
    net.layers[0].coeffs = np.full((1, 2, 7), 0.5)
    reg = penalty(net, _cache_with_l1([0.3, 0.1]), lambda_ent=2.0, lambda_coef=1.0)
    entropy = -(0.75 * np.log(0.75) + 0.25 * np.log(0.25))
    assert reg.layer_entropy[0] == pytest.approx(0.5623, abs=1e-4)
    assert reg.layer_l1[0] == pytest.approx(0.4)
    assert reg.coeff_l1[0] == pytest.approx(1.0)
    assert reg.total == pytest.approx(0.4 + 2.0 * entropy + 1.0)


def test_penalty_of_dead_layer_is_zero():
    net = init_network([2, 1], seed=0)
    net.layers[0].coeffs[:] = 0
    reg = penalty(net, _cache_with_l1([0.0, 0.0]), lambda_ent=2.0)
    assert reg.total == 0.0


def test_penalty_grads_match_finite_differences(rng):
    net = _randomize(init_network([2, 2, 1], seed=5), rng)
    X = rng.uniform(-0.9, 0.9, size=(8, 2))
    _, cache = forward(net, X)
    # keep every post-activation away from the |.| kink
    assert np.min(np.abs(np.concatenate([p.ravel() for p in cache.post]))) > 1e-4
    grads = penalty_grads(net, cache, lambda_ent=2.0, lambda_coef=0.5)

    def total(n):
        return penalty(n, forward(n, X)[1], lambda_ent=2.0, lambda_coef=0.5).total

    numeric = _numeric_grads(net, total, h=1e-7)
    assert set(numeric) == {"0.coeffs", "0.w_b", "0.w_s", "1.coeffs", "1.w_b", "1.w_s"}
    for key in numeric:
        np.testing.assert_allclose(grads[key], numeric[key], rtol=1e-3, atol=1e-5)


def test_entropy_of_uniform_edges_is_log_n():
    net = init_network([4, 1], seed=0)
    reg = penalty(net, _cache_with_l1([0.2, 0.2, 0.2, 0.2]), lambda_ent=1.0)
    assert reg.layer_entropy[0] == pytest.approx(np.log(4))


def test_entropy_is_bounded(rng):
    net = init_network([6, 1], seed=0)
    for _ in range(20):
        values = rng.uniform(0, 1, size=6) * (rng.uniform(size=6) < 0.7)
        entropy = penalty(net, _cache_with_l1(values), lambda_ent=1.0).layer_entropy[0]
        assert 0.0 <= entropy <= np.log(6) + 1e-12


def test_inactive_edge_matches_zeroed_edge(rng):
    net = _randomize(init_network([2, 2, 1], seed=8), rng)
    X = rng.uniform(-1, 1, size=(10, 2))
    masked = net.copy()
    masked.layers[0].mask[1, 0] = False
    zeroed = net.copy()
    zeroed.layers[0].coeffs[1, 0] = 0.0
    zeroed.layers[0].w_b[1, 0] = 0.0
    np.testing.assert_allclose(masked.predict(X), zeroed.predict(X), atol=1e-12)
    reg_masked = penalty(masked, forward(masked, X)[1], lambda_ent=2.0, lambda_coef=1.0)
    reg_zeroed = penalty(zeroed, forward(zeroed, X)[1], lambda_ent=2.0, lambda_coef=1.0)
    assert reg_masked.total == pytest.approx(reg_zeroed.total)


def test_pruning_is_monotone_in_threshold(rng):
    net = _randomize(init_network([3, 3, 1], seed=10), rng)
    _, cache = forward(net, rng.uniform(-1, 1, size=(40, 3)))
    top = max_feasible_threshold(net, cache)
    previous = None
    for threshold in np.linspace(0.0, top, 12):
        edges = set(prune(net, float(threshold), cache).active_edges())
        if previous is not None:
            assert edges <= previous
        previous = edges


def _net_with_dead_input():
    net = init_network([3, 1], seed=6)
    net.layers[0].w_b[0, 2] = 0.0
    net.layers[0].coeffs[0, 2] = 0.0
    return net


def test_prune_drops_silent_input(rng):
    net = _net_with_dead_input()
    X = rng.uniform(-1, 1, size=(50, 3))
    _, cache = forward(net, X)
    pruned = prune(net, 1e-8, cache)
    assert pruned.dropped_features() == ["x3"]
    assert pruned.stage == "pruned"
    assert net.layers[0].mask.all()
    np.testing.assert_allclose(pruned.predict(X), net.predict(X), atol=1e-12)


def test_prune_cascades_dead_hidden_nodes(rng):
    net = init_network([2, 2, 1], seed=7)
    net.layers[1].w_b[0, 0] = 0.0
    net.layers[1].coeffs[0, 0] = 0.0
    _, cache = forward(net, rng.uniform(-1, 1, size=(30, 2)))
    pruned = prune(net, 1e-8, cache)
    assert not pruned.layers[1].mask[0, 0]
    assert not pruned.layers[0].mask[0].any()
    assert pruned.layers[0].mask[1].all()
    assert len(pruned.active_edges()) == 3


def test_prune_too_aggressive_reports_feasible_threshold(rng):
    net = init_network([2, 1], seed=8)
    _, cache = forward(net, rng.uniform(-1, 1, size=(20, 2)))
    with pytest.raises(PruneTooAggressiveError) as info:
        prune(net, 1e6, cache)
    feasible = info.value.max_feasible_threshold
    assert feasible == pytest.approx(max_feasible_threshold(net, cache))
    assert feasible == pytest.approx(edge_l1(cache)[0].max())
    assert prune(net, feasible, cache).active_edges()


def test_fit_input_knots_covers_training_range(rng):
    net = init_network([2, 1], seed=0)
    X = np.column_stack([rng.uniform(5, 9, 40), rng.uniform(-3, -1, 40)])
    fit_input_knots(net, X)
    lo, hi = net.layers[0].knots[0].interior_range
    assert lo <= X[:, 0].min() and hi >= X[:, 0].max()
    assert hi - lo < 4.2


def test_refresh_hidden_knots_preserves_output(rng):
    net = init_network([2, 3, 1], seed=1)
    X = rng.uniform(-1, 1, size=(200, 2))
    before, cache = forward(net, X)
    refresh_hidden_knots(net, cache)
    after = net.predict(X)
    lo, hi = net.layers[1].knots[0].interior_range
    assert lo <= cache.pre[1][:, 0].min() and hi >= cache.pre[1][:, 0].max()
    assert np.corrcoef(before, after)[0, 1] > 0.99
