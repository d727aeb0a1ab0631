"""
The Kolmogorov-Arnold network: layered edge activations, cached forward pass,
reverse-mode gradients, sparsity regularization and pruning.

Edges leaving the same node share that node's knot vector, so the spline basis
is evaluated once per node and batch. Parameters are exposed as a flat map
keyed "{layer}.{name}" ("0.coeffs", "1.w_b", "0.sym.1.2", ...), which is the
structure the optimizer and the gradient functions agree on.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.exceptions import InvalidArgumentError, InvalidStateError, PruneTooAggressiveError
from src.kan.splines import (
    BASE_KINDS,
    Activation,
    KnotVector,
    base_derivative,
    base_function,
    basis_derivative_matrix,
    basis_matrix,
    make_knots,
    refit_coefficients,
    refit_range,
)

if TYPE_CHECKING:
    from src.symbolic.edges import SymbolicEdge

Gradients = Dict[str, np.ndarray]
Edge = Tuple[int, int, int]


@dataclass
class InputMeta:
    name: str
    kind: str = "continuous"
    n_categories: int = 0
    labels: List[str] = field(default_factory=list)
    mean: Optional[float] = None
    std: Optional[float] = None

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "n_categories": self.n_categories,
            "labels": list(self.labels),
            "mean": self.mean,
            "std": self.std,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "InputMeta":
        return cls(
            name=payload["name"],
            kind=payload.get("kind", "continuous"),
            n_categories=int(payload.get("n_categories", 0)),
            labels=list(payload.get("labels", [])),
            mean=payload.get("mean"),
            std=payload.get("std"),
        )


@dataclass
class KANLayer:
    """An n_out x n_in grid of edge activations."""

    knots: List[KnotVector]
    coeffs: np.ndarray
    w_b: np.ndarray
    w_s: np.ndarray
    mask: np.ndarray
    base_kind: str = "identity"
    symbolic: Dict[Tuple[int, int], "SymbolicEdge"] = field(default_factory=dict)

    @property
    def n_in(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n_out(self) -> int:
        return self.coeffs.shape[0]

    def symbolic_mask(self) -> np.ndarray:
        sym = np.zeros_like(self.mask)
        for (j, i) in self.symbolic:
            sym[j, i] = True
        return sym

    def activation(self, j: int, i: int) -> Activation:
        return Activation(
            knots=self.knots[i],
            coeffs=self.coeffs[j, i].copy(),
            w_b=float(self.w_b[j, i]),
            w_s=float(self.w_s[j, i]),
            basis_kind=self.base_kind,
            active=bool(self.mask[j, i]),
            symbolic=self.symbolic.get((j, i)),
        )


@dataclass
class Network:
    shape: List[int]
    layers: List[KANLayer]
    input_meta: List[InputMeta]
    G: int
    k: int
    base_kind: str = "identity"
    stage: str = "trained"

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def feature_names(self) -> List[str]:
        return [meta.name for meta in self.input_meta]

    def activation(self, l: int, j: int, i: int) -> Activation:
        return self.layers[l].activation(j, i)

    def active_edges(self) -> List[Edge]:
        return [
            (l, int(j), int(i))
            for l, layer in enumerate(self.layers)
            for j, i in zip(*np.nonzero(layer.mask))
        ]

    def dropped_features(self) -> List[str]:
        """Input columns left without any active outgoing edge."""
        first = self.layers[0].mask
        return [meta.name for i, meta in enumerate(self.input_meta) if not first[:, i].any()]

    def is_symbolic(self) -> bool:
        return all((j, i) in self.layers[l].symbolic for l, j, i in self.active_edges())

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def parameters(self, kind: str = "spline") -> Dict[str, np.ndarray]:
        """Copies of the trainable arrays: kind is 'spline', 'symbolic' or 'all'."""
        params: Dict[str, np.ndarray] = {}
        for l, layer in enumerate(self.layers):
            if kind in ("spline", "all"):
                params[f"{l}.coeffs"] = layer.coeffs.copy()
                params[f"{l}.w_b"] = layer.w_b.copy()
                params[f"{l}.w_s"] = layer.w_s.copy()
            if kind in ("symbolic", "all"):
                for (j, i), edge in sorted(layer.symbolic.items()):
                    params[f"{l}.sym.{j}.{i}"] = edge.params.copy()
        return params

    def load_parameters(self, params: Dict[str, np.ndarray]) -> None:
        for key, value in params.items():
            parts = key.split(".")
            layer = self.layers[int(parts[0])]
            if parts[1] == "sym":
                j, i = int(parts[2]), int(parts[3])
                layer.symbolic[(j, i)] = layer.symbolic[(j, i)].with_params(value)
            else:
                current = getattr(layer, parts[1])
                if current.shape != np.shape(value):
                    raise InvalidArgumentError(f"Shape mismatch for parameter {key}")
                setattr(layer, parts[1], np.array(value, dtype=float))

    def predict(self, X: np.ndarray) -> np.ndarray:
        theta, _ = forward(self, X)
        return theta


@dataclass
class ForwardCache:
    """Everything the reverse pass needs from one forward call."""

    pre: List[np.ndarray]
    post: List[np.ndarray]
    base: List[np.ndarray]
    bases: List[np.ndarray]
    spline: List[np.ndarray]

    @property
    def n_rows(self) -> int:
        return self.pre[0].shape[0]


@dataclass
class RegPenalty:
    edge_l1: List[np.ndarray]
    layer_l1: np.ndarray
    layer_entropy: np.ndarray
    coeff_l1: np.ndarray
    total: float


def _validate_shape(shape: Sequence[int]) -> List[int]:
    shape = [int(n) for n in shape]
    if len(shape) < 2:
        raise InvalidArgumentError(f"A network needs at least an input and an output layer, got {shape}")
    if any(n < 1 for n in shape):
        raise InvalidArgumentError(f"Every layer width must be >= 1, got {shape}")
    if shape[-1] != 1:
        raise InvalidArgumentError(f"The output layer must have width 1, got {shape}")
    return shape


def init_network(
    shape: Sequence[int],
    base_kind: str = "identity",
    G: int = 4,
    k: int = 3,
    xi_b: float = 0.1,
    xi_s: float = 0.05,
    seed: int = 0,
    input_meta: Optional[List[InputMeta]] = None,
) -> Network:
    """Initialize w_s = 1, w_b = 1/n_in + U[-xi_b, xi_b], c ~ N(0, (xi_s/G)^2) on [-1, 1] knots."""
    shape = _validate_shape(shape)
    if base_kind not in BASE_KINDS:
        raise InvalidArgumentError(f"Unknown base function: {base_kind}")
    if input_meta is None:
        input_meta = [InputMeta(name=f"x{i + 1}") for i in range(shape[0])]
    if len(input_meta) != shape[0]:
        raise InvalidArgumentError(f"{len(input_meta)} input descriptions for input width {shape[0]}")

    rng = np.random.default_rng(seed)
    default_knots = make_knots(-1.0, 1.0, G, k)
    layers = []
    for n_in, n_out in zip(shape[:-1], shape[1:]):
        w_b = 1.0 / n_in + rng.uniform(-xi_b, xi_b, size=(n_out, n_in))
        coeffs = rng.normal(0.0, xi_s / G, size=(n_out, n_in, G + k))
        layers.append(
            KANLayer(
                knots=[default_knots] * n_in,
                coeffs=coeffs,
                w_b=w_b,
                w_s=np.ones((n_out, n_in)),
                mask=np.ones((n_out, n_in), dtype=bool),
                base_kind=base_kind,
            )
        )
    return Network(shape=shape, layers=layers, input_meta=list(input_meta), G=G, k=k, base_kind=base_kind)


def _check_inputs(net: Network, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.shape[0]:
        raise InvalidArgumentError(f"Expected a (rows, {net.shape[0]}) matrix, got shape {X.shape}")
    for i, meta in enumerate(net.input_meta):
        if meta.is_categorical and X.shape[0]:
            col = X[:, i]
            if np.any(col != np.rint(col)) or col.min() < 0 or col.max() >= max(meta.n_categories, 1):
                raise InvalidArgumentError(f"Column '{meta.name}' holds codes outside 0..{meta.n_categories - 1}")
    return X


def _layer_bases(layer: KANLayer, x: np.ndarray, derivative: bool = False) -> np.ndarray:
    fn = basis_derivative_matrix if derivative else basis_matrix
    return np.stack([fn(x[:, i], layer.knots[i]) for i in range(layer.n_in)], axis=1)


def forward(net: Network, X: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """theta for every row, plus the cache of pre/post activations."""
    x = _check_inputs(net, X)
    cache = ForwardCache(pre=[x], post=[], base=[], bases=[], spline=[])
    for layer in net.layers:
        B = _layer_bases(layer, x)
        spline = np.einsum("nik,jik->nji", B, layer.coeffs)
        base = base_function(x, layer.base_kind)
        post = layer.w_b[None] * base[:, None, :] + layer.w_s[None] * spline
        for (j, i), edge in layer.symbolic.items():
            post[:, j, i] = edge.evaluate(x[:, i])
        post = np.where(layer.mask[None], post, 0.0)
        x = post.sum(axis=2)
        cache.pre.append(x)
        cache.post.append(post)
        cache.base.append(base)
        cache.bases.append(B)
        cache.spline.append(spline)
    return x[:, 0], cache


def _reverse(
    net: Network,
    cache: ForwardCache,
    dL_dtheta: np.ndarray,
    post_seeds: Optional[List[np.ndarray]] = None,
) -> Gradients:
    g = np.asarray(dL_dtheta, dtype=float).reshape(-1)
    if g.shape[0] != cache.n_rows or len(cache.post) != net.depth:
        raise InvalidStateError(
            f"Cache holds {cache.n_rows} rows for {len(cache.post)} layers; "
            f"got {g.shape[0]} upstream gradients for {net.depth} layers",
            hint="re-run forward() on the current batch",
        )
    for l, layer in enumerate(net.layers):
        if cache.post[l].shape[1:] != layer.mask.shape:
            raise InvalidStateError("Cache was produced by a network of a different shape",
                                    hint="re-run forward() with this network")

    grads: Gradients = {}
    g_out = g[:, None]
    for l in range(net.depth - 1, -1, -1):
        layer = net.layers[l]
        x = cache.pre[l]
        g_post = np.broadcast_to(g_out[:, :, None], cache.post[l].shape)
        if post_seeds is not None:
            g_post = g_post + post_seeds[l]
        g_post = np.where(layer.mask[None], g_post, 0.0)

        sym = layer.symbolic_mask()
        g_spline = np.where(sym[None], 0.0, g_post)
        grads[f"{l}.w_b"] = np.einsum("nji,ni->ji", g_spline, cache.base[l])
        grads[f"{l}.w_s"] = np.einsum("nji,nji->ji", g_spline, cache.spline[l])
        grads[f"{l}.coeffs"] = np.einsum("nji,nik->jik", g_spline * layer.w_s[None], cache.bases[l])
        for (j, i), edge in sorted(layer.symbolic.items()):
            grads[f"{l}.sym.{j}.{i}"] = edge.param_grads(x[:, i]).T @ g_post[:, j, i]

        if l == 0:
            break
        dB = _layer_bases(layer, x, derivative=True)
        dphi = layer.w_b[None] * base_derivative(x, layer.base_kind)[:, None, :] + layer.w_s[None] * np.einsum(
            "nik,jik->nji", dB, layer.coeffs
        )
        for (j, i), edge in layer.symbolic.items():
            dphi[:, j, i] = edge.derivative(x[:, i])
        g_out = np.einsum("nji,nji->ni", g_post, dphi)
    return grads


def backward(net: Network, cache: ForwardCache, dL_dtheta: np.ndarray) -> Gradients:
    """Gradients of a scalar loss w.r.t. every parameter, given dL/dtheta per row."""
    return _reverse(net, cache, dL_dtheta)


def edge_l1(cache: ForwardCache) -> List[np.ndarray]:
    """Mean |phi(x)| over the batch for every edge, one (n_out, n_in) array per layer."""
    return [np.abs(post).mean(axis=0) for post in cache.post]


def _spline_edge_mask(layer: KANLayer) -> np.ndarray:
    return layer.mask & ~layer.symbolic_mask()


def penalty(net: Network, cache: ForwardCache, lambda_ent: float = 0.0, lambda_coef: float = 0.0) -> RegPenalty:
    edges = edge_l1(cache)
    layer_l1 = np.array([e.sum() for e in edges])
    entropy = np.zeros(net.depth)
    coeff_l1 = np.zeros(net.depth)
    for l, (e, total) in enumerate(zip(edges, layer_l1)):
        if total > 0:
            p = e[e > 0] / total
            entropy[l] = float(-(p * np.log(p)).sum())
        layer = net.layers[l]
        per_edge = np.abs(layer.coeffs).mean(axis=2)
        coeff_l1[l] = per_edge[_spline_edge_mask(layer)].sum()
    total = float(layer_l1.sum() + lambda_ent * entropy.sum() + lambda_coef * coeff_l1.sum())
    return RegPenalty(edge_l1=edges, layer_l1=layer_l1, layer_entropy=entropy, coeff_l1=coeff_l1, total=total)


def penalty_grads(
    net: Network, cache: ForwardCache, lambda_ent: float = 0.0, lambda_coef: float = 0.0
) -> Gradients:
    """Subgradient of penalty(...).total; |.| uses sign with sign(0) = 0."""
    reg = penalty(net, cache, lambda_ent, lambda_coef)
    n_rows = cache.n_rows
    seeds = []
    for l, post in enumerate(cache.post):
        e, total = reg.edge_l1[l], reg.layer_l1[l]
        d_entropy = np.zeros_like(e)
        if total > 0:
            nz = e > 0
            d_entropy[nz] = (-np.log(e[nz] / total) - reg.layer_entropy[l]) / total
        d_edge = 1.0 + lambda_ent * d_entropy
        seeds.append(np.sign(post) / n_rows * d_edge[None])

    grads = _reverse(net, cache, np.zeros(n_rows), post_seeds=seeds)
    for l, layer in enumerate(net.layers):
        n_basis = layer.coeffs.shape[2]
        grads[f"{l}.coeffs"] = grads[f"{l}.coeffs"] + lambda_coef * np.sign(layer.coeffs) / n_basis * _spline_edge_mask(layer)[..., None]
    return grads


def _cascade(masks: List[np.ndarray]) -> List[np.ndarray]:
    """Deactivate hidden nodes lacking an active incoming or outgoing edge, until stable."""
    masks = [m.copy() for m in masks]
    changed = True
    while changed:
        changed = False
        for l in range(1, len(masks)):
            incoming = masks[l - 1].any(axis=1)
            outgoing = masks[l].any(axis=0)
            dead = ~(incoming & outgoing)
            if (masks[l - 1][dead].any()) or (masks[l][:, dead].any()):
                masks[l - 1][dead, :] = False
                masks[l][:, dead] = False
                changed = True
    return masks


def _masks_at(net: Network, edges: List[np.ndarray], threshold: float) -> List[np.ndarray]:
    return _cascade([layer.mask & (e >= threshold) for layer, e in zip(net.layers, edges)])


def max_feasible_threshold(net: Network, cache: ForwardCache) -> float:
    """Largest threshold that still leaves the output node connected."""
    edges = edge_l1(cache)
    candidates = np.unique(np.concatenate([e[layer.mask] for layer, e in zip(net.layers, edges)] + [np.zeros(1)]))
    for threshold in candidates[::-1]:
        if _masks_at(net, edges, threshold)[-1].any():
            return float(threshold)
    return 0.0


def prune(net: Network, threshold: float, cache: ForwardCache) -> Network:
    """Deactivate edges whose mean |phi| is below threshold, then cascade dead nodes."""
    if len(cache.post) != net.depth or cache.post[0].shape[1:] != net.layers[0].mask.shape:
        raise InvalidStateError("Cache does not belong to this network", hint="re-run forward() on the training set")
    edges = edge_l1(cache)
    masks = _masks_at(net, edges, threshold)
    if not masks[-1].any():
        raise PruneTooAggressiveError(threshold, max_feasible_threshold(net, cache))
    pruned = net.copy()
    for layer, mask in zip(pruned.layers, masks):
        layer.mask = mask
        layer.symbolic = {key: edge for key, edge in layer.symbolic.items() if mask[key]}
    pruned.stage = "pruned" if net.stage == "trained" else net.stage
    return pruned


def _refresh_node(layer: KANLayer, i: int, samples: np.ndarray) -> None:
    lo, hi = refit_range(samples)
    new_knots = make_knots(lo, hi, layer.knots[i].G, layer.knots[i].k)
    layer.coeffs[:, i, :] = refit_coefficients(layer.knots[i], layer.coeffs[:, i, :], new_knots, samples)
    layer.knots = list(layer.knots)
    layer.knots[i] = new_knots


def fit_input_knots(net: Network, X: np.ndarray) -> Network:
    """Re-range layer-0 knots onto the training covariates (in place); returns net."""
    X = _check_inputs(net, X)
    layer = net.layers[0]
    for i, meta in enumerate(net.input_meta):
        samples = X[:, i]
        if meta.is_categorical:
            samples = np.arange(max(meta.n_categories, 1), dtype=float)
        _refresh_node(layer, i, samples)
    return net


def refresh_hidden_knots(net: Network, cache: ForwardCache) -> Network:
    """Re-range every hidden layer's knots onto its current pre-activations (in place)."""
    for l in range(1, net.depth):
        layer = net.layers[l]
        for i in range(layer.n_in):
            _refresh_node(layer, i, cache.pre[l][:, i])
    return net
