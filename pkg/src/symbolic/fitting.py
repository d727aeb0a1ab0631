"""
Fitting symbolic edges to the (pre, post) activation samples of a trained network.

Every continuous edge is tried as a linear function first and kept linear when
R^2 clears SYMBOLIC_CONFIG["linear_r2"]; otherwise the library operator with the
best affine fit c*f(a*x + b) + d wins. (a, b) come from a refined grid search
and (c, d) from closed-form least squares at each grid cell. Categorical
inputs become per-code lookup tables.
"""

from __future__ import annotations

import math
import os
import warnings
from typing import TYPE_CHECKING, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from src.config import SYMBOLIC_CONFIG
from src.exceptions import DivergedError, InvalidArgumentError, InvalidStateError, UnfittableOperatorError
from src.kan.network import ForwardCache, Network, backward, forward
from src.kan.splines import activation_value
from src.survival.cox import cox_loss_fast, cox_loss_grad
from src.symbolic.edges import SymbolicEdge
from src.symbolic.library import get_operator, operator_library
from src.training.optim import AdamState, adam_step

if TYPE_CHECKING:
    from src.dataset import Dataset

_A_CHUNK = 16


class LinearFit(NamedTuple):
    a: float
    b: float
    r2: float


class AffineFit(NamedTuple):
    a: float
    b: float
    c: float
    d: float
    r2: float


def r_squared(y: np.ndarray, y_hat: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - y_hat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0 if ss_res <= 1e-24 * max(1.0, float(np.sum(y**2))) else 0.0
    return 1.0 - ss_res / ss_tot


def _samples(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise InvalidArgumentError(f"x and y differ in length ({x.size} vs {y.size})")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError("Samples must be finite")
    return x, y


def fit_linear(x: np.ndarray, y: np.ndarray) -> LinearFit:
    """Least-squares a*x + b; constant y gives (0, y, 1.0)."""
    x, y = _samples(x, y)
    if np.unique(x).size < 2:
        raise InvalidArgumentError("fit_linear needs at least 2 distinct x values")
    if np.ptp(y) == 0:
        return LinearFit(0.0, float(y[0]), 1.0)
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    return LinearFit(float(a), float(b), r_squared(y, a * x + b))


def _subsample(x: np.ndarray, y: np.ndarray, limit: int) -> Tuple[np.ndarray, np.ndarray]:
    """Evenly spaced rows in x order; the extremes are always kept."""
    order = np.argsort(x, kind="stable")
    if x.size > limit:
        order = order[np.unique(np.linspace(0, x.size - 1, limit).round().astype(int))]
    return x[order], y[order]


def _grid_round(op, xs: np.ndarray, ys: np.ndarray, a_vals: np.ndarray, b_vals: np.ndarray) -> Optional[Tuple[float, float, float]]:
    """Best (r2, a, b) over the grid, or None when no cell is admissible."""
    y_c = ys - ys.mean()
    var_y = float(np.mean(y_c**2))
    best: Optional[Tuple[float, float, float]] = None
    for start in range(0, a_vals.size, _A_CHUNK):
        a = a_vals[start : start + _A_CHUNK]
        U = a[:, None, None] * xs[None, None, :] + b_vals[None, :, None]
        with np.errstate(all="ignore"):
            F = op.fn(U)
            valid = op.domain(U) & np.all(np.isfinite(F), axis=-1)
            F_c = F - F.mean(axis=-1, keepdims=True)
            var_f = np.mean(F_c**2, axis=-1)
            valid &= var_f > 1e-12 * (1.0 + np.mean(F**2, axis=-1))
            cov = np.mean(F_c * y_c, axis=-1)
            r2 = np.ones_like(var_f) if var_y == 0 else cov**2 / (var_f * var_y)
        r2 = np.where(valid & np.isfinite(r2), r2, -np.inf)
        flat = int(np.argmax(r2))
        ia, ib = np.unravel_index(flat, r2.shape)
        if np.isfinite(r2[ia, ib]) and (best is None or r2[ia, ib] > best[0]):
            best = (float(r2[ia, ib]), float(a[ia]), float(b_vals[ib]))
    return best


def _closed_form(op, x: np.ndarray, y: np.ndarray, a: float, b: float) -> AffineFit:
    with np.errstate(all="ignore"):
        f = op.fn(a * x + b)
    A = np.column_stack([f, np.ones_like(f)])
    (c, d), *_ = np.linalg.lstsq(A, y, rcond=None)
    return AffineFit(a, b, float(c), float(d), r_squared(y, c * f + d))


def fit_affine(op_name: str, x: np.ndarray, y: np.ndarray, config: Dict = SYMBOLIC_CONFIG) -> AffineFit:
    """Fit c*f(a*x + b) + d for one library operator."""
    op = get_operator(op_name)
    x, y = _samples(x, y)
    if x.size < 4:
        raise InvalidArgumentError("fit_affine needs at least 4 samples")
    xs, ys = _subsample(x, y, config["max_grid_samples"])

    center_a, center_b, half = 0.0, 0.0, float(config["grid_box"])
    incumbent: Optional[Tuple[float, float, float]] = None
    for _ in range(config["grid_rounds"]):
        a_vals = np.linspace(center_a - half, center_a + half, config["grid_points"])
        b_vals = np.linspace(center_b - half, center_b + half, config["grid_points"])
        found = _grid_round(op, xs, ys, a_vals, b_vals)
        if found is not None and (incumbent is None or found[0] >= incumbent[0]):
            incumbent = found
        if incumbent is None:
            raise UnfittableOperatorError(op_name)
        _, center_a, center_b = incumbent
        half /= config["grid_shrink"]
    return _closed_form(op, x, y, incumbent[1], incumbent[2])


def edge_samples(cache: ForwardCache, l: int, j: int, i: int) -> Tuple[np.ndarray, np.ndarray]:
    return cache.pre[l][:, i].copy(), cache.post[l][:, j, i].copy()


def _discrete_map(net: Network, l: int, j: int, i: int, x: np.ndarray, y: np.ndarray) -> SymbolicEdge:
    meta = net.input_meta[i]
    codes = np.rint(x).astype(int)
    n_codes = max(meta.n_categories, int(codes.max()) + 1 if codes.size else 0)
    values = np.empty(n_codes)
    activation = net.activation(l, j, i)
    for code in range(n_codes):
        rows = codes == code
        values[code] = y[rows].mean() if rows.any() else activation_value(activation, float(code))
    edge = SymbolicEdge("discrete_map", values, labels=list(meta.labels))
    edge.r2 = r_squared(y, values[codes])
    return edge


def _fit_continuous(x: np.ndarray, y: np.ndarray, config: Dict) -> SymbolicEdge:
    if np.unique(x).size < 2:
        return SymbolicEdge("linear", [0.0, float(y.mean())], r2=r_squared(y, np.full_like(y, y.mean())))
    linear = fit_linear(x, y)
    if linear.r2 > config["linear_r2"]:
        return SymbolicEdge("linear", [linear.a, linear.b], r2=linear.r2)

    best: Optional[Tuple[str, AffineFit]] = None
    for name in operator_library():
        if name == "linear":
            continue
        try:
            fit = fit_affine(name, x, y, config)
        except UnfittableOperatorError:
            continue
        if math.isfinite(fit.r2) and (best is None or fit.r2 > best[1].r2):
            best = (name, fit)
    if best is None or best[1].r2 < linear.r2:
        return SymbolicEdge("linear", [linear.a, linear.b], r2=linear.r2)
    name, fit = best
    return SymbolicEdge("operator", [fit.a, fit.b, fit.c, fit.d], name=name, r2=fit.r2)


def _fit_edge(net: Network, cache: ForwardCache, l: int, j: int, i: int, config: Dict) -> SymbolicEdge:
    x, y = edge_samples(cache, l, j, i)
    if l == 0 and net.input_meta[i].is_categorical:
        edge = _discrete_map(net, l, j, i, x, y)
    else:
        edge = _fit_continuous(x, y, config)
    edge.low_fidelity = edge.r2 < config["low_fidelity_r2"]
    return edge


def _check_cache(net: Network, cache: ForwardCache) -> None:
    if len(cache.post) != net.depth or any(
        post.shape[1:] != layer.mask.shape for post, layer in zip(cache.post, net.layers)
    ):
        raise InvalidStateError("Cache does not belong to this network", hint="re-run forward() with this network")


def auto_symbolic(
    net: Network,
    cache: ForwardCache,
    config: Dict = SYMBOLIC_CONFIG,
    jobs: int = 1,
    verbose: bool = False,
) -> Network:
    """Replace every active edge without a symbolic form by its best fit; returns a new network."""
    _check_cache(net, cache)
    pending = [(l, j, i) for l, j, i in net.active_edges() if (j, i) not in net.layers[l].symbolic]
    fits = Parallel(n_jobs=jobs)(
        delayed(_fit_edge)(net, cache, l, j, i, config)
        for l, j, i in tqdm(pending, desc="Symbolic fitting", disable=not verbose)
    )
    symnet = net.copy()
    for (l, j, i), edge in zip(pending, fits):
        symnet.layers[l].symbolic[(j, i)] = edge
        if edge.low_fidelity:
            warnings.warn(
                f"Edge ({l},{i},{j}) fits best as {edge.name} with R^2={edge.r2:.3f}; "
                "consider export_edge_samples for external symbolic regression",
                stacklevel=2,
            )
    symnet.stage = "symbolic"
    return symnet


def set_symbolic(net: Network, l: int, j: int, i: int, op_name: str, cache: ForwardCache, config: Dict = SYMBOLIC_CONFIG) -> Network:
    """Fix one edge to a chosen operator ('linear' included), fitting its affine parameters."""
    _check_cache(net, cache)
    if not net.layers[l].mask[j, i]:
        raise InvalidArgumentError(f"Edge ({l},{i},{j}) is not active")
    x, y = edge_samples(cache, l, j, i)
    if op_name == "linear":
        fit = fit_linear(x, y)
        edge = SymbolicEdge("linear", [fit.a, fit.b], r2=fit.r2)
    else:
        fit = fit_affine(op_name, x, y, config)
        edge = SymbolicEdge("operator", [fit.a, fit.b, fit.c, fit.d], name=op_name, r2=fit.r2)
    edge.low_fidelity = edge.r2 < config["low_fidelity_r2"]
    updated = net.copy()
    updated.layers[l].symbolic[(j, i)] = edge
    if updated.is_symbolic():
        updated.stage = "symbolic"
    return updated


def _require_symbolic(net: Network) -> None:
    if not net.is_symbolic():
        raise InvalidStateError("Network still has spline edges", hint="run auto_symbolic first")


def finetune_affine(
    symnet: Network,
    data: Dataset,
    steps: int = SYMBOLIC_CONFIG["finetune_steps"],
    lr: float = SYMBOLIC_CONFIG["finetune_learning_rate"],
    verbose: bool = False,
) -> Network:
    """Adam on the symbolic parameters against the fast Cox loss; operators stay fixed.

    The lowest-loss parameters seen (initial ones included) are kept. A
    non-finite loss restores the pre-finetune network with a warning.
    """
    _require_symbolic(symnet)
    net = symnet.copy()
    if steps <= 0:
        return net
    initial = net.parameters("symbolic")
    params = {key: value.copy() for key, value in initial.items()}
    state = AdamState()
    best_loss, best_params = math.inf, initial
    try:
        for step in tqdm(range(steps + 1), desc="Fine-tuning", disable=not verbose):
            theta, cache = forward(net, data.X)
            with np.errstate(all="ignore"):
                loss = cox_loss_fast(theta, data.outcome, reduction="mean")
            if not math.isfinite(loss):
                raise DivergedError(step, loss)
            if loss < best_loss:
                best_loss, best_params = loss, {key: value.copy() for key, value in params.items()}
            if step == steps:
                break
            grads = backward(net, cache, cox_loss_grad(theta, data.outcome, fast=True, reduction="mean"))
            params, state = adam_step(params, {key: grads[key] for key in params}, state, lr)
            net.load_parameters(params)
    except DivergedError as exc:
        warnings.warn(f"Fine-tuning diverged ({exc}); keeping the pre-finetune parameters", stacklevel=2)
        return symnet.copy()
    net.load_parameters(best_params)
    return net


def export_edge_samples(net: Network, cache: ForwardCache, directory: str) -> List[str]:
    """One CSV (x, y) per active edge, named layer{l}_in{i}_out{j}.csv."""
    _check_cache(net, cache)
    os.makedirs(directory, exist_ok=True)
    paths = []
    for l, j, i in net.active_edges():
        x, y = edge_samples(cache, l, j, i)
        path = os.path.join(directory, f"layer{l}_in{i}_out{j}.csv")
        pd.DataFrame({"x": x, "y": y}).to_csv(path, index=False, float_format="%.17g")
        paths.append(path)
    return paths


def load_edge_samples(path: str) -> Tuple[np.ndarray, np.ndarray]:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = {"x", "y"} - set(frame.columns)
    if missing:
        raise InvalidArgumentError(f"{path} lacks columns {sorted(missing)}")
    return frame["x"].to_numpy(dtype=float), frame["y"].to_numpy(dtype=float)
