"""
SVG figures: one panel per active edge (spline curve over the cached
pre/post-activation scatter, plus the fitted symbolic curve when present),
the training history and term importance.
"""

from __future__ import annotations

import os
from typing import List, NamedTuple, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402

from src.config import PLOT_CONFIG  # noqa: E402
from src.kan.network import ForwardCache, Network  # noqa: E402
from src.kan.splines import activation_value  # noqa: E402
from src.symbolic.edges import SymbolicEdge  # noqa: E402

sns.set_style("whitegrid")
plt.rcParams["svg.hashsalt"] = PLOT_CONFIG["hashsalt"]
plt.rcParams["font.size"] = 10


def _figure():
    return plt.subplots(figsize=PLOT_CONFIG["figsize"], dpi=PLOT_CONFIG["dpi"])


def _save(fig, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _thin(n: int, limit: int) -> np.ndarray:
    if n <= limit:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, limit).round().astype(int))


def _node_label(net: Network, l: int, i: int) -> str:
    return net.input_meta[i].name if l == 0 else f"h{l}.{i}"


class EdgePanel(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    grid: np.ndarray
    spline: np.ndarray
    symbolic: Optional[SymbolicEdge]


def edge_panel(net: Network, cache: ForwardCache, l: int, j: int, i: int, overlay: Optional[Network] = None) -> EdgePanel:
    """Samples and curves for edge (l, j, i).

    cache must come from forward(net, ...) on a network whose edges are still
    splines, so the samples show what the spline learned. The symbolic edge is
    taken from overlay when given, otherwise from net.
    """
    source = overlay if overlay is not None else net
    x = cache.pre[l][:, i]
    y = cache.post[l][:, j, i]
    grid = np.linspace(x.min(), x.max(), PLOT_CONFIG["curve_points"]) if x.size else np.zeros(0)
    spline = np.asarray(activation_value(net.activation(l, j, i), grid), dtype=float)
    return EdgePanel(x, y, grid, spline, source.layers[l].symbolic.get((j, i)))


def plot_edge(
    net: Network,
    cache: ForwardCache,
    l: int,
    j: int,
    i: int,
    path: str,
    overlay: Optional[Network] = None,
) -> str:
    panel = edge_panel(net, cache, l, j, i, overlay)
    rows = _thin(panel.x.size, PLOT_CONFIG["max_scatter_points"])

    fig, ax = _figure()
    sns.scatterplot(x=panel.x[rows], y=panel.y[rows], ax=ax, s=8, alpha=0.35, color="#4c72b0", edgecolor=None, label="samples")
    ax.plot(panel.grid, panel.spline, color="#dd8452", linewidth=2, label="spline")
    edge = panel.symbolic
    title = f"{_node_label(net, l, i)} -> {'theta' if l == net.depth - 1 else f'h{l + 1}.{j}'}"
    if edge is not None:
        if edge.kind == "discrete_map":
            codes = np.arange(edge.params.size)
            ax.plot(codes, edge.evaluate(codes), "s", color="#55a868", markersize=8, label="map")
        else:
            ax.plot(panel.grid, edge.evaluate(panel.grid), "--", color="#55a868", linewidth=2, label=edge.name)
        title += f"  (R2={edge.r2:.3f})"
    ax.set_xlabel(_node_label(net, l, i), fontweight="bold")
    ax.set_ylabel("phi(x)", fontweight="bold")
    ax.set_title(title, fontweight="bold")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def plot_edges(net: Network, cache: ForwardCache, directory: str, overlay: Optional[Network] = None) -> List[str]:
    """One SVG per active edge, named edge_l{l}_in{i}_out{j}.svg.

    overlay is the symbolic network derived from net; its active edges are
    the ones drawn.
    """
    edges = (overlay if overlay is not None else net).active_edges()
    return [
        plot_edge(net, cache, l, j, i, os.path.join(directory, f"edge_l{l}_in{i}_out{j}.svg"), overlay=overlay)
        for l, j, i in edges
    ]


def plot_history(history: pd.DataFrame, path: str) -> str:
    fig, ax = _figure()
    sns.lineplot(data=history, x="step", y="loss", ax=ax, label="train loss", color="#4c72b0")
    if "val_c" in history and history["val_c"].notna().any():
        twin = ax.twinx()
        sns.lineplot(data=history, x="step", y="val_c", ax=twin, label="validation C", color="#c44e52")
        twin.set_ylabel("validation C-index")
        twin.grid(False)
        twin.legend(loc="lower right", fontsize=8)
    ax.set_xlabel("step", fontweight="bold")
    ax.set_ylabel("loss", fontweight="bold")
    ax.set_title("Training history", fontweight="bold")
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, path)


def plot_term_importance(importance: pd.DataFrame, path: str, top: Optional[int] = 20) -> str:
    frame = importance.head(top) if top else importance
    fig, ax = _figure()
    sns.barplot(data=frame, x="sigma", y="term", hue="kind", dodge=False, ax=ax, palette="muted")
    ax.set_xlabel("sigma", fontweight="bold")
    ax.set_ylabel("")
    ax.set_title("Term importance", fontweight="bold")
    return _save(fig, path)
