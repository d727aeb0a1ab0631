"""
JSON persistence for networks ("survkan-model/1").

Floats are written through json's repr so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
import os
from typing import Any

import numpy as np

from src.config import MODEL_FORMAT
from src.exceptions import InvalidArgumentError
from src.kan.network import InputMeta, KANLayer, Network
from src.kan.splines import KnotVector
from src.symbolic.edges import SymbolicEdge

STAGES = ("trained", "pruned", "symbolic")


def network_to_dict(net: Network) -> dict[str, Any]:
    layers = []
    for layer in net.layers:
        edges = []
        for j in range(layer.n_out):
            for i in range(layer.n_in):
                edge: dict[str, Any] = {
                    "out": j,
                    "in": i,
                    "knots": layer.knots[i].to_dict(),
                    "coeffs": [float(c) for c in layer.coeffs[j, i]],
                    "w_b": float(layer.w_b[j, i]),
                    "w_s": float(layer.w_s[j, i]),
                    "active": bool(layer.mask[j, i]),
                }
                if (j, i) in layer.symbolic:
                    edge["symbolic"] = layer.symbolic[(j, i)].to_dict()
                edges.append(edge)
        layers.append({"n_in": layer.n_in, "n_out": layer.n_out, "edges": edges})
    return {
        "format": MODEL_FORMAT,
        "shape": list(net.shape),
        "base_kind": net.base_kind,
        "G": net.G,
        "k": net.k,
        "stage": net.stage,
        "input_meta": [meta.to_dict() for meta in net.input_meta],
        "dropped_features": net.dropped_features(),
        "layers": layers,
    }


def network_from_dict(payload: dict[str, Any]) -> Network:
    if payload.get("format") != MODEL_FORMAT:
        raise InvalidArgumentError(f"Unsupported model format: {payload.get('format')!r} (expected {MODEL_FORMAT})")
    if payload.get("stage") not in STAGES:
        raise InvalidArgumentError(f"Unknown model stage: {payload.get('stage')!r}")
    base_kind = payload["base_kind"]
    layers = []
    for layer_payload in payload["layers"]:
        n_in, n_out = int(layer_payload["n_in"]), int(layer_payload["n_out"])
        knots: list[KnotVector | None] = [None] * n_in
        n_basis = int(payload["G"]) + int(payload["k"])
        coeffs = np.zeros((n_out, n_in, n_basis))
        w_b = np.zeros((n_out, n_in))
        w_s = np.zeros((n_out, n_in))
        mask = np.zeros((n_out, n_in), dtype=bool)
        symbolic = {}
        for edge in layer_payload["edges"]:
            j, i = int(edge["out"]), int(edge["in"])
            if knots[i] is None:
                knots[i] = KnotVector.from_dict(edge["knots"])
            coeffs[j, i] = edge["coeffs"]
            w_b[j, i] = edge["w_b"]
            w_s[j, i] = edge["w_s"]
            mask[j, i] = edge["active"]
            if "symbolic" in edge:
                symbolic[(j, i)] = SymbolicEdge.from_dict(edge["symbolic"])
        if any(k is None for k in knots):
            raise InvalidArgumentError("Model file is missing edges for some input nodes")
        layers.append(
            KANLayer(knots=knots, coeffs=coeffs, w_b=w_b, w_s=w_s, mask=mask, base_kind=base_kind, symbolic=symbolic)
        )
    return Network(
        shape=[int(n) for n in payload["shape"]],
        layers=layers,
        input_meta=[InputMeta.from_dict(meta) for meta in payload["input_meta"]],
        G=int(payload["G"]),
        k=int(payload["k"]),
        base_kind=base_kind,
        stage=payload["stage"],
    )


def save_model(net: Network, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(network_to_dict(net), handle, indent=2)
    return path


def load_model(path: str) -> Network:
    with open(path, "r", encoding="utf-8") as handle:
        return network_from_dict(json.load(handle))
