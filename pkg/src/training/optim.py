"""
Adam over a flat parameter map {name: array}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

import numpy as np

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    """Moments and per-parameter step counts; t counts calls to adam_step."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    steps: Dict[str, int] = field(default_factory=dict)

    def reset(self, keys: Iterable[str]) -> None:
        """Forget the moments of keys; their bias correction restarts at step 1."""
        for key in list(keys):
            self.m.pop(key, None)
            self.v.pop(key, None)
            self.steps.pop(key, None)


def adam_step(params: Params, grads: Params, state: AdamState, lr: float) -> Tuple[Params, AdamState]:
    """One bias-corrected Adam update; returns new arrays and leaves the inputs untouched."""
    state.t += 1
    updated: Params = {}
    for key, value in params.items():
        g = grads.get(key)
        if g is None:
            g = np.zeros_like(value)
        if key not in state.m or state.m[key].shape != value.shape:
            state.reset([key])
            state.m[key] = np.zeros_like(value)
            state.v[key] = np.zeros_like(value)
        t = state.steps[key] = state.steps.get(key, 0) + 1
        state.m[key] = state.beta1 * state.m[key] + (1.0 - state.beta1) * g
        state.v[key] = state.beta2 * state.v[key] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[key] / (1.0 - state.beta1 ** t)
        v_hat = state.v[key] / (1.0 - state.beta2 ** t)
        updated[key] = value - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated, state
