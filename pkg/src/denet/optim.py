"""Adam with decoupled weight decay, on flat parameter dicts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AdamState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]


def init_adam_state(params) -> AdamState:
    return AdamState(step=0,
                     m={k: np.zeros_like(p) for k, p in params.items()},
                     v={k: np.zeros_like(p) for k, p in params.items()})


def adam_step(params, grads, state: AdamState, lr: float, beta1: float,
              beta2: float, eps: float, weight_decay: float,
              decay: dict[str, bool]) -> None:
    """One in-place update. Weight decay is decoupled from the moment
    estimates and applied only where ``decay[name]`` is true."""
    state.step += 1
    bc1 = 1.0 - beta1 ** state.step
    bc2 = 1.0 - beta2 ** state.step
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + eps)
        if weight_decay and decay.get(name, False):
            update = update + weight_decay * p
        p -= lr * update
